"""Initial-data and forcing presets for the pressure-wave solver.

Presets provide modal initial data (u0, u1), an optional modal forcing table
on the solver's time grid, and, for manufactured cases, the exact modal
solution used by verification tests.  Initial coefficients decay
super-algebraically so the data sits comfortably inside the regularity class
the solver assumes; arbitrary user-supplied vectors are only checked for
finiteness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .exceptions import DomainError
from .kernels import KernelFamily, KernelSpec, conv_one
from .mlf import ml_series_any_order
from .volterra import SpectralBasis


@dataclass(frozen=True)
class DataPreset:
    name: str
    initial: Callable[[SpectralBasis], tuple[np.ndarray, np.ndarray]]
    forcing: Callable[[SpectralBasis, np.ndarray], np.ndarray | None]
    exact_xi: Callable[[SpectralBasis, np.ndarray], np.ndarray] | None = None
    exact_xi_t: Callable[[SpectralBasis, np.ndarray], np.ndarray] | None = None


def zero_preset() -> DataPreset:
    return DataPreset(
        "zero",
        initial=lambda basis: (np.zeros(basis.n_modes), np.zeros(basis.n_modes)),
        forcing=lambda basis, t_grid: None,
    )


def single_mode_preset(amplitude: float = 0.1, mode: int = 1, velocity: float = 0.0) -> DataPreset:
    def initial(basis: SpectralBasis):
        if mode < 1 or mode > basis.n_modes:
            raise DomainError(f"mode {mode} outside 1..{basis.n_modes}")
        u0 = np.zeros(basis.n_modes)
        u1 = np.zeros(basis.n_modes)
        u0[mode - 1] = amplitude
        u1[mode - 1] = velocity
        return u0, u1

    return DataPreset(f"single-mode-{mode}", initial, lambda basis, t_grid: None)


def small_gauss_modes_preset(
    amplitude: float = 0.05, width: float = 4.0, velocity_amplitude: float = 0.05
) -> DataPreset:
    """Gaussian modal decay: smooth, small data that keeps 1 + 2ku well away
    from degeneracy for moderate nonlinearity coefficients."""

    def initial(basis: SpectralBasis):
        i = np.arange(basis.n_modes)
        profile = np.exp(-((i / width) ** 2))
        return amplitude * profile, velocity_amplitude * profile

    return DataPreset("small-gauss-modes", initial, lambda basis, t_grid: None)


def _sine_square_coefficients(n_modes: int) -> np.ndarray:
    """Sine coefficients of sin(pi x / L)^2 on (0, L): odd modes only."""
    b = np.zeros(n_modes)
    for i in range(1, n_modes + 1):
        if i % 2 == 0:
            continue
        if i == 1:
            b[0] = 8.0 / (3.0 * math.pi)
        else:
            b[i - 1] = -8.0 / (math.pi * i * (i * i - 4.0))
    return b


def _conv_running_integral_with_cos(kernel: KernelSpec, t: float) -> float:
    """(K * sin)(t) = ((K*1) * cos)(t), closed form per family where available."""
    if t == 0.0:
        return 0.0
    f = kernel.family
    if f is KernelFamily.ZERO:
        return 0.0
    if f is KernelFamily.DIRAC:
        return kernel.eps * math.sin(t)
    if f is KernelFamily.ABEL:
        scale = kernel.eps * kernel.tau_theta ** (-kernel.alpha)
        p = kernel.alpha
        return scale * t ** (p + 1.0) * ml_series_any_order(2.0, p + 2.0, t * t)
    if f is KernelFamily.LIMIT_ABEL:
        p = kernel.alpha
        return kernel.tau_theta ** (-p) * t ** (p + 1.0) * ml_series_any_order(
            2.0, p + 2.0, t * t
        )
    if f is KernelFamily.EXPONENTIAL:
        inv = 1.0 / kernel.eps
        damped = (inv * math.cos(t) + math.sin(t) - inv * math.exp(-t * inv)) / (
            inv * inv + 1.0
        )
        return math.sin(t) - damped
    val, _ = quad(
        lambda s: conv_one(kernel, s) * math.cos(t - s), 0.0, t,
        epsabs=1e-12, epsrel=1e-11, limit=200,
    )
    return val


def manufactured_cos_preset(
    kernel: KernelSpec, c: float, k: float, amplitude: float = 0.05
) -> DataPreset:
    """Exact solution amplitude * sin(pi x / L) * cos(t) with induced forcing.

    The forcing is assembled mode by mode: the nonlinear term excites the
    sine expansion of sin^2 (odd modes, cubic decay), and the memory term
    contributes the convolution of the kernel's running integral with cos.
    """

    def initial(basis: SpectralBasis):
        u0 = np.zeros(basis.n_modes)
        u0[0] = amplitude
        return u0, np.zeros(basis.n_modes)

    def forcing(basis: SpectralBasis, t_grid: np.ndarray) -> np.ndarray:
        if abs(basis.length - 1.0) > 1e-12:
            raise DomainError("manufactured preset is set up on the unit interval")
        n = basis.n_modes
        pi2 = math.pi**2
        b = _sine_square_coefficients(n)
        table = np.zeros((t_grid.size, n))
        conv = np.array(
            [_conv_running_integral_with_cos(kernel, t) for t in t_grid]
        )
        a2 = amplitude * amplitude
        for j, t in enumerate(t_grid):
            table[j] = -2.0 * k * a2 * math.cos(2.0 * t) * b
            table[j, 0] += amplitude * (c * c * pi2 - 1.0) * math.cos(t)
            table[j, 0] -= amplitude * pi2 * conv[j]
        return table

    def exact_xi(basis: SpectralBasis, t_grid: np.ndarray) -> np.ndarray:
        xi = np.zeros((t_grid.size, basis.n_modes))
        xi[:, 0] = amplitude * np.cos(t_grid)
        return xi

    def exact_xi_t(basis: SpectralBasis, t_grid: np.ndarray) -> np.ndarray:
        xi_t = np.zeros((t_grid.size, basis.n_modes))
        xi_t[:, 0] = -amplitude * np.sin(t_grid)
        return xi_t

    return DataPreset("manufactured-cos", initial, forcing, exact_xi, exact_xi_t)


_FACTORIES = {
    "zero": zero_preset,
    "single-mode": single_mode_preset,
    "small-gauss-modes": small_gauss_modes_preset,
}


def make_preset(name: str, **params) -> DataPreset:
    """Look up a named preset; manufactured presets are built directly."""
    if name not in _FACTORIES:
        raise DomainError(
            f"unknown preset {name!r}; available: {sorted(_FACTORIES)} "
            f"(manufactured presets are constructed via manufactured_cos_preset)"
        )
    return _FACTORIES[name](**params)
