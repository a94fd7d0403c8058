"""Quasilinear solver: Picard iteration of the linearized march.

The map phi -> u freezes the leading coefficient at 1 + 2*k*phi (expanding
(m(phi) u_t)_t = m(phi) u_tt + m_t(phi) u_t), solves the linear problem, and
repeats from the k = 0 linear solution until successive iterates agree in the
energy norm.  The non-degeneracy ball 4|k| sup|u| <= 1 is enforced along the
way; leaving it is reported as an error rather than patched over, since
contraction is only guaranteed for small data and short horizons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BallViolationError, DomainError, FixedPointError
from .kernels import KernelSpec
from .presets import DataPreset
from .volterra import (
    SpectralBasis,
    TimeIndexedField,
    Trajectory,
    assemble,
    energy_distance,
    march,
    sine_basis,
)


@dataclass
class PDEConfig:
    c: float
    k: float
    kernel: KernelSpec
    data: DataPreset
    T: float
    dt: float
    n_modes: int
    L: float = 1.0
    fp_tol: float = 1e-9
    fp_max_iters: int = 25
    relaxation: float = 1.0

    def __post_init__(self):
        if self.c <= 0.0 or self.T <= 0.0 or self.dt <= 0.0:
            raise DomainError("need c > 0, T > 0, dt > 0")
        if self.fp_tol <= 0.0 or self.fp_max_iters < 1:
            raise DomainError("need fp_tol > 0 and fp_max_iters >= 1")

    def time_grid(self) -> np.ndarray:
        n_steps = int(round(self.T / self.dt))
        return self.dt * np.arange(n_steps + 1)


@dataclass
class SolveResult:
    traj: Trajectory
    iterations: int
    fp_residuals: list[float]
    ball_margin: float
    ball_ok: bool
    diagnostics: dict = field(default_factory=dict)


def linf_estimate(traj: Trajectory, basis: SpectralBasis) -> float:
    """Sup of |u| over time nodes and the dealiased collocation grid."""
    values = traj.xi @ basis.modes_on_grid.T
    return float(np.max(np.abs(values)))


def _ball_state(traj: Trajectory, basis: SpectralBasis, k: float) -> tuple[float, float, bool]:
    values = traj.xi @ basis.modes_on_grid.T
    sup = float(np.max(np.abs(values)))
    margin = float(np.min(1.0 + 2.0 * k * values))
    return sup, margin, 4.0 * abs(k) * sup <= 1.0


def solve(cfg: PDEConfig) -> SolveResult:
    """Fixed-point solve of the quasilinear problem.

    The first iterate is the k = 0 linear solution; with k = 0 the result is
    exactly that march, returned after a single iteration.
    """
    basis = sine_basis(cfg.L, cfg.n_modes)
    xi0, xi1 = cfg.data.initial(basis)
    xi0 = np.asarray(xi0, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    if not (np.all(np.isfinite(xi0)) and np.all(np.isfinite(xi1))):
        raise DomainError("initial modal data must be finite")
    t_grid = cfg.time_grid()
    f_table = cfg.data.forcing(basis, t_grid)

    seed_system = assemble(basis, None, cfg.kernel, f_table, 0.0, cfg.c)
    current = march(seed_system, xi0, xi1, cfg.T, cfg.dt)
    if cfg.k == 0.0:
        sup, margin, ok = _ball_state(current, basis, cfg.k)
        return SolveResult(current, 1, [], margin, ok, {"sup_norm": sup})

    residuals: list[float] = []
    marches = 1
    for _ in range(cfg.fp_max_iters):
        sup, margin, ok = _ball_state(current, basis, cfg.k)
        if not ok:
            raise BallViolationError(
                f"iterate left the non-degeneracy ball: 4|k| sup|u| = "
                f"{4.0 * abs(cfg.k) * sup:.4f} > 1 (margin {margin:.4f})",
                margin,
                sup,
            )
        coeff = TimeIndexedField(current.xi, current.xi_t, cfg.dt)
        system = assemble(basis, coeff, cfg.kernel, f_table, cfg.k, cfg.c)
        updated = march(system, xi0, xi1, cfg.T, cfg.dt)
        marches += 1
        res = energy_distance(updated, current, basis)
        residuals.append(res)
        if cfg.relaxation != 1.0:
            w = cfg.relaxation
            updated = Trajectory(
                updated.t_grid,
                w * updated.xi + (1.0 - w) * current.xi,
                w * updated.xi_t + (1.0 - w) * current.xi_t,
                w * updated.mu + (1.0 - w) * current.mu,
                updated.diagnostics,
            )
        current = updated
        if res <= cfg.fp_tol:
            break
    else:
        raise FixedPointError(
            f"Picard iteration did not reach tol {cfg.fp_tol:g} in "
            f"{cfg.fp_max_iters} iterations; residuals {residuals}",
            residuals,
        )

    sup, margin, ok = _ball_state(current, basis, cfg.k)
    return SolveResult(
        current,
        marches,
        residuals,
        margin,
        ok,
        {"sup_norm": sup, "coeff_min": current.diagnostics.get("coeff_min", 1.0)},
    )


@dataclass(frozen=True)
class SmallnessReport:
    low_order_budget: float
    high_order_budget: float
    components: dict


def _sobolev_sq(xi: np.ndarray, basis: SpectralBasis, order: int) -> float:
    lam = basis.eigenvalues
    weight = np.zeros_like(lam)
    for j in range(order + 1):
        weight += lam**j
    return 0.5 * basis.length * float(np.sum(weight * xi**2))


def check_smallness(cfg: PDEConfig) -> SmallnessReport:
    """Report the two data budgets of the well-posedness theory.

    Lower order: |u0|_H1^2 + |u1|_L2^2 + |f|_{L1(L2)}^2.  Higher order:
    |u0|_H3^2 + |u1|_H2^2 + |f|_{H1(H1)}^2.  No threshold is enforced; the
    admissible radius is not explicit, so the run-time ball check in solve()
    is the operative guard.
    """
    basis = sine_basis(cfg.L, cfg.n_modes)
    xi0, xi1 = cfg.data.initial(basis)
    t_grid = cfg.time_grid()
    f_table = cfg.data.forcing(basis, t_grid)

    comps = {
        "u0_H1_sq": _sobolev_sq(np.asarray(xi0), basis, 1),
        "u1_L2_sq": _sobolev_sq(np.asarray(xi1), basis, 0),
        "u0_H3_sq": _sobolev_sq(np.asarray(xi0), basis, 3),
        "u1_H2_sq": _sobolev_sq(np.asarray(xi1), basis, 2),
    }
    if f_table is None:
        comps["f_L1_L2"] = 0.0
        comps["f_H1_H1_sq"] = 0.0
    else:
        gram = 0.5 * basis.length
        lam = basis.eigenvalues
        l2 = np.sqrt(gram * np.sum(f_table**2, axis=1))
        comps["f_L1_L2"] = float(np.trapz(l2, t_grid))
        h1_sq = gram * np.sum((1.0 + lam) * f_table**2, axis=1)
        ft = np.gradient(f_table, cfg.dt, axis=0)
        h1_t_sq = gram * np.sum((1.0 + lam) * ft**2, axis=1)
        comps["f_H1_H1_sq"] = float(np.trapz(h1_sq + h1_t_sq, t_grid))
    low = comps["u0_H1_sq"] + comps["u1_L2_sq"] + comps["f_L1_L2"] ** 2
    high = comps["u0_H3_sq"] + comps["u1_H2_sq"] + comps["f_H1_H1_sq"]
    return SmallnessReport(low, high, comps)
