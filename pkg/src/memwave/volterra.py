"""Semi-discrete linear solver: sine spectral basis in space, second-kind
Volterra reformulation in time.

The damped wave equation with variable leading coefficient m(phi) = 1 + 2k*phi
is projected onto Dirichlet eigenfunctions sin(i pi x / L), giving

    M(t) xi'' + c^2 D xi + D (K * xi') + Mt(t) xi' = f,

with D = diag((i pi / L)^2).  Substituting mu = xi'' and the reconstruction
identities xi' = 1*mu + xi1, xi = xi0 + t xi1 + 1*1*mu turns this into
mu + Kernel*mu = rhs with a CONTINUOUS Volterra kernel: the memory enters only
through the running integral K*1, never through K itself.  Time stepping is
trapezoidal product integration: mu is piecewise linear, and both scalar
factors (t - s) and (K*1)(t - s) are integrated exactly against it using the
closed-form repeated integrals from the kernel catalog.  A Dirac memory mass
is thereby handled exactly as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegeneracyError, DomainError, SingularSolveError
from .kernels import KernelFamily, KernelSpec, conv_one_iterated

COEFF_FLOOR = 0.5


@dataclass(frozen=True)
class SpectralBasis:
    """Sine basis v_i(x) = sin(i pi x / L) on (0, L) with a Gauss quadrature grid."""

    length: float
    n_modes: int
    eigenvalues: np.ndarray          # (i pi / L)^2, increasing
    quad_points: np.ndarray          # Gauss-Legendre nodes on (0, L)
    quad_weights: np.ndarray
    modes_on_grid: np.ndarray        # shape (n_quad, n_modes)

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs @ self.modes_on_grid.T

    def to_modes(self, grid_values: np.ndarray) -> np.ndarray:
        weighted = grid_values * self.quad_weights
        return (2.0 / self.length) * (weighted @ self.modes_on_grid)


def sine_basis(L: float, n_modes: int, n_quad: int | None = None) -> SpectralBasis:
    """Dirichlet sine basis; the default grid size 4n + 8 integrates all
    triple products of retained modes to machine precision (>= 3n/2 rule)."""
    if L <= 0.0 or n_modes < 1:
        raise DomainError("need L > 0 and n_modes >= 1")
    if n_quad is None:
        n_quad = 4 * n_modes + 8
    if n_quad < (3 * n_modes) // 2:
        raise DomainError("quadrature grid must have at least 3n/2 points")
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    x = 0.5 * L * (nodes + 1.0)
    w = 0.5 * L * weights
    i = np.arange(1, n_modes + 1)
    V = np.sin(np.outer(x, i) * math.pi / L)
    lam = (i * math.pi / L) ** 2
    return SpectralBasis(L, n_modes, lam, x, w, V)


@dataclass(frozen=True)
class TimeIndexedField:
    """Modal coefficient field phi and its time derivative on a uniform grid."""

    values: np.ndarray   # (n_nodes, n_modes)
    deriv: np.ndarray    # (n_nodes, n_modes)
    dt: float


@dataclass
class SemiDiscreteSystem:
    basis: SpectralBasis
    kernel: KernelSpec
    c: float
    k: float
    forcing: object = None            # None, callable t -> vector, or array
    field: TimeIndexedField | None = None
    mass_stack: np.ndarray | None = None    # (n_nodes, n, n) when field given
    mass_t_stack: np.ndarray | None = None
    coeff_min: float = 1.0

    def mass_m(self, node: int) -> np.ndarray:
        if self.mass_stack is None:
            return 0.5 * self.basis.length * np.eye(self.basis.n_modes)
        return self.mass_stack[node]

    def mass_mt(self, node: int) -> np.ndarray | None:
        if self.mass_t_stack is None:
            return None
        return self.mass_t_stack[node]


def assemble(
    basis: SpectralBasis,
    coeff_field: TimeIndexedField | None,
    kernel: KernelSpec,
    forcing,
    k: float,
    c: float,
) -> SemiDiscreteSystem:
    """Build the Galerkin matrices for m(phi) = 1 + 2*k*phi.

    phi is transformed to the quadrature grid, multiplied there, and
    projected back (exact for the dealiased grid sizes sine_basis provides).
    With no field, or k = 0, the mass matrix is the constant Gram matrix
    (L/2) * I and the derivative matrix vanishes.
    """
    if c <= 0.0:
        raise DomainError(f"sound speed must be positive, got c={c}")
    if coeff_field is None or k == 0.0:
        return SemiDiscreteSystem(basis, kernel, c, k, forcing, None, None, None, 1.0)
    V, w = basis.modes_on_grid, basis.quad_weights
    n_nodes = coeff_field.values.shape[0]
    n = basis.n_modes
    mass = np.empty((n_nodes, n, n))
    mass_t = np.empty((n_nodes, n, n))
    coeff_min = math.inf
    chunk = max(1, 2_000_000 // (V.shape[0] * n))
    for start in range(0, n_nodes, chunk):
        stop = min(start + chunk, n_nodes)
        phi_g = coeff_field.values[start:stop] @ V.T
        phit_g = coeff_field.deriv[start:stop] @ V.T
        m_g = 1.0 + 2.0 * k * phi_g
        coeff_min = min(coeff_min, float(m_g.min()))
        mass[start:stop] = np.einsum("tq,qi,qj->tij", m_g * w, V, V, optimize=True)
        mass_t[start:stop] = np.einsum("tq,qi,qj->tij", (2.0 * k) * phit_g * w, V, V,
                                       optimize=True)
    if coeff_min <= COEFF_FLOOR:
        raise DegeneracyError(
            f"leading coefficient min 1+2k*phi = {coeff_min:.4f} <= {COEFF_FLOOR}"
        )
    return SemiDiscreteSystem(basis, kernel, c, k, forcing, coeff_field,
                              mass, mass_t, coeff_min)


@dataclass
class Trajectory:
    t_grid: np.ndarray
    xi: np.ndarray      # (n_nodes, n_modes)
    xi_t: np.ndarray
    mu: np.ndarray      # xi_tt at nodes
    diagnostics: dict = field(default_factory=dict)


def _forcing_table(forcing, t_grid: np.ndarray, n: int) -> np.ndarray:
    if forcing is None:
        return np.zeros((t_grid.size, n))
    if callable(forcing):
        return np.array([np.asarray(forcing(t), dtype=float) for t in t_grid])
    table = np.asarray(forcing, dtype=float)
    if table.shape != (t_grid.size, n):
        raise DomainError(
            f"forcing table has shape {table.shape}, expected {(t_grid.size, n)}"
        )
    return table


def _memory_weights(kernel: KernelSpec, n_steps: int, dt: float):
    """Product-integration data for the scalar lag factor (K*1)(t - s).

    Returns (k1, far, near): k1[r] = (K*1)(r dt) with the Dirac lag-0 mass
    lumped, and per-cell weights for the far (larger-lag) and near node of
    each lag cell, exact for piecewise-linear integrands.
    """
    r = np.arange(n_steps + 1)
    k1 = np.array([conv_one_iterated(kernel, ri * dt, 1) for ri in r])
    k2 = np.array([conv_one_iterated(kernel, ri * dt, 2) for ri in r])
    k3 = np.array([conv_one_iterated(kernel, ri * dt, 3) for ri in r])
    q = r * dt * k2 - k3                      # int_0^sigma u K1(u) du
    dP = k2[1:] - k2[:-1]
    dQ = q[1:] - q[:-1]
    sigma_lo = r[:-1] * dt
    sigma_hi = r[1:] * dt
    far = (dQ - sigma_lo * dP) / dt           # weight of the node at lag sigma_hi
    near = (sigma_hi * dP - dQ) / dt
    if kernel.family is KernelFamily.DIRAC:
        k1 = k1.copy()
        k1[0] = kernel.eps                    # lumped mass at lag zero
    return k1, far, near


def march(
    system: SemiDiscreteSystem,
    xi0: np.ndarray,
    xi1: np.ndarray,
    T: float,
    dt: float,
) -> Trajectory:
    """Step the second-kind Volterra system for mu = xi'' and reconstruct xi.

    At node t_m the history sums use exact moments of (t-s) and (K*1)(t-s)
    against piecewise-linear mu; the implicit diagonal contribution is folded
    into the step matrix M(t_m) + w0 * (c^2 dt^2/6 + d0) D + dt/2 * Mt(t_m).
    """
    basis = system.basis
    n = basis.n_modes
    if xi0.shape != (n,) or xi1.shape != (n,):
        raise DomainError("initial modal vectors must have length n_modes")
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
        raise DomainError(f"dt={dt} does not divide T={T}")
    if system.field is not None:
        if abs(system.field.dt - dt) > 1e-12 * dt or system.field.values.shape[0] != n_steps + 1:
            raise DomainError("coefficient field grid does not match (T, dt)")

    t_grid = dt * np.arange(n_steps + 1)
    f_tab = _forcing_table(system.forcing, t_grid, n)
    k1, far, near = _memory_weights(system.kernel, n_steps, dt)
    c2 = system.c**2
    lam = basis.eigenvalues
    gram = 0.5 * basis.length

    # far/near weights of the combined scalar kernel c^2 (t-s) + (K*1)(t-s)
    rr = np.arange(1, n_steps + 1)
    far_c = c2 * dt * dt * (3.0 * rr - 1.0) / 6.0 + far
    near_c = c2 * dt * dt * (3.0 * rr - 2.0) / 6.0 + near

    mu = np.zeros((n_steps + 1, n))
    has_field = system.mass_stack is not None

    cond_estimate = math.nan
    for m in range(n_steps + 1):
        rhs = f_tab[m] - c2 * lam * (xi0 + t_grid[m] * xi1) - k1[m] * lam * xi1
        Mt = system.mass_t_stack[m] if has_field else None
        if Mt is not None:
            rhs = rhs - Mt @ xi1
        if m > 0:
            w_hist = np.zeros(m)
            w_hist += far_c[m - 1::-1]                  # cell far-ends: nodes 0..m-1
            w_hist[1:] += near_c[m - 1:0:-1]            # cell near-ends: nodes 1..m-1
            rhs = rhs - lam * (mu[:m].T @ w_hist)
            if Mt is not None:
                w_tr = np.full(m, dt)
                w_tr[0] = 0.5 * dt
                rhs = rhs - Mt @ (mu[:m].T @ w_tr)
        diag_coeff = (c2 * dt * dt / 6.0 + near[0]) if m > 0 else 0.0
        if has_field:
            A = system.mass_stack[m] + diag_coeff * np.diag(lam)
            if Mt is not None and m > 0:
                A = A + 0.5 * dt * Mt
            try:
                mu[m] = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError as exc:
                cond = float(np.linalg.cond(A))
                raise SingularSolveError(
                    f"time-step system singular at node {m} (t={t_grid[m]:.4g})", cond
                ) from exc
            if m == 0:
                cond_estimate = float(np.linalg.cond(A))
        else:
            diag = gram + diag_coeff * lam
            mu[m] = rhs / diag
            if m == 0:
                cond_estimate = float(diag.max() / diag.min())

    # reconstruction with the same quadrature: xi' = 1*mu + xi1 (trapezoid),
    # xi = xi0 + t xi1 + int (t-s) mu(s) ds (exact moments of (t-s))
    xi_t = np.zeros_like(mu)
    xi = np.zeros_like(mu)
    xi_t[0] = xi1
    xi[0] = xi0
    cums = np.cumsum(mu[:-1] + mu[1:], axis=0) * (0.5 * dt)
    xi_t[1:] = xi1 + cums
    wfar = dt * dt * (3.0 * rr - 1.0) / 6.0
    wnear = dt * dt * (3.0 * rr - 2.0) / 6.0
    for m in range(1, n_steps + 1):
        w_hist = np.zeros(m + 1)
        w_hist[:m] += wfar[m - 1::-1]
        w_hist[1:] += wnear[m - 1::-1]
        xi[m] = xi0 + t_grid[m] * xi1 + mu[: m + 1].T @ w_hist
    diagnostics = {
        "coeff_min": system.coeff_min,
        "condition_estimate": cond_estimate,
        "n_steps": n_steps,
    }
    return Trajectory(t_grid, xi, xi_t, mu, diagnostics)


def energy_norm(traj: Trajectory, basis: SpectralBasis) -> float:
    """Max over time nodes of (|u_t|_L2^2 + |u|_L2^2 + |grad u|_L2^2)^(1/2)."""
    gram = 0.5 * basis.length
    lam = basis.eigenvalues
    inst = gram * (
        np.sum(traj.xi_t**2, axis=1) + np.sum((1.0 + lam) * traj.xi**2, axis=1)
    )
    return float(np.sqrt(np.max(inst)))


def energy_distance(t1: Trajectory, t2: Trajectory, basis: SpectralBasis) -> float:
    """Energy norm of the difference of two trajectories on the same grid."""
    if t1.t_grid.shape != t2.t_grid.shape or not np.allclose(t1.t_grid, t2.t_grid):
        raise DomainError("trajectories live on different time grids")
    diff = Trajectory(t1.t_grid, t1.xi - t2.xi, t1.xi_t - t2.xi_t, t1.mu - t2.mu)
    return energy_norm(diff, basis)


@dataclass(frozen=True)
class ConvergenceStudy:
    dt_list: list[float]
    errors: list[float]
    orders: list[float]


def convergence_study(
    system: SemiDiscreteSystem,
    xi0: np.ndarray,
    xi1: np.ndarray,
    T: float,
    dt_list: list[float],
) -> ConvergenceStudy:
    """Self-convergence orders against the finest grid in dt_list.

    dt_list must be decreasing with each step an integer multiple of the
    finest; errors are energy norms of differences restricted to the coarse
    nodes.  Orders near 2 are expected for smooth kernels and reduced for
    weakly singular ones (reported, not asserted).
    """
    if system.field is not None:
        raise DomainError("convergence_study supports constant-coefficient systems")
    if any(d2 >= d1 for d1, d2 in zip(dt_list, dt_list[1:])):
        raise DomainError("dt_list must be strictly decreasing")
    fine = dt_list[-1]
    ref = march(system, xi0, xi1, T, fine)
    errors = []
    for dt in dt_list[:-1]:
        stride = int(round(dt / fine))
        if abs(stride * fine - dt) > 1e-12:
            raise DomainError("dt_list entries must nest over the finest step")
        traj = march(system, xi0, xi1, T, dt)
        restricted = Trajectory(
            ref.t_grid[::stride], ref.xi[::stride], ref.xi_t[::stride], ref.mu[::stride]
        )
        errors.append(energy_distance(traj, restricted, system.basis))
    orders = []
    for (d1, e1), (d2, e2) in zip(
        zip(dt_list[:-1], errors), zip(dt_list[1:-1], errors[1:])
    ):
        if e1 > 0 and e2 > 0:
            orders.append(math.log(e1 / e2) / math.log(d1 / d2))
        else:
            orders.append(math.inf)
    return ConvergenceStudy(list(dt_list), errors, orders)
