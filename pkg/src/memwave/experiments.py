"""Vanishing-parameter sweeps: solve a kernel family over a decreasing eps
grid, measure energy-norm distances to the limiting solution, fit log-log
slopes, and compare them against the predicted exponents and kernel-norm
bounds.  This is also the artifact layer: CSV tables, fit summaries, gnuplot
scripts and a markdown report, all written deterministically.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .exceptions import DomainError, MemwaveError, UnsupportedOperationError
from .kernels import (
    KernelFamily,
    KernelSpec,
    conv_one_iterated,
    diff_conv_one,
    eval_kernel,
    limit_kernel,
    norms,
    predicted_rate,
)
from .solver import PDEConfig, SolveResult, solve
from .volterra import Trajectory, energy_distance, sine_basis


class BoundMode(str, enum.Enum):
    AUTO = "auto"
    SQRT_CONV1 = "sqrt_conv1"
    TV = "tv"


class Verdict(str, enum.Enum):
    MATCH = "match"
    ABOVE = "above"
    BELOW = "below"


class SweepAbortedError(MemwaveError, RuntimeError):
    def __init__(self, message: str, failed_eps: list[float]):
        super().__init__(message)
        self.failed_eps = failed_eps


@dataclass(frozen=True)
class RateFit:
    pairs: list[tuple[float, float]]
    slope: float
    intercept: float
    r_squared: float
    predicted: float
    verdict: Verdict


@dataclass
class SweepConfig:
    base: PDEConfig
    eps_list: list[float]
    limit_mode: str | KernelSpec = "auto"
    bound_mode: BoundMode = BoundMode.AUTO
    output_dir: str | Path = "sweep-out"
    rate_tol: float = 0.15
    jobs: int = 1
    max_dt_refinements: int = 2

    def __post_init__(self):
        if not self.eps_list:
            raise DomainError("eps_list must be nonempty")
        if any(e <= 0 for e in self.eps_list):
            raise DomainError("eps values must be positive")
        if any(e2 >= e1 for e1, e2 in zip(self.eps_list, self.eps_list[1:])):
            raise DomainError("eps_list must be strictly decreasing")


@dataclass
class SweepResult:
    fit: RateFit
    eps_list: list[float]
    errors: list[float]
    bounds: list[float]
    kernel: KernelSpec
    limit_spec: KernelSpec
    dt_used: float
    self_convergence_error: float
    output_dir: Path
    regime: str


DEFAULT_EPS_GRID = [10.0**p for p in (-1.0, -1.5, -2.0, -2.5, -3.0)]
KERNEL_ONLY_EPS_GRID = [10.0**p for p in (-2.0, -3.0, -4.0, -5.0, -6.0)]


def fit_loglog(eps: list[float], values: list[float]) -> tuple[float, float, float]:
    """Least-squares slope/intercept/r^2 of log10(value) against log10(eps)."""
    x = np.log10(np.asarray(eps, dtype=float))
    y = np.log10(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def classify(slope: float, predicted: float, tol: float) -> Verdict:
    """Predicted exponents are upper-bound rates: steeper than predicted passes."""
    if abs(slope - predicted) <= tol:
        return Verdict.MATCH
    return Verdict.ABOVE if slope > predicted else Verdict.BELOW


def describe_limit_regime(spec: KernelSpec) -> str:
    f = spec.family
    if f in (KernelFamily.ABEL, KernelFamily.DIRAC, KernelFamily.EXPONENTIAL):
        return (
            "vanishing-diffusivity regime: eps-scaled kernel, inviscid limit, "
            "predicted linear rate (exponent 1)"
        )
    if f is KernelFamily.MITTAG_LEFFLER:
        if spec.a < spec.b:
            return (
                f"vanishing-relaxation regime (a <= b): limit keeps a "
                f"time-fractional damping of order {spec.b - spec.a:g}, "
                f"predicted exponent a/2 = {spec.a / 2:g}"
            )
        if spec.a == spec.b:
            return (
                "vanishing-relaxation regime (a = b): strongly damped limit "
                f"(unit memory mass), predicted exponent a/2 = {spec.a / 2:g}"
            )
        return (
            "fixed-ratio vanishing-relaxation regime (a > b): inviscid limit, "
            f"predicted exponent (a-b)/2 = {(spec.a - spec.b) / 2:g}"
        )
    return "no small-parameter dependence"


def _tv_difference(spec: KernelSpec, T: float) -> float:
    """Total-variation norm of kernel minus its limit kernel on (0, T)."""
    limit = limit_kernel(spec)
    if limit.family is KernelFamily.ZERO:
        return norms(spec, T).l1_or_tv
    if spec.family is KernelFamily.MITTAG_LEFFLER and spec.a < spec.b:
        gap = spec.b - spec.a

        def diff(t: float) -> float:
            return abs(eval_kernel(spec, t) - eval_kernel(limit, t))

        t_cut = min(spec.eps, T)
        inner, _ = quad(
            lambda s: diff(s ** (1.0 / gap)) * s ** (1.0 / gap - 1.0) / gap,
            0.0, t_cut**gap, epsabs=1e-11, epsrel=1e-9, limit=300,
        )
        outer = 0.0
        if T > t_cut:
            outer, _ = quad(diff, t_cut, T, epsabs=1e-11, epsrel=1e-9, limit=300)
        return inner + outer
    raise UnsupportedOperationError(
        "total-variation difference is not a meaningful bound when the limit "
        "kernel is a point mass; use the sqrt_conv1 mode"
    )


def _resolve_bound_mode(mode: BoundMode, spec: KernelSpec) -> BoundMode:
    if mode is not BoundMode.AUTO:
        return mode
    if spec.family is KernelFamily.MITTAG_LEFFLER:
        return BoundMode.SQRT_CONV1
    return BoundMode.TV


def bound_value(spec: KernelSpec, T: float, mode: BoundMode) -> float:
    """Kernel-difference quantity that bounds the solution distance."""
    mode = _resolve_bound_mode(mode, spec)
    if mode is BoundMode.TV:
        return _tv_difference(spec, T)
    f = spec.family
    if f is KernelFamily.MITTAG_LEFFLER and spec.a <= spec.b:
        l1 = diff_conv_one(spec, T, n_grid=2).l1
    elif limit_kernel(spec).family is KernelFamily.ZERO:
        l1 = conv_one_iterated(spec, T, order=2)
    else:
        raise UnsupportedOperationError(f"no bound formula for {spec.label()}")
    return math.sqrt(l1)


def _restrict(traj: Trajectory, stride: int) -> Trajectory:
    return Trajectory(
        traj.t_grid[::stride], traj.xi[::stride], traj.xi_t[::stride], traj.mu[::stride]
    )


def _solve_with(base: PDEConfig, kernel: KernelSpec, dt: float) -> SolveResult:
    return solve(replace(base, kernel=kernel, dt=dt))


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Solve the family over the eps grid against its limit and fit the rate.

    Before the sweep proper, the step size is verified on the largest eps:
    the self-convergence error under dt halving must stay below 10% of the
    distance to the limit, otherwise dt is refined (bounded number of times).
    Identical grids are used for every solve so discretization bias cancels
    in the differences.
    """
    base = cfg.base
    eps_list = list(cfg.eps_list)
    if len(eps_list) < 4 or eps_list[0] / eps_list[-1] < 99.0:
        warnings.warn(
            "eps grid has fewer than 4 points or spans under two decades; "
            "the slope fit may be unstable",
            stacklevel=2,
        )
    template = base.kernel.with_eps(eps_list[0])
    if cfg.limit_mode == "auto":
        limit_spec = limit_kernel(template)
    elif isinstance(cfg.limit_mode, KernelSpec):
        limit_spec = cfg.limit_mode
    else:
        raise DomainError(f"limit_mode must be 'auto' or a KernelSpec, got {cfg.limit_mode!r}")
    predicted = predicted_rate(template)
    basis = sine_basis(base.L, base.n_modes)

    # step-size verification at the largest eps; reuse the passing solves
    dt = base.dt
    self_err = math.inf
    coarse = limit_run = None
    for attempt in range(cfg.max_dt_refinements + 1):
        coarse = _solve_with(base, template, dt)
        fine = _solve_with(base, template, dt / 2.0)
        limit_run = _solve_with(base, limit_spec, dt)
        self_err = energy_distance(coarse.traj, _restrict(fine.traj, 2), basis)
        err_at_max = energy_distance(coarse.traj, limit_run.traj, basis)
        if self_err <= 0.1 * err_at_max:
            break
        if attempt == cfg.max_dt_refinements:
            warnings.warn(
                f"self-convergence error {self_err:.3e} still above 10% of the "
                f"limit distance after {cfg.max_dt_refinements} refinements",
                stacklevel=2,
            )
            break
        dt *= 0.5

    def solve_eps(eps: float) -> SolveResult:
        if eps == eps_list[0]:
            return coarse
        return _solve_with(base, template.with_eps(eps), dt)

    results: dict[float, SolveResult | Exception] = {}
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {eps: pool.submit(solve_eps, eps) for eps in eps_list}
            for eps, fut in futures.items():
                try:
                    results[eps] = fut.result()
                except MemwaveError as exc:
                    results[eps] = exc
    else:
        for eps in eps_list:
            try:
                results[eps] = solve_eps(eps)
            except MemwaveError as exc:
                results[eps] = exc
    failed = [eps for eps, r in results.items() if isinstance(r, Exception)]
    if failed:
        raise SweepAbortedError(
            f"sweep aborted; failing eps values: {failed} "
            f"({results[failed[0]]})", failed
        )

    errors = [
        energy_distance(results[eps].traj, limit_run.traj, basis) for eps in eps_list
    ]
    bounds = [
        bound_value(template.with_eps(eps), base.T, cfg.bound_mode) for eps in eps_list
    ]
    slope, intercept, r2 = fit_loglog(eps_list, errors)
    fit = RateFit(
        pairs=list(zip(eps_list, errors)),
        slope=slope,
        intercept=intercept,
        r_squared=r2,
        predicted=predicted,
        verdict=classify(slope, predicted, cfg.rate_tol),
    )
    out = Path(cfg.output_dir)
    result = SweepResult(
        fit=fit,
        eps_list=eps_list,
        errors=errors,
        bounds=bounds,
        kernel=template,
        limit_spec=limit_spec,
        dt_used=dt,
        self_convergence_error=self_err,
        output_dir=out,
        regime=describe_limit_regime(template),
    )
    _write_artifacts(result)
    return result


def _write_artifacts(result: SweepResult) -> None:
    out = result.output_dir
    out.mkdir(parents=True, exist_ok=True)
    lines = ["eps,err_E,bound,log10_eps,log10_err"]
    for eps, err, bound in zip(result.eps_list, result.errors, result.bounds):
        lines.append(
            "%.17e,%.17e,%.17e,%.17e,%.17e"
            % (eps, err, bound, math.log10(eps), math.log10(err))
        )
    (out / "results.csv").write_text("\n".join(lines) + "\n")
    fit_payload = {
        "slope": result.fit.slope,
        "intercept": result.fit.intercept,
        "r_squared": result.fit.r_squared,
        "predicted": result.fit.predicted,
        "verdict": result.fit.verdict.value,
        "dt": result.dt_used,
        "kernel": result.kernel.label(),
        "regime": result.regime,
    }
    (out / "fit.json").write_text(json.dumps(fit_payload, sort_keys=True, indent=2) + "\n")
    gp = (
        "set datafile separator ','\n"
        "set logscale xy\n"
        "set xlabel 'eps'\n"
        "set ylabel 'energy-norm error'\n"
        f"set title '{result.kernel.label()} (slope {result.fit.slope:.3f}, "
        f"predicted {result.fit.predicted:.3f})'\n"
        "plot 'results.csv' every ::1 using 1:2 with linespoints title 'error', \\\n"
        "     'results.csv' every ::1 using 1:3 with lines title 'kernel bound'\n"
    )
    (out / "plot.gp").write_text(gp)


@dataclass(frozen=True)
class BoundCheck:
    eps_list: list[float]
    ratios: list[float | None]
    band_factor: float
    within_band: bool


def bound_check(result: SweepResult, band_limit: float = 3.0) -> BoundCheck:
    """Ratios err/bound across the sweep; flags growth beyond the band limit.

    A roughly constant ratio is what the continuity estimate predicts; a
    monotone blow-up beyond the band would contradict it beyond
    discretization error.  Exact zero bounds (degenerate sweeps) are
    reported as None ratios and pass vacuously.
    """
    ratios: list[float | None] = []
    finite = []
    for err, bound in zip(result.errors, result.bounds):
        if bound == 0.0:
            ratios.append(None)  # degenerate: bound and error both exactly zero
        else:
            r = err / bound
            ratios.append(r)
            finite.append(r)
    if len(finite) >= 2 and min(finite) > 0.0:
        factor = max(finite) / min(finite)
    else:
        factor = 1.0
    return BoundCheck(list(result.eps_list), ratios, factor, factor <= band_limit)


def kernel_only_sweep(
    kernel: KernelSpec,
    T: float,
    eps_list: list[float] | None = None,
    quantity: str = "auto",
    rate_tol: float = 0.05,
) -> RateFit:
    """Slope check on the closed-form kernel quantities alone (no PDE solves).

    quantity 'diff-conv1' fits the L1 norm of (K_eps - K_limit) * 1, expected
    slope a for Mittag-Leffler kernels with a <= b (and 1 for the eps-scaled
    families); 'conv1' fits the L1 norm of K_eps * 1, expected slope a - b in
    the fixed-ratio regime.  This is the discretization-free verification of
    the limit asymptotics, so the tolerance is tight.
    """
    eps_list = list(KERNEL_ONLY_EPS_GRID if eps_list is None else eps_list)
    template = kernel.with_eps(eps_list[0])
    f = template.family
    if quantity == "auto":
        if f is KernelFamily.MITTAG_LEFFLER and template.a > template.b:
            quantity = "conv1"
        else:
            quantity = "diff-conv1"
    if quantity == "diff-conv1":
        if f is KernelFamily.MITTAG_LEFFLER:
            if template.a > template.b:
                raise UnsupportedOperationError(
                    "diff-conv1 needs a <= b; use quantity='conv1' for a > b"
                )
            predicted = template.a
        else:
            predicted = 1.0
        values = [diff_conv_one(template.with_eps(e), T, n_grid=2).l1 for e in eps_list]
    elif quantity == "conv1":
        values = [
            conv_one_iterated(template.with_eps(e), T, order=2) for e in eps_list
        ]
        if f is KernelFamily.MITTAG_LEFFLER:
            if template.a <= template.b:
                raise UnsupportedOperationError(
                    "conv1 slope equals a - b only in the fixed-ratio regime a > b"
                )
            predicted = template.a - template.b
        else:
            predicted = 1.0
    else:
        raise DomainError(f"unknown quantity {quantity!r}")
    slope, intercept, r2 = fit_loglog(eps_list, values)
    return RateFit(
        pairs=list(zip(eps_list, values)),
        slope=slope,
        intercept=intercept,
        r_squared=r2,
        predicted=predicted,
        verdict=classify(slope, predicted, rate_tol),
    )


def emit_report(results: list[SweepResult], output_dir: str | Path) -> Path:
    """Markdown report over completed sweeps, one section per sweep, sorted
    by kernel label for stable ordering."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.md"
    lines = ["# Vanishing-parameter sweep report", ""]
    if not results:
        lines.append("No runs were recorded.")
    for res in sorted(results, key=lambda r: r.kernel.label()):
        check = bound_check(res)
        lines += [
            f"## Kernel `{res.kernel.label()}`",
            "",
            f"- regime: {res.regime}",
            f"- fitted slope: {res.fit.slope:.4f} (predicted {res.fit.predicted:.4f}, "
            f"r^2 = {res.fit.r_squared:.5f})",
            f"- verdict: {res.fit.verdict.value}",
            f"- err/bound ratio band factor: {check.band_factor:.3f} "
            f"({'within' if check.within_band else 'OUTSIDE'} the x3 band)",
            f"- dt used: {res.dt_used:g} "
            f"(self-convergence error {res.self_convergence_error:.3e})",
            f"- artifacts: {res.output_dir}",
            "",
            "| eps | err_E | bound | err/bound |",
            "| --- | --- | --- | --- |",
        ]
        for eps, err, bound, ratio in zip(
            res.eps_list, res.errors, res.bounds, check.ratios
        ):
            shown = "exact" if ratio is None else f"{ratio:.4f}"
            lines.append(f"| {eps:.3e} | {err:.6e} | {bound:.6e} | {shown} |")
        lines.append("")
    path.write_text("\n".join(lines) + "\n")
    return path
