"""Command-line interface.

Subcommands: `mlf eval`, `kernel eval|norms|limit|rate-check`, `verify`,
`solve-linear`, `solve`, `sweep`.  Configuration files for `solve` and
`sweep` are TOML or JSON with the PDE fields at top level and `[kernel]` /
`[data]` tables; see the README for schemas.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import coercivity, experiments, kernels, mlf, presets, solver, volterra
from .exceptions import MemwaveError


def _add_kernel_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--family",
        required=True,
        choices=[
            "zero", "dirac", "abel", "exponential", "ml", "limit-abel",
            "gfe", "gfe-i", "gfe-ii", "gfe-iii",
        ],
    )
    parser.add_argument("--a", type=float, help="first Mittag-Leffler order")
    parser.add_argument("--b", type=float, help="second Mittag-Leffler order")
    parser.add_argument("--alpha", type=float, help="power-kernel / flux-law exponent")
    parser.add_argument("--eps", type=float, help="small parameter (or Dirac mass)")
    parser.add_argument("--tau-theta", type=float, default=1.0)
    parser.add_argument("--rho", type=float, help="fixed ratio tau_theta/eps")
    parser.add_argument("--fixed-ratio", action="store_true")


def _kernel_from_args(args) -> kernels.KernelSpec:
    fam = args.family
    if fam == "zero":
        return kernels.KernelSpec.zero()
    if fam == "dirac":
        return kernels.KernelSpec.dirac(args.eps)
    if fam == "abel":
        return kernels.KernelSpec.abel(args.alpha, args.eps, args.tau_theta)
    if fam == "exponential":
        return kernels.KernelSpec.exponential(args.eps)
    if fam == "limit-abel":
        return kernels.KernelSpec.limit_abel(args.alpha, args.tau_theta)
    if fam == "ml":
        return kernels.KernelSpec.mittag_leffler(
            args.a, args.b, args.eps,
            tau_theta=None if args.fixed_ratio else args.tau_theta,
            rho=args.rho,
            fixed_ratio=args.fixed_ratio,
        )
    law = kernels.GfeLaw(kernels.GfeFamily(fam), args.alpha)
    fixed = True if args.fixed_ratio else None
    return kernels.from_gfe(law, args.eps, args.tau_theta, fixed_ratio=fixed)


def _kernel_from_table(table: dict) -> kernels.KernelSpec:
    fam = table["family"]
    if fam == "zero":
        return kernels.KernelSpec.zero()
    if fam == "dirac":
        return kernels.KernelSpec.dirac(table["eps"])
    if fam == "abel":
        return kernels.KernelSpec.abel(table["alpha"], table["eps"], table.get("tau_theta", 1.0))
    if fam == "exponential":
        return kernels.KernelSpec.exponential(table["eps"])
    if fam == "limit-abel":
        return kernels.KernelSpec.limit_abel(table["alpha"], table.get("tau_theta", 1.0))
    if fam == "ml":
        return kernels.KernelSpec.mittag_leffler(
            table["a"], table["b"], table["eps"],
            tau_theta=None if table.get("fixed_ratio") else table.get("tau_theta", 1.0),
            rho=table.get("rho"),
            fixed_ratio=bool(table.get("fixed_ratio", False)),
        )
    law = kernels.GfeLaw(kernels.GfeFamily(fam), table["alpha"])
    return kernels.from_gfe(
        law, table["eps"], table.get("tau_theta", 1.0), table.get("fixed_ratio")
    )


def _load_config(path: str) -> dict:
    text = Path(path).read_bytes()
    if path.endswith(".json"):
        return json.loads(text)
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(text.decode())


def _preset_from_table(table: dict, kernel, c: float, k: float) -> presets.DataPreset:
    table = dict(table)
    name = table.pop("preset")
    if name == "manufactured-cos":
        return presets.manufactured_cos_preset(kernel, c, k, **table)
    return presets.make_preset(name, **table)


def _pde_config_from_dict(cfg: dict) -> solver.PDEConfig:
    kernel = _kernel_from_table(cfg["kernel"])
    data = _preset_from_table(cfg.get("data", {"preset": "small-gauss-modes"}),
                              kernel, cfg["c"], cfg["k"])
    return solver.PDEConfig(
        c=cfg["c"],
        k=cfg["k"],
        kernel=kernel,
        data=data,
        T=cfg["T"],
        dt=cfg["dt"],
        n_modes=cfg["n_modes"],
        L=cfg.get("L", 1.0),
        fp_tol=cfg.get("fp_tol", 1e-9),
        fp_max_iters=cfg.get("fp_max_iters", 25),
        relaxation=cfg.get("relaxation", 1.0),
    )


def _cmd_mlf_eval(args) -> int:
    query = mlf.MLQuery(args.a, args.b, args.x)
    if args.regime == "auto":
        result = mlf.ml_eval(query)
    else:
        result = mlf.ml_eval_in_regime(query, mlf.Regime(args.regime))
    print(f"E_({args.a:g},{args.b:g})(-{args.x:g}) = {result.value:.15e}")
    print(f"regime: {result.regime.value}   estimated abs error: {result.est_abs_error:.2e}")
    print(json.dumps({
        "a": args.a, "b": args.b, "x": args.x,
        "value": result.value,
        "regime": result.regime.value,
        "est_abs_error": result.est_abs_error,
    }, sort_keys=True))
    return 0


def _cmd_kernel_eval(args) -> int:
    spec = _kernel_from_args(args)
    print(f"{spec.label()}({args.t:g}) = {kernels.eval_kernel(spec, args.t]):.15e}"
          if False else
          f"{spec.label()}({args.t:g}) = {kernels.eval_kernel(spec, args.t):.15e}")
    print(f"running integral to t: {kernels.conv_one(spec, args.t):.15e}")
    return 0


def _cmd_kernel_norms(args) -> int:
    spec = _kernel_from_args(args)
    n = kernels.norms(spec, args.T)
    print(json.dumps({
        "kernel": spec.label(), "T": n.T,
        "l1_or_tv": n.l1_or_tv, "conv1_l1": n.conv1_l1,
    }, sort_keys=True, indent=2))
    return 0


def _cmd_kernel_limit(args) -> int:
    spec = _kernel_from_args(args)
    lim = kernels.limit_kernel(spec)
    print(f"limit kernel: {lim.label()}")
    print(json.dumps({k: v for k, v in asdict(lim).items() if v is not None},
                     sort_keys=True))
    try:
        print(f"predicted energy-norm rate exponent: {kernels.predicted_rate(spec):g}")
    except MemwaveError:
        pass
    return 0


def _cmd_kernel_rate_check(args) -> int:
    spec = _kernel_from_args(args)
    eps_list = [float(e) for e in args.eps_list] if args.eps_list else None
    fit = experiments.kernel_only_sweep(spec, args.T, eps_list, quantity=args.quantity)
    print("eps,value,log_eps,log_value")
    for eps, value in fit.pairs:
        print("%.17e,%.17e,%.17e,%.17e" % (eps, value, math.log10(eps), math.log10(value)))
    print(f"# slope {fit.slope:.5f} predicted {fit.predicted:.5f} "
          f"r2 {fit.r_squared:.6f} verdict {fit.verdict.value}")
    return 0 if fit.verdict is not experiments.Verdict.BELOW else 1


def _cmd_verify(args) -> int:
    spec = _kernel_from_args(args)
    eps_grid = [float(e) for e in args.eps_grid] if args.eps_grid else [
        spec.eps if spec.eps is not None else 0.1
    ]
    report = coercivity.a1_report(spec, sorted(set(eps_grid), reverse=True), args.T)
    payload = {
        "kernel": spec.label(),
        "T": args.T,
        "a1_bound": report.a1_bound,
        "a1_uniform": report.a1_uniform,
        "c_frakK": None if math.isnan(report.c_frakK) else report.c_frakK,
        "method": report.method.value,
        "norms_per_eps": {f"{e:g}": v for e, v in report.details["norms"].items()},
    }
    if args.quadratic_samples > 0:
        qf = coercivity.quadratic_form_test(
            spec, args.T, n_samples=args.quadratic_samples, dt=args.dt, seed=args.seed
        )
        payload["quadratic_form"] = {
            "min_observed_ratio": qf.min_observed_ratio,
            "c_reference": qf.c_reference,
        }
    print(json.dumps(payload, sort_keys=True, indent=2))
    uniform = "pass" if report.a1_uniform else "FAIL (divergent family)"
    cval = "n/a" if math.isnan(report.c_frakK) else f"{report.c_frakK:.6g}"
    print()
    print(f"{'kernel':<24} {'uniform bound':<22} {'method':<12} {'coercivity const':<18}")
    print(f"{spec.label():<24} {uniform:<22} {report.method.value:<12} {cval:<18}")
    return 0


def _cmd_solve_linear(args) -> int:
    spec = _kernel_from_args(args)
    data = presets.make_preset(args.data)
    cfg = solver.PDEConfig(
        c=args.c, k=0.0, kernel=spec, data=data, T=args.T, dt=args.dt,
        n_modes=args.n_modes, L=args.L,
    )
    result = solver.solve(cfg)
    basis = volterra.sine_basis(args.L, args.n_modes)
    if args.trajectory_csv:
        _write_trajectory_csv(args.trajectory_csv, result.traj)
        print(f"trajectory written to {args.trajectory_csv}")
    print(json.dumps({
        "energy_norm": volterra.energy_norm(result.traj, basis),
        "sup_norm": solver.linf_estimate(result.traj, basis),
        "n_steps": int(result.traj.diagnostics.get("n_steps", 0)),
        "kernel": spec.label(),
    }, sort_keys=True, indent=2))
    return 0


def _write_trajectory_csv(path: str, traj) -> None:
    n = traj.xi.shape[1]
    header = "t," + ",".join(f"xi_{i}" for i in range(1, n + 1))
    rows = [header]
    for t, row in zip(traj.t_grid, traj.xi):
        rows.append("%.17e," % t + ",".join("%.17e" % v for v in row))
    Path(path).write_text("\n".join(rows) + "\n")


def _cmd_solve(args) -> int:
    cfg_dict = _load_config(args.config)
    cfg = _pde_config_from_dict(cfg_dict)
    result = solver.solve(cfg)
    basis = volterra.sine_basis(cfg.L, cfg.n_modes)
    summary = {
        "iterations": result.iterations,
        "fp_residuals": result.fp_residuals,
        "ball_margin": result.ball_margin,
        "ball_ok": result.ball_ok,
        "energy_norm": volterra.energy_norm(result.traj, basis),
        "sup_norm": solver.linf_estimate(result.traj, basis),
        "kernel": cfg.kernel.label(),
    }
    out = args.summary or "solve-summary.json"
    Path(out).write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True, indent=2))
    if args.trajectory_csv:
        _write_trajectory_csv(args.trajectory_csv, result.traj)
        print(f"trajectory written to {args.trajectory_csv}")
    return 0


def _cmd_sweep(args) -> int:
    cfg_dict = _load_config(args.config)
    base = _pde_config_from_dict(cfg_dict["base"])
    sweep_cfg = experiments.SweepConfig(
        base=base,
        eps_list=[float(e) for e in cfg_dict.get("eps_list", experiments.DEFAULT_EPS_GRID)],
        limit_mode=cfg_dict.get("limit_mode", "auto"),
        bound_mode=experiments.BoundMode(cfg_dict.get("bound_mode", "auto")),
        output_dir=cfg_dict.get("output_dir", "sweep-out"),
        rate_tol=cfg_dict.get("rate_tol", 0.15),
        jobs=args.jobs,
    )
    try:
        result = experiments.run_sweep(sweep_cfg)
        experiments.emit_report([result], sweep_cfg.output_dir)
    except MemwaveError as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        return 2
    print(f"slope {result.fit.slope:.4f} predicted {result.fit.predicted:.4f} "
          f"verdict {result.fit.verdict.value}")
    print(f"artifacts in {result.output_dir}")
    return 0 if result.fit.verdict is not experiments.Verdict.BELOW else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memwave",
        description="Nonlocal Westervelt equations: kernels, coercivity, solver, limits",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mlf = sub.add_parser("mlf", help="Mittag-Leffler function utilities")
    mlf_sub = p_mlf.add_subparsers(dest="mlf_command", required=True)
    p_eval = mlf_sub.add_parser("eval", help="evaluate E_{a,b}(-x)")
    p_eval.add_argument("--a", type=float, required=True)
    p_eval.add_argument("--b", type=float, required=True)
    p_eval.add_argument("--x", type=float, required=True)
    p_eval.add_argument("--regime", default="auto",
                        choices=["auto", "series", "contour", "asymptotic"])
    p_eval.set_defaults(func=_cmd_mlf_eval)

    p_kernel = sub.add_parser("kernel", help="memory-kernel catalog operations")
    kernel_sub = p_kernel.add_subparsers(dest="kernel_command", required=True)
    pk_eval = kernel_sub.add_parser("eval")
    _add_kernel_args(pk_eval)
    pk_eval.add_argument("--t", type=float, required=True)
    pk_eval.set_defaults(func=_cmd_kernel_eval)
    pk_norms = kernel_sub.add_parser("norms")
    _add_kernel_args(pk_norms)
    pk_norms.add_argument("--T", type=float, required=True)
    pk_norms.set_defaults(func=_cmd_kernel_norms)
    pk_limit = kernel_sub.add_parser("limit")
    _add_kernel_args(pk_limit)
    pk_limit.set_defaults(func=_cmd_kernel_limit)
    pk_rate = kernel_sub.add_parser("rate-check")
    _add_kernel_args(pk_rate)
    pk_rate.add_argument("--T", type=float, default=1.0)
    pk_rate.add_argument("--quantity", default="auto",
                         choices=["auto", "diff-conv1", "conv1"])
    pk_rate.add_argument("--eps-list", nargs="+")
    pk_rate.set_defaults(func=_cmd_kernel_rate_check)

    p_verify = sub.add_parser("verify", help="check the kernel assumptions")
    _add_kernel_args(p_verify)
    p_verify.add_argument("--T", type=float, required=True)
    p_verify.add_argument("--eps-grid", nargs="+")
    p_verify.add_argument("--quadratic-samples", type=int, default=0)
    p_verify.add_argument("--dt", type=float, default=1.0 / 256.0)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=_cmd_verify)

    p_lin = sub.add_parser("solve-linear", help="linear march with a fixed kernel")
    _add_kernel_args(p_lin)
    p_lin.add_argument("--L", type=float, default=1.0)
    p_lin.add_argument("--n-modes", type=int, required=True)
    p_lin.add_argument("--dt", type=float, required=True)
    p_lin.add_argument("--T", type=float, required=True)
    p_lin.add_argument("--c", type=float, default=1.0)
    p_lin.add_argument("--data", default="small-gauss-modes")
    p_lin.add_argument("--trajectory-csv")
    p_lin.set_defaults(func=_cmd_solve_linear)

    p_solve = sub.add_parser("solve", help="quasilinear fixed-point solve")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--summary")
    p_solve.add_argument("--trajectory-csv")
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="vanishing-parameter sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MemwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
