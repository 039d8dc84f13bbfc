"""Command-line front end.

Subcommands: check | solve | simulate | nash-gap | reproduce.  Every
command writes a manifest into its output directory before any data so
partial runs are detectable; reruns with identical manifest inputs
reproduce identical CSV bytes.

Exit codes: 0 ok, 1 configuration error, 2 assumption failure, 3 solver
non-convergence, 4 simulation failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import ProblemSpec, load_spec, spec_from_dict, validate_assumptions
from .errors import (AssumptionError, ConfigError, ConvergenceError,
                     DivergentCostError, IntegrationError, SimulationError)
from .gmfg import (MeanFieldSolution, check_monotonicity, consistency_residual,
                   contraction_constant, solve_fixed_point, solve_spectral)
from .graphon import Graphon, graphon_from_config, sample_step, spectral_decompose
from .odesolve import solve_p_ell_stack, solve_riccati_pi
from .presets import benchmark_config
from .simulate import (SimConfig, default_probe_agents, estimate_cost,
                       limit_ensemble, nash_gap_experiment,
                       simulate_population)

OUTPUT_ENV = "RSGMFG_OUTPUT_DIR"


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _resolve_outdir(arg_out: str | None, command: str) -> Path:
    base = arg_out or os.environ.get(OUTPUT_ENV) or "rsgmfg-output"
    out = Path(base) / command if arg_out is None else Path(arg_out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(outdir: Path, command: str, config_path: str,
                    config: dict, seed: int | None, args: dict) -> dict:
    manifest = {
        "command": command,
        "config_path": config_path,
        "config_sha256": _config_hash(config),
        "seed": seed,
        "output_dir": str(outdir),
        "created_utc": datetime.datetime.now(datetime.timezone.utc)
                       .isoformat(timespec="seconds"),
        "wall_clock_start": time.time(),
        "versions": {"rsgmfg": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "args": args,
    }
    _write_json(outdir / "manifest.json", manifest)
    return manifest


def _spec_and_graphon(config_path: str) -> tuple[ProblemSpec, Graphon]:
    spec = load_spec(config_path)
    g = graphon_from_config(spec.graphon_cfg, Path(config_path).parent)
    return spec, g


def _solution_csv(path: Path, sol: MeanFieldSolution) -> None:
    n = sol.z.shape[2]
    header = (["alpha", "t"] + [f"z{i + 1}" for i in range(n)]
              + [f"S{i + 1}" for i in range(n)] + ["r"])
    ts = sol.grid.t

    def rows():
        for a_idx, alpha in enumerate(sol.alphas):
            for k, t in enumerate(ts):
                yield ([_fmt(alpha), _fmt(t)]
                       + [_fmt(v) for v in sol.z[a_idx, k]]
                       + [_fmt(v) for v in sol.S[a_idx, k]]
                       + [_fmt(sol.r[a_idx, k])])

    _write_csv(path, header, rows())


def _wide_csv(path: Path, ts: np.ndarray, alphas: np.ndarray,
              surface: np.ndarray) -> None:
    """(alpha, t) scalar surface as one column per node."""
    header = ["t"] + [f"alpha={_fmt(a)}" for a in alphas]

    def rows():
        for k, t in enumerate(ts):
            yield [_fmt(t)] + [_fmt(surface[j, k]) for j in range(len(alphas))]

    _write_csv(path, header, rows())


def _monotonicity_dict(rep) -> dict:
    return {"mu": rep.mu, "nu": rep.nu, "case": rep.case,
            "inequality_margins": list(rep.inequality_margins),
            "lambda_min_positive": rep.lambda_min_positive}


def _contraction_dict(rep) -> dict:
    return {"c_g": rep.c_g, "c_z": rep.c_z, "c_S": rep.c_S,
            "C_Xi": rep.C_Xi, "contraction_ok": rep.contraction_ok}


def cmd_check(args) -> int:
    spec, g = _spec_and_graphon(args.config)
    report = validate_assumptions(spec)
    payload = {"h3_ok": report.h3_ok,
               "h4_min_eigenvalue": report.h4_min_eigenvalue,
               "h4_ok": report.h4_ok,
               "warnings": list(report.warnings),
               "contraction": None, "monotonicity": None}
    ok = report.h3_ok and report.h4_ok
    if ok:
        Pi = solve_riccati_pi(spec)
        payload["contraction"] = _contraction_dict(
            contraction_constant(spec, Pi, g))
        payload["monotonicity"] = _monotonicity_dict(
            check_monotonicity(spec, Pi, g))
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if ok else 2


def cmd_solve(args) -> int:
    spec, g = _spec_and_graphon(args.config)
    outdir = _resolve_outdir(args.out, "solve")
    config = spec.config
    _write_manifest(outdir, "solve", args.config, config, None,
                    {"method": args.method})

    methods = (["fixed_point", "spectral"] if args.method == "both"
               else [args.method.replace("-", "_")])
    sols: dict[str, MeanFieldSolution] = {}
    summary: dict = {"methods": {}}
    for method in methods:
        if method == "fixed_point":
            sol = solve_fixed_point(spec, g, tol=args.tol, force=True)
        else:
            sol = solve_spectral(spec, g)
        sols[method] = sol
        _solution_csv(outdir / f"solution_{method}.csv", sol)
        summary["methods"][method] = {
            "iterations": sol.iterations,
            "picard_residual": sol.residual,
            "consistency_residual": consistency_residual(sol, spec, g),
            **sol.extras,
        }
    Pi = solve_riccati_pi(spec)
    summary["contraction"] = _contraction_dict(contraction_constant(spec, Pi, g))
    summary["monotonicity"] = _monotonicity_dict(check_monotonicity(spec, Pi, g))
    if len(sols) == 2:
        a, b = sols["fixed_point"], sols["spectral"]
        summary["cross_method_sup_diff"] = float(max(
            np.max(np.abs(a.z - b.z)), np.max(np.abs(a.S - b.S)),
            np.max(np.abs(a.r - b.r))))
    _write_json(outdir / "summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _sim_config(spec: ProblemSpec, args) -> SimConfig:
    cfg = dict(spec.simulation_cfg or {})
    N = args.N if getattr(args, "N", None) else int(cfg.get("N", 10))
    M = args.M if getattr(args, "M", None) else int(cfg.get("M", 100))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    dt = getattr(args, "dt", None) or cfg.get("dt")
    return SimConfig(N=N, M=M, seed=seed, dt=dt)


def cmd_simulate(args) -> int:
    spec, g = _spec_and_graphon(args.config)
    sim = _sim_config(spec, args)
    outdir = _resolve_outdir(args.out, "simulate")
    _write_manifest(outdir, "simulate", args.config, spec.config, sim.seed,
                    {"N": sim.N, "M": sim.M, "dt": sim.dt})

    mfsol = solve_spectral(spec, g)
    gN = sample_step(g, sim.N)
    paths = simulate_population(spec, gN, mfsol, sim)

    n, m = spec.n, spec.m
    header = (["path", "agent", "t"] + [f"x{i + 1}" for i in range(n)]
              + [f"u{i + 1}" for i in range(m)])

    def rows():
        for p in range(paths.x.shape[0]):
            for a in range(paths.x.shape[1]):
                for k, t in enumerate(paths.t):
                    yield ([str(p), str(a + 1), _fmt(t)]
                           + [_fmt(v) for v in paths.x[p, a, k]]
                           + [_fmt(v) for v in paths.u[p, a, k]])

    _write_csv(outdir / "trajectories.csv", header, rows())

    probe = default_probe_agents(sim.N)
    costs = []
    for a in probe:
        est = estimate_cost(spec, paths, gN, int(a))
        costs.append({"agent": int(a) + 1,
                      "alpha": float(paths.agent_alphas[a]),
                      "estimate": est.to_dict()})
    _write_json(outdir / "costs.json", {"seed": sim.seed, "M": sim.M,
                                        "costs": costs})
    print(json.dumps({"output_dir": str(outdir),
                      "probe_costs": costs}, indent=2, sort_keys=True))
    return 0


def cmd_nash_gap(args) -> int:
    spec, g = _spec_and_graphon(args.config)
    sim = _sim_config(spec, args)
    n_list = [int(x) for x in args.N_list.split(",") if x.strip()]
    outdir = _resolve_outdir(args.out, "nash-gap")
    _write_manifest(outdir, "nash-gap", args.config, spec.config, sim.seed,
                    {"N_list": n_list, "M": sim.M, "deviate": args.deviate})

    mfsol = solve_spectral(spec, g)
    report = nash_gap_experiment(spec, g, mfsol, n_list, sim,
                                 deviate_delta=args.deviate)
    payload = report.to_dict()
    _write_json(outdir / "nash_gap.json", payload)

    header = ["N", "agent", "alpha", "J_hat", "std_error", "J_limit", "gap",
              "eps1", "eps2", "eps3", "deviation_cost"]

    def rows():
        for r in report.rows:
            dev = r.deviation_cost.mean if r.deviation_cost else ""
            yield [str(r.N), str(r.agent), _fmt(r.alpha), _fmt(r.J_hat.mean),
                   _fmt(r.J_hat.std_error), _fmt(r.J_limit), _fmt(r.gap),
                   _fmt(r.eps1), _fmt(r.eps2), _fmt(r.eps3),
                   _fmt(dev) if dev != "" else ""]

    _write_csv(outdir / "nash_gap.csv", header, rows())
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_reproduce(args) -> int:
    config = benchmark_config()
    spec = spec_from_dict(config)
    g = graphon_from_config(spec.graphon_cfg)
    outdir = _resolve_outdir(args.out, "reproduce")
    seed = int(config["simulation"]["seed"])
    _write_manifest(outdir, "reproduce", "<builtin:benchmark>", config, seed,
                    {"figure": args.figure})

    figure = args.figure
    if figure == "riccati":
        Pi = solve_riccati_pi(spec)
        decomp = spectral_decompose(g, spec.grids.alpha)
        stack = solve_p_ell_stack(spec, Pi, decomp.eigenvalues)
        p_perp = solve_p_ell_stack(spec, Pi, np.zeros(1))[0]
        header = (["t", "Pi", "P_perp"]
                  + [f"P_lam{j + 1}" for j in range(decomp.rank)])

        def rows():
            for k, t in enumerate(spec.grids.t):
                yield ([_fmt(t), _fmt(Pi.values[k, 0, 0]),
                        _fmt(p_perp[k, 0, 0])]
                       + [_fmt(stack[j, k, 0, 0]) for j in range(decomp.rank)])

        _write_csv(outdir / "riccati.csv", header, rows())
        _write_json(outdir / "riccati_meta.json",
                    {"eigenvalues": [float(v) for v in decomp.eigenvalues],
                     "rank": decomp.rank,
                     "spectral_residual": decomp.residual})
    elif figure in ("z", "s"):
        mfsol = solve_spectral(spec, g)
        surface = mfsol.z[:, :, 0] if figure == "z" else mfsol.S[:, :, 0]
        _wide_csv(outdir / f"{figure}.csv", mfsol.grid.t, mfsol.alphas,
                  surface)
    elif figure in ("state", "control"):
        mfsol = solve_spectral(spec, g)
        sim = SimConfig(N=spec.grids.n_alpha, M=1, seed=seed)
        paths = limit_ensemble(spec, mfsol, sim)
        surface = (paths.x[0, :, :, 0] if figure == "state"
                   else paths.u[0, :, :, 0])
        _wide_csv(outdir / f"{figure}.csv", paths.t, paths.agent_alphas,
                  surface)
    else:
        raise ConfigError(f"unknown figure '{figure}'")
    print(json.dumps({"output_dir": str(outdir), "figure": figure},
                     indent=2, sort_keys=True))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsgmfg",
        description="Solvers and simulators for risk-sensitive LQG "
                    "mean-field games on graphons.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="Validate standing assumptions and "
                                     "well-posedness certificates.")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="Solve the equilibrium mean-field system.")
    p.add_argument("config")
    p.add_argument("--method", choices=["fixed-point", "spectral", "both"],
                   default="spectral")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="Simulate the finite population "
                                        "under decentralized strategies.")
    p.add_argument("config")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("nash-gap", help="Per-N comparison of simulated vs "
                                        "closed-form limit costs.")
    p.add_argument("config")
    p.add_argument("--N-list", dest="N_list", default="25,50,100,200")
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--deviate", type=float, default=None,
                   help="delta' of the damped-risk deviation probe")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_nash_gap)

    p = sub.add_parser("reproduce", help="Emit the benchmark figure data.")
    p.add_argument("--figure", required=True,
                   choices=["riccati", "state", "control", "z", "s"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (AssumptionError, IntegrationError) as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3
    except (SimulationError, DivergentCostError) as exc:
        print(f"simulation failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
