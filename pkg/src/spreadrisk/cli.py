"""Command-line front end.

Every command writes its outputs into ``--out`` together with
``manifest.json``, which records the argument vector, the resolved
parameters, the package version and timings. ``spreadrisk rerun
manifest.json`` replays a run.

Exit codes: 0 ok, 2 usage, 3 input, 4 infeasible, 5 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import InputError, SpreadRiskError

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4, 5

log = logging.getLogger("spreadrisk")


def fmt(v) -> str:
    """12 significant digits."""
    return f"{float(v):.12g}"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ----------------------------------------------------------------- inputs


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _builtin_params(items: Sequence[str] | None) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.replace("-", "_")] = _parse_value(v)
    if "wind" in out and isinstance(out["wind"], str):
        speed, _, bearing = out["wind"].partition(",")
        out["wind"] = (float(speed), bearing if not _is_number(bearing) else float(bearing))
    if "shape" in out:
        out["shape"] = tuple(out["shape"])
    return out


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _load_input(args):
    from .model import load_network
    from .scenario import builtin_examples

    if args.network and args.builtin:
        raise UsageError("give either --network or --builtin, not both")
    if args.builtin:
        return builtin_examples(args.builtin, **_builtin_params(args.param))
    if not args.network:
        raise UsageError("an input is required: --network PATH or --builtin NAME")
    path = Path(args.network)
    if not path.is_file():
        raise InputError(f"cannot read network file {str(path)!r}")
    directed = False if args.undirected else None
    return load_network(path, args.format, directed=directed)


def _node_index(net, ref) -> int:
    ids = [str(x) for x in net.node_ids]
    ref = str(ref)
    if ref in ids:
        return ids.index(ref)
    raise InputError(f"unknown node {ref!r}")


def _node_list(net, text: str | None) -> list[int]:
    if not text:
        return []
    return [_node_index(net, t.strip()) for t in text.split(",") if t.strip()]


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_round(obj), fh, indent=1, default=_json_default)
        fh.write("\n")


def _round(obj):
    """Floats to 12 significant digits, recursively."""
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(f"{v:.12g}") if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(f"{float(o):.12g}")
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _heatmap(net, values, out: Path, stem: str, label: str) -> list[str]:
    """CSV grid plus PNG of node scalars on the grid embedding."""
    if net.grid_shape is None:
        warnings.warn("heatmap needs a grid network; skipped")
        return []
    h, w = net.grid_shape
    grid = np.asarray(values, dtype=float).reshape(h, w)
    csv_path = out / f"{stem}.csv"
    _write_csv(csv_path, [f"c{c}" for c in range(w)], [[fmt(v) for v in row] for row in grid])
    files = [csv_path.name]
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        warnings.warn("matplotlib is not installed; heatmap image skipped")
        return files
    fig, ax = plt.subplots(figsize=(w / 8 + 2, h / 8 + 1))
    im = ax.imshow(grid, cmap="inferno", origin="upper")
    fig.colorbar(im, ax=ax, label=label)
    ax.set_xlabel("column")
    ax.set_ylabel("row")
    fig.tight_layout()
    png = out / f"{stem}.png"
    fig.savefig(png, dpi=100)
    plt.close(fig)
    return files + [png.name]


# ----------------------------------------------------------------- commands


def cmd_risk(args, out: Path) -> dict:
    from .costgo import compute_cost_to_go, cost_to_go_lp_check
    from .model import build_system_matrix
    from .surveillance import risk_map

    net = _load_input(args)
    A = build_system_matrix(net)
    ctg = compute_cost_to_go(A, net.cost, args.r)
    ra = risk_map(ctg.p, net.lambda_hi, net.tau_hi)
    rows = [[nid, fmt(ra.p[i]), fmt(ra.lam[i]), fmt(ra.tau[i]), fmt(ra.risk[i])]
            for i, nid in enumerate(net.node_ids)]
    _write_csv(out / "risk.csv", ["node", "p", "lambda", "tau", "risk"], rows)
    files = ["risk.csv"]
    summary = {"n": net.n, "r": args.r, "max_risk": ra.max, "argmax": str(net.node_ids[ra.argmax]),
               "residual": ctg.residual}
    if args.lp_check:
        lp = cost_to_go_lp_check(A, net.cost, args.r)
        summary["lp_max_rel_diff"] = float(np.max(np.abs(lp.p - ctg.p) / np.maximum(np.abs(ctg.p), 1e-300)))
    if args.heatmap:
        files += _heatmap(net, ra.risk, out, "risk_heatmap", "risk")
    return {"files": files, "summary": summary}


def cmd_revisit(args, out: Path) -> dict:
    from .costgo import compute_cost_to_go
    from .model import build_system_matrix
    from .surveillance import SurveillanceConfig, max_revisit_intervals, write_revisit_csv

    net = _load_input(args)
    p = compute_cost_to_go(build_system_matrix(net), net.cost, args.r).p
    base = p * net.lambda_hi * net.tau_hi
    if (args.r_max_risk is None) == (args.r_max_fraction is None):
        raise UsageError("give exactly one of --R-max or --R-max-fraction")
    R = args.r_max_risk if args.r_max_risk is not None else args.r_max_fraction * float(base.max())
    cfg = SurveillanceConfig(R_max=R, eps_R=args.eps_r)
    tau = max_revisit_intervals(p, net.lambda_hi, cfg)
    with open(out / "revisit.csv", "w", newline="") as fh:
        write_revisit_csv(fh, net.node_ids, p, net.lambda_hi, tau)
    files = ["revisit.csv"]
    if args.heatmap:
        files += _heatmap(net, 1.0 / tau, out, "revisit_heatmap", "revisit rate")
    return {"files": files,
            "summary": {"R_max": R, "eps_R": cfg.eps_R, "baseline_max_risk": float(base.max()),
                        "min_tau": float(tau.min()), "total_visit_rate": float(np.sum(1.0 / tau))}}


def _budgets(args):
    from .allocate import Budgets

    def b(v):
        return 0.0 if v is None else v

    return Budgets(beta=b(args.budget_beta), delta=b(args.budget_delta), lam=b(args.budget_lambda),
                   tau=b(args.budget_tau), vaccination=b(args.budget_vaccination), r_max=args.r_max)


def cmd_allocate(args, out: Path) -> dict:
    from .allocate import AllocationProblem, assemble_problem, solve_allocation
    from .sparsify import SparsifyConfig, sparsify_allocation

    net = _load_input(args)
    seed = _node_index(net, args.seed_node) if args.seed_node is not None else None
    x0 = None
    if args.x0:
        x0 = np.zeros(net.n)
        x0[_node_list(net, args.x0)] = 1.0
    risk_cap = args.risk_cap
    spec = AllocationProblem(
        net, args.variant, _budgets(args), risk_cap=risk_cap, x0=x0, seed_node=seed,
        vaccination=tuple(_node_list(net, args.vaccinate)),
    )
    prog = assemble_problem(spec)
    res = solve_allocation(prog, backend=args.backend, tol=args.tol)
    edges = (net.src, net.dst)
    _write_json(out / "allocation.json", res.to_json(net.node_ids, edges))
    files = ["allocation.json"]
    summary = {"status": res.status, "objective": res.objective, "risk": res.risk,
               "nonzero": res.nonzero, "solve_time": res.solve_time, "backend": res.backend}
    if args.sparsify is not None:
        cfg = SparsifyConfig(max_iters=args.sparsify, mode=args.sparsify_mode, M=args.sparsify_M,
                             eps=args.sparsify_eps, backend=args.backend)
        run = sparsify_allocation(spec, res, cfg, prog)
        with open(out / "sparsify.log", "w") as fh:
            for entry in run.log:
                nz = entry.get("nonzero")
                nz_txt = "-" if nz is None else " ".join(f"{k}={v}" for k, v in nz.items())
                risk = "-" if entry.get("risk") is None else fmt(entry["risk"])
                status = "accepted" if entry.get("accepted") else f"rejected ({entry.get('reason', '')})"
                fh.write(f"iteration {entry['iteration']}: nonzero {nz_txt} risk {risk} {status}\n")
        _write_json(out / "allocation_sparse.json", run.final.to_json(net.node_ids, edges))
        files += ["sparsify.log", "allocation_sparse.json"]
        summary["sparsify"] = {"converged": run.converged, "iterations": len(run.log) - 1,
                               "nonzero": run.final.nonzero, "risk": run.final.risk}
    if args.heatmap:
        files += _heatmap(net, res.risk_per_node, out, "allocation_risk_heatmap", "risk")
    return {"files": files, "summary": summary}


def cmd_simulate(args, out: Path) -> dict:
    from . import simulate as sim
    from .model import build_system_matrix

    net = _load_input(args)
    x0 = _node_list(net, args.x0) if args.x0 else [0]
    files: list[str] = []
    summary: dict = {}
    if args.mode in ("stochastic", "meanfield", "linear"):
        T = args.horizon if args.horizon is not None else 10.0
        if args.mode == "stochastic":
            tr = sim.run_stochastic(net, x0=x0, T=T, dt=args.dt, seed=args.seed)
        elif args.mode == "meanfield":
            chi0 = np.zeros(net.n)
            chi0[x0] = 1.0
            tr = sim.integrate_meanfield(net, chi0=chi0, T=T, dt=args.dt)
        else:
            x = np.zeros(net.n)
            x[x0] = 1.0
            dt = args.dt if args.dt is not None else sim.default_dt(net)
            tr = sim.integrate_linear(build_system_matrix(net), x, T=T, dt=dt)
        with open(out / "trace.csv", "w", newline="") as fh:
            tr.write_csv(fh)
        files.append("trace.csv")
        summary = {"steps": int(tr.t.size - 1), "dt": tr.dt}
        if args.r is not None:
            summary["discounted_cost"] = sim.discounted_cost(tr, net.cost, args.r)
    elif args.mode == "validate":
        r = 1.0 if args.r is None else args.r
        rep = sim.monte_carlo_validate(net, x0=np.isin(np.arange(net.n), x0), r=r, runs=args.runs,
                                       seed=args.seed, dt=args.dt, T=args.horizon)
        summary = rep.to_json()
        _write_json(out / "stats.json", summary)
        files.append("stats.json")
    elif args.mode == "montecarlo":
        r = 1.0 if args.r is None else args.r
        stats = sim.stochastic_costs(net, None, None, np.isin(np.arange(net.n), x0), net.cost, r,
                                     args.runs, T=args.horizon, dt=args.dt, seed=args.seed)
        summary = stats.to_json()
        _write_json(out / "stats.json", summary)
        files.append("stats.json")
        summary = {"runs": stats.runs, "mean": stats.mean, "se": stats.se}
    elif args.mode == "wildfire":
        from .allocate import Budgets
        from .scenario import scale_budgets

        r = 4.0 if args.r is None else args.r
        b = scale_budgets(net.n, beta=args.budget_beta_ref, lam=args.budget_lambda_ref,
                          tau=args.budget_tau_ref)
        rep = sim.wildfire_comparison(net, Budgets(r_max=r, **b), r, runs=args.runs, seed=args.seed,
                                      footprint=args.footprint)
        summary = rep.to_json()
        _write_json(out / "stats.json", summary)
        files.append("stats.json")
        summary = {"risk_based_mean": rep.risk_arm.mean, "spectral_mean": rep.spectral_arm.mean,
                   "separation_se": rep.separation}
    else:
        raise UsageError(f"unknown mode {args.mode!r}")
    return {"files": files, "summary": summary}


def cmd_scenario(args, out: Path) -> dict:
    from .model import network_to_json
    from .scenario import SCENARIO_MANIFEST, build_grid_network, load_landscape, wildfire_landscape

    files = []
    if args.landscape:
        path = Path(args.landscape)
        if not path.is_file():
            raise InputError(f"cannot read landscape file {str(path)!r}")
        land = load_landscape(path)
        net = build_grid_network(land, delta=args.delta)
    else:
        if not args.builtin:
            raise UsageError("scenario needs --builtin NAME or --landscape PATH")
        params = _builtin_params(args.param)
        net = _load_input(args)
        if args.builtin == "grid-wildfire" and args.emit_landscape:
            from .scenario import grid_shape_for

            shape = params.get("shape") or (grid_shape_for(int(params["n"])) if "n" in params else (50, 80))
            wind = params.get("wind", (8.0, 270.0))
            land = wildfire_landscape(*shape, wind_speed=float(wind[0]),
                                      wind_dir=wind[1] if isinstance(wind[1], (int, float)) else 270.0)
            _write_json(out / "landscape.json", land.to_json())
            files.append("landscape.json")
    _write_json(out / "network.json", network_to_json(net))
    files.append("network.json")
    summary = {"n": net.n, "m": net.m}
    if args.builtin in SCENARIO_MANIFEST:
        _write_json(out / "scenario_manifest.json", SCENARIO_MANIFEST[args.builtin])
        files.append("scenario_manifest.json")
    return {"files": files, "summary": summary}


def cmd_bench(args, out: Path) -> dict:
    from .allocate import AllocationProblem, Budgets, assemble_problem, solve_allocation
    from .scenario import builtin_examples, scale_budgets

    sizes = [int(s) for s in args.sizes.split(",")]
    rows, times = [], []
    for n in sizes:
        net = builtin_examples("grid-wildfire", n=n)
        b = scale_budgets(n, beta=args.budget_beta_ref, lam=args.budget_lambda_ref, tau=args.budget_tau_ref)
        best = np.inf
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            prog = assemble_problem(AllocationProblem(net, "min-max-risk", Budgets(r_max=args.r_max, **b)))
            res = solve_allocation(prog, backend=args.backend, tol=args.tol)
            best = min(best, time.perf_counter() - t0)
        times.append(best)
        rows.append([n, net.m, fmt(best), res.iterations, res.status, fmt(res.objective)])
        log.info("n=%d m=%d time=%.3fs status=%s", n, net.m, best, res.status)
    _write_csv(out / "bench.csv", ["n", "m", "seconds", "iterations", "status", "objective"], rows)
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0]) if len(sizes) > 1 else float("nan")
    return {"files": ["bench.csv"], "summary": {"sizes": sizes, "seconds": times, "loglog_slope": slope}}


COMMANDS = {"risk": cmd_risk, "revisit": cmd_revisit, "allocate": cmd_allocate,
            "simulate": cmd_simulate, "scenario": cmd_scenario, "bench": cmd_bench}


# ----------------------------------------------------------------- parser


def _input_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input")
    g.add_argument("--network", help="network file (network-json, edge-csv or air-csv)")
    g.add_argument("--format", choices=["network-json", "edge-csv", "air-csv"])
    g.add_argument("--undirected", action="store_true", help="expand every listed edge both ways")
    g.add_argument("--builtin", choices=["sixteen-node", "seven-node", "grid-wildfire", "synthetic-air"])
    g.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="builtin generator parameter, e.g. variant=uniform, n=1000, wind=8,W")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spreadrisk", description="Risk-based surveillance and resource allocation "
                                                    "for spreading processes on networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("risk", help="cost-to-go and risk per node")
    _input_args(p)
    p.add_argument("--r", type=float, required=True, help="discount rate")
    p.add_argument("--lp-check", action="store_true", help="cross-check with the LP route")
    p.add_argument("--heatmap", action="store_true")

    p = sub.add_parser("revisit", help="largest revisit intervals for a risk budget")
    _input_args(p)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--R-max", dest="r_max_risk", type=float)
    p.add_argument("--R-max-fraction", dest="r_max_fraction", type=float,
                   help="R_max as a fraction of the largest baseline risk")
    p.add_argument("--eps-R", dest="eps_r", type=float)
    p.add_argument("--heatmap", action="store_true")

    p = sub.add_parser("allocate", help="optimal resource allocation")
    _input_args(p)
    p.add_argument("--variant", default="min-max-risk",
                   choices=["min-max-risk", "min-resources-risk-cap", "min-spectral-bound",
                            "known-outbreak-risk"])
    for ch in ("beta", "delta", "lambda", "tau", "vaccination"):
        p.add_argument(f"--budget-{ch}", type=float, help="budget (inf: channel active, no limit)")
    p.add_argument("--vaccinate", help="comma-separated nodes sharing one vaccination variable")
    p.add_argument("--risk-cap", type=float)
    p.add_argument("--seed-node")
    p.add_argument("--x0", help="comma-separated initially infected nodes")
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--backend", default="auto", choices=["auto", "clarabel", "cvxpy", "scs", "barrier"])
    p.add_argument("--tol", type=float)
    p.add_argument("--sparsify", type=int, nargs="?", const=10, metavar="ITERS")
    p.add_argument("--sparsify-mode", default="objective", choices=["objective", "replace", "join"])
    p.add_argument("--sparsify-M", type=float)
    p.add_argument("--sparsify-eps", type=float)
    p.add_argument("--heatmap", action="store_true")

    p = sub.add_parser("simulate", help="stochastic and deterministic simulation")
    _input_args(p)
    p.add_argument("--mode", default="stochastic",
                   choices=["stochastic", "meanfield", "linear", "validate", "montecarlo", "wildfire"])
    p.add_argument("--x0", help="comma-separated initially infected nodes (default: first node)")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--footprint", type=int, default=1)
    p.add_argument("--budget-beta-ref", type=float, default=2000.0)
    p.add_argument("--budget-lambda-ref", type=float, default=500.0)
    p.add_argument("--budget-tau-ref", type=float, default=1500.0)

    p = sub.add_parser("scenario", help="generate example networks")
    _input_args(p)
    p.add_argument("--landscape", help="landscape JSON to turn into a grid network")
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--emit-landscape", action="store_true")

    p = sub.add_parser("bench", help="solve time versus grid size")
    p.add_argument("--sizes", default="250,1000,4000")
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--r-max", type=float, default=4.0)
    p.add_argument("--backend", default="auto", choices=["auto", "clarabel", "cvxpy", "scs", "barrier"])
    p.add_argument("--tol", type=float)
    p.add_argument("--budget-beta-ref", type=float, default=2000.0)
    p.add_argument("--budget-lambda-ref", type=float, default=500.0)
    p.add_argument("--budget-tau-ref", type=float, default=1500.0)

    p = sub.add_parser("rerun", help="replay the command recorded in a manifest")
    p.add_argument("manifest")
    return parser


# ----------------------------------------------------------------- entry


def _diagnostic(code: int, exc: BaseException) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
          file=sys.stderr)
    return code


def execute_command(argv: Sequence[str] | None = None) -> int:
    """Run one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        if args.command == "rerun":
            path = Path(args.manifest)
            if not path.is_file():
                raise InputError(f"cannot read manifest {str(path)!r}")
            recorded = json.loads(path.read_text())["argv"]
            # outputs go next to the manifest unless --out is given before the command
            return execute_command(recorded)
    except UsageError as exc:
        return _diagnostic(EXIT_USAGE, exc)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (InputError, json.JSONDecodeError, KeyError) as exc:
        return _diagnostic(EXIT_INPUT, exc)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = COMMANDS[args.command](args, out)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except UsageError as exc:
        return _diagnostic(EXIT_USAGE, exc)
    except SpreadRiskError as exc:
        return _diagnostic(getattr(exc, "exit_code", EXIT_INPUT), exc)
    except (ValueError, OSError, ZeroDivisionError) as exc:
        return _diagnostic(EXIT_INPUT, exc)

    params = {k: v for k, v in vars(args).items() if k != "command"}
    manifest = {
        "command": args.command,
        "argv": argv,
        "version": __version__,
        "parameters": params,
        "inputs": [p for p in (getattr(args, "network", None), getattr(args, "landscape", None)) if p],
        "solver_tolerance_env": os.environ.get("SPREADRISK_SOLVER_TOL"),
        "outputs": result["files"],
        "summary": result["summary"],
        "wall_time": time.perf_counter() - start,
    }
    _write_json(out / "manifest.json", manifest)
    print(json.dumps(_round(result["summary"]), default=_json_default))
    return EXIT_OK


def main() -> None:
    sys.exit(execute_command())


if __name__ == "__main__":
    main()
