"""Command-line surface: theory constants, single exploration runs with
trace/doob dumps, Monte Carlo cells, tail experiments, exact oracles, and
the acceptance suite.

Exit codes: 0 success, 1 acceptance-suite failure, 2 usage error, 3 runtime
fault.  Errors are single-line machine-parseable messages on stderr.  Output
files are byte-identical across repeated invocations with equal arguments
and across --threads values.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import acceptance
from .doob import approx_gap, decompose
from .explore import ExplorationConfig, explore
from .mc import (
    CELL_CSV_HEADER,
    TAILS_CSV_HEADER,
    CellSpec,
    ExperimentPlan,
    fmt17,
    format_cell_row,
    format_tail_row,
    resolve_workers,
    run_experiment,
    tail_subcritical,
    tail_supercritical,
)
from .oracle import enumerate_all, enumerate_step
from .theory import clt_targets, derived_constants, drift_sequences, p_from_lambda, rho_r

TRACE_HEADER = "t,edges,eta,xi,zeta,nullity_inc,A,C,X,new_component"
COMPONENTS_HEADER = "index,t_start,t_end,vertices,edges,nullity"
DOOB_HEADER = "t,D,Delta,Dstar,DeltaStar,S,Xtilde,Shat"


class UsageError(Exception):
    pass


def _add_shared(sp):
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--r", type=int, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--replicates", type=int, default=None)
    sp.add_argument("--out", type=str, default=None)
    sp.add_argument("--format", choices=("csv", "json"), default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--mode", choices=("implicit", "explicit"), default=None)
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--stop", type=str, default=None, help="full or giant:MARGIN")
    sp.add_argument("--config", type=str, default=None, help="JSON file with flag defaults")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hxplore", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("theory", "print solved constants (and CLT targets when --n is given) as JSON"),
        ("run", "run one exploration; write trace and component CSVs (--doob adds the decomposition)"),
        ("mc", "run a Monte Carlo cell; write the per-cell CSV and a JSON report"),
        ("tails", "tail-probability experiment (--kind sub|super)"),
        ("oracle", "exact enumeration (full law, or one step with --step)"),
        ("verify", "run the acceptance suite; nonzero exit on failure"),
    ):
        sp = sub.add_parser(name, help=helptext)
        _add_shared(sp)
        if name == "run":
            sp.add_argument("--doob", action="store_true")
        if name == "tails":
            sp.add_argument("--kind", choices=("sub", "super"), required=True)
            sp.add_argument("--L-grid", dest="l_grid", type=str, default=None,
                            help="comma-separated component-size thresholds")
            sp.add_argument("--omega-grid", dest="omega_grid", type=str, default="2,3,4,5")
            sp.add_argument("--bound-c", dest="bound_c", type=float, default=10.0)
        if name == "oracle":
            sp.add_argument("--step", action="store_true")
            sp.add_argument("--explored", type=str, default="")
            sp.add_argument("--active", type=str, default="")
        if name == "verify":
            sp.add_argument("--criteria", type=str, default=None,
                            help="comma-separated criterion numbers (default: all)")
    return ap


def _merge_config(args) -> None:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            defaults = json.load(fh)
        for key, val in defaults.items():
            key = key.replace("-", "_")
            if key == "lambda":
                key = "lam"
            if getattr(args, key, None) is None:
                setattr(args, key, val)


def _resolve_p(args) -> float:
    given = [x is not None for x in (args.eps, args.lam, args.p)]
    if sum(given) != 1:
        raise UsageError("give exactly one of --eps, --lambda, --p")
    if args.n is None or args.r is None:
        raise UsageError("--n and --r are required")
    if args.p is not None:
        return args.p
    lam = args.lam if args.lam is not None else 1.0 + args.eps
    return p_from_lambda(args.n, args.r, lam)


def _eps_of(args, p) -> float:
    return p * float(args.n) ** (args.r - 1) / math.factorial(args.r - 2) - 1.0


def _parse_stop(args):
    """(rule, margin); margin is None for 'giant' without an explicit value,
    meaning the default 2 t0."""
    if args.stop is None or args.stop == "full":
        return "full", 0
    if args.stop.startswith("giant"):
        margin = None
        if ":" in args.stop:
            margin = int(args.stop.split(":", 1)[1])
        return "giant", margin
    raise UsageError(f"unknown stop rule {args.stop!r}")


def _emit(out_path, sections) -> None:
    """sections: list of (suffix, text); to files PREFIX.suffix, or stdout
    separated by blank lines when no --out is given."""
    if out_path:
        for suffix, text in sections:
            with open(f"{out_path}.{suffix}", "w") as fh:
                fh.write(text)
    else:
        sys.stdout.write("\n\n".join(text.rstrip("\n") for _, text in sections) + "\n")


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def cmd_theory(args) -> int:
    if args.r is None:
        raise UsageError("--r is required")
    if args.format == "csv":
        raise UsageError("theory output is JSON only")
    if (args.lam is None) == (args.eps is None):
        raise UsageError("give exactly one of --eps, --lambda")
    lam = args.lam if args.lam is not None else 1.0 + args.eps
    cons = derived_constants(args.r, lam)
    out = {
        "r": args.r,
        "lambda": lam,
        "eps": lam - 1.0,
        "rho_lambda": cons.rho_lambda,
        "lambda_star": cons.lambda_star,
        "rho_r": cons.rho_r,
        "rho_star": cons.rho_star,
    }
    if args.n is not None:
        t = clt_targets(args.n, args.r, lam - 1.0)
        out["clt_targets"] = {
            "mean_L1": t.mean_L1, "sd_L1": t.sd_L1,
            "mean_N1": t.mean_N1, "sd_N1": t.sd_N1, "corr": t.corr,
        }
        out["p"] = p_from_lambda(args.n, args.r, lam)
    _emit(args.out, [("json", json.dumps(out, indent=2, sort_keys=True) + "\n")])
    return 0


def cmd_run(args) -> int:
    _require(args, "n", "r", "seed")
    p = _resolve_p(args)
    stop, margin = _parse_stop(args)
    omega = args.omega if args.omega is not None else 4.0
    eps = _eps_of(args, p)
    t0 = int(math.floor(omega * math.sqrt(args.n / eps))) if eps > 0 else None
    if stop == "giant":
        if t0 is None:
            raise UsageError("stop rule 'giant' needs a supercritical cell")
        if margin is None:
            margin = 2 * t0
    cfg = ExplorationConfig(
        n=args.n, r=args.r, p=p, seed=args.seed,
        mode=args.mode or "implicit", stop_rule=stop,
        margin=margin or 0, census_t0=t0 if stop == "giant" else None,
    )
    trace = explore(cfg)
    if args.format == "json":
        doc = {
            "trace": [
                {
                    "t": s.t, "edges": s.edge_count, "eta": s.eta, "xi": s.xi,
                    "zeta": s.zeta, "nullity_inc": s.nullity_inc, "A": s.A,
                    "C": s.C, "X": s.X, "new_component": s.started_new_component,
                }
                for s in trace.steps()
            ],
            "components": [
                {
                    "index": c.index, "t_start": c.t_start, "t_end": c.t_end,
                    "vertices": c.vertices, "edges": c.edges, "nullity": c.nullity,
                }
                for c in trace.components
            ],
            "complete": trace.complete,
        }
        sections = [("json", json.dumps(doc, indent=2, sort_keys=True) + "\n")]
    else:
        lines = [TRACE_HEADER]
        for s in trace.steps():
            lines.append(
                f"{s.t},{s.edge_count},{s.eta},{s.xi},{s.zeta},{s.nullity_inc},"
                f"{s.A},{s.C},{s.X},{int(s.started_new_component)}"
            )
        comp_lines = [COMPONENTS_HEADER]
        for c in trace.components:
            comp_lines.append(f"{c.index},{c.t_start},{c.t_end},{c.vertices},{c.edges},{c.nullity}")
        sections = [("trace.csv", "\n".join(lines) + "\n"),
                    ("components.csv", "\n".join(comp_lines) + "\n")]
    if args.doob:
        t1 = int(math.floor(rho_r(args.r, 1.0 + eps) * args.n)) if eps > 0 else 0
        t1 = min(t1, trace.n_steps)
        seq = drift_sequences(args.n, args.r, p, t1)
        dt = decompose(trace, seq, t1=t1)
        dlines = [DOOB_HEADER]
        for i in range(dt.n_steps):
            shat = fmt17(dt.Shat[i]) if i < dt.t1 else ""
            dlines.append(
                f"{i + 1},{fmt17(dt.D[i])},{fmt17(dt.Delta[i])},{fmt17(dt.Dstar[i])},"
                f"{fmt17(dt.DeltaStar[i])},{fmt17(dt.S[i])},{fmt17(dt.Xtilde[i])},{shat}"
            )
        gap = approx_gap(trace, dt)
        dlines.append(
            f"# V1={fmt17(dt.V1)} V2={fmt17(dt.V2)} V12={fmt17(dt.V12)} "
            f"lindeberg1={fmt17(dt.lindeberg1)} lindeberg2={fmt17(dt.lindeberg2)} c1={fmt17(gap)}"
        )
        sections.append(("doob.csv", "\n".join(dlines) + "\n"))
    _emit(args.out, sections)
    return 0


def cmd_mc(args) -> int:
    _require(args, "n", "r", "seed", "replicates")
    p = _resolve_p(args)
    eps = _eps_of(args, p)
    stop, margin = _parse_stop(args) if args.stop else (("giant", None) if eps > 0 else ("full", 0))
    spec = CellSpec(n=args.n, r=args.r, p=p, mode=args.mode or "implicit",
                    stop=stop, margin=margin if stop == "giant" else None)
    collect = ("census", "windows") if eps > 0 else ("census",)
    plan = ExperimentPlan(cells=(spec,), replicates=args.replicates,
                          master_seed=args.seed,
                          omega=args.omega if args.omega is not None else 4.0,
                          collect=collect)
    workers = resolve_workers(args.threads)
    results = run_experiment(plan, workers=workers)
    csv_text = CELL_CSV_HEADER + "\n" + "\n".join(format_cell_row(r) for r in results) + "\n"
    report = []
    for res in results:
        s = res.summary()
        agg = res.aggregate
        verdict = {
            "cell": s["cell"],
            "summary": s,
            "window_freqs": {
                "E1": agg.win_e1 / agg.win_checked,
                "E2": agg.win_e2 / agg.win_checked,
                "E3": agg.win_e3 / agg.win_checked,
                "all": agg.win_all / agg.win_checked,
            } if agg.win_checked else None,
            "duality_corr": agg.duality_corr(),
            "z_identity_ok": bool(agg.zc_checked and agg.zc_ok == agg.zc_checked),
            "verdicts": {
                "ks_z1_below_0.05": None if s["ks_z1"] is None else bool(s["ks_z1"] < 0.05),
                "corr_within_0.06_of_sqrt35": None if s["corr"] is None
                else bool(abs(s["corr"] - math.sqrt(3.0 / 5.0)) < 0.06),
            },
        }
        report.append(verdict)
    json_text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    _emit(args.out, [("cells.csv", csv_text), ("report.json", json_text)])
    return 0


def cmd_tails(args) -> int:
    _require(args, "n", "r", "eps", "seed", "replicates")
    workers = resolve_workers(args.threads)
    if args.l_grid:
        grid = [int(x) for x in args.l_grid.split(",")]
    else:
        grid = [max(1, round(x / args.eps**2)) for x in (3.0, 4.5, 6.0, 8.0)]
    if args.kind == "sub":
        rep = tail_subcritical(args.n, args.r, args.eps, grid, args.replicates,
                               args.seed, workers=workers, c_bound=args.bound_c)
    else:
        omega_grid = [float(x) for x in args.omega_grid.split(",")]
        rep = tail_supercritical(args.n, args.r, args.eps, omega_grid, grid,
                                 args.replicates, args.seed, workers=workers,
                                 c_bound=args.bound_c)
    lines = [TAILS_CSV_HEADER] + [format_tail_row(row) for row in rep.rows]
    sections = [("tails.csv", "\n".join(lines) + "\n")]
    meta = {
        "kind": rep.kind, "n": rep.n, "r": rep.r, "eps": rep.eps, "R": rep.R,
        "c_bound": rep.c_bound, "measurable": rep.measurable,
        "strictly_decreasing": rep.strictly_decreasing,
        "log_fit": {"slope": rep.slope, "intercept": rep.intercept,
                    "max_residual": rep.max_fit_residual},
        "omega_rows": [{"omega": om, "count": c, "freq": f} for om, c, f in rep.omega_rows],
    }
    sections.append(("report.json", json.dumps(meta, indent=2, sort_keys=True) + "\n"))
    _emit(args.out, sections)
    return 0


def cmd_oracle(args) -> int:
    _require(args, "n", "r", "p")
    if args.format == "csv":
        raise UsageError("oracle output is JSON only")
    if args.step:
        explored = [int(x) for x in args.explored.split(",") if x != ""]
        active = [int(x) for x in args.active.split(",") if x != ""]
        law = enumerate_step(args.n, args.r, args.p, explored, active)
        out = {
            "n": args.n, "r": args.r, "p": args.p, "t": law.t, "v": law.v,
            "support": [list(k) for k in law.support],
            "probability": [float(q) for q in law.probability],
            "moments": law.moments(),
        }
    else:
        workers = resolve_workers(args.threads)
        dist = enumerate_all(args.n, args.r, args.p, workers=workers)
        out = {
            "n": args.n, "r": args.r, "p": args.p,
            "support": [list(k) for k in dist.support],
            "probability": [float(q) for q in dist.probability],
        }
    _emit(args.out, [("json", json.dumps(out, indent=2, sort_keys=True) + "\n")])
    return 0


def cmd_verify(args) -> int:
    keys = None
    if args.criteria:
        keys = [int(x) for x in args.criteria.split(",")]
    workers = resolve_workers(args.threads)
    results = acceptance.run_all(keys=keys, workers=workers, progress=print)
    return 0 if all(r.passed for r in results) else 1


_COMMANDS = {
    "theory": cmd_theory,
    "run": cmd_run,
    "mc": cmd_mc,
    "tails": cmd_tails,
    "oracle": cmd_oracle,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        _merge_config(args)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage-error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
