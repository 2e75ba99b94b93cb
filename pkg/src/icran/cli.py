"""Command-line benchmark harness.

Subcommands: ``region`` (2-user frontier and hull CSV), ``wsrm`` (algorithm
comparison sweep), ``iwfa`` (water-filling game with certificates),
``power`` (scalar power-control suite), ``ia`` (alignment check / solve),
and ``bench`` (full JSON config run).  Exit codes: 0 success, 2 config
error, 3 infeasible-problem report.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import alignment, bench, power_control, rate_region, waterfilling
from .channels import ScalarChannel, channel_from_json, gen_channel
from .errors import ConfigError, FeasibilityError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parent.add_argument("--out", default=None, help="output file (default stdout)")
    parent.add_argument("--format", choices=("csv", "json"), default="csv")
    parent.add_argument("--quiet", action="store_true", help="suppress progress text")
    return parent


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _info(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _parse_floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_antennas(text: str) -> list:
    pairs = []
    for item in text.split(","):
        if "x" not in item:
            raise ConfigError(f"antenna spec must look like 2x2,2x2,... got {text!r}")
        m, n = item.split("x", 1)
        try:
            pairs.append((int(m), int(n)))
        except ValueError:
            raise ConfigError(f"bad antenna pair {item!r}") from None
    return pairs


def _symmetric_scalar_channel(alpha: float, pbar: float) -> ScalarChannel:
    gains = np.array([[1.0, np.sqrt(alpha)], [np.sqrt(alpha), 1.0]], dtype=complex)
    return ScalarChannel(gains, np.array([pbar, pbar]))


def _cmd_region(args) -> int:
    if args.channel:
        with open(args.channel) as fh:
            ch = channel_from_json(fh.read())
    else:
        ch = _symmetric_scalar_channel(args.alpha, args.pbar)
    sample = rate_region.frontier_2user(ch, grid_size=args.grid)
    report = rate_region.convexity_2user(ch)
    eff = rate_region.ne_efficiency_2user(ch, grid_size=args.grid)
    _info(args, f"convex={report.convex} necessary_holds={report.necessary_holds}")
    _info(
        args,
        f"NE sum rate {eff.ne_sum:.4f}, best time-sharing sum {eff.best_timeshare_sum:.4f}, "
        f"gap {eff.gap:.4f}",
    )
    if args.format == "json":
        doc = {
            "points": sample.points.tolist(),
            "labels": sample.labels,
            "hull": sample.hull.tolist(),
            "convexity": {
                "convex": report.convex,
                "necessary_holds": report.necessary_holds,
                "necessary_holds_squared": report.necessary_holds_squared,
            },
            "ne": {
                "rates": list(eff.ne_rates),
                "sum": eff.ne_sum,
                "best_timeshare_sum": eff.best_timeshare_sum,
                "gap": eff.gap,
            },
        }
        _emit(args, json.dumps(doc))
    else:
        buf = io.StringIO()
        rate_region.region_to_csv(sample, buf)
        _emit(args, buf.getvalue())
    return EXIT_OK


def _cmd_wsrm(args) -> int:
    cfg = bench.ExperimentConfig(
        scenario={"kind": "parallel", "K": args.K, "N": args.N},
        snr_grid=_parse_floats(args.snr),
        algorithms=[a.strip() for a in args.algorithms.split(",") if a.strip()],
        realizations=args.realizations,
        base_seed=args.seed,
    )
    table = bench.run_experiment(cfg)
    for entry in bench.summarize(table):
        _info(
            args,
            f"{entry['algorithm']:>6s}  snr={entry['snr_db']:5.1f} dB  "
            f"mean sum rate {entry['mean_sum_rate']:.4f}",
        )
    _emit(args, _table_text(table, args.format))
    return EXIT_OK


def _table_text(table, fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "json":
        table.to_json(buf)
    else:
        table.to_csv(buf)
    return buf.getvalue()


def _cmd_iwfa(args) -> int:
    ch = gen_channel("parallel", {"K": args.K, "N": args.N, "budgets": args.pbar}, args.seed)
    cert_sim = waterfilling.cert_simultaneous(ch)
    cert_seq = waterfilling.cert_sequential(ch)
    _info(args, f"simultaneous certificate: holds={cert_sim.holds} rho={cert_sim.rho:.4f}")
    _info(args, f"sequential certificate:   holds={cert_seq.holds} rho={cert_seq.rho:.4f}")
    _info(args, f"symmetric crosstalk: {waterfilling.cert_symmetric_crosstalk(ch)}")
    trace = waterfilling.iwfa(
        ch,
        schedule=args.schedule,
        damping=args.damping,
        tol=args.tol,
        max_iter=args.max_iter,
    )
    res = waterfilling.ne_residual(ch, trace.final)
    _info(
        args,
        f"{args.schedule} IWFA: converged={trace.converged} after {trace.iterations} "
        f"iterations, NE residual {res:.3e}",
    )
    if args.format == "json":
        doc = {
            "certificates": {
                "simultaneous": {"holds": cert_sim.holds, "rho": cert_sim.rho},
                "sequential": {"holds": cert_seq.holds, "rho": cert_seq.rho},
                "symmetric_crosstalk": waterfilling.cert_symmetric_crosstalk(ch),
            },
            "converged": trace.converged,
            "iterations": trace.iterations,
            "ne_residual": res,
            "sum_rate_history": list(trace.objective_history),
            "final_powers": np.asarray(trace.final).tolist(),
        }
        _emit(args, json.dumps(doc))
    else:
        buf = io.StringIO()
        buf.write("iteration,sum_rate,residual\n")
        residuals = trace.extra["residual_history"]
        for i, obj in enumerate(trace.objective_history):
            res_i = "" if i == 0 else repr(float(residuals[i - 1]))
            buf.write(f"{i},{obj!r},{res_i}\n")
        _emit(args, buf.getvalue())
    return EXIT_OK


def _cmd_power(args) -> int:
    ch = gen_channel("scalar", {"K": args.K}, args.seed)
    gamma = np.asarray(
        _parse_floats(args.gamma) if args.gamma else [args.gamma_common] * args.K
    )
    if gamma.size != args.K:
        raise ConfigError(f"need {args.K} SINR targets, got {gamma.size}")
    doc = {}
    if args.K >= 2:
        try:
            doc["maxmin_sinr"] = power_control.maxmin_sinr_optimum(ch)
        except Exception as exc:  # degenerate channels only
            doc["maxmin_sinr_error"] = str(exc)
    feas = power_control.minpower_feasible(ch, gamma)
    doc["rho_A"] = feas.rho
    doc["feasible"] = feas.feasible
    if not feas.feasible:
        _info(args, f"targets infeasible: rho(A) = {feas.rho:.4f} >= 1")
        _emit(args, json.dumps(doc) if args.format == "json" else _power_csv(doc))
        return EXIT_INFEASIBLE
    p_star = power_control.minpower_closed_form(ch, gamma)
    trace = power_control.yates_fixed_point(ch, gamma, tol=args.tol)
    doc["closed_form_powers"] = p_star.tolist()
    doc["yates_powers"] = np.asarray(trace.final).tolist()
    doc["yates_iterations"] = trace.iterations
    doc["yates_converged"] = trace.converged
    _info(
        args,
        f"rho(A)={feas.rho:.4f}; yates converged={trace.converged} "
        f"in {trace.iterations} iterations",
    )
    _emit(args, json.dumps(doc) if args.format == "json" else _power_csv(doc))
    return EXIT_OK


def _power_csv(doc: dict) -> str:
    buf = io.StringIO()
    buf.write("key,value\n")
    for key, val in doc.items():
        buf.write(f"{key},\"{val}\"\n")
    return buf.getvalue()


def _ia_profile(args) -> alignment.DofProfile:
    antennas = _parse_antennas(args.antennas)
    dof = [int(x) for x in _parse_floats(args.dof)]
    if len(dof) != len(antennas):
        raise ConfigError("need one DoF per user")
    return alignment.DofProfile(d=dof, antennas=antennas)


def _cmd_ia(args) -> int:
    profile = _ia_profile(args)
    checks = alignment.feasibility_necessary(profile)
    bounds = alignment.dof_bounds(profile)
    lines = [
        f"I1 (per-user stream limit):   {'pass' if checks.i1 else 'FAIL'}",
        f"I2 (pairwise antenna bound):  {'pass' if checks.i2 else 'FAIL'}",
        f"counting bound (all subsets): {'pass' if checks.counting else 'FAIL'}",
        f"equal-d upper bound:          d <= {bounds.equal_d_bound:.4f}",
    ]
    if checks.violating_subset is not None:
        lines.append(f"first violating subset: {checks.violating_subset}")
    Ms = {m for m, _ in profile.antennas}
    Ns = {n for _, n in profile.antennas}
    ds = set(profile.d)
    if len(Ms) == 1 and Ms == Ns and len(ds) == 1:
        ok = alignment.symmetric_feasible(next(iter(Ms)), next(iter(ds)), profile.K)
        lines.append(f"symmetric rule 2M >= d(K+1):  {'pass' if ok else 'FAIL'}")
    if args.mode == "check":
        _info(args, "\n".join(lines))
        doc = {
            "i1": checks.i1,
            "i2": checks.i2,
            "counting": checks.counting,
            "equal_d_bound": bounds.equal_d_bound,
            "violating_subset": checks.violating_subset,
        }
        _emit(args, json.dumps(doc) if args.format == "json" else "\n".join(lines) + "\n")
        return EXIT_OK if checks.all_pass else EXIT_INFEASIBLE

    ch = gen_channel("mimo", {"K": profile.K, "antennas": profile.antennas}, args.seed)
    result = alignment.ia_altmin(
        ch, profile, max_iter=args.max_iter, tol=args.tol
    )
    _info(
        args,
        f"converged={result.converged} after {result.iterations} iterations, "
        f"final leakage {result.leakage_history[-1]:.3e}, "
        f"max cross term {result.residual:.3e}, rank_ok={result.rank_ok}",
    )
    if args.format == "json":
        doc = {
            "converged": result.converged,
            "iterations": result.iterations,
            "leakage_history": result.leakage_history.tolist(),
            "residual": result.residual,
            "rank_ok": result.rank_ok,
        }
        _emit(args, json.dumps(doc))
    else:
        buf = io.StringIO()
        buf.write("half_step,leakage\n")
        for i, leak in enumerate(result.leakage_history):
            buf.write(f"{i},{leak!r}\n")
        _emit(args, buf.getvalue())
    return EXIT_OK


def _cmd_bench(args) -> int:
    with open(args.config) as fh:
        cfg = bench.ExperimentConfig.from_json(fh.read())
    table = bench.run_experiment(cfg)
    for entry in bench.summarize(table):
        _info(
            args,
            f"{entry['algorithm']:>10s}  snr={entry['snr_db']:5.1f} dB  "
            f"mean sum rate {entry['mean_sum_rate']:.4f}",
        )
    _emit(args, _table_text(table, args.format))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icran", description="interference-channel resource allocation benchmarks"
    )
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", parents=[common], help="2-user rate region frontier + hull")
    p.add_argument("--alpha", type=float, default=0.5, help="symmetric cross gain power")
    p.add_argument("--pbar", type=float, default=1.0, help="per-user power budget")
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--channel", default=None, help="JSON channel file (overrides --alpha)")
    p.set_defaults(fn=_cmd_region)

    p = sub.add_parser("wsrm", parents=[common], help="weighted sum-rate comparison sweep")
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--N", type=int, default=32)
    p.add_argument("--snr", default="0,5,10,15,20,25,30", help="comma-separated dB values")
    p.add_argument("--algorithms", default="wmmse,mdp,scale")
    p.add_argument("--realizations", type=int, default=20)
    p.set_defaults(fn=_cmd_wsrm)

    p = sub.add_parser("iwfa", parents=[common], help="water-filling game run + certificates")
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--pbar", type=float, default=1.0)
    p.add_argument("--schedule", choices=("sequential", "simultaneous"), default="sequential")
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=1000)
    p.set_defaults(fn=_cmd_iwfa)

    p = sub.add_parser("power", parents=[common], help="scalar power-control suite")
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--gamma", default=None, help="comma-separated SINR targets")
    p.add_argument("--gamma-common", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(fn=_cmd_power)

    p = sub.add_parser("ia", parents=[common], help="interference alignment check / solve")
    p.add_argument("mode", choices=("check", "solve"))
    p.add_argument("--antennas", required=True, help="per-user MxN pairs, e.g. 2x2,2x2,2x2")
    p.add_argument("--dof", required=True, help="comma-separated stream counts")
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(fn=_cmd_ia)

    p = sub.add_parser("bench", parents=[common], help="run a full JSON experiment config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FeasibilityError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
