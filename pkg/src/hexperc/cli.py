"""Command-line laboratory: campaigns, exact censuses, path sums, reports.

Every run writes its outputs under ``--out`` with a metadata header (the
exact command line, seed, lattice parameters, package version and a
timestamp).  Reruns of the same command are byte-identical except for the
timestamp field, which is the reproducibility contract the tests hold this
module to.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import PathCountExceeded, StateSpaceError, SubsetCapExceeded
from .exact import exact_distribution, moments, verify_independence
from .lattice import CellGraph, build_lattice
from .montecarlo import RunConfig, Tally, csv_header, csv_row, estimate, run
from .pathsum import (
    BUILTIN_GRAPH_NAMES,
    DEFAULT_PATH_CAP,
    DEFAULT_SUBSET_CAP,
    builtin_graph,
    enumerate_paths,
    single_fluid_sum,
    triple_fluid_sum,
)
from .sampling import DEFAULT_ENUM_BUDGET, derive_seed
from .stats import (
    Z95,
    berry_esseen_bound,
    binomial_ks_reference,
    coupling_gap,
    ks_to_continuous,
    normal_cdf,
    ordering_check,
    standardized_mean_cdf,
)

_CAL_SALT = 0xCA11B


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _side(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"lattice side must be at least 2, got {text}")
    return value


def _fluids(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"fluid count must be at least 2, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _int_list(text: str) -> list[int]:
    """Comma list ("2,5,10") or inclusive range ("10..60" / "10..60:10")."""
    text = text.strip()
    if ".." in text:
        head, _, tail = text.partition("..")
        stop_text, _, step_text = tail.partition(":")
        start = int(head)
        stop = int(stop_text)
        step = int(step_text) if step_text else 1
        if step < 1 or stop < start:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        return list(range(start, stop + 1, step))
    values = [int(part) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _side_list(text: str) -> list[int]:
    values = _int_list(text)
    for v in values:
        if v < 2:
            raise argparse.ArgumentTypeError(f"lattice side must be at least 2, got {v}")
    if len(set(values)) != len(values):
        raise argparse.ArgumentTypeError("duplicate lattice side")
    return values


def _fluid_list(text: str) -> list[int]:
    values = _int_list(text)
    for v in values:
        if v < 2:
            raise argparse.ArgumentTypeError(f"fluid count must be at least 2, got {v}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexperc",
        description="Multi-fluid percolation experiments on hexagonal patches.",
    )
    parser.add_argument("--version", action="version", version=f"hexperc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, samples_default):
        p.add_argument("--samples", type=_positive_int, default=samples_default,
                       help=f"colorings to draw (default {samples_default})")
        p.add_argument("--seed", type=_seed, default=0, help="campaign seed (default 0)")
        p.add_argument("--workers", type=_positive_int, default=None,
                       help="thread count; default $HEXPERC_WORKERS, else the "
                            "available parallelism; never changes the results")
        p.add_argument("--out", type=Path, default=Path("."),
                       help="output directory (default current)")

    p = sub.add_parser("sample", help="Monte Carlo campaign on one lattice")
    p.add_argument("--s", type=_side, required=True, help="lattice side")
    p.add_argument("--n", type=_fluids, required=True, help="fluid count")
    add_common(p, 100_000)
    p.add_argument("--format", choices=("csv", "json", "both"), default="csv",
                   help="which report files to write (default csv)")

    p = sub.add_parser("exact", help="exhaustive census over all colorings")
    p.add_argument("--s", type=_side, required=True)
    p.add_argument("--n", type=_fluids, required=True)
    p.add_argument("--budget", type=_positive_int, default=DEFAULT_ENUM_BUDGET,
                   help="max free bits before refusing "
                        f"(default {DEFAULT_ENUM_BUDGET})")
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("clt", help="normal-limit diagnostics across fluid counts")
    p.add_argument("--s", type=_side, required=True)
    p.add_argument("--n-list", type=_fluid_list, required=True,
                   help="fluid counts, e.g. 4,9,16,25")
    add_common(p, 200_000)
    p.add_argument("--cal-samples", type=_positive_int, default=None,
                   help="calibration campaign size (default: same as --samples)")

    p = sub.add_parser("figure2", help="exactly-k probabilities across lattice sides")
    p.add_argument("--s-list", type=_side_list, required=True,
                   help="lattice sides, e.g. 10..60:10")
    p.add_argument("--n", type=_fluids, default=3)
    add_common(p, 100_000)

    p = sub.add_parser("figure4", help="joint-vs-independent ratio across lattice sides")
    p.add_argument("--s-list", type=_side_list, required=True)
    p.add_argument("--n", type=_fluids, default=3)
    add_common(p, 1_000_000)

    def add_graph_args(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--graph", choices=BUILTIN_GRAPH_NAMES,
                           help="builtin graph name")
        group.add_argument("--graph-json", type=Path,
                           help="cell-graph JSON file")
        p.add_argument("--path-cap", type=_positive_int, default=DEFAULT_PATH_CAP,
                       help=f"path enumeration cap (default {DEFAULT_PATH_CAP})")
        p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("pathsum", help="closed-form probabilities from path subsets")
    add_graph_args(p)
    p.add_argument("--subset-cap", type=_positive_int, default=DEFAULT_SUBSET_CAP,
                   help=f"max subset terms per sum (default {DEFAULT_SUBSET_CAP})")
    p.add_argument("--triple", action="store_true",
                   help="also compute the all-three-fluids probability")

    p = sub.add_parser("paths", help="enumerate source-to-target paths")
    add_graph_args(p)

    return parser


def _resolve_workers(args) -> int:
    if getattr(args, "workers", None):
        return args.workers
    env = os.environ.get("HEXPERC_WORKERS", "").strip()
    if env:
        value = int(env)
        if value < 1:
            raise ValueError("HEXPERC_WORKERS must be positive")
        return value
    return os.cpu_count() or 1


def _meta(argv: Sequence[str], **fields) -> dict:
    meta = {
        "command": "hexperc " + " ".join(argv),
        "version": f"hexperc {__version__}",
    }
    meta.update({k: v for k, v in fields.items() if v is not None})
    meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    return meta


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, meta: dict, header: Sequence[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _frac(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator, "decimal": float(x)}


def _cmd_sample(args, argv) -> int:
    workers = _resolve_workers(args)
    lat = build_lattice(args.s)
    cfg = RunConfig(s=args.s, n=args.n, samples=args.samples,
                    seed=args.seed, workers=workers)
    tally = run(lat, cfg)
    est = estimate(tally)
    meta = _meta(argv, s=args.s, n=args.n, m=lat.m,
                 samples=args.samples, seed=args.seed)
    stem = f"sample_s{args.s}_n{args.n}"
    if args.format in ("csv", "both"):
        _write_csv(args.out / f"{stem}.csv", meta,
                   csv_header(args.n), [csv_row(tally, est)])
    if args.format in ("json", "both"):
        payload = {
            "meta": meta,
            "tally": tally.payload(),
            "estimates": {
                "p_hat": est.p_hat, "p_lo": est.p_lo, "p_hi": est.p_hi,
                "b_hat": list(est.b_hat),
                "b_lo": list(est.b_lo), "b_hi": list(est.b_hi),
                "joint_hat": est.joint_hat,
                "ratio": est.ratio,
                "ratio_lo": est.ratio_lo, "ratio_hi": est.ratio_hi,
                "note": est.note,
            },
        }
        _write_json(args.out / f"{stem}.json", payload)
    print(f"s={args.s} n={args.n} samples={args.samples} seed={args.seed}: "
          f"p_hat={est.p_hat:.6f} [{est.p_lo:.6f}, {est.p_hi:.6f}]")
    if est.ratio is not None:
        print(f"ratio={est.ratio:.6f} [{est.ratio_lo:.6f}, {est.ratio_hi:.6f}]")
    else:
        print(est.note)
    return 0


def _cmd_exact(args, argv) -> int:
    lat = build_lattice(args.s)
    dist = exact_distribution(lat, args.n, budget=args.budget)
    indep = verify_independence(dist)
    mom = moments(dist)
    p = dist.p()
    b = [dist.prob_b(k) for k in range(args.n + 1)]

    # First-moment identity: sum_k k P(B_k) = n p, always.  For two fluids
    # this is the halved form p = P(B_2) + P(B_1)/2.
    mean_identity = sum(Fraction(k) * b[k] for k in range(args.n + 1)) == args.n * p

    payload = {
        "meta": _meta(argv, s=args.s, n=args.n, m=dist.m, seed=None),
        "s": args.s,
        "n": args.n,
        "m": dist.m,
        "total_colorings": dist.total,
        "p": _frac(p),
        "b": [_frac(x) for x in b],
        "pattern_counts": list(dist.pattern_counts),
        "mean_identity_holds": bool(mean_identity),
        "independence": {
            "proper_subsets_checked": indep.proper_subsets_checked,
            "proper_subsets_factorize": indep.proper_subsets_factorize,
            "full_factorizes": indep.full_factorizes,
            "full_excess": _frac(indep.full_excess),
            "full_ratio": _frac(indep.full_ratio) if indep.full_ratio is not None else None,
        },
        "moments": {
            "p": _frac(mom.p),
            "variance": _frac(mom.variance),
            "abs_third_central": _frac(mom.abs_third_central),
        },
    }
    if args.n == 2:
        payload["identity_p_equals_b2_plus_half_b1"] = bool(p == b[2] + b[1] / 2)
    _write_json(args.out / f"exact_s{args.s}_n{args.n}.json", payload)

    print(f"s={args.s} n={args.n}: {dist.total} colorings")
    print(f"p = {p} = {float(p):.6f}")
    for k, x in enumerate(b):
        print(f"P(exactly {k}) = {x} = {float(x):.6f}")
    print(f"proper fluid subsets factorize: {indep.proper_subsets_factorize}; "
          f"full set factorizes: {indep.full_factorizes} "
          f"(excess {indep.full_excess})")
    return 0


def _cmd_clt(args, argv) -> int:
    workers = _resolve_workers(args)
    lat = build_lattice(args.s)
    cal_samples = args.cal_samples or args.samples
    cal_cfg = RunConfig(s=args.s, n=2, samples=cal_samples,
                        seed=derive_seed(args.seed, _CAL_SALT), workers=workers)
    cal = run(lat, cal_cfg)
    p_cal = sum(cal.per_fluid) / (2 * cal.samples)
    if not 0.0 < p_cal < 1.0:
        print("calibration produced a degenerate percolation frequency",
              file=sys.stderr)
        return 1

    meta = _meta(argv, s=args.s, m=lat.m, samples=args.samples, seed=args.seed,
                 p_cal=p_cal, cal_samples=cal_samples)
    summary_rows = []
    all_ok = True
    for n in args.n_list:
        cfg = RunConfig(s=args.s, n=n, samples=args.samples,
                        seed=derive_seed(args.seed, n), workers=workers)
        tally = run(lat, cfg)
        cdf = standardized_mean_cdf(tally.exact_k, tally.samples, p_cal)
        ks_emp = ks_to_continuous(cdf)
        ks_ref = binomial_ks_reference(n, p_cal)
        bound = berry_esseen_bound(p_cal, n)
        gap = coupling_gap(tally, p_cal)
        all_ok = all_ok and gap.ok
        summary_rows.append([
            n, tally.samples, cfg.seed, p_cal, ks_emp, ks_ref,
            abs(ks_emp - ks_ref), bound,
            gap.sup_gap, gap.bound, gap.tolerance, gap.ok,
        ])
        cdf_rows = [
            [k, tally.exact_k[k], x, level, normal_cdf(x)]
            for k, (x, level) in enumerate(zip(cdf.xs, cdf.levels))
        ]
        _write_csv(args.out / f"clt_cdf_n{n}.csv", meta,
                   ["k", "count", "x", "level", "normal"], cdf_rows)
        print(f"n={n}: ks_emp={ks_emp:.4f} ks_ref={ks_ref:.4f} "
              f"be_bound={bound:.3f} gap={gap.sup_gap:.5f} "
              f"(bound {gap.bound:.4f} + tol {gap.tolerance:.4f}) ok={gap.ok}")

    _write_csv(args.out / "clt_summary.csv", meta,
               ["n", "samples", "seed", "p_cal", "ks_emp", "ks_ref", "ks_diff",
                "be_bound", "gap_sup", "gap_bound", "gap_tol", "gap_ok"],
               summary_rows)
    if not all_ok:
        print("coupling gap exceeded its bound", file=sys.stderr)
        return 1
    return 0


def _cmd_figure2(args, argv) -> int:
    workers = _resolve_workers(args)
    tallies = []
    for s in args.s_list:
        lat = build_lattice(s)
        cfg = RunConfig(s=s, n=args.n, samples=args.samples,
                        seed=derive_seed(args.seed, s), workers=workers)
        tallies.append(run(lat, cfg))
    report = ordering_check(tallies)
    meta = _meta(argv, n=args.n, samples=args.samples, seed=args.seed,
                 s_list=",".join(str(s) for s in args.s_list))
    _write_csv(args.out / "figure2.csv", meta,
               ["s", "n", "samples", "k", "count", "b_hat", "b_lo", "b_hi"],
               [[row.s, args.n, args.samples, row.k, row.count,
                 row.b_hat, row.b_lo, row.b_hi] for row in report.rows])
    _write_csv(args.out / "figure2_ordering.csv", meta,
               ["s", "undetermined", "ordered", "separated"],
               [[st.s, st.undetermined, st.ordered, st.separated]
                for st in report.statuses])
    for st in report.statuses:
        print(f"s={st.s}: undetermined={st.undetermined} "
              f"ordered={st.ordered} separated={st.separated}")
    return 0


def _cmd_figure4(args, argv) -> int:
    workers = _resolve_workers(args)
    meta = _meta(argv, n=args.n, samples=args.samples, seed=args.seed,
                 s_list=",".join(str(s) for s in args.s_list))
    rows = []
    for s in args.s_list:
        lat = build_lattice(s)
        cfg = RunConfig(s=s, n=args.n, samples=args.samples,
                        seed=derive_seed(args.seed, s), workers=workers)
        tally = run(lat, cfg)
        est = estimate(tally)
        opt = lambda x: "" if x is None else x
        rows.append([s, args.n, args.samples, cfg.seed, est.p_hat,
                     est.joint_hat, opt(est.ratio), opt(est.ratio_lo),
                     opt(est.ratio_hi)])
        if est.ratio is None:
            print(f"s={s}: p_hat={est.p_hat:.6f} {est.note}")
        else:
            print(f"s={s}: p_hat={est.p_hat:.6f} ratio={est.ratio:.6f} "
                  f"[{est.ratio_lo:.6f}, {est.ratio_hi:.6f}]")
    _write_csv(args.out / "figure4.csv", meta,
               ["s", "n", "samples", "seed", "p_hat", "joint_hat",
                "ratio", "ratio_lo", "ratio_hi"], rows)
    return 0


def _load_graph(args) -> tuple[str, CellGraph]:
    if args.graph:
        return args.graph, builtin_graph(args.graph)
    text = args.graph_json.read_text()
    return args.graph_json.stem, CellGraph.from_json(text)


def _cmd_pathsum(args, argv) -> int:
    name, graph = _load_graph(args)
    paths = enumerate_paths(graph, cap=args.path_cap)
    print(f"graph {name}: {graph.cell_count} cells, {len(paths)} paths")
    meta = _meta(argv, graph=name, cells=graph.cell_count, paths=len(paths))
    payload = {"meta": meta, "graph": name, "cells": graph.cell_count,
               "path_count": len(paths)}
    failures = []
    try:
        single = single_fluid_sum(graph, subset_cap=args.subset_cap, paths=paths)
        payload["single_fluid"] = _frac(single)
        print(f"single fluid: {single} = {float(single):.6f}")
    except SubsetCapExceeded as exc:
        payload["single_fluid"] = {"refused": str(exc)}
        failures.append(str(exc))
    if args.triple:
        try:
            triple = triple_fluid_sum(graph, subset_cap=args.subset_cap, paths=paths)
            payload["all_three_fluids"] = _frac(triple)
            print(f"all three fluids: {triple} = {float(triple):.6f}")
        except SubsetCapExceeded as exc:
            payload["all_three_fluids"] = {"refused": str(exc)}
            failures.append(str(exc))
    _write_json(args.out / f"pathsum_{name}.json", payload)
    for message in failures:
        print(message, file=sys.stderr)
    return 1 if failures else 0


def _cmd_paths(args, argv) -> int:
    name, graph = _load_graph(args)
    paths = enumerate_paths(graph, cap=args.path_cap)
    meta = _meta(argv, graph=name, cells=graph.cell_count, paths=len(paths))
    rows = [[i, len(p), " ".join(str(c) for c in p)] for i, p in enumerate(paths)]
    _write_csv(args.out / f"paths_{name}.csv", meta,
               ["path_id", "length", "cells"], rows)
    print(f"graph {name}: {len(paths)} paths")
    return 0


_COMMANDS = {
    "sample": _cmd_sample,
    "exact": _cmd_exact,
    "clt": _cmd_clt,
    "figure2": _cmd_figure2,
    "figure4": _cmd_figure4,
    "pathsum": _cmd_pathsum,
    "paths": _cmd_paths,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, argv)
    except (StateSpaceError, PathCountExceeded, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
