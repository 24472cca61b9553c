"""Command-line entry point.

    kpirank rank   --data d.csv --gt g.csv --ad oracle --fs fsa [--kb kb.json]
    kpirank eval   --suite DIR --ad ensemble --fs fsa --seed 1 [--ek loo] --out metrics.csv
    kpirank ek build --suite DIR --loo --out KB_DIR
    kpirank ek sweep --suite DIR --out sweep.csv
    kpirank tune grid|random --algo dbscan --seed 7 [--suite DIR] --out curve.csv
    kpirank synth  --out DIR --seed 0 [--n-cases 28] [--mode ek] [--small]
    kpirank stats  --suite DIR --out stats.csv

Exit status: 0 success, 2 usage or parse error, 3 pipeline error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import detect as det
from .errors import KpiRankError, ParseError
from .evaluation import (
    AD_TAGS,
    FS_TAGS,
    SWEEP_MODES,
    EvalConfig,
    evaluate,
    evaluate_suite,
    gamma_sweep,
    relative_impact,
    write_impact_csv,
    write_sweep_csv,
)
from .expert import EkGains, KnowledgeBase, case_contribution, ek_leave_one_out, ek_merge
from .ingest import corpus_stats, load_case, write_corpus_stats
from .metrics import write_metrics_csv
from .synth import SuiteRanges, generate_suite, load_suite
from .tune import dbscan_grid, grid_search, if_grid, randomized_tuning, evaluate_grid, write_curve_csv, write_grid_csv

EXIT_OK, EXIT_USAGE, EXIT_PIPELINE = 0, 2, 3


class UsageError(Exception):
    pass


def _add_detector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=13.0, help="DBSCAN radius in z-score units (default 13)")
    p.add_argument("--min-pts", type=int, default=80, help="DBSCAN density threshold (default 80)")
    thr = p.add_mutually_exclusive_group()
    thr.add_argument("--contamination", type=float, help="IF: flag the top fraction of slots (default 0.01)")
    thr.add_argument("--theta-s", type=float, help="IF: static isolation-score threshold")
    thr.add_argument("--elbow", type=float, nargs="?", const=0.10, help="IF: elbow over the top fraction (default 0.10)")
    p.add_argument("--n-trees", type=int, default=det.N_TREES)
    p.add_argument("--ensemble", choices=("grid", "defaults"), default="grid",
                   help="ensemble candidates: every grid combo, or only the configured IF and DBSCAN")


def _add_gain_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma-plus", type=float, default=1.0)
    p.add_argument("--gamma-minus", type=float, default=0.0)


def _config(args, seed: int | None) -> EvalConfig:
    if args.theta_s is not None:
        policy = det.StaticScore(args.theta_s)
    elif args.elbow is not None:
        policy = det.DynamicElbow(args.elbow)
    else:
        policy = det.Contamination(args.contamination if args.contamination is not None else 0.01)
    return EvalConfig(
        if_params=det.IsolationForestParams(n_trees=args.n_trees, seed=seed or 0, threshold_policy=policy),
        dbscan_params=det.DbscanParams(args.epsilon, args.min_pts),
        ensemble=args.ensemble,
    )


def _require_seed(args, stochastic: bool) -> None:
    if stochastic and args.seed is None:
        raise UsageError("--seed is required for stochastic detectors (if, ensemble)")


def _load_suite(path) -> list:
    root = Path(path)
    if not root.is_dir():
        raise ParseError(f"suite directory not found: {root}")
    cases = load_suite(root)
    if not cases:
        raise ParseError(f"no cases found under {root}")
    return cases


def _print_table(header: list[str], rows: list[list[str]], out=sys.stdout) -> None:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)), file=out)
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)), file=out)


# ---------------------------------------------------------------- commands

def cmd_rank(args) -> None:
    _require_seed(args, args.ad in ("if", "ensemble"))
    case = load_case(args.data, args.gt)
    kb = KnowledgeBase.load(args.kb) if args.kb else None
    gains = EkGains(args.gamma_plus, args.gamma_minus)
    config = _config(args, args.seed)
    plain = evaluate(case, args.ad, args.fs, None, config)
    biased = evaluate(case, args.ad, args.fs, (kb, gains), config) if kb is not None else None

    names = case.feature_names
    base_scores = plain.ranking.scores.scores
    ranking = biased.ranking if biased is not None else plain.ranking
    flagged = case.gt.anomalous_mask()
    header = ["rank", "kpi", "score"] + (["ek_score"] if biased is not None else []) + ["flagged"]
    rows = []
    for pos, j in enumerate(ranking.order, start=1):
        row = [str(pos), names[j], f"{base_scores[j]:.6f}"]
        if biased is not None:
            row.append(f"{biased.ranking.scores.scores[j]:.6f}")
        row.append(str(int(flagged[j])))
        rows.append(row)
    r = (biased or plain).row
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
    _print_table(header, rows)
    note = " (no usable anomaly window: alphabetical fallback)" if r.fallback else ""
    print(f"\nndcg={r.ndcg:.6f} reading_effort={r.m} t={r.t} e={r.e} f={r.f}{note}")


def _suite_kbs(args, cases):
    if args.ek == "loo":
        return ek_leave_one_out(cases, "fsa")
    if args.ek == "none":
        return None
    kb = KnowledgeBase.load(args.ek)
    return {c.case_id: kb for c in cases}


def cmd_eval(args) -> None:
    _require_seed(args, args.ad in ("if", "ensemble"))
    cases = _load_suite(args.suite)
    config = _config(args, args.seed)
    kbs = _suite_kbs(args, cases)
    gains = EkGains(args.gamma_plus, args.gamma_minus)
    rows = []
    for ad in args.ad.split(","):
        for fs in args.fs.split(","):
            rows += evaluate_suite(cases, ad, fs, config, None, None, args.seed or 0)
            if kbs is not None:
                rows += evaluate_suite(cases, ad, fs, config, kbs, gains, args.seed or 0)
    write_metrics_csv(rows, args.out)
    if args.impact:
        write_impact_csv(relative_impact(rows), args.impact)
    _print_table(["config", "mean_ndcg", "mean_reading_effort"],
                 [[c, f"{n:.6f}", f"{m:.6f}"] for c, n, m in relative_impact(rows)])


def cmd_ek_build(args) -> None:
    cases = _load_suite(args.suite)
    out = Path(args.out)
    if args.loo:
        kbs = ek_leave_one_out(cases, args.fs)
        out.mkdir(parents=True, exist_ok=True)
        for cid, kb in kbs.items():
            kb.save(out / f"{cid}.json")
        print(f"wrote {len(kbs)} leave-one-out knowledge bases to {out}")
    else:
        kb = ek_merge(case_contribution(c, args.fs) for c in cases)
        kb.save(out)
        print(f"wrote knowledge base with {len(kb)} KPIs to {out}")


def cmd_ek_sweep(args) -> None:
    cases = _load_suite(args.suite)
    kbs = ek_leave_one_out(cases, "fsa")
    table = gamma_sweep(cases, kbs, args.modes.split(","), [float(g) for g in args.gammas.split(",")])
    write_sweep_csv(table, args.out)
    _print_table(["gamma", "mode", "mean_ndcg"], [[f"{g:.6f}", m, f"{v:.6f}"] for g, m, v in table])


def _tuning_inputs(args):
    if args.suite:
        cases = _load_suite(args.suite)
    else:
        cases = generate_suite(args.n_cases, SuiteRanges.small() if args.small else SuiteRanges(), args.seed)
    grid = dbscan_grid() if args.algo == "dbscan" else if_grid()
    return cases, grid


def cmd_tune_grid(args) -> None:
    cases, grid = _tuning_inputs(args)
    result = evaluate_grid(cases, grid, args.fs, args.seed)
    write_grid_csv(result, args.out)
    per_case, (combo, mean) = grid_search(result)
    _print_table(["case_id", "best_combo", "ndcg"],
                 [[cid, c.label(), f"{v:.6f}"] for cid, (c, v) in per_case.items()])
    print(f"\nsingle best: {combo.label()} mean_ndcg={mean:.6f}")


def cmd_tune_random(args) -> None:
    cases, grid = _tuning_inputs(args)
    result = evaluate_grid(cases, grid, args.fs, args.seed)
    curve = randomized_tuning(result, trials=args.trials, seed=args.seed, comparator=args.comparator)
    write_curve_csv(curve, args.out)
    marks = sorted({1, 2, 3, max(1, round(0.05 * len(grid))), len(grid)})
    _print_table(["tests", "fraction", "mean_normalized_ndcg", "stderr"],
                 [[str(k), f"{curve.fractions[k - 1]:.6f}", f"{curve.mean_normalized_ndcg[k - 1]:.6f}",
                   f"{curve.stderr[k - 1]:.6f}"] for k in marks])


def cmd_synth(args) -> None:
    ranges = SuiteRanges.small() if args.small else SuiteRanges()
    cases = generate_suite(args.n_cases, ranges, args.seed, out_dir=args.out, mode=args.mode)
    print(f"wrote {len(cases)} cases to {args.out}")


def cmd_stats(args) -> None:
    stats = corpus_stats(_load_suite(args.suite))
    if args.out:
        write_corpus_stats(stats, args.out)
    _print_table(["case", "rows", "columns", "anom_slots", "anom_kpis"],
                 [[str(lbl), f"{r:g}", f"{c:g}", f"{a:.4%}", f"{k:.4%}"] for lbl, r, c, a, k in stats.as_rows()])


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpirank", description="Rank KPIs of a troubleshooting case by anomalous behavior.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="rank the KPIs of one case")
    p.add_argument("--data", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--ad", choices=AD_TAGS, default="oracle")
    p.add_argument("--fs", choices=FS_TAGS, default="fsa")
    p.add_argument("--kb", help="knowledge-base JSON used to bias scores")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="also write the ranking as CSV")
    _add_detector_args(p)
    _add_gain_args(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="metrics for every case of a suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--ad", default="oracle", help=f"comma-separated, from {AD_TAGS}")
    p.add_argument("--fs", default="fsa", help=f"comma-separated, from {FS_TAGS}")
    p.add_argument("--ek", default="none", help="'none', 'loo' (leave-one-out) or a knowledge-base JSON path")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--impact", help="also write per-configuration means")
    _add_detector_args(p)
    _add_gain_args(p)
    p.set_defaults(func=cmd_eval)

    ek = sub.add_parser("ek", help="expert-knowledge bases").add_subparsers(dest="ek_command", required=True)
    p = ek.add_parser("build", help="learn knowledge bases from solved cases")
    p.add_argument("--suite", required=True)
    p.add_argument("--loo", action="store_true", help="one base per case, excluding that case")
    p.add_argument("--fs", choices=("fsa", "fsr"), default="fsa")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ek_build)
    p = ek.add_parser("sweep", help="mean nDCG as a function of the gains")
    p.add_argument("--suite", required=True)
    p.add_argument("--modes", default=",".join(SWEEP_MODES))
    p.add_argument("--gammas", default="0,0.1,0.2,0.5,1,2,5,10")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ek_sweep)

    tune = sub.add_parser("tune", help="hyperparameter grids").add_subparsers(dest="tune_command", required=True)
    for name, func in (("grid", cmd_tune_grid), ("random", cmd_tune_random)):
        p = tune.add_parser(name)
        p.add_argument("--algo", choices=("dbscan", "if"), required=True)
        p.add_argument("--suite", help="suite directory; default: synthetic suite generated from --seed")
        p.add_argument("--n-cases", type=int, default=28)
        p.add_argument("--small", action="store_true", help="desk-sized synthetic cases")
        p.add_argument("--fs", choices=("fsa", "fsr"), default="fsa")
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--out", required=True)
        if name == "random":
            p.add_argument("--trials", type=int, default=100)
            p.add_argument("--comparator", choices=("per-case", "suite-mean"), default="per-case")
        p.set_defaults(func=func)

    p = sub.add_parser("synth", help="write a labeled synthetic suite")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-cases", type=int, default=28)
    p.add_argument("--mode", choices=("default", "ek"), default="default")
    p.add_argument("--small", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="dataset-property summary of a suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        args.func(args)
    except (UsageError, ParseError, FileNotFoundError, ValueError) as exc:
        if isinstance(exc, KpiRankError) and not isinstance(exc, ParseError):
            print(f"kpirank: error: {exc}", file=sys.stderr)
            return EXIT_PIPELINE
        print(f"kpirank: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KpiRankError as exc:
        print(f"kpirank: error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
