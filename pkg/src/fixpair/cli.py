"""Command-line interface.

Subcommands mirror the stage chain: fetch, link, analyze, build, filter,
evaluate, stats, run.  Exit codes: 0 ok, 2 configuration problem, 3 data
problem, 4 stage failure.
"""

import argparse
import os
import sys

from .errors import (
    ConfigError,
    FixpairError,
    SnapshotFormatError,
    SnapshotInvariantError,
    StageError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_STAGE = 4


def _add_pipeline_args(p, need_out=True):
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--out", required=False, help="output directory")
    p.add_argument("--snapshot", help="path to an existing snapshot file")
    p.add_argument("--repo", help="local git clone used for checkouts")
    p.add_argument("--issues", help="issues JSON for offline snapshot building")
    p.add_argument("--repo-id", dest="repo_id", help="repository id for the snapshot")
    p.add_argument(
        "--bug-label",
        dest="bug_labels",
        action="append",
        help="issue label marking bugs (repeatable; default: bug)",
    )
    p.add_argument("--seed", type=int, help="master seed (default 42)")
    p.add_argument("--repeats", type=int, help="under-sampling repeats per fold")
    p.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
    p.add_argument("--jobs", type=int, help="parallel analysis workers")
    p.add_argument(
        "--filter",
        dest="eval_filters",
        action="append",
        choices=["none", "full", "removal", "subtract", "single", "gcf"],
        help="filter strategy evaluated by the harness (repeatable)",
    )
    p.add_argument(
        "--level",
        dest="levels",
        action="append",
        choices=["file", "class", "method", "projected"],
        help="evaluation level (repeatable)",
    )
    p.add_argument(
        "--algo",
        dest="algorithms",
        action="append",
        help="learning algorithm (repeatable)",
    )
    p.add_argument(
        "--test-glob",
        dest="test_globs",
        action="append",
        help="path glob excluded as test code (default **/test/**)",
    )
    p.add_argument("--keywords-only", action="store_true", default=None)
    p.add_argument("--ignore-comment-only", action="store_true", default=None)


def _config_from_args(args):
    from .pipeline import PipelineConfig

    overrides = {
        k: getattr(args, k, None)
        for k in PipelineConfig.CONFIG_KEYS
        if hasattr(args, k)
    }
    for key in ("bug_labels", "levels", "algorithms", "eval_filters", "test_globs"):
        if overrides.get(key) is not None:
            overrides[key] = tuple(overrides[key])
    if args.config:
        return PipelineConfig.from_file(args.config, overrides)
    merged = {k: v for k, v in overrides.items() if v is not None}
    if "out" not in merged:
        raise ConfigError("--out (or a config file with 'out') is required")
    return PipelineConfig(**merged)


def _cmd_stage(args, stage):
    from .pipeline import run_pipeline

    config = _config_from_args(args)
    manifest = run_pipeline(config, stop_after=stage)
    for name, info in manifest["stages"].items():
        print(f"{name}: {info['status']} ({len(info['artifacts'])} artifacts)")
    return EXIT_OK


def _cmd_fetch(args):
    if args.from_local:
        if not args.issues or not args.out:
            raise ConfigError("--from-local needs --issues and --out")
        from .ingest import (
            load_issue_specs,
            save_snapshot,
            snapshot_from_local_repo,
        )

        snapshot = snapshot_from_local_repo(
            args.from_local,
            load_issue_specs(args.issues),
            bug_labels=frozenset(args.bug_labels or ["bug"]),
            repo_id=args.repo_id,
        )
        save_snapshot(snapshot, args.out)
        print(
            f"snapshot: {len(snapshot.issues)} issues, "
            f"{len(snapshot.commits)} commits -> {args.out}"
        )
        return EXIT_OK
    if not args.repo or not args.out:
        raise ConfigError("fetch needs --repo owner/name and --out")
    from .github import fetch_remote

    snapshot = fetch_remote(
        args.repo,
        credentials=args.token,
        out=args.out,
        bug_labels=frozenset(args.bug_labels or ["bug"]),
        api_base=args.api_base,
    )
    print(
        f"snapshot: {len(snapshot.issues)} issues, "
        f"{len(snapshot.commits)} commits -> {args.out}"
    )
    return EXIT_OK


def _cmd_evaluate(args):
    from .learn.evaluate import evaluate_external, load_predictions_csv

    if args.external_predictions:
        rows = load_predictions_csv(args.external_predictions)
        projected = bool(args.levels) and "projected" in args.levels
        res = evaluate_external(rows, projected=projected)
        print(
            f"external {res.level}: precision={res.precision:.4f} "
            f"recall={res.recall:.4f} f={res.f_measure:.4f}"
        )
        return EXIT_OK

    from .pipeline import evaluate_level
    from .learn.models import ALGORITHMS

    if not args.out:
        raise ConfigError("--out is required")
    strat = args.eval_filters[0] if args.eval_filters else "subtract"
    strat_dir = "full" if strat in ("none", "full") else strat
    dataset_dir = os.path.join(args.out, "dataset", strat_dir)
    if not os.path.isdir(dataset_dir):
        raise SnapshotFormatError(f"dataset directory missing: {dataset_dir}")
    algos = tuple(args.algorithms) if args.algorithms else ALGORITHMS
    levels = tuple(args.levels) if args.levels else ("method",)
    print(f"{'level':10}{'algorithm':16}{'prec':>8}{'recall':>8}{'F':>8}")
    for level in levels:
        results = evaluate_level(
            dataset_dir,
            level,
            algos,
            seed=args.seed if args.seed is not None else 42,
            repeats=args.repeats or 1,
            k=args.folds or 10,
        )
        for algo, res in results.items():
            print(
                f"{level:10}{algo:16}{res.precision:8.4f}{res.recall:8.4f}"
                f"{res.f_measure:8.4f}"
            )
    return EXIT_OK


def _cmd_stats(args):
    from .stats import PairedSampleMatrix, format_significance_table, friedman, nemenyi

    if args.matrix:
        import csv as _csv

        with open(args.matrix, encoding="utf-8", newline="") as fh:
            reader = _csv.reader(fh)
            header = next(reader)
            labels = header[1:] if header and not _is_float(header[1]) else None
            rows = []
            if labels is None:
                rows.append([float(v) for v in header[1:]])
            for rec in reader:
                rows.append([float(v) for v in rec[1:]])
        matrix = PairedSampleMatrix.from_rows(rows, col_labels=labels)
        fr = friedman(matrix)
        print(f"friedman chi2={fr.statistic:.6f} p={fr.p_value:.6g}")
        print(format_significance_table(nemenyi(matrix, alpha=args.alpha)))
        return EXIT_OK
    if not args.out:
        raise ConfigError("stats needs --matrix or --out")
    from .pipeline import emit_stats_tables

    folds = os.path.join(args.out, "eval", "folds.csv")
    if not os.path.exists(folds):
        raise SnapshotFormatError(f"no evaluation fold data at {folds}")
    emit_stats_tables(folds, os.path.join(args.out, "stats"))
    with open(os.path.join(args.out, "stats", "summary.txt"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return EXIT_OK


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fixpair",
        description=(
            "Mine before-fix/after-fix bug datasets from git history and "
            "evaluate them with the built-in learning harness."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="capture a snapshot (GitHub API or local clone)")
    p.add_argument("--repo", help="owner/name on the hosting service")
    p.add_argument("--from-local", help="local git clone to snapshot instead")
    p.add_argument("--issues", help="issues JSON (required with --from-local)")
    p.add_argument("--out", required=True, help="snapshot file to write")
    p.add_argument("--repo-id", dest="repo_id")
    p.add_argument("--bug-label", dest="bug_labels", action="append")
    p.add_argument("--token", help="API token (or set FIXPAIR_GITHUB_TOKEN)")
    p.add_argument("--api-base", default="https://api.github.com")
    p.set_defaults(func=_cmd_fetch)

    for stage in ("link", "analyze", "build", "filter"):
        p = sub.add_parser(stage, help=f"run the pipeline through the {stage} stage")
        _add_pipeline_args(p)
        p.set_defaults(func=lambda a, s=stage: _cmd_stage(a, s))

    p = sub.add_parser("evaluate", help="cross-validate learners on a dataset")
    _add_pipeline_args(p)
    p.add_argument(
        "--external-predictions",
        help="CSV of fqn,parent_fqn,predicted,actual rows to score instead",
    )
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("stats", help="significance tables (Friedman + Nemenyi)")
    p.add_argument("--out", help="pipeline output dir with eval results")
    p.add_argument("--matrix", help="CSV matrix: first column labels, one treatment per column")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("run", help="run the full pipeline")
    _add_pipeline_args(p)
    p.set_defaults(func=lambda a: _cmd_stage(a, None))

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"stage error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (SnapshotFormatError, SnapshotInvariantError, FixpairError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
