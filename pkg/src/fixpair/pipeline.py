"""Pipeline orchestration: fetch -> link -> analyze -> build -> filter ->
evaluate -> stats, with cached, resumable stage outputs.

Every stage writes its artifacts under the output directory plus a
fingerprint of its inputs; a rerun with unchanged inputs reports the stage
as cached.  Given fixed seeds the whole artifact tree is byte-identical
across runs (no timestamps or absolute paths are ever written).
"""

import concurrent.futures
import csv
import hashlib
import json
import os
from dataclasses import dataclass

from . import dataset as ds
from .analyzer import (
    ANALYZER_VERSION,
    DEFAULT_TEST_GLOBS,
    FileAnalysis,
    analyze_source,
    is_test_path,
)
from .errors import ConfigError, StageError
from .filters import filter_entries
from .gitio import GitRepo
from .ingest import load_issue_specs, load_snapshot, save_snapshot, snapshot_from_local_repo
from .java.structure import SourceElement
from .learn import cross_validate, instances_from_entries
from .learn.evaluate import cross_validate_projected, prf
from .learn.models import ALGORITHMS
from .linker import (
    BugFixTimeline,
    HistoryIndex,
    build_timeline,
    select_analysis_commits,
    write_plan,
)
from .metrics import MetricsVector
from .stats import PairedSampleMatrix, format_significance_table, friedman, nemenyi

FILTER_DIRS = ("removal", "subtract", "single", "gcf")
EVAL_LEVELS = ("file", "class", "method", "projected")
DEFAULT_SEED = 42


@dataclass
class PipelineConfig:
    out: str
    repo: str = None
    snapshot: str = None
    issues: str = None
    repo_id: str = None
    bug_labels: tuple = ("bug",)
    levels: tuple = EVAL_LEVELS
    algorithms: tuple = ALGORITHMS
    eval_filters: tuple = ("subtract",)
    seed: int = DEFAULT_SEED
    repeats: int = 1
    folds: int = 10
    jobs: int = 1
    test_globs: tuple = DEFAULT_TEST_GLOBS
    keywords_only: bool = False
    ignore_comment_only: bool = False

    CONFIG_KEYS = (
        "out", "repo", "snapshot", "issues", "repo_id", "bug_labels", "levels",
        "algorithms", "eval_filters", "seed", "repeats", "folds", "jobs",
        "test_globs", "keywords_only", "ignore_comment_only",
    )

    @classmethod
    def from_file(cls, path, overrides=None):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        unknown = set(doc) - set(cls.CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        doc.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls(**doc)

    def validate(self):
        if not self.levels:
            raise ConfigError("at least one level must be selected")
        bad_levels = set(self.levels) - set(EVAL_LEVELS)
        if bad_levels:
            raise ConfigError(f"unknown levels: {sorted(bad_levels)}")
        bad_algos = set(self.algorithms) - set(ALGORITHMS)
        if bad_algos:
            raise ConfigError(f"unknown algorithms: {sorted(bad_algos)}")
        bad_filters = set(self.eval_filters) - {"none", "full", *FILTER_DIRS}
        if bad_filters:
            raise ConfigError(f"unknown filter strategies: {sorted(bad_filters)}")
        try:
            os.makedirs(self.out, exist_ok=True)
            probe = os.path.join(self.out, ".write-probe")
            with open(probe, "w") as fh:
                fh.write("")
            os.unlink(probe)
        except OSError as exc:
            raise ConfigError(f"output dir not writable: {exc}")
        if self.snapshot is None and not (self.repo and self.issues):
            raise ConfigError(
                "either a snapshot path or a repo plus issues file is required"
            )
        return self


# ---------------------------------------------------------------------------
# analysis (de)serialization
# ---------------------------------------------------------------------------

def _element_to_json(e):
    return {
        "kind": e.kind,
        "fqn": e.fqn,
        "path": e.path,
        "start_line": e.start_line,
        "end_line": e.end_line,
        "parent_fqn": e.parent_fqn,
        "name": e.name,
        "modifiers": list(e.modifiers),
        "param_types": list(e.param_types),
        "return_type": e.return_type,
        "degraded": e.degraded,
    }


def _element_from_json(doc):
    return SourceElement(
        kind=doc["kind"],
        fqn=doc["fqn"],
        path=doc["path"],
        start_line=doc["start_line"],
        end_line=doc["end_line"],
        parent_fqn=doc["parent_fqn"],
        name=doc["name"],
        modifiers=tuple(doc["modifiers"]),
        param_types=tuple(doc["param_types"]),
        return_type=doc["return_type"],
        degraded=doc["degraded"],
    )


def analysis_to_json(commit_hash, mode, files):
    doc = {
        "analyzer_version": ANALYZER_VERSION,
        "commit": commit_hash,
        "mode": mode,
        "files": {},
    }
    for path in sorted(files):
        fa = files[path]
        entry = {
            "error": fa.error,
            "code_lines": sorted(fa.code_lines),
            "elements": [_element_to_json(e) for e in fa.elements],
            "vectors": {
                f"{kind}|{fqn}": {"level": v.level, "values": v.values}
                for (kind, fqn), v in sorted(fa.vectors.items())
            },
        }
        doc["files"][path] = entry
    return doc


def analysis_from_json(doc):
    files = {}
    for path, entry in doc["files"].items():
        elements = [_element_from_json(e) for e in entry["elements"]]
        by_fqn = {(e.kind, e.fqn): e for e in elements}
        vectors = {}
        for key, vdoc in entry["vectors"].items():
            kind, fqn = key.split("|", 1)
            vectors[(kind, fqn)] = MetricsVector(
                level=vdoc["level"],
                values=dict(vdoc["values"]),
                element=by_fqn.get((kind, fqn)),
            )
        files[path] = FileAnalysis(
            path=path,
            elements=elements,
            vectors=vectors,
            code_lines=frozenset(entry["code_lines"]),
            error=entry["error"],
        )
    return doc["commit"], doc["mode"], files


def _analyze_commit(repo_path, commit_hash, mode, test_globs):
    repo = GitRepo(repo_path)
    files = {}
    for path, text in repo.java_sources(commit_hash):
        if is_test_path(path, test_globs):
            continue
        files[path] = analyze_source(path, text, positions_only=(mode == "pos"))
    return analysis_to_json(commit_hash, mode, files)


# ---------------------------------------------------------------------------
# stage machinery
# ---------------------------------------------------------------------------

def _digest_file(path):
    if not os.path.exists(path):
        # the owning stage will raise a proper error when it tries to read it
        return f"missing:{os.path.basename(path)}"
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, doc):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


class _Stages:
    def __init__(self, out):
        self.out = out
        self.state_dir = os.path.join(out, ".stages")
        os.makedirs(self.state_dir, exist_ok=True)
        self.manifest = {}

    def rel(self, *parts):
        return os.path.join(self.out, *parts)

    def run(self, name, fingerprint, artifacts, producer):
        """Run ``producer`` unless the stored fingerprint matches and every
        artifact already exists."""
        state_path = os.path.join(self.state_dir, f"{name}.json")
        fp_doc = {"fingerprint": fingerprint}
        cached = False
        if os.path.exists(state_path):
            with open(state_path, encoding="utf-8") as fh:
                if json.load(fh) == fp_doc and all(
                    os.path.exists(self.rel(a)) for a in artifacts
                ):
                    cached = True
        if not cached:
            try:
                producer()
            except Exception as exc:
                raise StageError(name, exc) from exc
            _write_json(state_path, fp_doc)
        self.manifest[name] = {
            "status": "cached" if cached else "fresh",
            "artifacts": sorted(artifacts),
        }
        return cached


def _fingerprint(*parts):
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------

def timeline_to_json(t):
    return {
        "issue_id": t.issue_id,
        "orange": t.orange,
        "green": list(t.green),
        "gray": list(t.gray),
        "blue": list(t.blue),
        "degraded": t.degraded,
        "missing": list(t.missing),
        "notes": list(t.notes),
    }


def timeline_from_json(doc):
    return BugFixTimeline(
        issue_id=doc["issue_id"],
        orange=doc["orange"],
        green=tuple(doc["green"]),
        gray=tuple(doc["gray"]),
        blue=tuple(doc["blue"]),
        degraded=doc["degraded"],
        missing=tuple(doc["missing"]),
        notes=tuple(doc["notes"]),
    )


def run_pipeline(config: PipelineConfig, stop_after=None) -> dict:
    """Execute the stage chain (optionally only up to ``stop_after``);
    returns the artifact manifest."""
    config.validate()
    stages = _Stages(config.out)

    def done(stage_name):
        if stop_after == stage_name:
            manifest = {"stages": stages.manifest}
            _write_json(stages.rel("manifest.json"), manifest)
            return manifest
        return None

    # -- snapshot ----------------------------------------------------------
    snap_art = os.path.join("snapshot", "snapshot.json")

    def produce_snapshot():
        if config.snapshot:
            snapshot = load_snapshot(config.snapshot)
        else:
            issues = load_issue_specs(config.issues)
            snapshot = snapshot_from_local_repo(
                config.repo,
                issues,
                bug_labels=frozenset(config.bug_labels),
                repo_id=config.repo_id,
            )
        save_snapshot(snapshot, stages.rel(snap_art))

    if config.snapshot:
        snap_fp = _fingerprint("snapshot", _digest_file(config.snapshot))
    else:
        snap_fp = _fingerprint(
            "local", _digest_file(config.issues), config.bug_labels, config.repo_id
        )
    stages.run("snapshot", snap_fp, [snap_art], produce_snapshot)
    if (m := done("snapshot")) is not None:
        return m
    snapshot = load_snapshot(stages.rel(snap_art))
    history = HistoryIndex(snapshot)

    # -- link ---------------------------------------------------------------
    link_arts = ["plan.txt", os.path.join("link", "timelines.json")]
    link_fp = _fingerprint(
        "link", _digest_file(stages.rel(snap_art)), config.keywords_only
    )

    def produce_link():
        timelines = [
            build_timeline(i, snapshot, history, config.keywords_only)
            for i in snapshot.issues
            if i.state == "closed" and i.fixing_commits
        ]
        plan = select_analysis_commits(timelines, history)
        write_plan(plan, stages.rel("plan.txt"))
        _write_json(
            stages.rel("link", "timelines.json"),
            {"timelines": [timeline_to_json(t) for t in timelines]},
        )

    stages.run("link", link_fp, link_arts, produce_link)
    if (m := done("link")) is not None:
        return m
    with open(stages.rel("link", "timelines.json"), encoding="utf-8") as fh:
        timelines = [timeline_from_json(d) for d in json.load(fh)["timelines"]]

    # -- analyze ------------------------------------------------------------
    needed = _analysis_needs(snapshot, timelines)
    analyze_arts = [
        os.path.join("analysis", f"{h}.json") for h in sorted(needed)
    ]
    analyze_fp = _fingerprint(
        "analyze",
        ANALYZER_VERSION,
        sorted(needed.items()),
        config.test_globs,
        _digest_file(stages.rel(snap_art)),
    )

    def produce_analyze():
        if config.repo is None:
            raise ConfigError("analysis requires a local repository checkout")
        items = sorted(needed.items())
        if config.jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(config.jobs) as pool:
                futures = {
                    h: pool.submit(
                        _analyze_commit, config.repo, h, mode, config.test_globs
                    )
                    for h, mode in items
                }
                docs = {h: f.result() for h, f in futures.items()}
        else:
            docs = {
                h: _analyze_commit(config.repo, h, mode, config.test_globs)
                for h, mode in items
            }
        for h in sorted(docs):
            _write_json(stages.rel("analysis", f"{h}.json"), docs[h])

    stages.run("analyze", analyze_fp, analyze_arts, produce_analyze)
    if (m := done("analyze")) is not None:
        return m

    analyses = {}
    metrics_by_commit = {}
    for h in sorted(needed):
        with open(stages.rel("analysis", f"{h}.json"), encoding="utf-8") as fh:
            commit_hash, mode, files = analysis_from_json(json.load(fh))
        analyses[commit_hash] = files
        if mode == "full":
            merged = {}
            for fa in files.values():
                merged.update(fa.vectors)
            metrics_by_commit[commit_hash] = merged

    # -- build --------------------------------------------------------------
    build_arts = [
        os.path.join("dataset", "full", name)
        for name in ("file.csv", "class.csv", "method.csv", "method-p.csv")
    ] + [os.path.join("build", "drop_log.txt")]
    build_fp = _fingerprint(
        "build", analyze_fp, config.ignore_comment_only
    )

    def produce_build():
        live = [t for t in timelines if not t.degraded and t.orange]
        touch_sets = [
            ds.accumulate_issue_touches(
                t, snapshot, analyses, config.ignore_comment_only
            )
            for t in live
        ]
        result = ds.build_entries(
            touch_sets, live, None, metrics_by_commit, history
        )
        ds.export_dataset(result.entries_by_level, stages.rel("dataset", "full"))
        with open(stages.rel("build", "drop_log.txt"), "w", encoding="utf-8") as fh:
            for issue_id, commit, level, fqn, reason in result.drop_log:
                fh.write(f"{issue_id}\t{commit}\t{level}\t{fqn}\t{reason}\n")

    os.makedirs(stages.rel("build"), exist_ok=True)
    stages.run("build", build_fp, build_arts, produce_build)
    if (m := done("build")) is not None:
        return m

    # -- filter -------------------------------------------------------------
    filter_arts = [
        os.path.join("dataset", strat, name)
        for strat in FILTER_DIRS
        for name in ("file.csv", "class.csv", "method.csv", "method-p.csv")
    ]
    filter_fp = _fingerprint("filter", build_fp, config.seed)

    def produce_filter():
        entries_by_level = {
            level: ds.load_entries_csv(
                stages.rel("dataset", "full", f"{level}.csv"), level
            )
            for level in ds.LEVELS
        }
        for strat in FILTER_DIRS:
            filtered = {
                level: filter_entries(entries, strat, rng_seed=config.seed)
                for level, entries in entries_by_level.items()
            }
            ds.export_dataset(filtered, stages.rel("dataset", strat))

    stages.run("filter", filter_fp, filter_arts, produce_filter)
    if (m := done("filter")) is not None:
        return m

    # -- evaluate -----------------------------------------------------------
    eval_arts = [
        os.path.join("eval", "results.csv"),
        os.path.join("eval", "folds.csv"),
        os.path.join("eval", "results.txt"),
    ]
    eval_fp = _fingerprint(
        "evaluate",
        filter_fp,
        config.levels,
        config.algorithms,
        config.eval_filters,
        config.seed,
        config.repeats,
        config.folds,
    )

    def produce_evaluate():
        rows, fold_rows = [], []
        for strat in config.eval_filters:
            strat_dir = "full" if strat in ("none", "full") else strat
            for level in config.levels:
                try:
                    result_set = evaluate_level(
                        stages.rel("dataset", strat_dir),
                        level,
                        config.algorithms,
                        seed=config.seed,
                        repeats=config.repeats,
                        k=config.folds,
                    )
                except Exception as exc:
                    rows.append((strat, level, "-", "", "", "", f"skipped: {exc}"))
                    continue
                for algo, res in result_set.items():
                    rows.append(
                        (
                            strat,
                            level,
                            algo,
                            f"{res.precision:.4f}",
                            f"{res.recall:.4f}",
                            f"{res.f_measure:.4f}",
                            "",
                        )
                    )
                    for fi, m in enumerate(res.fold_matrices):
                        p = prf(m)
                        fold_rows.append(
                            (
                                strat, level, algo, fi,
                                m.tp, m.fp, m.tn, m.fn,
                                f"{p.f_measure:.6f}",
                            )
                        )
        _write_results(stages.rel("eval"), rows, fold_rows)

    stages.run("evaluate", eval_fp, eval_arts, produce_evaluate)
    if (m := done("evaluate")) is not None:
        return m

    # -- stats --------------------------------------------------------------
    stats_arts = [os.path.join("stats", "summary.txt")]
    stats_fp = _fingerprint("stats", eval_fp)

    def produce_stats():
        emit_stats_tables(stages.rel("eval", "folds.csv"), stages.rel("stats"))

    stages.run("stats", stats_fp, stats_arts, produce_stats)

    manifest = {"stages": stages.manifest}
    _write_json(stages.rel("manifest.json"), manifest)
    return manifest


def _analysis_needs(snapshot, timelines) -> dict:
    """Commit -> mode map: plan commits plus green parents (positions)."""
    plan = select_analysis_commits(timelines)
    needed = {e.commit_hash: ("full" if e.full_analysis else "pos") for e in plan.entries}
    for t in timelines:
        if t.degraded or t.orange is None:
            continue
        for green_hash in t.green:
            commit = snapshot.commit(green_hash)
            if commit is None or not commit.parents:
                continue
            parent = commit.parents[0]
            if snapshot.commit(parent) is not None:
                needed.setdefault(parent, "pos")
    return needed


def evaluate_level(dataset_dir, level, algorithms, seed, repeats, k=10):
    """Cross-validate every algorithm on one exported dataset level."""
    source_level = "method" if level == "projected" else level
    name = "method-p.csv" if source_level == "method" else f"{source_level}.csv"
    entries = ds.load_entries_csv(
        os.path.join(dataset_dir, name), source_level
    )
    instances = instances_from_entries(entries, source_level)
    results = {}
    for algo in algorithms:
        if level == "projected":
            res = cross_validate_projected(
                algo, instances, k=k, repeats=repeats, seed=seed
            )
        else:
            res = cross_validate(algo, instances, k=k, repeats=repeats, seed=seed)
        results[algo] = res
    return results


def _write_results(eval_dir, rows, fold_rows):
    os.makedirs(eval_dir, exist_ok=True)
    with open(os.path.join(eval_dir, "results.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["filter", "level", "algorithm", "precision", "recall", "f_measure", "note"])
        w.writerows(rows)
    with open(os.path.join(eval_dir, "folds.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["filter", "level", "algorithm", "fold", "tp", "fp", "tn", "fn", "f_measure"])
        w.writerows(fold_rows)
    widths = (10, 10, 15, 10, 10, 10)
    lines = [
        "".join(
            str(v).ljust(w)
            for v, w in zip(("filter", "level", "algorithm", "prec", "recall", "F"), widths)
        )
    ]
    for row in rows:
        lines.append(
            "".join(str(v).ljust(w) for v, w in zip(row[:6], widths))
            + (row[6] or "")
        )
    with open(os.path.join(eval_dir, "results.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_stats_tables(folds_csv, stats_dir):
    """Friedman + Nemenyi tables over the per-fold F values.

    Treatments are algorithms (per level and filter); paired samples are the
    folds, which share indices across algorithms by construction.
    """
    os.makedirs(stats_dir, exist_ok=True)
    per_group = {}
    with open(folds_csv, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            key = (rec["filter"], rec["level"])
            per_group.setdefault(key, {}).setdefault(rec["algorithm"], []).append(
                float(rec["f_measure"])
            )
    summary = []
    for (strat, level), by_algo in sorted(per_group.items()):
        algos = sorted(by_algo)
        if len(algos) < 2:
            continue
        n_folds = min(len(v) for v in by_algo.values())
        if n_folds < 2:
            continue
        rows = [[by_algo[a][i] for a in algos] for i in range(n_folds)]
        matrix = PairedSampleMatrix.from_rows(rows, col_labels=algos)
        fr = friedman(matrix)
        summary.append(
            f"[{strat}/{level}] friedman chi2={fr.statistic:.4f} p={fr.p_value:.4g}"
            + (" (degenerate)" if fr.degenerate else "")
        )
        nem = nemenyi(matrix)
        table = format_significance_table(nem)
        out = os.path.join(stats_dir, f"nemenyi_{strat}_{level}.txt")
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(table + "\n")
    with open(os.path.join(stats_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(summary) + ("\n" if summary else ""))
