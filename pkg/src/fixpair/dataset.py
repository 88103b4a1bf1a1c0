"""Combine timelines, touched elements, and metrics into dataset entries.

Every bug yields, for each source element its fixes touched, one entry with
the metrics right before the first fix (at the orange commit) and one with
the metrics at the last fixing commit.  Bug cardinality of an entry counts
every issue whose buggy interval covers that commit and whose fixes touched
that element, so a "fixed" entry can still carry a positive count from an
overlapping other bug.
"""

import csv
import os
from dataclasses import dataclass, field

from .diffs import elements_touched, modified_ranges
from .errors import AnalysisMissingError
from .linker import buggy_interval_positions
from .metrics import COLUMNS_BY_LEVEL

LEVELS = ("file", "class", "method")


@dataclass
class IssueTouchSet:
    issue_id: int
    fqns_by_level: dict = field(default_factory=lambda: {l: set() for l in LEVELS})

    def add_element(self, elem, parent_class_fqn=None, file_fqn=None):
        self.fqns_by_level[elem.kind].add(elem.fqn)

    def is_empty(self):
        return not any(self.fqns_by_level.values())


@dataclass(frozen=True)
class DatasetEntry:
    commit_hash: str
    fqn: str
    level: str
    metrics: "MetricsVector"
    bug_count: int
    parent_fqn: str = None


def _elements_for(analyses, commit_hash, path):
    per_commit = analyses.get(commit_hash)
    if per_commit is None:
        raise AnalysisMissingError(commit_hash)
    fa = per_commit.get(path)
    return fa.elements if fa is not None else []


def _code_lines_for(analyses, commit_hash, path):
    fa = analyses.get(commit_hash, {}).get(path)
    return fa.code_lines if fa is not None else frozenset()


def _comment_only(diff, analyses, parent_hash, commit_hash):
    """True when no modified line on either side carries code tokens."""
    old = modified_ranges(diff, "old")
    new = modified_ranges(diff, "new")
    old_code = _code_lines_for(analyses, parent_hash, diff.old_path)
    new_code = _code_lines_for(analyses, commit_hash, diff.new_path)
    touched_code = any(l in old_code for l in old.lines()) or any(
        l in new_code for l in new.lines()
    )
    return not touched_code and (bool(old) or bool(new))


def accumulate_issue_touches(
    timeline, snapshot, analyses, ignore_comment_only=False
) -> IssueTouchSet:
    """Union of elements touched by any of the timeline's fixing commits.

    ``analyses`` maps commit hash -> {path -> FileAnalysis} and must cover
    every green commit and its first parent.  The result is closed upward:
    a touched method implies its class and file.
    """
    touches = IssueTouchSet(issue_id=timeline.issue_id)
    for green_hash in timeline.green:
        commit = snapshot.commit(green_hash)
        if commit is None:
            raise AnalysisMissingError(green_hash, "commit not in snapshot")
        parent_hash = commit.parents[0] if commit.parents else None
        for diff in commit.file_diffs:
            if diff.binary:
                continue
            if ignore_comment_only and parent_hash is not None:
                if _comment_only(diff, analyses, parent_hash, green_hash):
                    continue
            if not diff.is_add and parent_hash is not None:
                old_elems = _elements_for(analyses, parent_hash, diff.old_path)
                for fqn in elements_touched(modified_ranges(diff, "old"), old_elems):
                    elem = next(e for e in old_elems if e.fqn == fqn)
                    _add_with_closure(touches, elem, old_elems)
            if not diff.is_delete:
                new_elems = _elements_for(analyses, green_hash, diff.new_path)
                for fqn in elements_touched(modified_ranges(diff, "new"), new_elems):
                    elem = next(e for e in new_elems if e.fqn == fqn)
                    _add_with_closure(touches, elem, new_elems)
    return touches


def _add_with_closure(touches, elem, file_elements):
    touches.fqns_by_level[elem.kind].add(elem.fqn)
    if elem.kind == "method":
        if elem.parent_fqn:
            touches.fqns_by_level["class"].add(elem.parent_fqn)
        touches.fqns_by_level["file"].add(elem.path)
    elif elem.kind == "class":
        touches.fqns_by_level["file"].add(elem.path)


@dataclass
class BuildResult:
    entries_by_level: dict
    drop_log: list
    contributing_issues: set


def build_entries(touch_sets, timelines, plan, metrics_by_commit, history) -> BuildResult:
    """Before-fix and after-fix entries for every touched element.

    ``metrics_by_commit`` maps commit hash -> {(level, fqn) -> MetricsVector}
    and must hold full metrics for every orange and last-green commit in the
    plan.
    """
    by_issue = {t.issue_id: t for t in timelines}
    live = []
    for ts in touch_sets:
        t = by_issue.get(ts.issue_id)
        if t is None or t.degraded or t.orange is None or ts.is_empty():
            continue
        live.append((t, ts))

    intervals = {
        t.issue_id: buggy_interval_positions(t, history) for t, _ in live
    }

    def bug_count(commit_hash, level, fqn):
        pos = history.resolve(commit_hash)
        n = 0
        for t, ts in live:
            if pos in intervals[t.issue_id] and fqn in ts.fqns_by_level[level]:
                n += 1
        return n

    drop_log = []
    contributing = set()
    wanted = {}  # (commit, level, fqn) -> None, dedup across issues
    for t, ts in live:
        for mh in (t.orange, t.last_green):
            if mh not in metrics_by_commit:
                raise AnalysisMissingError(mh, f"needed by issue {t.issue_id}")
        touched_any = False
        for level in LEVELS:
            for fqn in sorted(ts.fqns_by_level[level]):
                buggy_vec = metrics_by_commit[t.orange].get((level, fqn))
                fixed_vec = metrics_by_commit[t.last_green].get((level, fqn))
                if buggy_vec is not None:
                    wanted[(t.orange, level, fqn)] = None
                    touched_any = True
                else:
                    drop_log.append(
                        (t.issue_id, t.orange, level, fqn, "created by the fix")
                    )
                if fixed_vec is not None:
                    wanted[(t.last_green, level, fqn)] = None
                    touched_any = True
                else:
                    drop_log.append(
                        (t.issue_id, t.last_green, level, fqn, "gone after the fix")
                    )
        if touched_any:
            contributing.add(t.issue_id)

    entries_by_level = {l: [] for l in LEVELS}
    for commit_hash, level, fqn in wanted:
        vec = metrics_by_commit[commit_hash][(level, fqn)]
        entries_by_level[level].append(
            DatasetEntry(
                commit_hash=commit_hash,
                fqn=fqn,
                level=level,
                metrics=vec,
                bug_count=bug_count(commit_hash, level, fqn),
                parent_fqn=vec.element.parent_fqn if vec.element else None,
            )
        )
    for level in LEVELS:
        entries_by_level[level].sort(
            key=lambda e: (history.resolve(e.commit_hash), e.fqn)
        )
    return BuildResult(
        entries_by_level=entries_by_level,
        drop_log=drop_log,
        contributing_issues=contributing,
    )


def format_metric(value) -> str:
    if value is None:
        return ""
    f = float(value)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def export_csv(entries, level, path, parent_column=False) -> None:
    """Write one level's entries as an RFC-4180 CSV with fixed column order."""
    columns = COLUMNS_BY_LEVEL[level]
    header = ["hash", "fqn"]
    if parent_column:
        header.append("parent_fqn")
    header.extend(columns)
    header.append("bug_count")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for e in entries:
            if e.level != level:
                raise ValueError(
                    f"entry {e.fqn} has level {e.level}, expected {level}"
                )
            row = [e.commit_hash, e.fqn]
            if parent_column:
                row.append(e.parent_fqn or "")
            row.extend(format_metric(e.metrics.get(c)) for c in columns)
            row.append(str(e.bug_count))
            writer.writerow(row)


def load_entries_csv(path, level) -> list:
    """Read an exported CSV back into dataset entries (inverse of export)."""
    from .metrics import MetricsVector  # local import avoids a cycle at import time

    columns = COLUMNS_BY_LEVEL[level]
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            values = {}
            for c in columns:
                cell = rec.get(c, "")
                if cell != "":
                    values[c] = float(cell)
            entries.append(
                DatasetEntry(
                    commit_hash=rec["hash"],
                    fqn=rec["fqn"],
                    level=level,
                    metrics=MetricsVector(level=level, values=values),
                    bug_count=int(rec["bug_count"]),
                    parent_fqn=rec.get("parent_fqn") or None,
                )
            )
    return entries


def export_dataset(entries_by_level, directory) -> dict:
    """Write file.csv, class.csv, method.csv, method-p.csv under ``directory``."""
    os.makedirs(directory, exist_ok=True)
    paths = {}
    for level in LEVELS:
        path = os.path.join(directory, f"{level}.csv")
        export_csv(entries_by_level.get(level, []), level, path)
        paths[f"{level}.csv"] = path
    mp = os.path.join(directory, "method-p.csv")
    export_csv(entries_by_level.get("method", []), "method", mp, parent_column=True)
    paths["method-p.csv"] = mp
    return paths
