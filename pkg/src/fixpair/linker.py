"""Link bug reports to commits and classify commit roles.

Roles around one bug report:

* green: commits referencing the report (message ``#id`` token or the
  tracker's recorded closing commit), ordered by history.
* orange: the walked-chain parent of the first green commit, i.e. the last
  state in which the bug is known present and unfixed.
* gray: walked-chain commits strictly between the first and last green that
  do not reference the report.
* blue: walked-chain commits from the report's creation up to and including
  the orange commit; the bug is considered present in all of them.

History is the first-parent chain of the default branch; commits that are
not on that chain resolve to the position of the merge that first made them
reachable.
"""

import re
from dataclasses import dataclass

from .errors import FixpairError

ISSUE_KEYWORDS = (
    "fix", "fixes", "fixed", "close", "closes", "closed",
    "resolve", "resolves", "resolved",
)

_REF_RE = re.compile(r"#(\d+)")
_FOREIGN_RE = re.compile(r"[A-Za-z0-9_.\-]+/[A-Za-z0-9_.\-]+#\d+")
_KEYWORD_RE = re.compile(
    r"(?i)\b(?:%s)\s*:?\s*(?:issue\s*)?$" % "|".join(ISSUE_KEYWORDS)
)


@dataclass(frozen=True)
class IssueRef:
    id: int
    confident: bool  # word boundary before the '#'
    keyworded: bool  # preceded by a fix/close/resolve keyword
    foreign: bool  # owner/repo#id cross-repository form
    start: int


def extract_issue_refs_detailed(message: str) -> list:
    """All ``#id`` references with confidence/keyword/foreign classification."""
    foreign_spans = [(m.start(), m.end()) for m in _FOREIGN_RE.finditer(message)]
    refs = []
    for m in _REF_RE.finditer(message):
        number = int(m.group(1))
        if number <= 0:
            continue
        hash_pos = m.start()
        foreign = any(a <= hash_pos < b for a, b in foreign_spans)
        before = message[:hash_pos]
        prev = before[-1] if before else ""
        confident = not (prev.isalnum() or prev == "_")
        keyworded = bool(_KEYWORD_RE.search(before)) and confident
        refs.append(
            IssueRef(
                id=number,
                confident=confident,
                keyworded=keyworded,
                foreign=foreign,
                start=hash_pos,
            )
        )
    return refs


def extract_issue_refs(message: str, keywords_only: bool = False) -> set:
    """Distinct issue ids referenced from a commit message.

    Cross-repository references are recorded by the detailed variant but
    never returned here.  Low-confidence matches (no word boundary before
    the ``#``) are kept unless ``keywords_only`` restricts the result to
    keyword-introduced references.
    """
    return {
        r.id
        for r in extract_issue_refs_detailed(message)
        if not r.foreign and (r.keyworded if keywords_only else True)
    }


class HistoryIndex:
    """First-parent chain positions plus merge-resolution for side commits."""

    def __init__(self, snapshot):
        self.snapshot = snapshot
        chain = []
        cursor = snapshot.head
        seen = set()
        while cursor is not None and cursor.hash not in seen:
            chain.append(cursor.hash)
            seen.add(cursor.hash)
            cursor = (
                snapshot.commit(cursor.parents[0]) if cursor.parents else None
            )
        chain.reverse()  # position 0 = root, last = head
        self.chain = chain
        self.position = {h: i for i, h in enumerate(chain)}
        self.resolved = dict(self.position)
        # ascending walk assigns each off-chain commit the earliest chain
        # position from which it is reachable: its merge commit's position
        visited = set(chain)
        for idx, h in enumerate(chain):
            stack = [p for p in snapshot.commit(h).parents]
            while stack:
                ph = stack.pop()
                if ph in visited:
                    continue
                commit = snapshot.commit(ph)
                if commit is None:
                    continue
                visited.add(ph)
                self.resolved[ph] = idx
                stack.extend(commit.parents)

    def resolve(self, commit_hash):
        return self.resolved.get(commit_hash)

    def at(self, position):
        return self.chain[position]

    def order_key(self, commit_hash):
        commit = self.snapshot.commit(commit_hash)
        return (
            self.resolved.get(commit_hash, -1),
            commit.timestamp if commit else None,
            commit_hash,
        )


@dataclass(frozen=True)
class BugFixTimeline:
    issue_id: int
    orange: str = None
    green: tuple = ()
    gray: tuple = ()
    blue: tuple = ()
    degraded: bool = False
    missing: tuple = ()  # fixing commits that are gone from the snapshot
    notes: tuple = ()

    @property
    def last_green(self):
        return self.green[-1] if self.green else None

    @property
    def first_green(self):
        return self.green[0] if self.green else None


def build_timeline(issue, snapshot, history=None, keywords_only=False) -> BugFixTimeline:
    """Classify commits around one closed issue per the role definitions."""
    if issue.state != "closed" or not issue.fixing_commits:
        raise FixpairError(
            f"issue {issue.id} is not a stored closed bug with fixing commits"
        )
    history = history or HistoryIndex(snapshot)
    notes = []

    tracker_greens = {h for h, _ in issue.fixing_commits}
    message_greens = {
        c.hash
        for c in snapshot.commits
        if issue.id in extract_issue_refs(c.message, keywords_only=keywords_only)
    }
    silent = sorted(tracker_greens - message_greens)
    if silent:
        notes.append(
            "tracker closing commit(s) without message reference: "
            + ", ".join(silent)
        )

    greens = tracker_greens | message_greens
    missing = sorted(
        h for h in greens if snapshot.commit(h) is None or history.resolve(h) is None
    )
    greens = [h for h in greens if h not in missing]
    degraded = bool(missing)
    if not greens:
        return BugFixTimeline(
            issue_id=issue.id,
            degraded=True,
            missing=tuple(missing),
            notes=tuple(notes) + ("no resolvable fixing commit",),
        )

    greens.sort(key=history.order_key)
    p_first = history.resolve(greens[0])
    p_last = history.resolve(greens[-1])
    if p_first == 0:
        return BugFixTimeline(
            issue_id=issue.id,
            green=tuple(greens),
            degraded=True,
            missing=tuple(missing),
            notes=tuple(notes) + ("first fix is the root commit: no orange state",),
        )

    orange = history.at(p_first - 1)
    green_positions = {history.resolve(h) for h in greens}
    gray = [
        history.at(p)
        for p in range(p_first + 1, p_last)
        if p not in green_positions
        and history.at(p) not in greens
    ]
    blue = [
        history.at(p)
        for p in range(0, p_first)
        if snapshot.commit(history.at(p)).timestamp >= issue.created_at
    ]
    return BugFixTimeline(
        issue_id=issue.id,
        orange=orange,
        green=tuple(greens),
        gray=tuple(gray),
        blue=tuple(blue),
        degraded=degraded,
        missing=tuple(missing),
        notes=tuple(notes),
    )


def buggy_interval_positions(timeline, history):
    """Chain positions where the bug is present (orange back through blue,
    forward through everything before the last fix)."""
    if timeline.degraded or timeline.orange is None:
        return range(0)
    start = history.resolve(timeline.orange)
    if timeline.blue:
        start = min(start, min(history.resolve(h) for h in timeline.blue))
    end = history.resolve(timeline.last_green)  # exclusive
    return range(start, end)


@dataclass(frozen=True)
class PlanEntry:
    commit_hash: str
    full_analysis: bool


@dataclass(frozen=True)
class AnalysisPlan:
    entries: tuple = ()

    @property
    def hashes(self):
        return [e.commit_hash for e in self.entries]

    def needs_full(self, commit_hash):
        for e in self.entries:
            if e.commit_hash == commit_hash:
                return e.full_analysis
        return False


def select_analysis_commits(timelines, history=None) -> AnalysisPlan:
    """Deduplicated, history-ordered commits that require analysis.

    Orange and last-green commits need full analysis (metrics); intermediate
    greens only need element positions, so they carry ``full_analysis=False``
    unless another timeline promotes them.
    """
    full = {}
    for t in timelines:
        if t.degraded or t.orange is None or not t.green:
            continue
        wants = {t.orange: True, t.last_green: True}
        for h in t.green[:-1]:
            wants.setdefault(h, False)
        for h, is_full in wants.items():
            full[h] = full.get(h, False) or is_full
    if history is not None:
        ordered = sorted(full, key=history.order_key)
    else:
        ordered = sorted(full)
    return AnalysisPlan(
        entries=tuple(PlanEntry(h, full[h]) for h in ordered)
    )


def write_plan(plan, path):
    with open(path, "w", encoding="utf-8") as fh:
        for e in plan.entries:
            fh.write(f"{e.commit_hash} {'full' if e.full_analysis else 'pos'}\n")


def read_plan(path):
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            commit_hash, _, mode = line.partition(" ")
            entries.append(PlanEntry(commit_hash, mode.strip() == "full"))
    return AnalysisPlan(entries=tuple(entries))
