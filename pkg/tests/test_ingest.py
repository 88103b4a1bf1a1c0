import json
import os
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixpair.errors import SnapshotFormatError, SnapshotInvariantError
from fixpair.ingest import (
    CommitRecord,
    IssueRecord,
    ProjectSnapshot,
    filter_bug_issues,
    load_snapshot,
    save_snapshot,
    snapshot_to_json,
)

UTC = timezone.utc


def ts(day, hour=10):
    return datetime(2024, 1, day, hour, tzinfo=UTC)


def make_commit(h, parents=(), day=1, message="msg"):
    return CommitRecord(
        hash=h * 40 if len(h) == 1 else h,
        parents=tuple(p * 40 if len(p) == 1 else p for p in parents),
        author_id="dev",
        timestamp=ts(day),
        message=message,
        file_diffs=(),
    )


def make_snapshot(issues=(), commits=None):
    if commits is None:
        commits = (make_commit("b", ("a",), day=2), make_commit("a", day=1))
    return ProjectSnapshot(
        repo_id="demo/x",
        captured_at=ts(20),
        issues=tuple(issues),
        commits=tuple(commits),
        bug_labels=frozenset({"bug"}),
    )


def closed_issue(issue_id=1, fix="b", labels=("bug",)):
    return IssueRecord(
        id=issue_id,
        state="closed",
        created_at=ts(1, 12),
        closed_at=ts(3),
        labels=frozenset(labels),
        fixing_commits=((fix * 40, ts(2)),),
    )


def test_roundtrip(tmp_path):
    snap = make_snapshot(issues=[closed_issue()])
    snap.validate()
    path = tmp_path / "snap.json"
    save_snapshot(snap, path)
    assert load_snapshot(path) == snap
    assert not [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]


def test_mini_project_golden_fixture():
    path = os.path.join(os.path.dirname(__file__), "fixtures", "mini-project.snapshot")
    snap = load_snapshot(path)
    assert len(snap.issues) == 3
    assert len(snap.commits) == 12
    assert snap.repo_id == "mini/project"
    assert all(i.state == "closed" and i.fixing_commits for i in snap.issues)


def test_fixture_roundtrip(fixture_snapshot, tmp_path):
    path = tmp_path / "fixture.json"
    save_snapshot(fixture_snapshot, path)
    assert load_snapshot(path) == fixture_snapshot


def test_empty_issue_list_is_fine(tmp_path):
    snap = make_snapshot()
    path = tmp_path / "s.json"
    save_snapshot(snap, path)
    assert load_snapshot(path).issues == ()


def test_unknown_fixing_commit_named_in_error():
    ghost = "f" * 40
    snap = make_snapshot(issues=[closed_issue(fix="f")])
    with pytest.raises(SnapshotInvariantError) as err:
        snap.validate()
    assert ghost in str(err.value)


def test_closed_issue_without_fixing_commits_rejected():
    bad = IssueRecord(
        id=9, state="closed", created_at=ts(1), closed_at=ts(2),
        labels=frozenset({"bug"}),
    )
    with pytest.raises(SnapshotInvariantError):
        make_snapshot(issues=[bad]).validate()


def test_closed_at_iff_closed():
    bad = IssueRecord(
        id=3, state="open", created_at=ts(1), closed_at=ts(2),
        labels=frozenset({"bug"}),
    )
    with pytest.raises(SnapshotInvariantError):
        make_snapshot(issues=[bad]).validate()


def test_parse_failure_has_diagnostics(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path)

    doc = snapshot_to_json(make_snapshot())
    doc.pop("captured_at")
    path.write_text(json.dumps(doc))
    with pytest.raises(SnapshotFormatError) as err:
        load_snapshot(path)
    assert err.value.field == "captured_at"


def test_missing_file_is_format_error(tmp_path):
    with pytest.raises(SnapshotFormatError):
        load_snapshot(tmp_path / "absent.json")


def test_head_is_first_commit():
    snap = make_snapshot()
    assert snap.head.hash == "b" * 40


def test_external_parents_detected():
    orphan_parent = make_commit("c", ("9",), day=3)
    snap = make_snapshot(commits=(orphan_parent, make_commit("a", day=1)))
    assert snap.external_parents() == {"9" * 40}


# --- filter_bug_issues -------------------------------------------------------

def test_filter_label_mismatch_excluded():
    issue = closed_issue(labels=("enhancement",))
    assert filter_bug_issues([issue], {"bug"}) == []


def test_filter_keeps_labeled_closed_with_fix():
    issue = closed_issue()
    assert filter_bug_issues([issue], {"bug"}) == [issue]


def test_filter_keeps_open_issue_with_creation_only():
    issue = IssueRecord(
        id=4, state="open", created_at=ts(5), labels=frozenset({"defect"})
    )
    kept = filter_bug_issues([issue], {"bug", "defect"})
    assert kept == [issue]
    assert kept[0].closed_at is None
    assert kept[0].fixing_commits == ()


def test_filter_drops_closed_without_fix():
    issue = IssueRecord(
        id=5, state="closed", created_at=ts(1), closed_at=ts(2),
        labels=frozenset({"bug"}),
    )
    assert filter_bug_issues([issue], {"bug"}) == []


@settings(max_examples=100, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["bug", "defect", "enhancement", "question"]),
            st.booleans(),
            st.booleans(),
        ),
        max_size=12,
    ),
    st.sets(st.sampled_from(["bug", "defect"]), max_size=2),
)
def test_filter_idempotent_and_monotone(raw, labels):
    issues = []
    for i, (label, closed, has_fix) in enumerate(raw):
        issues.append(
            IssueRecord(
                id=i + 1,
                state="closed" if closed else "open",
                created_at=ts(1),
                closed_at=ts(2) if closed else None,
                labels=frozenset({label}),
                fixing_commits=((("a" * 40), ts(2)),) if closed and has_fix else (),
            )
        )
    once = filter_bug_issues(issues, labels)
    assert filter_bug_issues(once, labels) == once
    smaller = set(list(labels)[:1])
    assert len(filter_bug_issues(issues, smaller)) <= len(once)


# --- local repo ingestion ----------------------------------------------------

def test_snapshot_from_local_repo(fixture_snapshot, fixture_repo):
    snap = fixture_snapshot
    assert snap.repo_id == "demo/fixture"
    assert len(snap.commits) == 12
    assert [i.id for i in snap.issues] == [1, 2, 3, 4]
    assert snap.head.hash == fixture_repo["hashes"]["C12"]
    # issue 1's fixing commit resolves with the repo's commit date
    issue1 = snap.issues[0]
    assert issue1.fixing_commits[0][0] == fixture_repo["hashes"]["C10"]
    assert issue1.fixing_commits[0][1] == ts(10)
    snap.validate()
