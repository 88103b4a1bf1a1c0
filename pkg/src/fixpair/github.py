"""GitHub REST v3 client that captures a project snapshot.

Network use is confined to this module.  ``fetch_remote`` is single-flight
per repo id, honors the per-hour request quota by sleeping until the
advertised reset time (bounded), and never leaves a partial snapshot file on
disk (the write is atomic).
"""

import os
import threading
import time
from datetime import datetime, timezone

import requests

from .errors import AuthenticationError, RateLimitExhausted
from .ingest import (
    CommitRecord,
    IssueRecord,
    ProjectSnapshot,
    filter_bug_issues,
    parse_utc,
    save_snapshot,
)
from .diffs import parse_unified_diff

TOKEN_ENV_VAR = "FIXPAIR_GITHUB_TOKEN"
DEFAULT_API_BASE = "https://api.github.com"
_PER_PAGE = 100
_MAX_RATE_LIMIT_WAITS = 3

_flight_locks = {}
_flight_guard = threading.Lock()


def _lock_for(repo_id):
    with _flight_guard:
        return _flight_locks.setdefault(repo_id, threading.Lock())


class _Client:
    def __init__(self, api_base, token, session=None, sleeper=time.sleep):
        self.api_base = api_base.rstrip("/")
        self.session = session or requests.Session()
        self.sleeper = sleeper
        self.headers = {"Accept": "application/vnd.github.v3+json"}
        if token:
            self.headers["Authorization"] = f"token {token}"

    def get_json(self, path, params=None):
        url = f"{self.api_base}{path}"
        waits = 0
        while True:
            resp = self.session.get(url, params=params, headers=self.headers)
            if resp.status_code == 401:
                raise AuthenticationError(f"token rejected for {url}")
            if resp.status_code in (403, 429) and (
                resp.headers.get("X-RateLimit-Remaining") == "0"
            ):
                if waits >= _MAX_RATE_LIMIT_WAITS:
                    raise RateLimitExhausted(
                        f"rate limit not lifted after {waits} waits for {url}"
                    )
                reset = int(resp.headers.get("X-RateLimit-Reset", "0"))
                delay = max(1.0, reset - time.time())
                self.sleeper(min(delay, 3600.0))
                waits += 1
                continue
            resp.raise_for_status()
            return resp.json()

    def paginate(self, path, params=None):
        page = 1
        while True:
            chunk = self.get_json(
                path, {**(params or {}), "per_page": _PER_PAGE, "page": page}
            )
            if not chunk:
                return
            yield from chunk
            if len(chunk) < _PER_PAGE:
                return
            page += 1


def _fetch_commits(client, repo_id):
    commits = []
    for item in client.paginate(f"/repos/{repo_id}/commits"):
        sha = item["sha"]
        detail = client.get_json(f"/repos/{repo_id}/commits/{sha}")
        file_diffs = []
        for f in detail.get("files", []):
            patch = f.get("patch")
            status = f.get("status")
            old_path = f.get("previous_filename") or f["filename"]
            new_path = f["filename"]
            if status == "added":
                old_path = "/dev/null"
            if status == "removed":
                new_path, old_path = "/dev/null", f["filename"]
            if patch:
                text = f"--- {old_path}\n+++ {new_path}\n{patch}\n"
                parsed = parse_unified_diff(text)
                if parsed:
                    file_diffs.extend(parsed)
        author = detail.get("author") or {}
        commit_info = detail["commit"]
        commits.append(
            CommitRecord(
                hash=sha,
                parents=tuple(p["sha"] for p in detail.get("parents", [])),
                author_id=str(
                    author.get("login") or commit_info["author"].get("name", "")
                ),
                timestamp=parse_utc(commit_info["committer"]["date"]),
                message=commit_info.get("message", ""),
                file_diffs=tuple(file_diffs),
            )
        )
    return commits


def _fetch_issues(client, repo_id, commit_dates):
    issues = []
    for item in client.paginate(f"/repos/{repo_id}/issues", {"state": "all"}):
        if "pull_request" in item:
            continue  # the issues endpoint interleaves pull requests
        number = item["number"]
        state = item["state"]
        labels = frozenset(l["name"] for l in item.get("labels", []))
        created = parse_utc(item["created_at"])
        if state == "open":
            issues.append(
                IssueRecord(
                    id=number, state="open", created_at=created, labels=labels
                )
            )
            continue
        fixing = []
        for event in client.paginate(f"/repos/{repo_id}/issues/{number}/events"):
            if event.get("event") == "closed" and event.get("commit_id"):
                sha = event["commit_id"]
                date = commit_dates.get(sha)
                if date is None:
                    continue  # closing commit not reachable on the default branch
                fixing.append((sha, date))
        fixing.sort(key=lambda p: (p[1], p[0]))
        issues.append(
            IssueRecord(
                id=number,
                state="closed",
                created_at=created,
                closed_at=parse_utc(item["closed_at"]),
                labels=labels,
                fixing_commits=tuple(fixing),
            )
        )
    return issues


def fetch_remote(
    repo_id,
    credentials=None,
    out=None,
    *,
    bug_labels=frozenset({"bug"}),
    api_base=DEFAULT_API_BASE,
    session=None,
    sleeper=time.sleep,
) -> ProjectSnapshot:
    """Capture ``repo_id`` as a validated snapshot, optionally saved to ``out``.

    ``credentials`` falls back to the FIXPAIR_GITHUB_TOKEN environment
    variable.  Authentication failures and exhausted rate limits raise before
    anything is written.
    """
    token = credentials or os.environ.get(TOKEN_ENV_VAR)
    with _lock_for(repo_id):
        client = _Client(api_base, token, session=session, sleeper=sleeper)
        commits = _fetch_commits(client, repo_id)
        commit_dates = {c.hash: c.timestamp for c in commits}
        issues = _fetch_issues(client, repo_id, commit_dates)
        issues = filter_bug_issues(issues, bug_labels)
        snapshot = ProjectSnapshot(
            repo_id=repo_id,
            captured_at=datetime.now(timezone.utc),
            issues=tuple(sorted(issues, key=lambda i: i.id)),
            commits=tuple(commits),
            bug_labels=frozenset(bug_labels),
        ).validate()
        if out is not None:
            save_snapshot(snapshot, out)
        return snapshot
