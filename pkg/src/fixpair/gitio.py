"""Read-only access to commit trees via git plumbing.

Never touches the working copy: listing uses ``ls-tree``, content uses one
``cat-file --batch`` round trip per tree.
"""

import subprocess
from functools import lru_cache

from .errors import CheckoutError, FixpairError


class GitRepo:
    def __init__(self, path):
        self.path = str(path)
        probe = self._run("rev-parse", "--git-dir", check=False)
        if probe.returncode != 0:
            raise FixpairError(f"{path} is not a git repository")

    def _run(self, *args, check=True, input_bytes=None):
        proc = subprocess.run(
            ["git", "-C", self.path, *args],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            input=input_bytes,
        )
        if check and proc.returncode != 0:
            raise FixpairError(
                f"git {' '.join(args)} failed: "
                f"{proc.stderr.decode('utf-8', 'replace').strip()}"
            )
        return proc

    @lru_cache(maxsize=1)
    def _reachable(self):
        out = self._run("rev-list", "--all").stdout.decode()
        return frozenset(out.split())

    def object_exists(self, commit_hash):
        return (
            self._run("cat-file", "-e", f"{commit_hash}^{{commit}}", check=False)
            .returncode
            == 0
        )

    def checkout_tree(self, commit_hash) -> dict:
        """File tree of a commit as ``{path: bytes}``.

        Raises :class:`CheckoutError` with kind ``unknown`` when no such
        commit object exists and kind ``unreachable`` when the object exists
        but no ref reaches it.
        """
        if not self.object_exists(commit_hash):
            raise CheckoutError(commit_hash, "unknown", "no such commit object")
        if commit_hash not in self._reachable():
            raise CheckoutError(
                commit_hash, "unreachable", "object exists but no ref reaches it"
            )
        listing = self._run("ls-tree", "-r", "-z", commit_hash).stdout
        entries = []
        for raw in listing.split(b"\x00"):
            if not raw:
                continue
            meta, path = raw.split(b"\t", 1)
            mode, otype, sha = meta.split()
            if otype == b"blob":
                entries.append((path.decode("utf-8", "replace"), sha.decode()))
        if not entries:
            return {}
        batch_in = "".join(sha + "\n" for _, sha in entries).encode()
        out = self._run("cat-file", "--batch", input_bytes=batch_in).stdout
        blobs = {}
        pos = 0
        while pos < len(out):
            nl = out.index(b"\n", pos)
            header = out[pos:nl].decode()
            parts = header.split()
            sha, size = parts[0], int(parts[2])
            start = nl + 1
            blobs[sha] = out[start : start + size]
            pos = start + size + 1  # skip the trailing newline
        return {path: blobs[sha] for path, sha in entries}

    def java_sources(self, commit_hash):
        """Decoded ``(path, text)`` pairs for the commit's .java files."""
        tree = self.checkout_tree(commit_hash)
        return [
            (path, data.decode("utf-8", "replace"))
            for path, data in sorted(tree.items())
            if path.endswith(".java")
        ]
