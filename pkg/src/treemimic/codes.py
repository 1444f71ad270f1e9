"""Binary leaf codes and branch (code-prefix) queries.

Descending from the root, the left child appends 0 and the right child 1,
so every leaf carries the bit string of its root-to-leaf path and every
branch is the set of leaves sharing a code prefix. Left means "subtree
containing the smaller minimum original leaf index": the plotted
orientation of a tree is arbitrary, and a fixed rule is what makes code
tables comparable across an ensemble of mimicked trees.

Patterns are compared across trees by leaf membership, never by literal
bit strings, so re-orienting children cannot corrupt recurrence counts.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .hclust import Dendrogram

__all__ = [
    "CodeTable",
    "Branch",
    "encode",
    "minimal_containing_branch",
    "is_standalone",
    "render_code_table",
]


@dataclass(frozen=True)
class Branch:
    """A tree branch: its code prefix and the leaves underneath it."""

    prefix: str
    members: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.prefix)

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class CodeTable:
    """Per-leaf binary code strings, indexed by original leaf index."""

    codes: tuple[str, ...]

    @property
    def n_leaves(self) -> int:
        return len(self.codes)

    @cached_property
    def _sorted_codes(self) -> list[str]:
        return sorted(self.codes)

    @cached_property
    def _leaf_by_sorted(self) -> list[int]:
        # leaf codes are prefix-free, so sorting them lexicographically
        # recovers the in-order leaf arrangement
        return sorted(range(len(self.codes)), key=lambda i: self.codes[i])

    def prefix_range(self, prefix: str) -> tuple[int, int]:
        """Half-open range of in-order positions whose codes extend prefix."""
        lo = bisect_left(self._sorted_codes, prefix)
        hi = bisect_left(self._sorted_codes, prefix + "2")
        return lo, hi

    def prefix_members(self, prefix: str) -> tuple[int, ...]:
        lo, hi = self.prefix_range(prefix)
        return tuple(sorted(self._leaf_by_sorted[lo:hi]))


def encode(d: Dendrogram) -> CodeTable:
    """Code every leaf of a dendrogram with its root-to-leaf bit string."""
    k = d.n_leaves
    codes = [""] * (2 * k - 1)
    stack = [d.root]
    while stack:
        node = stack.pop()
        if node < k:
            continue
        t = node - k
        here = codes[node]
        codes[int(d.left[t])] = here + "0"
        codes[int(d.right[t])] = here + "1"
        stack.append(int(d.left[t]))
        stack.append(int(d.right[t]))
    return CodeTable(tuple(codes[:k]))


def _check_members(ct: CodeTable, members: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(m) for m in members)
    if not out:
        raise ValueError("need at least one leaf")
    for m in out:
        if not 0 <= m < ct.n_leaves:
            raise ValueError(f"unknown leaf index {m}")
    if len(set(out)) != len(out):
        raise ValueError("duplicate leaves in query set")
    return out


def _common_prefix(a: str, b: str) -> str:
    n = min(len(a), len(b))
    for i in range(n):
        if a[i] != b[i]:
            return a[:i]
    return a[:n]


def minimal_containing_branch(ct: CodeTable, members: Iterable[int]) -> Branch:
    """Smallest branch whose leaf set contains all of ``members``.

    Its prefix is the longest common prefix of the members' codes: the
    branch just before the group is separated.
    """
    target = _check_members(ct, members)
    lo = min(ct.codes[m] for m in target)
    hi = max(ct.codes[m] for m in target)
    prefix = _common_prefix(lo, hi)
    return Branch(prefix, ct.prefix_members(prefix))


def is_standalone(ct: CodeTable, members: Iterable[int]) -> bool:
    """True when the leaf set is exactly a branch of the tree."""
    target = _check_members(ct, members)
    return minimal_containing_branch(ct, target).size == len(target)


def render_code_table(ct: CodeTable, population_ids: Sequence[str]) -> str:
    """Two-column TSV (label, bitstring), one leaf per line in leaf order."""
    if len(population_ids) != ct.n_leaves:
        raise ValueError("label count does not match the code table")
    lines = []
    for pos in range(ct.n_leaves):
        leaf = ct._leaf_by_sorted[pos]
        lines.append(f"{population_ids[leaf]}\t{ct.codes[leaf]}")
    return "\n".join(lines) + "\n"
