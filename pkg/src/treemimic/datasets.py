"""Bundled synthetic count-data generators.

Each generator returns (matrix, truth) where truth records the planted
structure (cluster memberships, twins) used by tests and demos. They are
exposed through the ``gen`` CLI subcommand so every documented run works
offline.
"""

from __future__ import annotations

import numpy as np

from .matrix import BlockedCountMatrix, CountMatrix

__all__ = [
    "GENERATORS",
    "gen_two_cluster",
    "gen_three_cluster",
    "gen_two_block",
    "gen_blocked_heterogeneity",
    "gen_university",
]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=int(seed))))


def _peak_centroid(idx: int, m: int, peak: float) -> np.ndarray:
    """A histogram with one dominant category and the rest spread evenly."""
    c = np.full(m, (1.0 - peak) / (m - 1))
    c[idx % m] = peak
    return c


def _labels(prefix: str, k: int) -> list[str]:
    width = max(2, len(str(k)))
    return [f"{prefix}{i + 1:0{width}d}" for i in range(k)]


def _sample_rows(rng, centroids, ns):
    rows = [rng.multinomial(int(n), c) for c, n in zip(centroids, ns)]
    return np.array(rows, dtype=np.int64)


def gen_two_cluster(seed: int = 0, per_cluster: int = 10, m: int = 5, n: int = 10000):
    """Two far-separated clusters of identical-profile populations."""
    rng = _rng(seed)
    centroids = [_peak_centroid(0, m, 0.6)] * per_cluster + [_peak_centroid(1, m, 0.6)] * per_cluster
    labels = _labels("A", per_cluster) + _labels("B", per_cluster)
    counts = _sample_rows(rng, centroids, [n] * len(labels))
    cm = CountMatrix(tuple(labels), tuple(_labels("cat", m)), counts)
    truth = {
        "clusters": {
            "A": labels[:per_cluster],
            "B": labels[per_cluster:],
        }
    }
    return cm, truth


def gen_three_cluster(seed: int = 0, per_cluster: int = 20, m: int = 6, n: int = 10000):
    """Three well-separated planted clusters (between-centroid distance
    roughly 70x the multinomial within-cluster spread at the default n)."""
    rng = _rng(seed)
    names = ("A", "B", "C")
    centroids = []
    labels = []
    truth_clusters: dict[str, list[str]] = {}
    for g, name in enumerate(names):
        members = _labels(name, per_cluster)
        truth_clusters[name] = members
        labels += members
        centroids += [_peak_centroid(g, m, 0.62)] * per_cluster
    counts = _sample_rows(rng, centroids, [n] * len(labels))
    cm = CountMatrix(tuple(labels), tuple(_labels("cat", m)), counts)
    return cm, {"clusters": truth_clusters}


def gen_two_block(seed: int = 0, k: int = 6, n: int = 1000):
    """Two equal blocks with mirrored proportions (0.9, 0.1) / (0.1, 0.9).

    Every population aggregates to (0.5, 0.5); the blocked scheme's cell
    variance is 0.09/N against 0.25/N for the homogeneous scheme.
    """
    if n % 2:
        raise ValueError("n must be even so the two blocks are equal")
    rng = _rng(seed)
    half = n // 2
    labels = _labels("P", k)
    counts = np.empty((k, 2, 2), dtype=np.int64)
    for i in range(k):
        counts[i, 0] = rng.multinomial(half, [0.9, 0.1])
        counts[i, 1] = rng.multinomial(half, [0.1, 0.9])
    bcm = BlockedCountMatrix(
        tuple(labels), ("cat1", "cat2"), ("block1", "block2"), counts
    )
    return bcm, {"block_props": [[0.9, 0.1], [0.1, 0.9]]}


def gen_blocked_heterogeneity(
    seed: int = 0,
    groups: int = 4,
    large_per_group: int = 6,
    small_per_group: int = 3,
    m: int = 5,
    peak: float = 0.42,
    n_large: tuple[int, int] = (12000, 30000),
    n_small: tuple[int, int] = (20, 60),
    drift: float = 0.1,
    blocks: int = 2,
):
    """Cow-style data: latent groups, two-block temporal drift, and
    heterogeneous totals mixing precise and noisy populations."""
    rng = _rng(seed)
    labels: list[str] = []
    ns: list[int] = []
    block_props: list[np.ndarray] = []
    truth_clusters: dict[str, list[str]] = {}
    for g in range(groups):
        name = chr(ord("A") + g)
        count = large_per_group + small_per_group
        members = _labels(name, count)
        truth_clusters[name] = members
        labels += members
        centroid = _peak_centroid(g, m, peak)
        lo, hi = n_large
        slo, shi = n_small
        for i in range(count):
            big = i < large_per_group
            ns.append(int(rng.integers(lo, hi + 1) if big else rng.integers(slo, shi + 1)))
            block_props.append(centroid)

    k = len(labels)
    counts = np.zeros((k, blocks, m), dtype=np.int64)
    # opposite mass shifts between two categories per block; aggregate stays
    # at the group centroid in expectation
    src, dst = 0, m - 1
    for i in range(k):
        base = block_props[i]
        per_block = np.full(blocks, ns[i] // blocks, dtype=np.int64)
        per_block[: ns[i] % blocks] += 1
        for t in range(blocks):
            sign = 1.0 if t % 2 == 0 else -1.0
            p = base.copy()
            shift = min(drift, base[src] * 0.9, base[dst] * 0.9)
            p[src] -= sign * shift
            p[dst] += sign * shift
            if per_block[t] > 0:
                counts[i, t] = rng.multinomial(int(per_block[t]), p)
    bcm = BlockedCountMatrix(
        tuple(labels),
        tuple(_labels("cat", m)),
        tuple(_labels("block", blocks)),
        counts,
    )
    return bcm, {"clusters": truth_clusters}


def gen_university(
    seed: int = 0,
    k: int = 12,
    m: int = 9,
    n_lo: int = 30,
    n_hi: int = 120,
    alpha: float = 0.3,
):
    """Small-count regime: spiky profiles with many near-zero cells and a
    planted twin pair sharing one latent profile."""
    if k < 3:
        raise ValueError("need at least 3 populations for a twin pair")
    rng = _rng(seed)
    labels = _labels("U", k)
    profiles = [rng.dirichlet([alpha] * m) for _ in range(k - 1)]
    profiles.append(profiles[0])  # the last population twins the first
    ns = rng.integers(n_lo, n_hi + 1, size=k)
    counts = np.array(
        [rng.multinomial(int(ns[i]), profiles[i]) for i in range(k)], dtype=np.int64
    )
    cm = CountMatrix(tuple(labels), tuple(_labels("cat", m)), counts)
    return cm, {"twins": [labels[0], labels[-1]]}


GENERATORS = {
    "two-cluster": gen_two_cluster,
    "three-cluster": gen_three_cluster,
    "two-block": gen_two_block,
    "blocked-cow": gen_blocked_heterogeneity,
    "university": gen_university,
}
