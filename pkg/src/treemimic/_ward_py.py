"""Pure-NumPy Ward.D2 agglomeration kernel.

Fallback for the compiled extension; both backends implement the identical
algorithm with matching floating-point operation order, so they produce
bit-identical merge sequences.

Slot invariant: the cluster living in slot s always has minimum original
leaf index s (merges land in the lower slot), so a row-major argmin over
the active upper triangle realizes the documented lexicographic tie-break.
"""

from __future__ import annotations

import numpy as np


def ward_merge(work: np.ndarray):
    """Agglomerate a squared-dissimilarity matrix with the Ward.D2 update.

    ``work`` is a K x K float64 array in the squared scale; it is destroyed.
    Returns (left, right, heights_sq, sizes): the two child node ids of each
    merge (leaves 0..K-1, internal nodes K..2K-2 in merge order), the merge
    value in the squared scale, and the merged cluster's leaf count. The
    left child is always the one with the smaller minimum original leaf.
    """
    big = work
    k = big.shape[0]
    big[np.tril_indices(k)] = np.inf

    size = np.ones(k)
    node = np.arange(k, dtype=np.int64)
    left = np.empty(k - 1, dtype=np.int64)
    right = np.empty(k - 1, dtype=np.int64)
    heights_sq = np.empty(k - 1)
    sizes = np.empty(k - 1, dtype=np.int64)

    dik = np.empty(k)
    djk = np.empty(k)
    for step in range(k - 1):
        flat = int(np.argmin(big))
        i, j = flat // k, flat % k
        h = big[i, j]
        ni = size[i]
        nj = size[j]

        # current dissimilarity of every slot to i and to j (inf if inactive)
        dik[:i] = big[:i, i]
        dik[i] = np.inf
        dik[i + 1 :] = big[i, i + 1 :]
        djk[:j] = big[:j, j]
        djk[j] = np.inf
        djk[j + 1 :] = big[j, j + 1 :]

        new = ((ni + size) * dik + (nj + size) * djk - size * h) / (ni + nj + size)
        new[i] = np.inf
        new[j] = np.inf
        big[:i, i] = new[:i]
        big[i, i + 1 :] = new[i + 1 :]
        big[:j, j] = np.inf
        big[j, j + 1 :] = np.inf

        left[step] = node[i]
        right[step] = node[j]
        heights_sq[step] = h
        sizes[step] = int(ni + nj)
        size[i] = ni + nj
        node[i] = k + step
    return left, right, heights_sq, sizes
