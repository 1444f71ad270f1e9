"""Multinomial mimicry ensembles.

A mimicry replaces every population row by a fresh multinomial draw at the
observed proportions (homogeneous scheme), or by per-block draws that are
then pooled (blocked scheme, for temporally non-homogeneous data). Each
replicate gets its own counter-based random substream derived from
(master_seed, replicate index), so ensembles are bit-reproducible for any
execution order or worker count.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass

import numpy as np

from . import codes as codes_mod
from . import hclust
from .distance import (
    DEFAULT_FLOOR,
    DistanceMatrix,
    _pairwise_sq,
    _pairwise_weighted,
    distance_matrix,
)
from .matrix import (
    BlockedCountMatrix,
    CountMatrix,
    ProportionMatrix,
    VarianceMatrix,
    theoretical_variance,
    to_proportions,
)

__all__ = [
    "MeasureConfig",
    "MimicryEnsemble",
    "replicate_rng",
    "sample_multinomial",
    "mimic_homogeneous",
    "mimic_blocked",
    "build_ensemble",
]

SCHEMES = ("homogeneous", "blocked")

#: replicates are generated in fixed-size chunks and chunk results are
#: reduced in index order, so the worker count cannot change any sum
_CHUNK = 32


@dataclass(frozen=True)
class MeasureConfig:
    """How replicate (and observed) trees are computed from proportions."""

    measure: str = "dstar"
    variance_source: str = "theoretical"
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if self.measure not in ("d0", "dstar"):
            raise ValueError(f"unknown measure {self.measure!r}")
        if self.variance_source not in ("theoretical", "empirical"):
            raise ValueError(f"unknown variance source {self.variance_source!r}")
        if self.floor <= 0:
            raise ValueError("floor must be positive")


def replicate_rng(master_seed: int, b: int) -> np.random.Generator:
    """Independent counter-based stream for replicate b of a 64-bit seed."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(b),))
    return np.random.Generator(np.random.Philox(seq))


def sample_multinomial(n: int, probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One multinomial draw: nonnegative integer counts summing to n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("probs must be nonnegative and sum to 1")
    return rng.multinomial(n, p)


def mimic_homogeneous(cm: CountMatrix, rng: np.random.Generator) -> CountMatrix:
    """Resample every row from MN(N_k, P_k); row totals are preserved."""
    props = cm.counts / cm.row_sums[:, None]
    sampled = rng.multinomial(cm.row_sums, props)
    return CountMatrix(cm.population_ids, cm.category_names, sampled)


def mimic_blocked(bcm: BlockedCountMatrix, rng: np.random.Generator) -> CountMatrix:
    """Resample each block at its own proportions, then pool over blocks."""
    k, t, m = bcm.counts.shape
    total = np.zeros((k, m), dtype=np.int64)
    for block in range(t):
        counts = bcm.counts[:, block, :]
        n = counts.sum(axis=1)
        live = n > 0
        if not np.any(live):
            continue
        props = counts[live] / n[live, None]
        total[live] += rng.multinomial(n[live], props)
    return CountMatrix(bcm.population_ids, bcm.category_names, total)


@dataclass(frozen=True, eq=False)
class MimicryEnsemble:
    """B mimicries of one observed matrix, with their derived trees/codes.

    Holds running sums instead of the replicate matrices themselves (memory
    scales with B*K, not B*K*M): ``dev_sq_sum`` accumulates
    (p_obs - p_b)^2 per cell and ``prop_sum`` accumulates p_b. Full
    proportion matrices are retained only when requested.
    """

    scheme: str
    n_replicates: int
    master_seed: int
    config: MeasureConfig
    observed: ProportionMatrix
    dev_sq_sum: np.ndarray
    prop_sum: np.ndarray
    weights: VarianceMatrix | None
    dendrograms: tuple[hclust.Dendrogram, ...] | None
    code_tables: tuple[codes_mod.CodeTable, ...] | None
    replicates: tuple[ProportionMatrix, ...] | None = None

    @property
    def population_ids(self) -> tuple[str, ...]:
        return self.observed.population_ids

    @property
    def category_names(self) -> tuple[str, ...]:
        return self.observed.category_names

    @property
    def row_sums(self) -> np.ndarray:
        return self.observed.row_sums

    def cell_mean(self) -> np.ndarray:
        """Per-cell mean of the mimicked proportions."""
        return self.prop_sum / self.n_replicates

    def cell_variance(self, ddof: int = 0) -> np.ndarray:
        """Per-cell sample variance of the mimicked proportions.

        Derived from sums of deviations around the observed value, which
        are exact: sum((p - mean)^2) = dev_sq_sum - B*(mean - p_obs)^2.
        """
        b = self.n_replicates
        if b - ddof < 1:
            raise ValueError("not enough replicates for this ddof")
        shift = self.cell_mean() - self.observed.props
        return (self.dev_sq_sum - b * shift * shift) / (b - ddof)


def _observed_counts(data: CountMatrix | BlockedCountMatrix) -> CountMatrix:
    return data.aggregate() if isinstance(data, BlockedCountMatrix) else data


def _replicate_counts(
    data: CountMatrix | BlockedCountMatrix, scheme: str, master_seed: int, b: int
) -> CountMatrix:
    rng = replicate_rng(master_seed, b)
    if scheme == "blocked":
        return mimic_blocked(data, rng)
    return mimic_homogeneous(_observed_counts(data), rng)


def resolve_weights(
    pm: ProportionMatrix, config: MeasureConfig, ensemble: MimicryEnsemble | None = None
) -> VarianceMatrix | None:
    """Variance weights for dstar trees, fixed at the observed matrix.

    Distances between mimicked rows reuse the observed matrix's variances
    rather than recomputing weights per replicate. The empirical source
    needs an ensemble to estimate from.
    """
    if config.measure != "dstar":
        return None
    if config.variance_source == "theoretical":
        return theoretical_variance(pm)
    if ensemble is None:
        raise ValueError("empirical variance weights need a generated ensemble")
    return VarianceMatrix(ensemble.dev_sq_sum / ensemble.n_replicates, source="empirical")


def observed_distance(
    pm: ProportionMatrix, config: MeasureConfig, weights: VarianceMatrix | None
) -> DistanceMatrix:
    if config.measure == "dstar":
        return distance_matrix(pm, "dstar", weights, config.floor)
    return distance_matrix(pm, "d0")


# -- chunk worker ------------------------------------------------------------
# Worker state is passed through an initializer so fork-based pools do not
# re-pickle the data for every chunk.

_G: dict = {}


def _init_worker(payload: dict) -> None:
    _G.clear()
    _G.update(payload)


def _run_chunk(span: tuple[int, int]):
    lo, hi = span
    data = _G["data"]
    scheme = _G["scheme"]
    seed = _G["seed"]
    config: MeasureConfig = _G["config"]
    weights = _G["weights"]
    build_trees = _G["build_trees"]
    retain = _G["retain"]
    obs_props = _G["obs_props"]

    dev_sq = np.zeros_like(obs_props)
    prop_sum = np.zeros_like(obs_props)
    trees = []
    retained = []
    for b in range(lo, hi):
        cm = _replicate_counts(data, scheme, seed, b)
        props = cm.counts / cm.row_sums[:, None]
        dev = obs_props - props
        dev_sq += dev * dev
        prop_sum += props
        if retain:
            retained.append(props)
        if build_trees:
            # same arithmetic as distance.distance_matrix, without the
            # per-replicate validation round trip
            if config.measure == "dstar":
                upper = _pairwise_weighted(props, weights, config.floor)
                dend = hclust.ward_d2(upper + upper.T, assume_squared=True)
            else:
                upper = np.sqrt(_pairwise_sq(props))
                dend = hclust.ward_d2(upper + upper.T, assume_squared=False)
            trees.append((dend.left, dend.right, dend.heights, dend.sizes))
    return dev_sq, prop_sum, trees, retained


def _generate(
    data,
    scheme: str,
    n_replicates: int,
    master_seed: int,
    config: MeasureConfig,
    weights: VarianceMatrix | None,
    obs_props: np.ndarray,
    build_trees: bool,
    retain: bool,
    workers: int,
):
    payload = {
        "data": data,
        "scheme": scheme,
        "seed": master_seed,
        "config": config,
        "weights": None if weights is None else weights.vars,
        "build_trees": build_trees,
        "retain": retain,
        "obs_props": obs_props,
    }
    spans = [(lo, min(lo + _CHUNK, n_replicates)) for lo in range(0, n_replicates, _CHUNK)]
    if workers <= 1 or len(spans) <= 1:
        _init_worker(payload)
        results = [_run_chunk(s) for s in spans]
    else:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            results = list(pool.map(_run_chunk, spans))

    dev_sq = np.zeros_like(obs_props)
    prop_sum = np.zeros_like(obs_props)
    trees = []
    retained = []
    for part_dev, part_sum, part_trees, part_props in results:
        dev_sq += part_dev
        prop_sum += part_sum
        trees.extend(part_trees)
        retained.extend(part_props)
    return dev_sq, prop_sum, trees, retained


def build_ensemble(
    data: CountMatrix | BlockedCountMatrix,
    scheme: str = "homogeneous",
    n_replicates: int = 1000,
    master_seed: int = 0,
    config: MeasureConfig = MeasureConfig(),
    *,
    build_trees: bool = True,
    retain_matrices: bool = False,
    workers: int = 1,
) -> MimicryEnsemble:
    """Generate B mimicries and (optionally) their trees and code tables.

    Replicate b is a pure function of (data, scheme, master_seed, b); the
    worker count changes wall time only. The blocked scheme needs blocked
    data; the homogeneous scheme on blocked data aggregates it first,
    which is how the two schemes are compared on one dataset.

    With empirical variance weights the ensemble is generated twice: a
    first pass estimates the per-cell mimicking variance, and the second
    builds the trees using those fixed weights.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "blocked" and not isinstance(data, BlockedCountMatrix):
        raise ValueError("blocked scheme requires blocked (per-block) counts")
    if n_replicates < 1:
        raise ValueError("need at least one replicate")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    observed = _observed_counts(data)
    pm = to_proportions(observed)

    needs_prepass = (
        build_trees and config.measure == "dstar" and config.variance_source == "empirical"
    )
    weights: VarianceMatrix | None
    if needs_prepass:
        dev_sq, prop_sum, _, _ = _generate(
            data, scheme, n_replicates, master_seed, config, None,
            pm.props, build_trees=False, retain=False, workers=workers,
        )
        weights = VarianceMatrix(dev_sq / n_replicates, source="empirical")
    else:
        weights = resolve_weights(pm, config) if build_trees else None

    dev_sq, prop_sum, raw_trees, retained = _generate(
        data, scheme, n_replicates, master_seed, config, weights,
        pm.props, build_trees=build_trees, retain=retain_matrices, workers=workers,
    )

    dendrograms = None
    code_tables = None
    if build_trees:
        k = pm.n_populations
        dendrograms = tuple(
            hclust.Dendrogram(k, left, right, heights, sizes)
            for left, right, heights, sizes in raw_trees
        )
        code_tables = tuple(codes_mod.encode(d) for d in dendrograms)

    replicates = None
    if retain_matrices:
        replicates = tuple(
            ProportionMatrix(pm.population_ids, pm.category_names, props, pm.row_sums)
            for props in retained
        )

    return MimicryEnsemble(
        scheme=scheme,
        n_replicates=n_replicates,
        master_seed=int(master_seed),
        config=config,
        observed=pm,
        dev_sq_sum=dev_sq,
        prop_sum=prop_sum,
        weights=weights,
        dendrograms=dendrograms,
        code_tables=code_tables,
        replicates=replicates,
    )
