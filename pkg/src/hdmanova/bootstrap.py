"""Observed pivots and Gaussian-bootstrap distributions of the max/min statistics.

Replicates are generated in fixed-size blocks. Block ``i`` always draws from
``stream(seed, i)``, so the output does not depend on how many workers share
the blocks. Within a replicate, one draw per group is shared by every pair,
which keeps the dependence between pairs inside the max.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadQuantileLevel, DegenerateCoordinate
from .stats import (
    Dataset,
    GroupSummary,
    PairSet,
    gaussian_draw,
    gaussian_draws,
    group_summary,
    pooled_scale,
    psd_factor,
    stream,
    validate_dataset,
)

DEFAULT_B = 1000
BLOCK_SIZE = 128


@dataclass(frozen=True)
class BootstrapConfig:
    tau: float = 0.8
    B: int = DEFAULT_B
    seed: int = 0
    pairs: PairSet | None = None

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")
        if self.B < 1:
            raise ValueError(f"B must be positive, got {self.B}")


@dataclass(frozen=True)
class PairTerms:
    """Per-(pair, coordinate) coefficients of the partially standardized contrast.

    Arrays are ``(P, p)``; ``k_idx``/``l_idx`` are 0-based group indices.
    """

    pairs: PairSet
    tau: float
    k_idx: np.ndarray
    l_idx: np.ndarray
    root_wk: np.ndarray  # (P, 1), sqrt(n_l / (n_k + n_l))
    root_wl: np.ndarray  # (P, 1), sqrt(n_k / (n_k + n_l))
    scale: np.ndarray  # sigma ** tau
    harmonic_n: np.ndarray  # (P,)

    @property
    def coef_k(self) -> np.ndarray:
        return self.root_wk / self.scale

    @property
    def coef_l(self) -> np.ndarray:
        return self.root_wl / self.scale


@dataclass(frozen=True)
class ObservedPivot:
    t_max: float
    t_min: float
    per_triple: np.ndarray  # (P, p)


@dataclass(frozen=True)
class BootstrapDistribution:
    m_star: np.ndarray
    l_star: np.ndarray
    tau: float
    pairs: PairSet

    @property
    def B(self) -> int:
        return self.m_star.size


def pair_terms(summaries: Sequence[GroupSummary], pairs: PairSet, tau: float) -> PairTerms:
    k_idx, l_idx, wk, wl, sc, hn = [], [], [], [], [], []
    for k, l in pairs:
        ps = pooled_scale(summaries[k - 1], summaries[l - 1])
        if tau > 0:
            zero = np.flatnonzero(ps.sigma == 0.0)
            if zero.size:
                raise DegenerateCoordinate(
                    f"pooled scale is zero for pair ({k},{l}) at coordinate(s) "
                    f"{(zero + 1).tolist()[:10]} with tau={tau}"
                )
            s = ps.sigma**tau
        else:
            s = np.ones_like(ps.sigma)
        k_idx.append(k - 1)
        l_idx.append(l - 1)
        wk.append(math.sqrt(ps.weight_k))
        wl.append(math.sqrt(ps.weight_l))
        sc.append(s)
        hn.append(ps.harmonic_n)
    return PairTerms(
        pairs=pairs,
        tau=float(tau),
        k_idx=np.array(k_idx),
        l_idx=np.array(l_idx),
        root_wk=np.array(wk)[:, None],
        root_wl=np.array(wl)[:, None],
        scale=np.array(sc),
        harmonic_n=np.array(hn),
    )


def weighted_difference(draws: np.ndarray, terms: PairTerms) -> np.ndarray:
    """Unstandardized contrasts ``(b, P, p)``; identical for every tau."""
    return draws[:, terms.k_idx, :] * terms.root_wk - draws[:, terms.l_idx, :] * terms.root_wl


def contrast_array(draws: np.ndarray, terms: PairTerms) -> np.ndarray:
    """Map group draws ``(b, K, p)`` to the per-(pair, coordinate) array ``(b, P, p)``."""
    return weighted_difference(draws, terms) / terms.scale


def _extremes(diff: np.ndarray, terms: PairTerms) -> tuple[np.ndarray, np.ndarray]:
    t = (diff / terms.scale).reshape(diff.shape[0], -1)
    return t.max(axis=1), t.min(axis=1)


def replicate_extremes(draws: np.ndarray, terms: PairTerms) -> tuple[np.ndarray, np.ndarray]:
    return _extremes(weighted_difference(draws, terms), terms)


def observed_pivot(data: Dataset, pairs: PairSet, tau: float, summaries=None) -> ObservedPivot:
    if summaries is None:
        summaries = [group_summary(g) for g in data.groups]
    return pivot_from_terms(summaries, pair_terms(summaries, pairs, tau))


def pivot_from_terms(summaries: Sequence[GroupSummary], terms: PairTerms) -> ObservedPivot:
    means = np.stack([s.mean for s in summaries])
    diff = means[terms.k_idx] - means[terms.l_idx]
    per = np.sqrt(terms.harmonic_n)[:, None] * diff / terms.scale
    return ObservedPivot(t_max=float(per.max()), t_min=float(per.min()), per_triple=per)


def boot_replicate(summaries, pairs: PairSet, tau: float, rng, factors=None) -> tuple[float, float]:
    """One bootstrap replicate ``(M*, L*)``: a fresh draw per group, shared across pairs."""
    if factors is None:
        factors = [psd_factor(s.cov) for s in summaries]
    terms = pair_terms(summaries, pairs, tau)
    draws = np.stack([gaussian_draw(f, rng) for f in factors])[None]
    m, l = replicate_extremes(draws, terms)
    return float(m[0]), float(l[0])


def _block_bounds(B: int) -> list[tuple[int, int]]:
    return [(i, min(BLOCK_SIZE, B - i * BLOCK_SIZE)) for i in range(math.ceil(B / BLOCK_SIZE))]


def draw_block(factors: Sequence[np.ndarray], seed: int, block: int, size: int) -> np.ndarray:
    """Group draws ``(size, K, p)`` for one block; groups are drawn in order from one stream."""
    rng = stream(seed, block)
    return np.stack([gaussian_draws(f, rng, size) for f in factors], axis=1)


def bootstrap_many(
    summaries: Sequence[GroupSummary],
    pairs: PairSet,
    taus: Sequence[float],
    B: int,
    seed: int,
    workers: int = 1,
    factors=None,
) -> list[BootstrapDistribution]:
    """Bootstrap distributions for several tau values from one shared set of draws.

    The draws do not depend on tau, so the distribution for any single tau is
    identical to what a one-tau run with the same seed produces.
    """
    terms = [pair_terms(summaries, pairs, t) for t in taus]
    if factors is None:
        factors = [psd_factor(s.cov) for s in summaries]

    def work(bounds):
        block, size = bounds
        diff = weighted_difference(draw_block(factors, seed, block, size), terms[0])
        return [_extremes(diff, t) for t in terms]

    blocks = _block_bounds(B)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(work, blocks))
    else:
        results = [work(b) for b in blocks]

    out = []
    for i, t in enumerate(terms):
        m = np.concatenate([r[i][0] for r in results])
        l = np.concatenate([r[i][1] for r in results])
        out.append(BootstrapDistribution(np.sort(m), np.sort(l), t.tau, pairs))
    return out


def run_bootstrap(data, config: BootstrapConfig, workers: int = 1) -> BootstrapDistribution:
    data = validate_dataset(data)
    pairs = config.pairs or PairSet.all_pairs(data.K)
    pairs.check(data.K)
    summaries = [group_summary(g) for g in data.groups]
    return bootstrap_many(summaries, pairs, [config.tau], config.B, config.seed, workers)[0]


def _order_index(beta: float, B: int) -> int:
    # rounding guards against beta*B landing a hair above an integer
    return max(1, math.ceil(round(beta * B, 9)))


def empirical_quantile(sorted_samples, beta: float) -> float:
    """The ``ceil(beta * B)``-th order statistic (right-continuous inverse of the ECDF)."""
    if not 0.0 < beta <= 1.0:
        raise BadQuantileLevel(f"quantile level must lie in (0, 1], got {beta}")
    return float(sorted_samples[_order_index(beta, len(sorted_samples)) - 1])
