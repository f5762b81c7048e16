"""Numerical substrate: datasets, group summaries, pooled scales, PSD factors, Gaussian draws.

Sample covariances use divisor ``n`` (not ``n - 1``). This slightly shrinks
every pooled scale compared with the unbiased estimator and is intentional.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidPairs,
    NonFiniteEntry,
    NotPSD,
    TooFewGroups,
    TooFewObservations,
)

SYMMETRY_TOL = 1e-12
PSD_EIG_TOL = 1e-10
PSD_REL_SLACK = 1e-6


@dataclass(frozen=True)
class Dataset:
    """K groups of observations; group k is an ``n_k x p`` array (rows are observations)."""

    groups: tuple[np.ndarray, ...]

    def __init__(self, groups: Sequence[np.ndarray]):
        object.__setattr__(
            self, "groups", tuple(np.asarray(g, dtype=np.float64) for g in groups)
        )

    @property
    def K(self) -> int:
        return len(self.groups)

    @property
    def p(self) -> int:
        return self.groups[0].shape[1]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(g.shape[0] for g in self.groups)

    def scaled(self, c: float) -> "Dataset":
        return Dataset([c * g for g in self.groups])

    def permuted(self, perm) -> "Dataset":
        """Same coordinate permutation applied to every group."""
        return Dataset([g[:, perm] for g in self.groups])


@dataclass(frozen=True)
class PairSet:
    """Ordered group pairs ``(k, l)`` with ``1 <= k < l <= K`` (1-based)."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple((int(k), int(l)) for k, l in self.pairs)
        if not pairs:
            raise InvalidPairs("pair set is empty")
        if len(set(pairs)) != len(pairs):
            raise InvalidPairs(f"duplicate pairs in {pairs}")
        for k, l in pairs:
            if not 1 <= k < l:
                raise InvalidPairs(f"pair ({k},{l}) must satisfy 1 <= k < l")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def all_pairs(cls, K: int) -> "PairSet":
        return cls(tuple(combinations(range(1, K + 1), 2)))

    @classmethod
    def parse(cls, text: str, K: int) -> "PairSet":
        """Parse ``"all"`` or a comma list like ``"1-2,3-4"``."""
        text = text.strip()
        if text.lower() == "all":
            return cls.all_pairs(K)
        pairs = []
        for chunk in text.split(","):
            try:
                k, l = (int(s) for s in chunk.strip().split("-"))
            except ValueError:
                raise InvalidPairs(f"cannot parse pair {chunk!r}") from None
            pairs.append((k, l))
        ps = cls(tuple(pairs))
        ps.check(K)
        return ps

    def check(self, K: int) -> None:
        for k, l in self.pairs:
            if l > K:
                raise InvalidPairs(f"pair ({k},{l}) refers to a group beyond K={K}")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass(frozen=True)
class GroupSummary:
    mean: np.ndarray
    cov: np.ndarray
    n: int


@dataclass(frozen=True)
class PooledScale:
    sigma: np.ndarray
    weight_k: float
    weight_l: float
    harmonic_n: float


def validate_dataset(raw) -> Dataset:
    data = raw if isinstance(raw, Dataset) else Dataset(raw)
    if data.K < 2:
        raise TooFewGroups(f"need at least 2 groups, got {data.K}")
    for i, g in enumerate(data.groups, start=1):
        if g.ndim != 2:
            raise DimensionMismatch(f"group {i} is not a 2-d array (shape {g.shape})")
    ps = {g.shape[1] for g in data.groups}
    if len(ps) != 1:
        raise DimensionMismatch(f"groups have differing dimensions {sorted(ps)}")
    if data.p < 1:
        raise DimensionMismatch("dimension p must be at least 1")
    for i, g in enumerate(data.groups, start=1):
        if g.shape[0] < 2:
            raise TooFewObservations(f"group {i} has {g.shape[0]} observation(s); need >= 2")
        if not np.all(np.isfinite(g)):
            raise NonFiniteEntry(f"group {i} contains NaN or infinite entries")
    return data


def group_summary(group: np.ndarray) -> GroupSummary:
    x = np.asarray(group, dtype=np.float64)
    n = x.shape[0]
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / n
    # exact symmetry regardless of BLAS rounding
    cov = 0.5 * (cov + cov.T)
    return GroupSummary(mean=mean, cov=cov, n=n)


def pooled_scale(sk: GroupSummary, sl: GroupSummary) -> PooledScale:
    if sk.mean.shape != sl.mean.shape:
        raise DimensionMismatch("summaries have different dimensions")
    total = sk.n + sl.n
    wk = sl.n / total
    wl = sk.n / total
    var = wk * np.diag(sk.cov) + wl * np.diag(sl.cov)
    return PooledScale(
        sigma=np.sqrt(np.maximum(var, 0.0)),
        weight_k=wk,
        weight_l=wl,
        harmonic_n=sk.n * sl.n / total,
    )


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root ``F`` with ``F @ F.T == cov``.

    Negative eigenvalues within the slack, and positive ones at round-off level,
    are set to zero, so rank-deficient covariances (``p > n``) are fine. The symmetric root is unique, which makes
    draws equivariant under coordinate permutations.
    """
    a = np.asarray(cov, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotPSD(f"covariance must be square, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        return np.zeros_like(a)
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * max(1.0, scale):
        raise NotPSD("covariance is not symmetric")
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    if w[0] < -PSD_REL_SLACK * scale:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3g} is below -{PSD_REL_SLACK:g} * max|cov|")
    # eigenvalues at round-off level are treated as exact zeros (numerical rank)
    w = np.where(w > a.shape[0] * np.finfo(np.float64).eps * max(w[-1], 0.0), w, 0.0)
    root = np.sqrt(w)
    f = (v * root) @ v.T
    return 0.5 * (f + f.T)


def gaussian_draw(factor: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(factor.shape[1])
    return factor @ z


def gaussian_draws(factor: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` draws as rows; row i equals ``factor @ z_i``."""
    z = rng.standard_normal((size, factor.shape[1]))
    return z @ factor.T


def decay_diagnostic(summaries: Sequence[GroupSummary]) -> list[float]:
    """Per group, the decay exponent of ordered coordinate standard deviations.

    Fits ``log sd_(j) = c - alpha * log j`` by least squares over the strictly
    positive standard deviations sorted in decreasing order, and returns alpha.
    """
    out = []
    for s in summaries:
        sd = np.sqrt(np.clip(np.diag(s.cov), 0.0, None))
        sd = np.sort(sd[sd > 0])[::-1]
        if sd.size < 2:
            out.append(float("nan"))
            continue
        j = np.arange(1, sd.size + 1)
        slope = np.polyfit(np.log(j), np.log(sd), 1)[0]
        out.append(float(-slope))
    return out


def derive_seed(seed: int, *path: int) -> int:
    """A 64-bit seed for the task at ``path`` under ``seed``; independent of scheduling."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(x) for x in path))
    return int(ss.generate_state(1, np.uint64)[0])


def stream(seed: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(x) for x in path))
    return np.random.Generator(np.random.PCG64(ss))
