"""Simultaneous confidence regions, test decision, p-value and data-driven tau selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .bootstrap import (
    DEFAULT_B,
    BootstrapDistribution,
    ObservedPivot,
    bootstrap_many,
    empirical_quantile,
    pair_terms,
    pivot_from_terms,
)
from .stats import (
    Dataset,
    PairSet,
    derive_seed,
    group_summary,
    psd_factor,
    stream,
    validate_dataset,
)

log = logging.getLogger(__name__)

DEFAULT_TAU_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99)
DEFAULT_SIZE_RESAMPLES = 100
SIDES = ("two_sided", "upper", "lower")
BISECTION_STEPS = 64

# task-path tag for the size-estimation resamples of tau selection
_SIZE_TAG = 1


@dataclass(frozen=True)
class TestConfig:
    """Test settings. ``tau`` is a number in [0, 1) or ``"auto"`` for data-driven selection."""

    __test__ = False

    rho: float = 0.05
    tau: Union[float, str] = "auto"
    tau_grid: tuple[float, ...] = DEFAULT_TAU_GRID
    size_resamples: int = DEFAULT_SIZE_RESAMPLES
    B: int = DEFAULT_B
    side: str = "two_sided"
    seed: int = 0
    pairs: PairSet | None = None
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        if self.B < 1:
            raise ValueError("B must be positive")
        if self.auto:
            if not self.tau_grid:
                raise ValueError("tau grid is empty")
            if any(not 0.0 <= t < 1.0 for t in self.tau_grid):
                raise ValueError(f"tau grid values must lie in [0, 1): {self.tau_grid}")
            if self.size_resamples < 1:
                raise ValueError("size_resamples must be positive")
        elif not 0.0 <= float(self.tau) < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")

    @property
    def auto(self) -> bool:
        return isinstance(self.tau, str)


@dataclass(frozen=True)
class ScrEntry:
    k: int
    l: int
    j: int
    lower: float
    upper: float
    excludes_zero: bool


@dataclass
class TestResult:
    __test__ = False

    reject: bool
    p_value: float
    tau_used: float
    rho: float
    side: str
    B: int
    pairs: PairSet
    scr: list[ScrEntry]
    significant: list[tuple[int, int, int]]
    tau_diagnostics: list[dict] | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "p_value": self.p_value,
            "reject": self.reject,
            "rho": self.rho,
            "side": self.side,
            "B": self.B,
            "tau_used": self.tau_used,
            "pairs": [list(p) for p in self.pairs],
            "scr": [
                {
                    "k": e.k,
                    "l": e.l,
                    "j": e.j,
                    "lower": _finite_or_none(e.lower),
                    "upper": _finite_or_none(e.upper),
                    "excludes_zero": e.excludes_zero,
                }
                for e in self.scr
            ],
            "significant": [list(t) for t in self.significant],
            "tau_diagnostics": self.tau_diagnostics,
            **self.extra,
        }


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def _quantiles(dist: BootstrapDistribution, rho: float, side: str) -> tuple[float, float]:
    """Critical values ``(q_M, q_L)``; an unused side is returned as -inf / +inf."""
    if side == "two_sided":
        return (
            empirical_quantile(dist.m_star, 1.0 - rho / 2),
            empirical_quantile(dist.l_star, rho / 2),
        )
    if side == "upper":
        return empirical_quantile(dist.m_star, 1.0 - rho), -math.inf
    return math.inf, empirical_quantile(dist.l_star, rho)


def build_scr(data: Dataset, dist: BootstrapDistribution, tau: float, rho: float,
              side: str = "two_sided", summaries=None) -> list[ScrEntry]:
    if abs(dist.tau - tau) > 0:
        raise ValueError(f"distribution was built with tau={dist.tau}, not {tau}")
    if summaries is None:
        summaries = [group_summary(g) for g in data.groups]
    terms = pair_terms(summaries, dist.pairs, tau)
    means = np.stack([s.mean for s in summaries])
    diff = means[terms.k_idx] - means[terms.l_idx]
    half = terms.scale / np.sqrt(terms.harmonic_n)[:, None]
    q_m, q_l = _quantiles(dist, rho, side)
    lower = diff - q_m * half if side != "lower" else np.full_like(diff, -math.inf)
    upper = diff - q_l * half if side != "upper" else np.full_like(diff, math.inf)
    excl = (lower > 0) | (upper < 0)
    out = []
    for i, (k, l) in enumerate(dist.pairs):
        for j in range(diff.shape[1]):
            out.append(ScrEntry(k, l, j + 1, float(lower[i, j]), float(upper[i, j]), bool(excl[i, j])))
    return out


def decide(scr: Sequence[ScrEntry], rho: float | None = None) -> tuple[bool, list[tuple[int, int, int]]]:
    significant = [(e.k, e.l, e.j) for e in scr if e.excludes_zero]
    return bool(significant), significant


def _feasible(pivot: ObservedPivot, dist: BootstrapDistribution, rho: float, side: str) -> bool:
    """True when every region at level ``rho`` contains zero."""
    q_m, q_l = _quantiles(dist, rho, side)
    return pivot.t_max <= q_m and pivot.t_min >= q_l


def rejects(pivot: ObservedPivot, dist: BootstrapDistribution, rho: float, side: str = "two_sided") -> bool:
    """Decision of the level-``rho`` test without materializing the regions."""
    return not _feasible(pivot, dist, rho, side)


def p_value(pivot: ObservedPivot, dist: BootstrapDistribution, side: str = "two_sided") -> float:
    """Largest level at which all regions still contain zero.

    Feasibility shrinks as the level grows, so the boundary is found by
    bisection. Boundaries sit on multiples of ``1/B``, so the result is snapped
    to the nearest multiple of ``1/(2B)``.
    """
    eps = 1e-12
    if not _feasible(pivot, dist, eps, side):
        return 0.0
    if _feasible(pivot, dist, 1.0 - eps, side):
        return 1.0
    lo, hi = eps, 1.0 - eps
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if _feasible(pivot, dist, mid, side):
            lo = mid
        else:
            hi = mid
    grid = 2 * dist.B
    return min(1.0, max(0.0, round(0.5 * (lo + hi) * grid) / grid))


def _resample_centered(groups, rng: np.random.Generator) -> list[np.ndarray]:
    out = []
    for g in groups:
        c = g - g.mean(axis=0)
        out.append(c[rng.integers(0, g.shape[0], g.shape[0])])
    return out


def choose_tau(grid, sizes, pvals, rho) -> tuple[int, bool]:
    """Index of the chosen candidate and whether the no-candidate fallback was used.

    Candidates with size <= rho are retained and the smallest p-value wins; if
    none is retained the smallest size wins. Ties go to the smallest tau.
    """
    retained = [i for i in range(len(grid)) if sizes[i] <= rho]
    if not retained:
        return min(range(len(grid)), key=lambda i: (sizes[i], grid[i])), True
    return min(retained, key=lambda i: (pvals[i], grid[i])), False


def select_tau(data, config: TestConfig, summaries=None, _dists=None):
    """Pick tau from the grid: smallest p-value among candidates whose estimated size is <= rho.

    Size for a candidate is the rejection fraction over ``size_resamples``
    datasets obtained by centering each group and resampling it with
    replacement. All candidates share the same resampled datasets and
    bootstrap draws. Ties go to the smallest tau; when no candidate is
    retained the smallest-size candidate is used and flagged.

    Returns ``(tau, diagnostics)``.
    """
    data = validate_dataset(data)
    pairs = config.pairs or PairSet.all_pairs(data.K)
    pairs.check(data.K)
    grid = [float(t) for t in config.tau_grid]
    if summaries is None:
        summaries = [group_summary(g) for g in data.groups]
    if _dists is None:
        _dists = bootstrap_many(summaries, pairs, grid, config.B, config.seed, config.workers)
    pvals = []
    for tau, dist in zip(grid, _dists):
        pivot = pivot_from_terms(summaries, pair_terms(summaries, pairs, tau))
        pvals.append(p_value(pivot, dist, config.side))

    rejections = np.zeros(len(grid), dtype=int)
    for r in range(config.size_resamples):
        task_seed = derive_seed(config.seed, _SIZE_TAG, r)
        groups = _resample_centered(data.groups, stream(task_seed, 0))
        rs = [group_summary(g) for g in groups]
        factors = [psd_factor(s.cov) for s in rs]
        dists = bootstrap_many(rs, pairs, grid, config.B, derive_seed(task_seed, 1), 1, factors)
        for i, (tau, dist) in enumerate(zip(grid, dists)):
            pivot = pivot_from_terms(rs, pair_terms(rs, pairs, tau))
            rejections[i] += rejects(pivot, dist, config.rho, config.side)
    sizes = rejections / config.size_resamples

    best, fallback = choose_tau(grid, sizes, pvals, config.rho)
    if fallback:
        log.warning("no tau candidate kept estimated size <= %g; using tau=%g", config.rho, grid[best])
    diagnostics = [
        {
            "tau": grid[i],
            "size": float(sizes[i]),
            "p_value": float(pvals[i]),
            "retained": bool(sizes[i] <= config.rho),
            "selected": i == best,
            "fallback": fallback and i == best,
        }
        for i in range(len(grid))
    ]
    return grid[best], diagnostics


def run_test(data, config: TestConfig) -> TestResult:
    data = validate_dataset(data)
    pairs = config.pairs or PairSet.all_pairs(data.K)
    pairs.check(data.K)
    summaries = [group_summary(g) for g in data.groups]
    diagnostics = None
    if config.auto:
        grid = [float(t) for t in config.tau_grid]
        dists = bootstrap_many(summaries, pairs, grid, config.B, config.seed, config.workers)
        tau, diagnostics = select_tau(data, config, summaries, dists)
        dist = dists[grid.index(tau)]
    else:
        tau = float(config.tau)
        dist = bootstrap_many(summaries, pairs, [tau], config.B, config.seed, config.workers)[0]
    pivot = pivot_from_terms(summaries, pair_terms(summaries, pairs, tau))
    scr = build_scr(data, dist, tau, config.rho, config.side, summaries)
    reject, significant = decide(scr, config.rho)
    return TestResult(
        reject=reject,
        p_value=p_value(pivot, dist, config.side),
        tau_used=tau,
        rho=config.rho,
        side=config.side,
        B=config.B,
        pairs=pairs,
        scr=scr,
        significant=significant,
        tau_diagnostics=diagnostics,
    )
