"""Simulation generators: Gaussian processes, a bounded series process, mean families, Poisson counts.

Also holds the scenario catalog used by the harness and the CLI.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import UnknownScenario, UnsupportedSmoothness
from .fanova import BasisSpec, CurveSet, basis_matrix
from .inference import TestConfig
from .stats import Dataset, gaussian_draws, psd_factor

MATERN_DEFAULT = (2.5, 1.0, 0.5)  # variance scale, range, smoothness
WIENER_DEFAULT = 0.1
SERIES_TERMS = 51
SERIES_DIVISOR = 20.0
GRID_POINTS = 100


@dataclass(frozen=True)
class CovKernel:
    kind: str  # "matern" | "wiener" | "series51"
    variance: float = MATERN_DEFAULT[0]
    range: float = MATERN_DEFAULT[1]
    smoothness: float = MATERN_DEFAULT[2]
    dispersion: float = WIENER_DEFAULT

    def __post_init__(self):
        if self.kind not in ("matern", "wiener", "series51"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "matern":
            if self.variance <= 0 or self.range <= 0 or self.smoothness <= 0:
                raise ValueError("matern parameters must be positive")
            _half_integer_order(self.smoothness)
        if self.kind == "wiener" and self.dispersion <= 0:
            raise ValueError("wiener dispersion must be positive")

    def __call__(self, s, t):
        if self.kind == "matern":
            return matern_cov(s, t, self.variance, self.range, self.smoothness)
        if self.kind == "wiener":
            return wiener_cov(s, t, self.dispersion)
        raise TypeError("series51 is not defined through a covariance function")


def _half_integer_order(nu: float) -> int:
    order = nu - 0.5
    if order < 0 or abs(order - round(order)) > 1e-12:
        raise UnsupportedSmoothness(f"only half-integer smoothness (1/2, 3/2, ...) is supported, got {nu}")
    return int(round(order))


def _bessel_k_half(order: int, x: np.ndarray) -> np.ndarray:
    """Modified Bessel function of the second kind at ``order + 1/2``, by upward recurrence."""
    k_prev = np.sqrt(np.pi / (2.0 * x)) * np.exp(-x)
    if order == 0:
        return k_prev
    k_cur = k_prev * (1.0 + 1.0 / x)
    v = 1.5
    for _ in range(order - 1):
        k_prev, k_cur = k_cur, k_prev + (2.0 * v / x) * k_cur
        v += 1.0
    return k_cur


def matern_cov(s, t, variance=MATERN_DEFAULT[0], range_=MATERN_DEFAULT[1], nu=MATERN_DEFAULT[2]):
    """Matern covariance with the extra 1/16 factor; equals ``variance / 16`` at ``s == t``."""
    order = _half_integer_order(nu)
    d = np.abs(np.asarray(s, dtype=np.float64) - np.asarray(t, dtype=np.float64))
    x = np.sqrt(2.0 * nu) * d / range_
    with np.errstate(divide="ignore", invalid="ignore"):
        shape = 2.0 ** (1.0 - nu) / math.gamma(nu) * x**nu * _bessel_k_half(order, x)
    shape = np.where(x == 0, 1.0, shape)
    # far tails underflow to 0 * inf
    shape = np.nan_to_num(shape, nan=0.0)
    out = variance / 16.0 * shape
    return float(out) if out.ndim == 0 else out


def wiener_cov(s, t, sigma=WIENER_DEFAULT):
    out = sigma**2 * np.minimum(np.asarray(s, dtype=np.float64), np.asarray(t, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def unit_grid(m: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, m)


@lru_cache(maxsize=32)
def _gram_factor(kernel, grid_key: tuple) -> np.ndarray:
    g = np.array(grid_key)
    gram = np.broadcast_to(kernel(g[:, None], g[None, :]), (g.size, g.size))
    return psd_factor(gram)


def gram_factor(grid, kernel) -> np.ndarray:
    """PSD factor of the Gram matrix of ``kernel`` (any hashable ``k(s, t)``) on ``grid``."""
    return _gram_factor(kernel, tuple(np.asarray(grid, dtype=np.float64).tolist()))


def gp_samples(grid, kernel, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` centered Gaussian paths on ``grid`` as rows."""
    return gaussian_draws(gram_factor(grid, kernel), rng, n)


def gp_sample(grid, kernel, rng: np.random.Generator) -> np.ndarray:
    return gp_samples(grid, kernel, rng, 1)[0]


def series_amplitudes(terms: int = SERIES_TERMS) -> np.ndarray:
    j = np.arange(1, terms + 1)
    return np.sqrt(3.0) / j**2


def series_process_samples(grid, rng: np.random.Generator, n: int) -> np.ndarray:
    """Paths ``sum_j xi_j phi_j(t) / 20`` with ``xi_j ~ U[-sqrt(3) j^-2, sqrt(3) j^-2]``."""
    amp = series_amplitudes()
    xi = rng.uniform(-amp, amp, size=(n, amp.size))
    phi = basis_matrix(BasisSpec("fourier_raw", SERIES_TERMS), grid)
    return xi @ phi.T / SERIES_DIVISOR


def series_process_sample(grid, rng: np.random.Generator) -> np.ndarray:
    return series_process_samples(grid, rng, 1)[0]


def process_samples(kernel: CovKernel, grid, rng, n: int) -> np.ndarray:
    if kernel.kind == "series51":
        return series_process_samples(grid, rng, n)
    return gp_samples(grid, kernel, rng, n)


@dataclass(frozen=True)
class MeanFamily:
    id: str
    theta: float = 0.0
    k: int = 1

    def __post_init__(self):
        if self.id not in MEAN_FAMILIES:
            raise ValueError(f"unknown mean family {self.id!r}")


def _normal_pdf(t, a, b):
    return np.exp(-0.5 * ((t - a) / b) ** 2) / (b * math.sqrt(2.0 * math.pi))


def _m1_base(t):
    return 5.0 * (t - 0.5) ** 2


def _m1_shift(t):
    j = np.arange(1, 11)
    arg = 2.0 * np.pi * np.multiply.outer(t, j)
    return ((np.sin(arg) + np.cos(arg)) / j**2).sum(axis=-1) / 50.0


MEAN_FAMILIES = {
    "M1": (_m1_base, _m1_shift),
    "M2": (lambda t: np.ones_like(t), lambda t: np.full_like(t, 1.0 / 40.0)),
    "M3": (
        lambda t: -(_normal_pdf(t, 0.25, 0.1) + _normal_pdf(t, 0.75, 0.1)),
        lambda t: (1.0 + (10 * t - 2) * (10 * t - 5) * (10 * t - 8)) / 40.0,
    ),
    "M4": (
        lambda t: np.exp(np.sin(2.0 * np.pi * t)) / 2.0,
        lambda t: np.exp(-((t - 0.5) ** 2) / 100.0) / 25.0,
    ),
}


def mean_eval(family: MeanFamily, t):
    """``mu_0(t) + theta * k * shift(t)`` for the family."""
    base, shift = MEAN_FAMILIES[family.id]
    tt = np.asarray(t, dtype=np.float64)
    out = base(tt) + family.theta * family.k * shift(tt)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PoissonSpec:
    pattern: str  # "sparse" | "dense"
    theta: float
    p: int
    eta0: float = 1.0

    def __post_init__(self):
        if self.pattern not in ("sparse", "dense"):
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if self.p < 1:
            raise ValueError("p must be positive")

    def rates(self, k: int) -> np.ndarray:
        j = np.arange(1, self.p + 1)
        if self.pattern == "sparse":
            eta = (1.0 + self.theta * k) / j
        else:
            eta = 1.0 / j + self.theta * k / 2.0
        if np.any(eta < 0):
            raise ValueError(f"negative Poisson rate for group {k} at theta={self.theta}")
        return eta


def mv_poisson_samples(spec: PoissonSpec, k: int, rng: np.random.Generator, n: int) -> np.ndarray:
    """Rows ``(W0 + W1, ..., W0 + Wp)`` with independent Poisson components."""
    eta = spec.rates(k)
    w0 = rng.poisson(spec.eta0, size=(n, 1))
    w = rng.poisson(eta, size=(n, spec.p))
    return w0 + w


def mv_poisson_sample(spec: PoissonSpec, k: int, rng: np.random.Generator) -> np.ndarray:
    return mv_poisson_samples(spec, k, rng, 1)[0]


BALANCED = (50, 50, 50)
UNBALANCED = (30, 50, 70)


@dataclass(frozen=True)
class Scenario:
    """A full simulation recipe; ``sample`` produces one replicate's data."""

    name: str
    kind: str  # "fda" | "poisson" | "gaussian"
    n: tuple[int, ...]
    p: int
    theta: float = 0.0
    family: str | None = None
    covariance: str | None = None  # "common" | "specific"
    pattern: str | None = None
    m: int = GRID_POINTS
    basis: BasisSpec = BasisSpec()
    sd: tuple[float, ...] | None = None
    shift: float = 0.0
    config: TestConfig = field(default_factory=lambda: TestConfig(tau=0.8))
    reps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("replicate count must be positive")

    def with_theta(self, theta: float) -> "Scenario":
        return replace(self, theta=float(theta))

    def kernels(self) -> list[CovKernel]:
        if self.covariance == "common":
            return [CovKernel("matern")] * len(self.n)
        return [CovKernel("matern"), CovKernel("wiener"), CovKernel("series51")]

    def sample(self, rng: np.random.Generator):
        if self.kind == "fda":
            grid = unit_grid(self.m)
            groups = []
            for k, (nk, kern) in enumerate(zip(self.n, self.kernels()), start=1):
                mu = mean_eval(MeanFamily(self.family, self.theta, k), grid)
                groups.append(mu + process_samples(kern, grid, rng, nk))
            return CurveSet(grid, groups)
        if self.kind == "poisson":
            spec = PoissonSpec(self.pattern, self.theta, self.p)
            return Dataset([mv_poisson_samples(spec, k, rng, nk).astype(np.float64)
                            for k, nk in enumerate(self.n, start=1)])
        if self.kind == "gaussian":
            sd = np.asarray(self.sd)
            groups = []
            for k, nk in enumerate(self.n, start=1):
                x = rng.standard_normal((nk, self.p)) * sd
                if k == len(self.n):
                    x[:, 0] += self.shift * self.theta
                groups.append(x)
            return Dataset(groups)
        raise ValueError(f"unknown scenario kind {self.kind!r}")


_FDA_RE = re.compile(r"^fda-(M[1-4])-(common|specific)-(balanced|unbalanced)$")
_POIS_RE = re.compile(r"^pois-(sparse|dense)-p(25|100)-(balanced|unbalanced)$")


def scenario_names() -> list[str]:
    names = [f"fda-M{i}-{c}-{d}" for i in range(1, 5) for c in ("common", "specific")
             for d in ("balanced", "unbalanced")]
    names += [f"pois-{pat}-p{p}-{d}" for pat in ("sparse", "dense") for p in (25, 100)
              for d in ("balanced", "unbalanced")]
    return names


def scenario_build(name: str, **overrides) -> Scenario:
    if m := _FDA_RE.match(name):
        fam, cov, design = m.groups()
        sc = Scenario(name=name, kind="fda", n=BALANCED if design == "balanced" else UNBALANCED,
                      p=BasisSpec().p, family=fam, covariance=cov)
    elif m := _POIS_RE.match(name):
        pat, p, design = m.groups()
        sc = Scenario(name=name, kind="poisson", n=BALANCED if design == "balanced" else UNBALANCED,
                      p=int(p), pattern=pat)
    else:
        raise UnknownScenario(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}")
    return replace(sc, **overrides) if overrides else sc


def gaussian_shift_scenario(n: int = 200, p: int = 10, multiplier: float = 10.0, **overrides) -> Scenario:
    """Two Gaussian groups with decaying sds ``j^-1``; the first coordinate of group 2 moves by
    ``theta * multiplier * sd_max * sqrt(log n / n)``."""
    sd = tuple(1.0 / j for j in range(1, p + 1))
    shift = multiplier * max(sd) * math.sqrt(math.log(n) / n)
    sc = Scenario(name=f"gauss-shift-n{n}-p{p}", kind="gaussian", n=(n, n), p=p, theta=1.0,
                  sd=sd, shift=shift)
    return replace(sc, **overrides) if overrides else sc
