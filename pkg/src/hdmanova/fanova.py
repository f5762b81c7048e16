"""Functional ANOVA by projecting discretized curves onto a Fourier basis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, GridMismatch, GridTooCoarse, NonFiniteEntry
from .inference import TestConfig, TestResult, run_test
from .stats import Dataset

BASIS_FAMILIES = ("fourier_raw", "fourier_orthonormal")
DEFAULT_BASIS_SIZE = 51


@dataclass(frozen=True)
class BasisSpec:
    """Fourier basis ``1, sin(2 pi t), cos(2 pi t), sin(4 pi t), ...`` truncated to ``p`` terms.

    ``fourier_raw`` uses the functions as written (sin/cos have L2 norm
    ``1/sqrt(2)`` on [0, 1]); ``fourier_orthonormal`` rescales them by sqrt(2).
    """

    family: str = "fourier_raw"
    p: int = DEFAULT_BASIS_SIZE

    def __post_init__(self):
        if self.family not in BASIS_FAMILIES:
            raise ValueError(f"unknown basis family {self.family!r}")
        if self.p < 1:
            raise ValueError("basis size p must be at least 1")

    @property
    def max_frequency(self) -> int:
        return self.p // 2

    def to_dict(self) -> dict:
        return {"family": self.family, "p": self.p}


@dataclass(frozen=True)
class CurveSet:
    grid: np.ndarray
    groups: tuple[np.ndarray, ...]
    domain: tuple[float, float] | None = None

    def __init__(self, grid, groups: Sequence[np.ndarray], domain=None):
        object.__setattr__(self, "grid", np.asarray(grid, dtype=np.float64))
        object.__setattr__(self, "groups", tuple(np.asarray(g, dtype=np.float64) for g in groups))
        object.__setattr__(self, "domain", None if domain is None else (float(domain[0]), float(domain[1])))

    @property
    def interval(self) -> tuple[float, float]:
        return self.domain if self.domain is not None else (float(self.grid[0]), float(self.grid[-1]))

    def validate(self) -> "CurveSet":
        g = self.grid
        if g.ndim != 1 or g.size < 2:
            raise GridTooCoarse("grid needs at least 2 points")
        if np.any(np.diff(g) <= 0):
            raise GridMismatch("grid must be strictly increasing")
        a, b = self.interval
        if not (a < b and a <= g[0] and g[-1] <= b):
            raise GridMismatch(f"grid does not lie in the domain [{a}, {b}]")
        for i, y in enumerate(self.groups, start=1):
            if y.ndim != 2 or y.shape[1] != g.size:
                raise GridMismatch(f"group {i} has shape {y.shape}; expected (n, {g.size})")
            if not np.all(np.isfinite(y)):
                raise NonFiniteEntry(f"group {i} contains non-finite curve values")
        return self


def _unit(t, domain):
    a, b = domain
    return (np.asarray(t, dtype=np.float64) - a) / (b - a)


def basis_matrix(spec: BasisSpec, t, domain=(0.0, 1.0)) -> np.ndarray:
    """Basis values, shape ``(len(t), p)``; column ``i`` is the (i+1)-th basis function."""
    s = np.atleast_1d(_unit(t, domain))
    out = np.empty((s.size, spec.p))
    out[:, 0] = 1.0
    amp = np.sqrt(2.0) if spec.family == "fourier_orthonormal" else 1.0
    for i in range(1, spec.p):
        freq = (i + 1) // 2
        arg = 2.0 * np.pi * freq * s
        out[:, i] = amp * (np.sin(arg) if i % 2 == 1 else np.cos(arg))
    return out


def basis_eval(spec: BasisSpec, t: float, domain=(0.0, 1.0)) -> np.ndarray:
    return basis_matrix(spec, [t], domain)[0]


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def projection_matrix(spec: BasisSpec, grid, domain=None) -> np.ndarray:
    """Matrix ``P`` (m x p) with ``curves @ P`` = trapezoid coefficients in unit-interval time."""
    grid = np.asarray(grid, dtype=np.float64)
    domain = domain or (float(grid[0]), float(grid[-1]))
    if grid.size < 2 * spec.max_frequency:
        raise GridTooCoarse(
            f"{grid.size} grid points cannot resolve frequency {spec.max_frequency} "
            f"(need at least {2 * spec.max_frequency})"
        )
    w = trapezoid_weights(_unit(grid, domain))
    return w[:, None] * basis_matrix(spec, grid, domain)


def project_curves(curves: CurveSet, spec: BasisSpec) -> Dataset:
    curves.validate()
    proj = projection_matrix(spec, curves.grid, curves.interval)
    return Dataset([y @ proj for y in curves.groups])


def synthesize(coefs: np.ndarray, spec: BasisSpec, t, domain=(0.0, 1.0)) -> np.ndarray:
    return np.asarray(coefs) @ basis_matrix(spec, t, domain).T


def fanova_test(curves: CurveSet, spec: BasisSpec, config: TestConfig) -> TestResult:
    data = project_curves(curves, spec)
    if data.p != spec.p:
        raise DimensionMismatch("projection produced an unexpected dimension")
    result = run_test(data, config)
    result.extra["basis"] = spec.to_dict()
    return result
