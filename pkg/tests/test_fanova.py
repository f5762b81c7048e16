import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdmanova.datagen import CovKernel, gp_samples, unit_grid
from hdmanova.errors import GridMismatch, GridTooCoarse, NonFiniteEntry
from hdmanova.fanova import (
    BasisSpec,
    CurveSet,
    basis_eval,
    basis_matrix,
    fanova_test,
    project_curves,
    projection_matrix,
    synthesize,
)
from hdmanova.inference import TestConfig
from hdmanova.stats import decay_diagnostic, derive_seed, group_summary, stream

RAW = BasisSpec()
ORTHO = BasisSpec("fourier_orthonormal")


def test_default_basis_size():
    assert RAW.p == 51 and RAW.max_frequency == 25 and RAW.family == "fourier_raw"


def test_basis_point_values():
    assert basis_eval(RAW, 0.3)[0] == 1.0
    assert basis_eval(RAW, 0.25)[1] == pytest.approx(1.0, abs=1e-15)
    assert basis_eval(RAW, 0.0)[2] == 1.0  # cos(0)
    assert basis_eval(ORTHO, 0.25)[1] == pytest.approx(np.sqrt(2))


def test_basis_frequency_layout():
    t = 0.13
    v = basis_eval(RAW, t)
    for j in range(1, 26):
        assert v[2 * j - 1] == pytest.approx(np.sin(2 * j * np.pi * t), abs=1e-14)
        assert v[2 * j] == pytest.approx(np.cos(2 * j * np.pi * t), abs=1e-14)


def test_orthonormal_unit_norm_by_quadrature():
    t = np.linspace(0, 1, 1000)
    phi2 = basis_matrix(ORTHO, t)[:, 1]
    assert np.trapezoid(phi2**2, t) == pytest.approx(1.0, abs=1e-3)


def test_domain_is_mapped():
    assert basis_eval(RAW, 3.5, domain=(2.0, 4.0))[1] == pytest.approx(-1.0)
    assert basis_eval(RAW, 2.5, domain=(2.0, 4.0))[1] == pytest.approx(1.0)


def _curves(y, grid=None):
    grid = unit_grid() if grid is None else grid
    return CurveSet(grid, [np.atleast_2d(y), np.atleast_2d(y)])


def test_project_constant_curve():
    u = project_curves(_curves(np.ones(100)), RAW).groups[0][0]
    assert u[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.abs(u[1:]) <= 1e-10)


def test_project_sine():
    t = unit_grid()
    u = project_curves(_curves(np.sin(2 * np.pi * t)), RAW).groups[0][0]
    assert u[1] == pytest.approx(0.5, abs=1e-3)


def test_project_zero_curve():
    u = project_curves(_curves(np.zeros(100)), RAW).groups[0]
    assert np.all(u == 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_projection_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    y1, y2 = rng.normal(size=(2, 3, 100))
    lhs = project_curves(CurveSet(unit_grid(), [a * y1 + b * y2]), RAW).groups[0]
    p1 = project_curves(CurveSet(unit_grid(), [y1]), RAW).groups[0]
    p2 = project_curves(CurveSet(unit_grid(), [y2]), RAW).groups[0]
    scale = 1 + np.abs(a * p1).max() + np.abs(b * p2).max()
    assert np.max(np.abs(lhs - (a * p1 + b * p2))) <= 1e-12 * scale


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        projection_matrix(RAW, np.linspace(0, 1, 49))
    projection_matrix(RAW, np.linspace(0, 1, 50))


def test_curve_validation():
    with pytest.raises(GridMismatch):
        project_curves(CurveSet(unit_grid(), [np.zeros((2, 99))]), RAW)
    bad = np.zeros((2, 100))
    bad[0, 3] = np.nan
    with pytest.raises(NonFiniteEntry):
        project_curves(CurveSet(unit_grid(), [bad]), RAW)
    with pytest.raises(GridMismatch):
        project_curves(CurveSet(unit_grid()[::-1], [np.zeros((2, 100))]), RAW)


def test_band_limited_round_trip():
    rng = np.random.default_rng(11)
    grid = np.linspace(0, 1, 400)
    coefs = rng.normal(size=ORTHO.p) / np.arange(1, ORTHO.p + 1)
    y = synthesize(coefs, ORTHO, grid)
    u = project_curves(CurveSet(grid, [y[None, :]]), ORTHO).groups[0][0]
    np.testing.assert_allclose(u, coefs, atol=1e-3)
    np.testing.assert_allclose(synthesize(u, ORTHO, grid), y, atol=1e-3)


def test_coefficient_variance_decays():
    paths = gp_samples(unit_grid(), CovKernel("matern"), np.random.default_rng(12), 300)
    data = project_curves(CurveSet(unit_grid(), [paths]), RAW)
    assert decay_diagnostic([group_summary(data.groups[0])])[0] > 0


def _noisy_constant(rng, shift=0.0, n=30, noise=0.01):
    grid = unit_grid()
    groups = [1.0 + noise * rng.normal(size=(n, grid.size)) for _ in range(3)]
    groups[2] = groups[2] + shift
    return CurveSet(grid, groups)


@pytest.mark.slow
def test_fanova_null_size():
    # white noise has no variance decay; the size is close to nominal only for large n
    rejections = 0
    for r in range(500):
        curves = _noisy_constant(stream(77, r), n=200)
        cfg = TestConfig(tau=0.8, seed=derive_seed(77, 1, r))
        rejections += fanova_test(curves, RAW, cfg).reject
    assert abs(rejections / 500 - 0.05) <= 0.02


def test_fanova_consistency():
    res = fanova_test(_noisy_constant(np.random.default_rng(13), shift=0.1), RAW, TestConfig(tau=0.8))
    assert res.reject and res.p_value == 0.0
    assert res.extra["basis"] == {"family": "fourier_raw", "p": 51}
    assert res.to_dict()["basis"]["p"] == 51
