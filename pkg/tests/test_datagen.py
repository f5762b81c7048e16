import math

import numpy as np
import pytest
from scipy.special import gamma, kv

from hdmanova.datagen import (
    BALANCED,
    UNBALANCED,
    CovKernel,
    MeanFamily,
    PoissonSpec,
    gaussian_shift_scenario,
    gp_sample,
    gp_samples,
    gram_factor,
    matern_cov,
    mean_eval,
    mv_poisson_samples,
    scenario_build,
    scenario_names,
    series_amplitudes,
    series_process_sample,
    series_process_samples,
    unit_grid,
    wiener_cov,
)
from hdmanova.errors import UnknownScenario, UnsupportedSmoothness
from hdmanova.fanova import CurveSet
from hdmanova.stats import Dataset, psd_factor


def scipy_matern(d, var, eta, nu):
    if d == 0:
        return var / 16
    x = math.sqrt(2 * nu) * d / eta
    return var / 16 * 2 ** (1 - nu) / gamma(nu) * x**nu * kv(nu, x)


def test_matern_at_zero_distance():
    assert matern_cov(0.3, 0.3, 2.5, 1.0, 0.5) == pytest.approx(0.15625, rel=1e-15)


def test_matern_exponential_case():
    assert matern_cov(0.0, 1.0, 2.5, 1.0, 0.5) == pytest.approx(0.15625 * math.exp(-1), rel=1e-12)
    assert matern_cov(0.0, 1.0, 2.5, 1.0, 0.5) == pytest.approx(0.0574812, abs=1e-7)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5, 3.5, 5.5])
@pytest.mark.parametrize("d", [1e-6, 0.01, 0.3, 1.0, 4.0])
def test_matern_matches_bessel_oracle(nu, d):
    assert matern_cov(0.0, d, 2.5, 0.7, nu) == pytest.approx(scipy_matern(d, 2.5, 0.7, nu), rel=1e-8)


def test_matern_symmetric():
    rng = np.random.default_rng(0)
    s, t = rng.uniform(size=20), rng.uniform(size=20)
    np.testing.assert_array_equal(matern_cov(s, t, 2.5, 1.0, 1.5), matern_cov(t, s, 2.5, 1.0, 1.5))


@pytest.mark.parametrize("nu", [1.0, 0.3, 2.0])
def test_matern_unsupported_smoothness(nu):
    with pytest.raises(UnsupportedSmoothness):
        matern_cov(0.0, 1.0, 2.5, 1.0, nu)


def test_wiener_values():
    assert wiener_cov(0.0, 0.7) == 0.0
    assert wiener_cov(1.0, 1.0, 0.1) == pytest.approx(0.01)
    assert wiener_cov(0.5, 1.0, 0.1) == pytest.approx(0.005)
    assert wiener_cov(0.25, 0.5, 0.1) == pytest.approx(0.0025)


def test_gp_zero_kernel():
    def zero(s, t):
        return 0.0 * s * t

    assert np.all(gp_sample(unit_grid(10), zero, np.random.default_rng(0)) == 0)


def test_wiener_path_pinned_at_origin():
    rng = np.random.default_rng(1)
    paths = gp_samples(np.array([0.0, 0.5]), CovKernel("wiener"), rng, 100)
    assert np.all(paths[:, 0] == 0)


def test_matern_marginal_variance():
    paths = gp_samples(unit_grid(), CovKernel("matern"), np.random.default_rng(2), 100_000)
    assert paths.var(axis=0).mean() == pytest.approx(0.15625, rel=0.05)
    assert np.all(np.abs(paths.var(axis=0) / 0.15625 - 1) < 0.05)


@pytest.mark.parametrize("kernel", [CovKernel("matern"), CovKernel("wiener"),
                                    CovKernel("matern", smoothness=2.5)])
def test_gram_matrices_pass_psd_check(kernel):
    g = unit_grid()
    psd_factor(kernel(g[:, None], g[None, :]))
    f = gram_factor(g, kernel)
    gram = kernel(g[:, None], g[None, :])
    assert np.max(np.abs(f @ f.T - gram)) <= 1e-8 * (1 + np.abs(gram).max())


def test_series_coefficient_variance():
    rng = np.random.default_rng(3)
    amp = series_amplitudes()
    xi1 = rng.uniform(-amp[0], amp[0], size=100_000)
    assert xi1.var() == pytest.approx(1.0, rel=0.03)
    np.testing.assert_allclose((2 * amp) ** 2 / 12, np.arange(1, 52) ** -4.0)


def test_series_path_bound():
    bound = series_amplitudes().sum() / 20
    paths = series_process_samples(unit_grid(), np.random.default_rng(4), 5000)
    assert np.abs(paths).max() <= bound


class MidpointRng:
    def uniform(self, low, high, size=None):
        return np.broadcast_to((np.asarray(low) + np.asarray(high)) / 2, size)


def test_series_zero_stub():
    assert np.all(series_process_sample(unit_grid(), MidpointRng()) == 0)


@pytest.mark.parametrize("fam", ["M1", "M2", "M3", "M4"])
def test_mean_null_identical_across_groups(fam):
    t = unit_grid()
    vals = [mean_eval(MeanFamily(fam, 0.0, k), t) for k in (1, 2, 3)]
    np.testing.assert_array_equal(vals[0], vals[1])
    np.testing.assert_array_equal(vals[0], vals[2])


def test_mean_m2_value():
    assert mean_eval(MeanFamily("M2", 0.5, 2), 0.37) == pytest.approx(1.025)


def test_mean_m1_brute_sum():
    shift = 0.0
    for j in range(1, 11):
        shift += j**-2 * (math.sin(0.0) + math.cos(0.0)) / 50
    assert mean_eval(MeanFamily("M1", 0.5, 1), 0.0) == pytest.approx(1.25 + 0.5 * shift, rel=1e-14)


def test_mean_m3_m4_values():
    t = 0.3
    f = lambda a, b: math.exp(-((t - a) ** 2) / (2 * b * b)) / (b * math.sqrt(2 * math.pi))
    m3 = -(f(0.25, 0.1) + f(0.75, 0.1)) + 0.5 * 3 * (1 + (3 - 2) * (3 - 5) * (3 - 8)) / 40
    assert mean_eval(MeanFamily("M3", 0.5, 3), t) == pytest.approx(m3, rel=1e-12)
    m4 = math.exp(math.sin(2 * math.pi * t)) / 2 + 0.2 * 2 * math.exp(-((t - 0.5) ** 2) / 100) / 25
    assert mean_eval(MeanFamily("M4", 0.2, 2), t) == pytest.approx(m4, rel=1e-12)


def test_poisson_sparse_mean():
    x = mv_poisson_samples(PoissonSpec("sparse", 0.0, 5), 1, np.random.default_rng(5), 100_000)
    assert x[:, 0].mean() == pytest.approx(2.0, rel=0.02)
    assert x.dtype.kind == "i"


def test_poisson_shared_component_only():
    x = mv_poisson_samples(PoissonSpec("sparse", -1.0, 4), 1, np.random.default_rng(6), 1000)
    assert np.all(x == x[:, :1])


def test_poisson_dense_rate():
    spec = PoissonSpec("dense", 1.0, 3)
    assert spec.rates(3)[1] == pytest.approx(2.0)
    x = mv_poisson_samples(spec, 3, np.random.default_rng(7), 100_000)
    assert x[:, 1].mean() == pytest.approx(3.0, rel=0.02)


def test_poisson_cross_covariance_and_decay():
    spec = PoissonSpec("sparse", 0.5, 6)
    x = mv_poisson_samples(spec, 2, np.random.default_rng(8), 100_000).astype(float)
    c = np.cov(x.T)
    off = c[~np.eye(6, dtype=bool)]
    assert np.all(np.abs(off - 1.0) < 0.05)
    expected_var = 1 + (1 + 0.5 * 2) / np.arange(1, 7)
    assert np.all(np.diff(expected_var) < 0)
    np.testing.assert_allclose(np.diag(c), expected_var, rtol=0.05)


def test_poisson_negative_rates_rejected():
    with pytest.raises(ValueError):
        PoissonSpec("sparse", -1.0, 3).rates(2)


def test_scenario_catalog():
    assert len(scenario_names()) == 24
    sc = scenario_build("fda-M1-common-balanced")
    assert sc.n == BALANCED == (50, 50, 50) and sc.m == 100 and sc.basis.p == 51
    assert all(k.kind == "matern" for k in sc.kernels())
    assert scenario_build("fda-M1-common-unbalanced").n == UNBALANCED == (30, 50, 70)
    spec = scenario_build("fda-M3-specific-balanced")
    assert [k.kind for k in spec.kernels()] == ["matern", "wiener", "series51"]
    pois = scenario_build("pois-sparse-p25-balanced")
    assert (pois.p, pois.pattern, pois.kind) == (25, "sparse", "poisson")
    assert scenario_build("pois-dense-p100-unbalanced").p == 100


def test_unknown_scenario():
    with pytest.raises(UnknownScenario):
        scenario_build("fda-M5-common-balanced")


def test_scenarios_sample_shapes():
    rng = np.random.default_rng(9)
    curves = scenario_build("fda-M4-specific-unbalanced").sample(rng)
    assert isinstance(curves, CurveSet)
    assert [g.shape for g in curves.groups] == [(30, 100), (50, 100), (70, 100)]
    counts = scenario_build("pois-dense-p25-balanced").sample(rng)
    assert isinstance(counts, Dataset) and counts.p == 25 and counts.K == 3
    gs = gaussian_shift_scenario().sample(rng)
    assert gs.sizes == (200, 200) and gs.p == 10
