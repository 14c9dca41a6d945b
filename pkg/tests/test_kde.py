import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from ghkernel.ghdist import NIG, FullGH, GaussianReduction, StudentT
from ghkernel.kde import DENSITY_FLOOR, GHKernelDensity, log_norm_const, scott_bandwidth
from ghkernel.kernels import Epanechnikov, Exponential, GaussianProfile, GHKernel, Tophat, log_sphere_area


def fitted(X, kernel=None, h=1.0, **kw):
    return GHKernelDensity(kernel, bandwidth=h, **kw).fit(np.asarray(X, dtype=float).reshape(len(X), -1))


def test_gaussian_profile_constant_1d():
    assert math.exp(log_norm_const(GaussianProfile(), 1)) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-10)
    assert math.exp(log_norm_const(GaussianProfile(), 1)) == pytest.approx(2.5066283, abs=1e-7)


def test_epanechnikov_constant_1d():
    assert math.exp(log_norm_const(Epanechnikov(), 1)) == pytest.approx(4 / 3, rel=1e-10)


@pytest.mark.parametrize("kernel", [GaussianProfile(), Epanechnikov(), Tophat(), Exponential()])
@pytest.mark.parametrize("d", [1, 2, 3, 5, 10, 41])
def test_quadrature_constant_matches_closed_form(kernel, d):
    assert log_norm_const(kernel, d) == pytest.approx(kernel.log_norm_const(d), abs=1e-6)


def test_sphere_area_small_dimensions():
    assert math.exp(log_sphere_area(1)) == pytest.approx(2.0)
    assert math.exp(log_sphere_area(2)) == pytest.approx(2 * math.pi)
    assert math.exp(log_sphere_area(3)) == pytest.approx(4 * math.pi)


def test_full_gh_constant_2d_against_monte_carlo():
    kernel = GHKernel(FullGH())
    quad = math.exp(log_norm_const(kernel, 2))
    # Importance sampling of 2 pi * int p(u) u du with a Gamma(2, 1) radial proposal.
    rng = np.random.default_rng(20240501)
    u = rng.gamma(2.0, 1.0, size=1_000_000)
    weights = np.exp(kernel.log_profile(u)) * u / stats.gamma.pdf(u, 2.0)
    mc = 2 * math.pi * weights.mean()
    assert mc == pytest.approx(quad, rel=5e-3)


def test_student_t_profile_integrability():
    log_norm_const(GHKernel(StudentT(3.0)), 3)
    with pytest.raises(ValueError, match="not integrable"):
        log_norm_const(GHKernel(StudentT(1.0)), 2)


def test_single_point_gaussian_peak():
    m = fitted([0.0], GaussianProfile(), 1.0)
    assert m.density([[0.0]])[0] == pytest.approx(0.3989423, abs=1e-7)


def test_tophat_two_points():
    m = fitted([0.0, 4.0], Tophat(), 1.0)
    assert math.exp(m.log_norm_const_) == pytest.approx(2.0)
    assert m.density([[0.0]])[0] == pytest.approx(0.25, rel=1e-12)


def test_gaussian_sample_peak():
    X = np.random.default_rng(0).normal(size=1000)
    m = fitted(X, GaussianProfile(), 0.3)
    assert m.density([[0.0]])[0] == pytest.approx(0.3989, rel=0.10)


def test_score_of_unit_density_is_zero():
    # Tophat at h = 0.5 in 1-D: one point gives density 1 / (0.5 * 2) = 1.
    m = fitted([0.0], Tophat(), 0.5)
    assert m.anomaly_score([[0.1]])[0] == pytest.approx(0.0, abs=1e-12)


def test_score_floor_outside_support():
    m = fitted([0.0], Tophat(), 1.0)
    assert m.density([[5.0]])[0] == 0.0
    assert m.anomaly_score([[5.0]])[0] == pytest.approx(-math.log(DENSITY_FLOOR))
    assert m.anomaly_score([[5.0]])[0] == pytest.approx(690.78, abs=0.01)


def test_score_orders_by_true_density():
    X = np.random.default_rng(1).normal(size=500)
    m = fitted(X, GHKernel(NIG()), 0.4)
    s = m.anomaly_score([[0.0], [4.0]])
    assert s[0] < s[1]


def test_threshold_symmetric_median():
    X = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    m = fitted(X, GaussianProfile(), 1.0)
    t = m.choose_threshold(0.5)
    assert t == pytest.approx(np.median(m.anomaly_score(X.reshape(-1, 1))))


def test_threshold_small_contamination_is_max():
    X = np.random.default_rng(2).normal(size=(50, 1))
    m = fitted(X, GaussianProfile(), 0.5)
    assert m.choose_threshold(1e-9) == pytest.approx(m.anomaly_score(X).max(), rel=1e-7)


def test_threshold_matches_normal_quantile():
    X = np.random.default_rng(3).normal(size=(1000, 1))
    m = fitted(X, GaussianProfile(), 0.3)
    t = m.choose_threshold(0.05)
    lo, hi = m.anomaly_score([[1.7], [2.3]])
    lo2, hi2 = m.anomaly_score([[-1.7], [-2.3]])
    assert min(lo, lo2) < t < max(hi, hi2)
    assert np.mean(m.predict(X) == -1) == pytest.approx(0.05, abs=0.002)


def test_threshold_errors():
    m = fitted([0.0, 1.0], GaussianProfile())
    with pytest.raises(ValueError, match="threshold"):
        m.predict([[0.0]])
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            m.choose_threshold(bad)


def test_contamination_parameter_sets_threshold():
    X = np.random.default_rng(4).normal(size=(200, 2))
    m = GHKernelDensity(GaussianProfile(), bandwidth=0.5, contamination=0.1).fit(X)
    assert m.threshold_ == pytest.approx(np.quantile(m.anomaly_score(X), 0.9))


def test_dimension_mismatch():
    m = fitted(np.zeros((3, 2)), GaussianProfile())
    with pytest.raises(ValueError, match="features"):
        m.density(np.zeros((1, 3)))


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_invalid_bandwidth(bad):
    with pytest.raises(ValueError, match="bandwidth"):
        fitted([0.0, 1.0], GaussianProfile(), bad)


def test_rejects_non_profile_kernel():
    from ghkernel.kernels import RBF

    with pytest.raises(ValueError, match="profile"):
        fitted([0.0, 1.0], RBF(1.0))


def test_scott_bandwidth():
    X = np.random.default_rng(5).normal(scale=2.0, size=(1000, 2))
    h = scott_bandwidth(X)
    assert h == pytest.approx(np.mean(X.std(axis=0, ddof=1)) * 1000 ** (-1 / 6))
    assert GHKernelDensity(GaussianProfile()).fit(X).bandwidth_ == pytest.approx(h)


def test_high_dimension_stays_finite():
    X = np.random.default_rng(6).normal(size=(100, 41))
    m = fitted(X, GHKernel(NIG()), 0.05)
    s = m.anomaly_score(X[:5] + 10)
    assert np.all(np.isfinite(s))
    assert np.all(s <= -math.log(DENSITY_FLOOR))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 30))
def test_permutation_invariance(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    Q = rng.normal(size=(7, 2))
    a = fitted(X, GHKernel(NIG()), 0.5).log_density(Q)
    b = fitted(X[rng.permutation(n)], GHKernel(NIG()), 0.5).log_density(Q)
    assert np.array_equal(a, b)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_nonnegative_and_score_monotone(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 2))
    m = fitted(X, Epanechnikov(), 0.8)
    Q = rng.normal(scale=2.0, size=(50, 2))
    dens = m.density(Q)
    assert np.all(dens >= 0)
    pos = dens > DENSITY_FLOOR
    order = np.argsort(dens[pos])
    assert np.all(np.diff(m.anomaly_score(Q)[pos][order]) <= 0)
    strict = np.diff(dens[pos][order]) > 0
    assert np.all(np.diff(m.anomaly_score(Q)[pos][order])[strict] < 0)


KERNELS = [
    GaussianProfile(),
    Epanechnikov(),
    Tophat(),
    Exponential(),
    GHKernel(FullGH()),
    GHKernel(NIG(2.0, 0.5)),
    GHKernel(GaussianReduction()),
    GHKernel(StudentT(5.0)),
]


@pytest.mark.parametrize("kernel", KERNELS, ids=lambda k: getattr(getattr(k, "variant", k), "tag", type(k).__name__))
@pytest.mark.parametrize("d", [1, 2, 3])
def test_density_integrates_to_one(kernel, d):
    rng = np.random.default_rng(100 + d)
    X = rng.normal(size=(60, d))
    h = 0.6
    m = fitted(X, kernel, h)
    # Heavy-tailed multivariate t proposal covers the exponential-type tails.
    proposal = stats.multivariate_t(loc=np.zeros(d), shape=4.0 * np.eye(d), df=3)
    Z = proposal.rvs(size=400_000, random_state=rng).reshape(-1, d)
    est = np.mean(np.exp(m.log_density(Z) - proposal.logpdf(Z)))
    assert est == pytest.approx(1.0, abs=0.02)


def test_consistency_mise_decreases():
    grid = np.linspace(-6, 6, 2001)
    truth = stats.norm.pdf(grid)
    mise = []
    for n in (500, 2000, 5000):
        errs = []
        for seed in range(3):
            X = np.random.default_rng(seed).normal(size=(n, 1))
            m = fitted(X, GHKernel(FullGH()), n ** (-0.2))
            errs.append(integrate.trapezoid((m.density(grid.reshape(-1, 1)) - truth) ** 2, grid))
        mise.append(np.mean(errs))
    assert mise[0] > mise[1] > mise[2]
