import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ghkernel.ghdist import (
    NIG,
    FullGH,
    GaussianReduction,
    GHParams,
    Hyperbolic,
    InvalidParameterError,
    StudentT,
    UnsupportedVariantError,
    log_pdf,
    pdf_normalization_check,
    tail_decay_rate,
    variant_from_dict,
    variant_to_dict,
)
from ghkernel.quadrature import log_integrate
from ghkernel.specfun import log_bessel_k
from oracles import gh_log_pdf_mp

# oracles.gh_log_pdf_mp(0, lam=1, alpha=2, beta=0, delta=1, mu=0)
LOG_PDF_FULLGH_AT_MODE = -0.72607587799943141794


@st.composite
def gh_draws(draw):
    alpha = draw(st.floats(0.3, 4))
    beta = draw(st.floats(-0.9, 0.9)) * alpha
    return FullGH(
        lam=draw(st.floats(-3, 3)),
        alpha=alpha,
        beta=beta,
        delta=draw(st.floats(0.2, 3)),
        mu=draw(st.floats(-2, 2)),
    )


def test_gaussian_mode():
    assert log_pdf(GaussianReduction(1.0, 0.0), 0.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)


def test_full_gh_value_and_location_shift():
    v = FullGH(1, 2, 0, 1, 0).log_pdf(0.0)
    assert v == pytest.approx(LOG_PDF_FULLGH_AT_MODE, abs=1e-13)
    assert FullGH(1, 2, 0, 1, 3).log_pdf(3.0) == pytest.approx(v, abs=1e-14)


def test_unscaled_bessel_ratio_form_is_not_a_density():
    # Dividing by (q/alpha)^(lam-1/2) instead of multiplying breaks
    # normalization whenever lam != 1/2; this is why the code multiplies.
    p = GHParams(1.0, 2.0, 0.0, 1.0, 0.0)

    def divided(x):
        q = np.hypot(p.delta, x - p.mu)
        return (
            p.lam * math.log(p.gamma / p.delta)
            - 0.5 * math.log(2 * math.pi)
            - log_bessel_k(p.lam, p.delta * p.gamma)
            + log_bessel_k(p.lam - 0.5, p.alpha * q)
            - (p.lam - 0.5) * np.log(q / p.alpha)
        )

    total, _ = log_integrate(divided, 0.0, 0.5, -60.0, 60.0)
    assert abs(math.exp(total) - 1.0) > 0.1
    assert pdf_normalization_check(FullGH(1, 2, 0, 1, 0)) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(gh_draws(), st.floats(-20, 20))
def test_matches_independent_implementations(variant, x):
    p = variant.params
    expected = float(gh_log_pdf_mp(x, p.lam, p.alpha, p.beta, p.delta, p.mu))
    assert variant.log_pdf(x) == pytest.approx(expected, abs=1e-9 * max(1.0, abs(expected)))
    scipy_gh = stats.genhyperbolic(p.lam, p.alpha * p.delta, p.beta * p.delta, loc=p.mu, scale=p.delta)
    assert variant.log_pdf(x) == pytest.approx(scipy_gh.logpdf(x), abs=1e-7 * max(1.0, abs(expected)))


def test_nig_and_student_t_against_scipy():
    x = np.linspace(-15, 15, 61)
    nig = NIG(alpha=1.7, beta=-0.6, delta=0.8, mu=0.3)
    ref = stats.norminvgauss(1.7 * 0.8, -0.6 * 0.8, loc=0.3, scale=0.8).logpdf(x)
    np.testing.assert_allclose(nig.log_pdf(x), ref, rtol=1e-10, atol=1e-10)
    t = StudentT(df=2.5, loc=-1.0, scale=2.0)
    np.testing.assert_allclose(t.log_pdf(x), stats.t(2.5, -1.0, 2.0).logpdf(x), rtol=1e-12)


def test_named_variants_normalize():
    variants = [
        GaussianReduction(1.0, 0.0),
        FullGH(0.5, 1.5, 0.5, 1.0, 0.0),
        NIG(1.0, 0.0, 1.0, 0.0),
        Hyperbolic(2.0, -1.0, 0.5, 1.0),
        StudentT(3.0, 0.0, 1.0),
        StudentT(1.0, 2.0, 0.5),
    ]
    for v in variants:
        assert pdf_normalization_check(v) == pytest.approx(1.0, abs=1e-6), v
    assert pdf_normalization_check(GaussianReduction()) == pytest.approx(1.0, abs=1e-10)


def test_fixed_lambda_variants():
    assert NIG().params.lam == -0.5
    assert Hyperbolic().params.lam == 1.0
    assert NIG(2, 1, 1, 0).log_pdf(0.7) == FullGH(-0.5, 2, 1, 1, 0).log_pdf(0.7)


@pytest.mark.parametrize(
    "kwargs",
    [dict(alpha=-1.0), dict(delta=0.0), dict(alpha=1.0, beta=1.0), dict(alpha=1.0, beta=-1.5), dict(lam=math.nan)],
)
def test_invalid_parameters(kwargs):
    with pytest.raises(InvalidParameterError):
        FullGH(**kwargs)


def test_gamma_derived():
    p = GHParams(0.0, 2.0, 0.5, 1.0, 0.0)
    assert p.gamma == math.sqrt(4 - 0.25)


def test_tail_decay_rate():
    assert tail_decay_rate(FullGH(alpha=2, beta=0)) == 2.0
    assert tail_decay_rate(FullGH(alpha=2, beta=0.5)) == 1.5
    assert tail_decay_rate(NIG(alpha=3, beta=-1)) == 2.0
    with pytest.raises(UnsupportedVariantError):
        tail_decay_rate(StudentT())


@settings(max_examples=40, deadline=None)
@given(gh_draws(), st.floats(0, 30))
def test_skew_flip_symmetry(variant, t):
    p = variant.params
    flipped = FullGH(p.lam, p.alpha, -p.beta, p.delta, p.mu)
    x = p.mu + t
    assert flipped.log_pdf(2 * p.mu - x) == pytest.approx(variant.log_pdf(x), abs=1e-10)


def test_symmetric_when_unskewed():
    v = FullGH(0.3, 1.2, 0.0, 0.7, 1.5)
    t = np.linspace(0, 40, 81)
    np.testing.assert_allclose(v.log_pdf(1.5 + t), v.log_pdf(1.5 - t), rtol=0, atol=1e-12)


@pytest.mark.parametrize("variant", [FullGH(1.0, 2.0, 0.5, 1.0, 0.0), NIG(1.0, -0.4, 2.0, 0.0), Hyperbolic(3.0, 1.0, 0.5, 0.0)])
def test_log_density_slopes_approach_tail_rates(variant):
    p = variant.params
    t = 50.0 / p.alpha
    right = (variant.log_pdf(p.mu + 2 * t) - variant.log_pdf(p.mu + t)) / t
    left = (variant.log_pdf(p.mu - 2 * t) - variant.log_pdf(p.mu - t)) / t
    rate_r, rate_l = p.alpha - p.beta, p.alpha + p.beta
    assert right == pytest.approx(-rate_r, rel=0.05)
    assert left == pytest.approx(-rate_l, rel=0.05)


def test_finite_far_in_the_tails():
    assert np.all(np.isfinite(FullGH(2, 3, 1, 1, 0).log_pdf(np.array([-1e4, 1e4]))))


def test_window_matches_sizing_rule():
    v = FullGH(1.0, 2.0, 0.5, 1.0, 0.0)
    lo, hi = v.window(1e-12)
    reach = math.log(1e12) + 10
    assert lo == pytest.approx(-reach / 2.5 - 1.0)
    assert hi == pytest.approx(reach / 1.5 + 1.0)


def test_dict_round_trip():
    for v in [FullGH(0.2, 1.1, 0.3, 0.9, -1.0), NIG(), Hyperbolic(), GaussianReduction(2.0, 1.0), StudentT(4.0)]:
        assert variant_from_dict(variant_to_dict(v)) == v
    with pytest.raises(InvalidParameterError):
        variant_from_dict({"tag": "laplace"})
