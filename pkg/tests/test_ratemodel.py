import math

import numpy as np
import pytest

from burstlm import ratemodel
from burstlm.ratemodel import (
    NegBinParams,
    ParameterError,
    PointMassParams,
    PoissonParams,
    UnobservedEventError,
    build_profile,
    fit_rate,
    negbin_pmf,
    poisson_gamma_mixture_pmf,
    poisson_pmf,
    profile_from_weights,
)


class TestPoissonPmf:
    def test_known_value(self):
        # e^-2 * 2^3 / 3!, high-precision reference
        assert poisson_pmf(3, PoissonParams(2.0)) == pytest.approx(
            0.18044704431548359, abs=1e-12
        )
        assert poisson_pmf(0, PoissonParams(2.0)) == pytest.approx(
            0.13533528323661269, abs=1e-12
        )

    def test_sums_to_one(self):
        total = sum(poisson_pmf(x, PoissonParams(4.0)) for x in range(200))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_finite_at_extreme_counts(self):
        p = poisson_pmf(50000, PoissonParams(2.0))
        assert p == 0.0 or (0.0 < p < 1e-300)
        assert math.isfinite(ratemodel.poisson_log_pmf(50000, 2.0))

    def test_negative_count_is_impossible(self):
        assert poisson_pmf(-1, PoissonParams(2.0)) == 0.0

    def test_invalid_rate_rejected(self):
        with pytest.raises(ParameterError):
            PoissonParams(0.0)
        with pytest.raises(ParameterError):
            PoissonParams(-1.0)
        with pytest.raises(ParameterError):
            PoissonParams(float("nan"))


class TestNegBinPmf:
    def test_known_value(self):
        # x=0: (1+beta)^-alpha = 3^-1
        assert negbin_pmf(0, NegBinParams(1.0, 2.0)) == pytest.approx(1 / 3, abs=1e-14)

    def test_moments_by_direct_summation(self):
        for alpha, beta in [(0.5, 0.1), (2.0, 3.0), (5.0, 10.0)]:
            params = NegBinParams(alpha, beta)
            xs = np.arange(0, 200000)
            pmf = np.array([negbin_pmf(int(x), params) for x in range(2000)])
            # extend until mass is exhausted for the heavy case
            if pmf.sum() < 1 - 1e-10:
                pmf = np.exp(
                    [ratemodel.negbin_log_pmf(int(x), alpha, beta) for x in range(20000)]
                )
            xs = np.arange(pmf.size)
            mean = float((xs * pmf).sum())
            var = float((xs * xs * pmf).sum()) - mean * mean
            assert mean == pytest.approx(alpha * beta, rel=1e-9)
            assert var == pytest.approx(alpha * beta * (beta + 1), rel=1e-9)

    def test_matches_quadrature_mixture(self):
        # closed form vs direct integration over the gamma-distributed rate
        for alpha in (0.5, 2.0):
            for beta in (0.1, 1.0, 10.0):
                for x in (0, 1, 5, 20):
                    closed = negbin_pmf(x, NegBinParams(alpha, beta))
                    integrated = poisson_gamma_mixture_pmf(x, alpha, beta)
                    assert integrated == pytest.approx(closed, abs=1e-10)

    def test_poisson_limit_as_mixture_concentrates(self):
        # beta -> 0 at fixed mean: variance alpha*beta*(beta+1) -> mean
        lam = 2.0
        beta = 1e-4
        params = NegBinParams(alpha=lam / beta, beta=beta)
        worst = max(
            abs(negbin_pmf(x, params) - poisson_pmf(x, PoissonParams(lam)))
            for x in range(50)
        )
        assert worst < 1e-3

    def test_invalid_parameters_rejected(self):
        for alpha, beta in [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (1.0, -2.0)]:
            with pytest.raises(ParameterError):
                NegBinParams(alpha, beta)


class TestGammaPdf:
    def test_integrates_to_one(self):
        from scipy.integrate import quad

        total, _ = quad(lambda r: ratemodel.gamma_pdf(r, 2.0, 3.0), 0, np.inf)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_zero_boundary(self):
        assert ratemodel.gamma_pdf(0.0, 2.0, 1.0) == 0.0
        with pytest.raises(ParameterError):
            ratemodel.gamma_pdf(0.0, 0.5, 1.0)


class TestFitRate:
    def test_overdispersed_becomes_negbin(self):
        dist = fit_rate(mean=6.0, variance=24.0)
        assert isinstance(dist, NegBinParams)
        # moment inversion: beta = v/m - 1, alpha = m / beta
        assert dist.beta == pytest.approx(3.0, rel=1e-12)
        assert dist.alpha == pytest.approx(2.0, rel=1e-12)
        assert ratemodel.mean_of(dist) == pytest.approx(6.0, rel=1e-12)
        assert ratemodel.variance_of(dist) == pytest.approx(24.0, rel=1e-12)

    def test_equidispersed_stays_poisson(self):
        assert isinstance(fit_rate(2.0, 2.0), PoissonParams)
        # within the tolerance band, still Poisson
        assert isinstance(fit_rate(2.0, 2.0 * (1 + 1e-12)), PoissonParams)
        # just outside, negbin
        assert isinstance(fit_rate(2.0, 2.0 * (1 + 1e-6)), NegBinParams)

    def test_underdispersed_stays_poisson(self):
        dist = fit_rate(4.0, 1.0)
        assert isinstance(dist, PoissonParams)
        assert dist.lam == 4.0

    def test_missing_variance_gives_poisson(self):
        assert isinstance(fit_rate(3.0, None), PoissonParams)

    def test_forced_families(self):
        assert isinstance(fit_rate(2.0, 8.0, family="poisson"), PoissonParams)
        assert isinstance(fit_rate(2.0, 8.0, family="negbin"), NegBinParams)
        # forcing negbin without overdispersion has no valid solution
        assert isinstance(fit_rate(2.0, 1.0, family="negbin"), PoissonParams)

    def test_zero_mean_rejected(self):
        with pytest.raises(UnobservedEventError):
            fit_rate(0.0, 1.0)

    def test_bad_inputs_rejected(self):
        with pytest.raises(ParameterError):
            fit_rate(-1.0, 1.0)
        with pytest.raises(ParameterError):
            fit_rate(1.0, -1.0)
        with pytest.raises(ParameterError):
            fit_rate(1.0, 1.0, family="weibull")


class TestProfiles:
    def test_mass_renormalized_exactly(self):
        profile = build_profile(PoissonParams(2.0), 1000)
        assert float(profile.tail_mass[0]) == 1.0
        assert float(profile.theta.sum()) == pytest.approx(1.0, abs=1e-14)

    def test_suffix_sums_match_direct_slices(self):
        profile = build_profile(NegBinParams(0.7, 4.0), 500)
        theta = profile.theta
        k = np.arange(theta.size)
        for n in (0, 1, 5, 17, profile.support_end):
            assert float(profile.tail_mass[n]) == pytest.approx(
                float(theta[n:].sum()), rel=1e-12
            )
            assert float(profile.tail_first_moment[n]) == pytest.approx(
                float((k[n:] * theta[n:]).sum()), rel=1e-12
            )

    def test_mean_close_to_target_when_loss_tiny(self):
        profile = build_profile(PoissonParams(0.5), 1000)
        assert profile.truncation_loss < 1e-100
        assert profile.mean == pytest.approx(0.5, rel=1e-12)

    def test_truncation_loss_recorded_for_heavy_tail(self, caplog):
        import logging

        with caplog.at_level(logging.WARNING, logger="burstlm.ratemodel"):
            profile = build_profile(NegBinParams(0.1, 50.0), 20)
        assert profile.truncation_loss > 0.01
        assert "truncation" in caplog.text
        # renormalized mass is still exactly one
        assert float(profile.tail_mass[0]) == 1.0
        # truncated mean sits below the untruncated target
        assert profile.mean < profile.target_mean

    def test_underflow_everywhere_degrades_to_point_mass(self, caplog):
        import logging

        with caplog.at_level(logging.WARNING, logger="burstlm.ratemodel"):
            profile = build_profile(PoissonParams(50000.0), 100)
        assert profile.degenerate
        assert profile.pmf(100) == 1.0
        assert profile.mean == 100.0
        assert "point mass" in caplog.text

    def test_support_is_tight(self):
        profile = build_profile(PoissonParams(2.0), 50000)
        # arrays sized to the support, far smaller than the grid
        assert profile.support_end < 300
        assert profile.theta[profile.support_end] > 0.0

    def test_mass_below_complements_tail(self):
        profile = build_profile(PoissonParams(3.0), 1000)
        for n in (0, 1, 4, 50, 1001):
            below = profile.mass_below(n)
            j = min(n, profile.support_end + 1)
            assert below == pytest.approx(float(profile.theta[:j].sum()), abs=1e-12)

    def test_invalid_n_tokens(self):
        with pytest.raises(ParameterError):
            build_profile(PoissonParams(1.0), 0)

    def test_profile_from_weights(self):
        profile = profile_from_weights([2.0, 1.0, 1.0], n_tokens=10)
        assert float(profile.theta[0]) == pytest.approx(0.5, abs=1e-15)
        assert profile.mean == pytest.approx(0.75, rel=1e-12)
        with pytest.raises(ParameterError):
            profile_from_weights([], n_tokens=10)
        with pytest.raises(ParameterError):
            profile_from_weights([1.0, -0.5], n_tokens=10)
        with pytest.raises(ParameterError):
            profile_from_weights([0.0, 0.0], n_tokens=10)


class TestScaling:
    def test_poisson_rate_scales(self):
        scaled = ratemodel.scaled(PoissonParams(2.0), 2.5)
        assert isinstance(scaled, PoissonParams)
        assert scaled.lam == 5.0

    def test_negbin_scale_parameter_scales_shape_fixed(self):
        scaled = ratemodel.scaled(NegBinParams(1.5, 2.0), 3.0)
        assert isinstance(scaled, NegBinParams)
        assert scaled.alpha == 1.5
        assert scaled.beta == 6.0
        # mean scales linearly with length
        assert ratemodel.mean_of(scaled) == pytest.approx(1.5 * 2.0 * 3.0)

    def test_point_mass_rounds(self):
        scaled = ratemodel.scaled(PointMassParams(5), 0.5)
        assert scaled.value == 3  # 2.5 rounds half-up

    def test_bad_factor(self):
        with pytest.raises(ParameterError):
            ratemodel.scaled(PoissonParams(1.0), 0.0)
