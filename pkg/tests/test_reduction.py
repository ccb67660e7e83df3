import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lgparasite.analysis import reduced_map, reduced_step
from lgparasite.errors import DomainError, HypothesisError
from lgparasite.model import DemographyParams, DiseaseParams, demographic_step, disease_iterate
from lgparasite.reduction import (ReducedParams, certify_convergence, compute_nu,
                                  contraction_bound, endemic_equilibrium, fast_limit_map,
                                  linear_rate, reduce_params, reduce_params_at_nu)


class TestNu:
    def test_values(self):
        assert compute_nu(DiseaseParams.homogeneous(0.8, 0.4)) == 0.5
        assert compute_nu(DiseaseParams.homogeneous(1.0, 0.1)) == pytest.approx(0.1)
        assert 1 / compute_nu(DiseaseParams.homogeneous(1.0, 0.1)) == pytest.approx(10)

    def test_boundary_rejected(self):
        with pytest.raises(HypothesisError, match="Hypothesis 1 violated"):
            compute_nu(DiseaseParams.homogeneous(0.5, 0.5))

    def test_heterogeneous_rejected(self):
        with pytest.raises(HypothesisError, match="reduction requires homogeneous disease"):
            compute_nu(DiseaseParams([[0.8, 0.7], [0.8, 0.8]], 0.4))


class TestReduceParams:
    def test_fig2(self, fig2_demography, fig2_disease):
        rp = reduce_params(fig2_demography, fig2_disease)
        assert rp.rS[0] == pytest.approx(6.5, rel=1e-15)
        assert rp.rI[0] == pytest.approx(1.8, rel=1e-15)
        # focal-status-only coefficients collapse to the susceptible/infected rows
        np.testing.assert_allclose(rp.cS, [[0.9, 1.1], [6.0, 0.2]], rtol=1e-15)
        np.testing.assert_allclose(rp.cI, [[0.1, 5.0], [0.3, 0.8]], rtol=1e-15)

    def test_defining_formulas(self, fig3_demography):
        nu = 0.37
        rp = reduce_params_at_nu(fig3_demography, nu)
        c = fig3_demography.c
        for i in range(2):
            assert rp.rS[i] == pytest.approx(fig3_demography.bS[i] * nu, rel=1e-15)
            assert rp.rI[i] == pytest.approx(fig3_demography.bI[i] * (1 - nu), rel=1e-15)
            for j in range(2):
                assert rp.cS[i, j] == pytest.approx(nu * c[i, j, 0, 0] + (1 - nu) * c[i, j, 0, 1], rel=1e-15)
                assert rp.cI[i, j] == pytest.approx(nu * c[i, j, 1, 0] + (1 - nu) * c[i, j, 1, 1], rel=1e-15)

    def test_nu_to_one(self, fig3_demography):
        rp = reduce_params_at_nu(fig3_demography, 1.0)
        np.testing.assert_array_equal(rp.rS, fig3_demography.bS)
        np.testing.assert_array_equal(rp.rI, 0.0)
        np.testing.assert_array_equal(rp.cS, fig3_demography.c[:, :, 0, 0])
        np.testing.assert_array_equal(rp.cI, fig3_demography.c[:, :, 1, 0])
        assert rp.synthetic

    def test_nu_bounds(self, fig3_demography):
        for nu in (0.0, 1.2):
            with pytest.raises(DomainError):
                reduce_params_at_nu(fig3_demography, nu)

    def test_trapping_box(self, fig2_rp):
        np.testing.assert_allclose(fig2_rp.trapping_box(), [6.5 / 0.9 + 1.8 / 0.1, 1.7 / 0.2 + 4 / 0.8])


class TestEndemic:
    def test_examples(self):
        d = DiseaseParams.homogeneous(0.8, 0.4)
        assert endemic_equilibrium(d, (2, 2)) == (1, 1, 1, 1)
        assert endemic_equilibrium(d, (5, 0)) == (2.5, 2.5, 0, 0)
        d = DiseaseParams.homogeneous(0.6, 0.2)
        assert endemic_equilibrium(d, (3, 6)) == pytest.approx((1, 2, 2, 4), rel=1e-15)

    def test_fixed_point_of_disease_map(self):
        d = DiseaseParams.homogeneous(0.9, 0.3)
        x = endemic_equilibrium(d, (4.0, 7.0))
        np.testing.assert_allclose(disease_iterate(d, np.array(x), 1), x, rtol=1e-14)

    def test_fast_limit(self):
        d = DiseaseParams.homogeneous(0.8, 0.4)
        assert fast_limit_map(d, (2, 0, 0, 2)) == (1, 1, 1, 1)
        x = endemic_equilibrium(d, (3.0, 1.0))
        assert fast_limit_map(d, x) == x
        assert fast_limit_map(d, fast_limit_map(d, (5, 1, 2, 3))) == fast_limit_map(d, (5, 1, 2, 3))


class TestCertification:
    def test_bound(self):
        assert contraction_bound(DiseaseParams.homogeneous(0.8, 0.4)) == pytest.approx(0.6)

    def test_endemic_grid_is_exact(self):
        d = DiseaseParams.homogeneous(0.8, 0.4)
        grid = [endemic_equilibrium(d, (t1, t2)) for t1, t2 in [(1, 1), (2, 5), (8, 0.5)]]
        report = certify_convergence(d, grid, 20)
        assert max(report.sup_errors) <= 4 * np.finfo(float).eps * 8

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            certify_convergence(DiseaseParams.homogeneous(0.8, 0.4), [], 10)

    def test_decay(self, rng):
        d = DiseaseParams.homogeneous(0.8, 0.4)
        grid = rng.uniform(0, 5, (100, 4))
        report = certify_convergence(d, grid, 60)
        assert report.fitted_ratio <= 0.62
        assert report.conservation_error <= 1e-12
        assert report.sup_errors[-1] < 1e-10

    @staticmethod
    def _run(beta, gamma, seed):
        d = DiseaseParams.homogeneous(beta, gamma)
        grid = np.random.default_rng(seed).uniform(0.01, 10, (20, 4))
        rate = linear_rate(d)
        k_max = int(min(600, max(40, 40 / -np.log(rate))))
        return d, grid, certify_convergence(d, grid, k_max)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.05, 1.0), st.floats(0.02, 0.98), st.integers(0, 2**32 - 1))
    def test_eventually_monotone_at_linear_rate(self, beta, frac, seed):
        d, grid, report = self._run(beta, beta * frac, seed)
        errs = np.array(report.sup_errors)
        tail = errs[len(errs) // 2:]
        floor = 1e-12 * grid.sum(axis=1).max()
        assert np.all((np.diff(tail) <= 1e-15 * grid.max()) | (tail[1:] <= floor))
        if report.fitted_ratio > 0:
            assert report.fitted_ratio == pytest.approx(report.linear_rate, abs=0.02)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.05, 1.0), st.floats(0.02, 0.5), st.integers(0, 2**32 - 1))
    def test_within_contraction_bound_when_nu_at_most_half(self, beta, frac, seed):
        d, grid, report = self._run(beta, beta * frac, seed)
        assert report.fitted_ratio <= report.bound_c + 0.05

    def test_bound_exceeded_when_nu_above_half(self):
        # the infected fraction relaxes at 1 - beta + gamma = 0.875 > c = 0.625
        d, grid, report = self._run(0.5, 0.375, 0)
        assert report.bound_c == pytest.approx(0.625)
        assert report.fitted_ratio == pytest.approx(0.875, abs=1e-3)


class TestReducedIsSlowDynamics:
    def test_reduced_map_equals_demography_at_endemic(self, fig3_demography, rng):
        for beta, gamma in [(0.8, 0.4), (1.0, 0.1), (0.5, 0.45)]:
            d = DiseaseParams.homogeneous(beta, gamma)
            rp = reduce_params(fig3_demography, d)
            for n1, n2 in rng.uniform(0, 20, (200, 2)):
                y = demographic_step(fig3_demography, endemic_equilibrium(d, (n1, n2)))
                h = reduced_step(rp, (n1, n2))
                assert h[0] == pytest.approx(y[0] + y[1], rel=1e-12)
                assert h[1] == pytest.approx(y[2] + y[3], rel=1e-12)

    def test_leslie_gower_boundary(self, rng):
        b = np.array([3.0, 2.5])
        c = np.array([[1.0, 0.4], [0.7, 1.2]])
        rp = ReducedParams.from_leslie_gower(b, c)
        X = rng.uniform(0, 10, (100, 2))
        lg = b * X / (1 + X @ c.T)
        np.testing.assert_allclose(reduced_map(rp, X), lg, rtol=1e-14)
