import numpy as np
import pytest

from conftest import random_reduced_params
from lgparasite.analysis import CaseLabel, Stability, classify, classify_case, find_equilibria
from lgparasite.errors import DomainError
from lgparasite.model import DiseaseParams
from lgparasite.reduction import ReducedParams, endemic_equilibrium
from lgparasite.experiments import (UNRESOLVED, basin_grid, bifurcation_scan, case_sequence,
                                    correspondence_check, iterate_many, match_equilibria,
                                    random_interior_states, simulate_full_orbit, simulate_orbit)

C0_PARAMS = ReducedParams.from_leslie_gower([4.0, 2.0], [[1.0, 0.5], [1.0, 1.0]])
B1_PARAMS = ReducedParams.from_leslie_gower([2.0, 2.0], [[0.5, 1.0], [1.0, 0.5]])

# Reduced systems with two or three positive equilibria, found by random search.
MULTI = {
    CaseLabel.A3: ReducedParams(0.57, [4.75, 5.8], [0.7, 2.34], [[0.85, 2.41], [4.94, 2.62]],
                                [[3.77, 0.38], [0.17, 3.52]]),
    CaseLabel.C2: ReducedParams(0.064, [4.5, 1.63], [5.68, 6.77], [[3.59, 0.57], [4.0, 4.2]],
                                [[1.39, 4.87], [1.72, 1.32]]),
    CaseLabel.D2: ReducedParams(0.59, [8.22, 6.99], [1.96, 1.35], [[1.72, 0.97], [3.03, 0.48]],
                                [[3.39, 3.94], [0.25, 4.44]]),
}


class TestOrbit:
    def test_origin(self, fig2_rp):
        orbit = simulate_orbit(fig2_rp, (0, 0))
        assert orbit.limit == (0, 0) and orbit.iterations == 0

    def test_axis_goes_to_semitrivial(self, fig2_rp):
        e1 = find_equilibria(fig2_rp).by_name("E1").location
        orbit = simulate_orbit(fig2_rp, (0.3, 0))
        assert orbit.limit == pytest.approx(e1, abs=1e-9)
        assert orbit.limit[1] == 0

    @pytest.mark.parametrize("x0,name", [((20.0, 0.5), "E1"), ((0.3, 12.0), "E2"), ((3.0, 3.0), "E4")])
    def test_fig2_basins(self, fig2_rp, x0, name):
        orbit = simulate_orbit(fig2_rp, x0)
        target = find_equilibria(fig2_rp).by_name(name).location
        assert orbit.converged
        assert orbit.limit == pytest.approx(target, abs=1e-6)

    def test_limit_is_fixed(self, fig2_rp):
        orbit = simulate_orbit(fig2_rp, (3.0, 3.0), tol=1e-12)
        from lgparasite.analysis import reduced_step
        y = reduced_step(fig2_rp, orbit.limit)
        assert max(abs(a - b) for a, b in zip(y, orbit.limit)) <= 1e-12

    def test_eventual_monotonicity(self, fig2_rp):
        orbit = simulate_orbit(fig2_rp, (3.0, 3.0), keep_full=True)
        tail = np.array(orbit.samples[orbit.monotone_from:])
        for c in range(2):
            d = np.diff(tail[:, c])
            d = d[np.abs(d) > 1e-12]
            assert np.all(d > 0) or np.all(d < 0)

    def test_thinning(self):
        slow = ReducedParams.from_leslie_gower([1.001, 1.001], [[1.0, 0.5], [0.5, 1.0]])
        orbit = simulate_orbit(slow, (0.5, 0.1), max_iter=3050)
        assert not orbit.converged
        assert orbit.sample_index[:1001] == list(range(1001))
        assert orbit.sample_index[1001:] == list(range(1100, 3001, 100)) + [3050]

    def test_not_converged(self, fig2_rp):
        orbit = simulate_orbit(fig2_rp, (3.0, 3.0), max_iter=5)
        assert not orbit.converged and orbit.limit is None

    def test_bad_input(self, fig2_rp):
        with pytest.raises(DomainError):
            simulate_orbit(fig2_rp, (-1, 1))

    def test_limits_are_equilibria(self, rng):
        for rp in random_reduced_params(rng, 40):
            X0 = random_interior_states(rng, 50, rp.trapping_box())
            limits, ok = iterate_many(rp, X0, max_iter=200_000)
            eqs = find_equilibria(rp)
            labels = match_equilibria(limits, ok, eqs)
            assert np.all(labels[ok] != UNRESOLVED)


class TestBasins:
    def test_c0_single_basin(self):
        grid = basin_grid(C0_PARAMS, (40, 40))
        e1 = [e.name for e in grid.equilibria].index("E1")
        assert np.all(grid.labels == e1)

    def test_b1_two_basins(self):
        grid = basin_grid(B1_PARAMS, (41, 40))
        names = [e.name for e in grid.equilibria]
        counts = grid.counts()
        assert counts["E1"] > 0 and counts["E2"] > 0
        assert counts["E1"] + counts["E2"] + counts["unresolved"] == 41 * 40
        # anything unresolved sits on the diagonal separatrix of this symmetric system
        xs, ys = grid.cell_centres()
        rows, cols = np.nonzero(grid.labels == UNRESOLVED)
        cell = max(xs[1] - xs[0], ys[1] - ys[0])
        assert np.all(np.abs(xs[cols] - ys[rows]) <= cell)
        assert set(np.unique(grid.labels)) <= {UNRESOLVED, names.index("E1"), names.index("E2")}

    def test_zero_resolution(self, fig2_rp):
        with pytest.raises(DomainError):
            basin_grid(fig2_rp, (0, 10))

    def test_fig2_three_basins(self, fig2_rp):
        grid = basin_grid(fig2_rp, (60, 60))
        counts = grid.counts()
        assert counts["E1"] > 0 and counts["E2"] > 0 and counts["E4"] > 0
        assert counts["E3"] == counts["E5"] == counts["E0"] == 0

    def test_parallel_matches_serial(self, fig2_rp):
        serial = basin_grid(fig2_rp, (30, 24))
        parallel = basin_grid(fig2_rp, (30, 24), workers=3)
        np.testing.assert_array_equal(serial.labels, parallel.labels)

    def test_resolution_doubling(self, fig2_rp):
        coarse = basin_grid(fig2_rp, (30, 30))
        fine = basin_grid(fig2_rp, (60, 60))
        # coarse centres coincide with no fine centre, so compare fine cells
        # against the coarse cell containing them, away from basin edges
        up = np.kron(coarse.labels, np.ones((2, 2), dtype=int))
        disagree = np.argwhere(up != fine.labels)
        # the axes belong to the semitrivial basins, so they count as edges
        L = np.pad(coarse.labels, 1, mode="edge")
        L[0, :] = L[:, 0] = -2
        for r, c in disagree:
            R, C = r // 2 + 1, c // 2 + 1
            assert len(np.unique(L[R - 1:R + 2, C - 1:C + 2])) > 1


class TestSaddles:
    @pytest.mark.parametrize("label", list(MULTI))
    def test_no_saddle_captures(self, label, rng):
        rp = MULTI[label]
        assert classify_case(rp) is label
        self._check(rp, rng)

    def test_no_saddle_captures_fig2(self, fig2_rp, rng):
        self._check(fig2_rp, rng)

    @staticmethod
    def _check(rp, rng):
        eqs = find_equilibria(rp)
        X0 = random_interior_states(rng, 1000, rp.trapping_box())
        limits, ok = iterate_many(rp, X0, max_iter=200_000)
        labels = match_equilibria(limits, ok, eqs)
        assert np.all(labels != UNRESOLVED)
        hit = {eqs[k].stability for k in labels}
        assert hit <= {Stability.ATTRACTING}


class TestBifurcation:
    def test_fig3_column(self, fig3_demography):
        nu = np.round(np.arange(0.999, 0.0, -0.001), 6)
        scan = bifurcation_scan(fig3_demography, nu, "bS1", [16.0])
        cases, transitions = case_sequence(scan.column(0), scan.nu_axis)
        assert [c.value for c in cases] == ["B1", "C0", "C2", "A1", "D2", "D0"]
        assert all(a > b for a, b in zip(transitions, transitions[1:]))

    def test_shape_and_row(self, fig3_demography):
        scan = bifurcation_scan(fig3_demography, [0.9, 0.5], "bS1", [4.0, 10.0, 19.0])
        assert len(scan.labels) == 2 and all(len(r) == 3 for r in scan.labels)
        assert scan.row(0) == [scan.labels[0][b] for b in range(3)]

    def test_reproducible_and_direction_free(self, fig3_demography):
        nu = np.linspace(0.95, 0.05, 19)
        a = bifurcation_scan(fig3_demography, nu, "bS1", [5.0, 15.6])
        b = bifurcation_scan(fig3_demography, nu, "bS1", [5.0, 15.6], workers=2)
        c = bifurcation_scan(fig3_demography, nu[::-1], "bS1", [15.6, 5.0])
        assert a.labels == b.labels
        assert [list(r) for r in a.labels] == [list(r)[::-1] for r in c.labels[::-1]]

    def test_bad_param(self, fig3_demography):
        with pytest.raises(DomainError):
            bifurcation_scan(fig3_demography, [0.5], "bogus", [1.0])

    def test_bad_nu(self, fig3_demography):
        with pytest.raises(DomainError):
            bifurcation_scan(fig3_demography, [1.0], "bS1", [10.0])

    def test_case_sequence(self):
        cases, trans = case_sequence(["a", "a", "b", "b", "c"], [5, 4, 3, 2, 1])
        assert cases == ["a", "b", "c"] and trans == [3.5, 1.5]


class TestCorrespondence:
    def test_endemic_start(self, fig2_demography, fig2_disease, fig2_rp):
        e4 = find_equilibria(fig2_rp).by_name("E4").location
        x0 = endemic_equilibrium(fig2_disease, e4)
        gaps = [correspondence_check(fig2_demography, fig2_disease, k, x0).discrepancy
                for k in (5, 20, 100)]
        assert gaps[-1] < 1e-9
        assert gaps == sorted(gaps, reverse=True)

    def test_k_dependence(self, fig2_demography, fig2_disease, rng):
        X0 = random_interior_states(rng, 10, np.full(4, 3.0))
        low = correspondence_check(fig2_demography, fig2_disease, 5, X0)
        high = correspondence_check(fig2_demography, fig2_disease, 100, X0)
        for a, b in zip(low, high):
            if a.reduced_limit is not None and a.full_limit is not None:
                assert b.discrepancy <= a.discrepancy + 1e-12

    def test_totals_track_reduced(self, fig2_demography, fig2_disease, rng):
        X0 = random_interior_states(rng, 5, np.full(4, 3.0))
        for r in correspondence_check(fig2_demography, fig2_disease, 100, X0):
            assert r.totals_discrepancy < 1e-9
            assert r.passed

    def test_full_orbit(self, fig2_demography, fig2_disease):
        samples, index, limit = simulate_full_orbit(fig2_demography, fig2_disease, 50,
                                                    (1.0, 1.0, 1.0, 1.0))
        assert limit is not None and index[0] == 0 and len(samples) == len(index)

    def test_outside_omega(self, fig2_demography, fig2_disease):
        with pytest.raises(DomainError):
            correspondence_check(fig2_demography, fig2_disease, 10, (1.0, 0.0, 1.0, 0.0))
