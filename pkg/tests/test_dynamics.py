import math

import numpy as np
import pytest

from esdkit.dynamics import (
    ATOMS,
    PHOTONS,
    JCParams,
    ModeSubset,
    StarPropagator,
    WWModel,
    WWParams,
    bandwidth_threshold,
    concurrence_pair,
    detection_probability,
    detection_probability_quadrature,
    emission_linewidth,
    esb_birth_time,
    esb_birth_time_numeric,
    esd_death_time,
    esd_death_time_numeric,
    invariant_sigma,
    jc_esd_window_closed_form,
    jc_esd_window_numeric,
    jc_evolve_numeric,
    jc_state,
    partition_scan,
    scan_transition,
    spectrum,
    two_atom_ww_reduced,
    ww_four_qubit_state,
    ww_solve,
)
from esdkit.measures import concurrence_mixed, q_auxiliary
from esdkit.qcore import reduced_state

from oracles import jc_full_expm

FRAGILE = 2 * math.pi / 5


@pytest.fixture(scope="module")
def ww():
    return WWModel(WWParams(N=1000, Gamma=1.0, W=40.0))


@pytest.fixture(scope="module")
def ww_fine():
    return WWModel(WWParams(N=2000, Gamma=1.0, W=100.0))


class TestJC:
    @pytest.mark.parametrize("theta", [0.0, 0.4, math.pi / 2])
    def test_initial_state(self, theta):
        a = jc_state(theta, 0).amplitudes
        expected = np.zeros(16)
        expected[0], expected[10] = math.cos(theta), math.sin(theta)
        np.testing.assert_allclose(a, expected, atol=1e-15)

    def test_swap_to_photons(self):
        a = jc_state(math.pi / 4, math.pi / 2).amplitudes
        expected = np.zeros(16)
        expected[0], expected[5] = 1 / math.sqrt(2), -1 / math.sqrt(2)
        np.testing.assert_allclose(a, expected, atol=1e-15)
        assert concurrence_mixed(reduced_state(jc_state(math.pi / 4, math.pi / 2), PHOTONS)) == pytest.approx(1.0)

    def test_amplitudes(self):
        th, jt = 0.9, 0.35
        a = jc_state(th, jt).amplitudes
        s = math.sin(th)
        assert a[10] == pytest.approx(s * math.cos(jt) ** 2)
        assert a[5] == pytest.approx(-s * math.sin(jt) ** 2)
        assert a[6] == pytest.approx(-0.5j * s * math.sin(2 * jt))
        assert a[9] == pytest.approx(-0.5j * s * math.sin(2 * jt))

    def test_theta_range(self):
        with pytest.raises(ValueError):
            jc_state(-0.1, 0)
        with pytest.raises(ValueError):
            jc_state(2.0, 0)

    @pytest.mark.parametrize("theta,jt", [(math.pi / 3, 0.7), (math.pi / 4, math.pi / 4), (0.2, 2.9), (FRAGILE, 5.1)])
    def test_closed_form_matches_numeric_and_expm(self, theta, jt):
        closed = jc_state(theta, jt).amplitudes
        np.testing.assert_allclose(jc_evolve_numeric(theta, jt).amplitudes, closed, atol=1e-12)
        np.testing.assert_allclose(jc_full_expm(theta, jt), closed, atol=1e-10)

    def test_numeric_with_other_coupling(self):
        p = JCParams(J=2.5, E=3.0)
        np.testing.assert_allclose(
            jc_evolve_numeric(0.7, 0.4, p).amplitudes, jc_state(0.7, 1.0).amplitudes, atol=1e-12
        )

    def test_resonance_enforced(self):
        with pytest.raises(ValueError):
            JCParams(J=1, E=1, omega=2)
        with pytest.raises(ValueError):
            JCParams(J=0)

    def test_norm_drift(self):
        drift = max(abs(np.linalg.norm(jc_evolve_numeric(1.1, t).amplitudes) - 1) for t in np.linspace(0, 10 * math.pi, 201))
        assert drift < 1e-10

    def test_esd_window(self):
        lo, hi = jc_esd_window_closed_form(FRAGILE)
        assert lo == pytest.approx(0.6065268828685066, abs=1e-12)
        assert hi == pytest.approx(math.pi - lo, abs=1e-12)
        nlo, nhi = jc_esd_window_numeric(FRAGILE)
        assert nlo == pytest.approx(lo, abs=1e-6)
        assert nhi == pytest.approx(hi, abs=1e-6)
        inside = reduced_state(jc_state(FRAGILE, 1.5), ATOMS)
        assert concurrence_mixed(inside) == 0.0
        assert jc_esd_window_closed_form(math.pi / 5) is None
        assert jc_esd_window_numeric(math.pi / 5) is None

    def test_invariant(self):
        for th in (0.0, 0.3, math.pi / 4, FRAGILE):
            for jt in np.linspace(0, math.pi, 7):
                assert invariant_sigma(th, jt) == pytest.approx(math.sin(2 * th), abs=1e-12)


class TestWWSolve:
    def test_t0(self, ww):
        sol = ww.solve([0.0])
        assert sol.xi[0] == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(sol.lambdas[0])) < 1e-12

    def test_single_mode_rabi(self):
        prop = StarPropagator([0.0], [0.8])
        for t in (0.0, 0.5, 1.9, 4.0):
            assert prop.xi(t) == pytest.approx(math.cos(0.8 * t), abs=1e-12)
            assert abs(prop.amplitudes([t])[0, 1]) == pytest.approx(abs(math.sin(0.8 * t)), abs=1e-12)

    @pytest.mark.xfail(strict=True, reason="band-edge transient near t ~ 2/W peaks at 0.0206 for W = 40 Gamma")
    def test_exponential_decay_literal(self, ww):
        ts = np.linspace(0, 5, 5001)
        err = np.abs(np.abs(ww.solve(ts).xi) ** 2 - np.exp(-ts))
        assert err.max() < 0.02

    def test_exponential_decay_after_transient(self, ww):
        ts = np.linspace(0.2, 5, 4801)
        err = np.abs(np.abs(ww.solve(ts).xi) ** 2 - np.exp(-ts))
        assert err.max() < 0.02

    def test_exponential_decay_wide_band(self, ww_fine):
        ts = np.linspace(0, 5, 5001)
        err = np.abs(np.abs(ww_fine.solve(ts).xi) ** 2 - np.exp(-ts))
        assert err.max() < 0.01

    def test_norm_conservation(self, ww):
        sol = ww.solve(np.linspace(0, 20, 41))
        assert sol.norm_error() < 1e-9
        assert not sol.beyond_horizon

    def test_horizon_flag(self):
        sol = ww_solve(WWParams(N=50, W=5.0), [0.0, 100.0])
        assert sol.beyond_horizon

    def test_params_validation(self):
        with pytest.raises(ValueError):
            WWParams(N=1)
        with pytest.raises(ValueError):
            WWParams(W=0)
        p = WWParams(N=11, W=5.0, Gamma=2.0)
        assert p.spacing == pytest.approx(1.0)
        assert p.couplings[0] == pytest.approx(math.sqrt(2.0 / (2 * math.pi)))

    def test_solution_lookup(self, ww):
        sol = ww.solve([0.0, 1.0])
        assert sol.at(1.0)[0] == sol.xi[1]
        with pytest.raises(ValueError):
            sol.at(0.5)


class TestWWReduced:
    def test_t0_atoms_pure(self, ww):
        rho = two_atom_ww_reduced(FRAGILE, ww, ModeSubset.all_modes(ww.params), 0.0)
        expected = np.zeros(4)
        expected[0], expected[3] = math.cos(FRAGILE), math.sin(FRAGILE)
        np.testing.assert_allclose(rho.matrix, np.outer(expected, expected), atol=1e-12)

    def test_long_time_photons_only(self, ww):
        full = ModeSubset.all_modes(ww.params)
        assert concurrence_pair(FRAGILE, ww, full, 6.0, "photons") > 0
        assert concurrence_pair(FRAGILE, ww, full, 6.0, "atoms") == 0.0

    def test_small_subset_kills_photon_entanglement(self, ww):
        t = 10.0
        xi, lam = ww.amplitudes(t)
        sub = ModeSubset.window(ww.params, 0.5)
        assert sub.chi_sq(lam) < 1 - 1 / math.tan(FRAGILE)
        assert concurrence_pair(FRAGILE, ww, sub, t, "photons") == 0.0

    def test_bad_pair(self, ww):
        with pytest.raises(ValueError):
            two_atom_ww_reduced(FRAGILE, ww, ModeSubset.all_modes(ww.params), 0.0, pair="modes")

    def test_four_qubit_state_matches_jc_map(self):
        # with xi = cos Jt and chi = sin Jt the collective-mode state is the JC state up to phases
        jt = 0.8
        psi = ww_four_qubit_state(FRAGILE, math.cos(jt), math.sin(jt))
        ref = jc_state(FRAGILE, jt)
        for keep in (ATOMS, PHOTONS):
            assert q_auxiliary(reduced_state(psi, keep)) == pytest.approx(q_auxiliary(reduced_state(ref, keep)), abs=1e-12)

    def test_invariant(self, ww):
        for t in (0.0, 0.4, 1.3, 3.0, 5.0):
            assert invariant_sigma(FRAGILE, t, ww) == pytest.approx(math.sin(2 * FRAGILE), abs=1e-3)


class TestTiming:
    def test_death_values(self):
        assert esd_death_time(FRAGILE) == pytest.approx(-math.log(1 - 1 / math.tan(FRAGILE)), rel=1e-14)
        assert esd_death_time(FRAGILE) == pytest.approx(0.39292362664, abs=1e-10)
        assert esd_death_time(math.pi / 3) == pytest.approx(0.8612115025164907, abs=1e-12)
        assert esd_death_time(math.pi / 3, Gamma=2.0) == pytest.approx(0.8612115025164907 / 2, abs=1e-12)
        assert esd_death_time(math.pi / 4 + 1e-9) > 15
        assert esd_death_time(math.pi / 5) == math.inf

    def test_birth_values(self):
        assert esb_birth_time(FRAGILE) == pytest.approx(1.12417721570, abs=1e-10)
        assert esb_birth_time(math.pi / 2) == math.inf
        assert esb_birth_time(math.pi / 2 - 1e-9) > 15
        assert esb_birth_time(math.pi / 5) == 0.0

    def test_ordering_above_arctan2(self):
        for th in np.linspace(math.atan(2) + 1e-3, math.pi / 2 - 1e-3, 25):
            assert esd_death_time(th) < esb_birth_time(th)

    def test_ordering_reverses_below_arctan2(self):
        th = 0.3 * math.pi
        assert esb_birth_time(th) < esd_death_time(th)
        assert esd_death_time(math.atan(2)) == pytest.approx(esb_birth_time(math.atan(2)), abs=1e-12)

    @pytest.mark.parametrize("theta", [FRAGILE, 3 * math.pi / 8, 0.3 * math.pi])
    def test_numeric_within_two_percent(self, ww_fine, theta):
        td = esd_death_time_numeric(theta, ww_fine)
        tb = esb_birth_time_numeric(theta, ww_fine)
        assert td == pytest.approx(esd_death_time(theta), rel=0.02)
        assert tb == pytest.approx(esb_birth_time(theta), rel=0.02)

    def test_numeric_robust(self, ww):
        assert esd_death_time_numeric(math.pi / 5, ww) == math.inf
        assert esb_birth_time_numeric(math.pi / 5, ww) == 0.0


class TestSpectral:
    def test_spectrum(self):
        assert spectrum(0.3, 0.5, E=0.3) == pytest.approx(1 / (math.pi * 0.5))
        assert spectrum(1.7, 0.5, E=1.0) == pytest.approx(spectrum(0.3, 0.5, E=1.0))
        np.testing.assert_allclose(spectrum(np.array([0.0, 1.0]), 1.0), [1 / math.pi, 1 / (2 * math.pi)])
        with pytest.raises(ValueError):
            spectrum(0.0, 0.0)

    def test_quadrature_at_100(self):
        assert detection_probability_quadrature(100.0, 1.0) == pytest.approx(0.9936340144701836, abs=1e-9)

    def test_detection_probability(self):
        assert detection_probability(0.0, 1.0) == 0.0
        assert detection_probability(2.0, 2.0) == pytest.approx(0.5, abs=1e-15)
        assert detection_probability(1e12, 1.0) == pytest.approx(1.0, abs=1e-9)
        for r in (0.1, 1.0, 10.0):
            assert detection_probability(r, 1.0) == pytest.approx(detection_probability_quadrature(r, 1.0), abs=1e-6)
        with pytest.raises(ValueError):
            detection_probability(-1.0, 1.0)

    def test_bandwidth_threshold(self):
        assert bandwidth_threshold(math.pi / 4) == pytest.approx(0.0, abs=1e-14)
        assert bandwidth_threshold(3 * math.pi / 8) == pytest.approx(1.3136757077, abs=1e-9)
        assert bandwidth_threshold(FRAGILE) == pytest.approx(1.7861569409, abs=1e-9)
        with pytest.raises(ValueError):
            bandwidth_threshold(math.pi / 2)
        with pytest.raises(ValueError):
            bandwidth_threshold(0.5)

    def test_threshold_is_where_detection_reaches_one_minus_cot(self):
        for th in (3 * math.pi / 8, FRAGILE):
            p = detection_probability(bandwidth_threshold(th), 1.0)
            assert p == pytest.approx(1 - 1 / math.tan(th), abs=1e-12)

    def test_emission_linewidth(self):
        assert emission_linewidth(WWParams(Gamma=3.0)) == 1.5


class TestPartitionScan:
    def test_robust_always_positive(self, ww):
        rows = partition_scan(math.pi / 5, ww, np.linspace(0.1, 3, 15))
        assert all(r.c_pp > 0 for r in rows)

    def test_chi_monotone_and_complete(self, ww):
        rows = partition_scan(FRAGILE, ww, np.linspace(0, ww.params.W, 41))
        chis = [r.chi_sq for r in rows]
        assert np.all(np.diff(chis) >= -1e-15)
        t = 1.1 * -math.log(1e-4)
        xi, _ = ww.amplitudes(t)
        assert chis[-1] == pytest.approx(1 - abs(xi) ** 2, abs=1e-9)

    def test_chi_follows_lorentzian_weight(self, ww):
        rows = partition_scan(FRAGILE, ww, [0.5, 1.0, 2.0])
        for r in rows:
            assert r.chi_sq == pytest.approx(detection_probability(r.delta_nu, emission_linewidth(ww.params)), abs=0.02)

    def test_sharp_transition_at_emission_halfwidth(self, ww):
        # the window edge moves in jumps of the mode spacing, so resolution is step + spacing
        grid = np.linspace(0, 3, 31)
        for theta in (3 * math.pi / 8, FRAGILE):
            rows = partition_scan(theta, ww, grid)
            edge = scan_transition(rows)
            assert rows[0].c_pp == 0.0
            expected = bandwidth_threshold(theta) * emission_linewidth(ww.params)
            assert abs(edge - expected) <= grid[1] - grid[0] + ww.params.spacing

    def test_transition_helper(self):
        from esdkit.dynamics import ScanRow

        rows = [ScanRow(d, 0, c, c, 0) for d, c in [(0, 0), (1, 0.1), (2, 0), (3, 0.2), (4, 0.3)]]
        assert scan_transition(rows) == 3
        assert scan_transition(rows[:1]) is None

    def test_grid_rejected(self, ww):
        with pytest.raises(ValueError):
            partition_scan(FRAGILE, ww, [0.0, 50.0])
        with pytest.raises(ValueError):
            partition_scan(FRAGILE, ww, [-1.0])
        with pytest.raises(ValueError):
            ModeSubset.window(ww.params, 41.0)
