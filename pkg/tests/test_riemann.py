import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twophase1d import (NON_CLASSICAL, OPTIMAL_ENTROPY, CouplingMode,
                        DomainError, RegimeError, entropy_interface_flux,
                        godunov_flux, nonclassical_interface_flux,
                        oleinik_check, solve_riemann)
from twophase1d.riemann import (demand_flux, godunov_flux_batch,
                                riemann_case_table, supply_flux)

Q = 0.25
U1S, U2S = 0.25, 0.125


def f1(u):
    return Q * u + u * (1.0 - u)


def f2(u):
    return Q * u + 2.0 * u * (1.0 - u)


def brute_godunov(f, a, b, n=100_000):
    """Grid-search oracle for one-sided extrema."""
    lo, hi = min(a, b), max(a, b)
    s = np.linspace(lo, hi, n)
    return np.min(f(s)) if a <= b else np.max(f(s))


def case_b_trace():
    """Closed-form root of 2u^2 - 2.25u + 0.115 = 0 on the rising branch."""
    return (2.25 - math.sqrt(2.25 ** 2 - 8.0 * 0.115)) / 4.0


class TestGodunovFlux:
    def test_degenerate_interval(self, tf1):
        assert godunov_flux(tf1, 1, 0.3, 0.3) == tf1.flux(1, 0.3)

    def test_interior_maximum(self, tf1):
        # max of f_1 on [0.3, 0.8] at the vertex u = 0.625
        assert godunov_flux(tf1, 1, 0.8, 0.3) == pytest.approx(0.390625,
                                                               abs=1e-12)
        assert brute_godunov(f1, 0.8, 0.3) == pytest.approx(0.390625,
                                                            abs=1e-9)

    def test_right_endpoint_minimum(self, tf1):
        assert godunov_flux(tf1, 1, 0.5, 1.0) == pytest.approx(Q, abs=1e-12)

    def test_domain_error(self, tf1):
        with pytest.raises(DomainError):
            godunov_flux(tf1, 1, -0.2, 0.5)

    def test_brute_force_equivalence(self, tf1, rng):
        for side, f in ((1, f1), (2, f2)):
            pairs = rng.uniform(0, 1, (100, 2))
            for a, b in pairs:
                assert godunov_flux(tf1, side, a, b) == pytest.approx(
                    brute_godunov(f, a, b), abs=1e-8)

    def test_monotone(self, tf1, rng):
        a = rng.uniform(0, 1, 1000)
        b = rng.uniform(0, 1, 1000)
        da = np.minimum(a + 1e-3, 1.0)
        db = np.minimum(b + 1e-3, 1.0)
        base = godunov_flux_batch(tf1, 1, a, b)
        assert np.all(godunov_flux_batch(tf1, 1, da, b) >= base - 1e-12)
        assert np.all(godunov_flux_batch(tf1, 1, a, db) <= base + 1e-12)

    @settings(max_examples=60, deadline=None)
    @given(a=st.floats(min_value=0, max_value=1),
           b=st.floats(min_value=0, max_value=1))
    def test_batch_matches_scalar(self, a, b):
        from twophase1d import FluxModel

        model = FluxModel.preset("TF1")
        scalar = godunov_flux(model, 2, a, b)
        batch = float(godunov_flux_batch(model, 2, np.array([a]),
                                         np.array([b]))[0])
        assert batch == pytest.approx(scalar, abs=1e-10)


class TestNonClassicalFlux:
    def test_saturated_ghost_values(self, tf1):
        assert nonclassical_interface_flux(tf1, 0.5) == pytest.approx(
            Q, abs=1e-12)
        assert nonclassical_interface_flux(tf1, 0.1) == pytest.approx(
            0.115, abs=1e-12)

    def test_zero_flow_rate_traps(self, tf1_q0, rng):
        for u in rng.uniform(0, 1, 20):
            assert nonclassical_interface_flux(tf1_q0, u) == 0.0

    def test_min_identity_sampled(self, tf1):
        for u in np.linspace(0, 1, 101):
            assert nonclassical_interface_flux(tf1, u) == pytest.approx(
                min(f1(u), Q), abs=1e-10)


class TestEntropyFlux:
    def test_demand_limited(self, tf1):
        assert entropy_interface_flux(tf1, 0.5, 0.05) == pytest.approx(
            0.375, abs=1e-12)

    def test_rising_branch(self, tf1):
        assert entropy_interface_flux(tf1, 0.1, 0.05) == pytest.approx(
            0.115, abs=1e-12)

    def test_empty_demand(self, tf1, rng):
        for ur in rng.uniform(0, 1, 10):
            assert entropy_interface_flux(tf1, 0.0, ur) == 0.0

    def test_never_below_trapping_flux(self, tf1, rng):
        pairs = rng.uniform(0, 1, (200, 2))
        for a, b in pairs:
            oe = entropy_interface_flux(tf1, a, b)
            nc = nonclassical_interface_flux(tf1, a)
            assert oe >= nc - 1e-12

    def test_demand_supply_oracle(self, tf1, rng):
        for a, b in rng.uniform(0, 1, (50, 2)):
            d = np.max(f1(np.linspace(0, a, 20001))) if a > 0 else 0.0
            s = np.max(f2(np.linspace(b, 1, 20001)))
            assert entropy_interface_flux(tf1, a, b) == pytest.approx(
                min(d, s), abs=1e-8)


class TestSolveRiemann:
    @pytest.mark.parametrize("ul,ur,case,u1,u2,flux", [
        (0.5, 0.5, "a", 1.0, U2S, Q),
        (0.1, 0.05, "b", 0.1, case_b_trace(), 0.115),
        (0.5, 1.0, "c", 1.0, 1.0, Q),
        (0.25, 1.0, "d", U1S, 1.0, Q),
        (0.5, 0.05, "e", 1.0, U2S, Q),
        (0.1, 0.9, "f", 0.1, case_b_trace(), 0.115),
    ])
    def test_regime_table(self, tf1, ul, ur, case, u1, u2, flux):
        tr = solve_riemann(tf1, NON_CLASSICAL, ul, ur)
        assert tr.case_label == case
        assert tr.u1 == pytest.approx(u1, abs=1e-10)
        assert tr.u2 == pytest.approx(u2, abs=1e-10)
        assert tr.interface_flux == pytest.approx(flux, abs=1e-10)

    def test_rankine_hugoniot(self, tf1, rng):
        for ul, ur in rng.uniform(0, 1, (100, 2)):
            tr = solve_riemann(tf1, NON_CLASSICAL, ul, ur)
            assert f1(tr.u1) == pytest.approx(f2(tr.u2), abs=1e-10)
            assert 0.0 <= tr.u1 <= 1.0 and 0.0 <= tr.u2 <= 1.0

    def test_case_label_total_function(self, tf1, rng):
        """The label depends only on the regime of (ul, ur)."""
        for ul, ur in rng.uniform(0, 1, (200, 2)):
            tr = solve_riemann(tf1, NON_CLASSICAL, ul, ur)
            if ul > U1S:
                expected = "c" if ur == 1.0 else ("a" if ur >= U2S else "e")
            elif ur == 1.0 and ul == U1S:
                expected = "d"
            else:
                expected = "f" if ur > U2S else "b"
            assert tr.case_label == expected

    def test_undercompressive_classification(self, tf1):
        for ul, ur in ((0.5, 0.5), (0.9, 0.02), (0.3, 0.125)):
            tr = solve_riemann(tf1, NON_CLASSICAL, ul, ur)
            assert tr.case_label in ("a", "e")
            assert tr.classification == "non_classical_undercompressive"

    def test_small_data_classical(self, tf1):
        tr = solve_riemann(tf1, NON_CLASSICAL, 0.1, 0.05)
        assert tr.classification == "classical"

    def test_optimal_entropy_small_data(self, tf1):
        nc = solve_riemann(tf1, NON_CLASSICAL, 0.1, 0.05)
        oe = solve_riemann(tf1, OPTIMAL_ENTROPY, 0.1, 0.05)
        assert oe.u1 == nc.u1 and oe.u2 == nc.u2
        assert oe.interface_flux == nc.interface_flux

    def test_optimal_entropy_large_data_refused(self, tf1):
        with pytest.raises(RegimeError):
            solve_riemann(tf1, OPTIMAL_ENTROPY, 0.5, 0.05)

    def test_prescribed_flux_refused(self, tf1):
        with pytest.raises(RegimeError):
            solve_riemann(tf1, CouplingMode.prescribed_flux(0.1), 0.5, 0.5)


class TestOleinikCheck:
    def test_interface_pair_undercompressive(self, tf1):
        rep = oleinik_check(tf1, 1.0, U2S)
        assert not rep.passed
        assert rep.undercompressive
        # closed forms: f_1'(1) = q - K1, f_2'(u_2*) = K2 - q
        assert rep.left_slope == pytest.approx(Q - 1.0, abs=1e-4)
        assert rep.right_slope == pytest.approx(2.0 - Q, abs=1e-4)

    def test_interface_pair_compressive(self, tf1):
        # rising-branch pair: characteristics enter from the left
        rep = oleinik_check(tf1, 0.1, case_b_trace())
        assert rep.passed

    def test_same_side_classical_shock(self, tf1):
        # concave bump: the upward jump is admissible (chord below the graph)
        rep = oleinik_check(tf1, 0.1, 0.9, sides=(1, 1))
        assert rep.passed
        assert rep.witness >= -1e-10

    def test_same_side_inadmissible(self, tf1):
        # the downward jump for a concave bump violates the chord condition
        rep = oleinik_check(tf1, 0.9, 0.1, sides=(1, 1))
        assert not rep.passed

    def test_identical_states(self, tf1):
        rep = oleinik_check(tf1, 0.4, 0.4, sides=(2, 2))
        assert rep.passed and not rep.undercompressive


class TestCaseTable:
    def test_covers_all_regimes(self, tf1):
        rows = riemann_case_table(tf1)
        assert sorted(r["case"] for r in rows) == list("abcdef")

    def test_demand_supply_consistency(self, tf1):
        # for small data both couplings share the interface flux
        for ul, ur in ((0.05, 0.1), (0.2, 0.01), (0.25, 0.125)):
            oe = entropy_interface_flux(tf1, ul, ur)
            nc = nonclassical_interface_flux(tf1, ul)
            assert oe == pytest.approx(nc, abs=1e-12)
