import numpy as np
import pytest
from scipy.optimize import brentq

from twophase1d import (CellField, CflError, DomainError, EpsProblem, Grid1D,
                        energy_estimate, interface_solve, run_parabolic,
                        step_parabolic)
from twophase1d.grids import BoundaryCondition
from twophase1d.parabolic import _convective_fluxes

CASE_B_TRACE = 0.05367168907380948

OUT = (BoundaryCondition.outflow(), BoundaryCondition.outflow())


class TestEpsProblem:
    def test_eps_window(self, tf1):
        EpsProblem(tf1, 0.5)
        with pytest.raises(DomainError):
            EpsProblem(tf1, 1.0)  # P2 - P1 = 1
        with pytest.raises(DomainError):
            EpsProblem(tf1, 0.0)

    def test_interface_mode_forms(self, tf1):
        assert EpsProblem(tf1, 0.1).prescribed_flux is None
        assert EpsProblem(tf1, 0.1, ("flux", 0.2)).prescribed_flux == 0.2
        with pytest.raises(DomainError):
            EpsProblem(tf1, 0.1, ("nonsense", 0.2))


class TestInterfaceSolve:
    def test_both_graph_endpoints(self, tf1_q0):
        # zero flow rate; both branch conditions hold at once
        p = EpsProblem(tf1_q0, 0.05)
        st = interface_solve(p, 1.0, 0.0, 0.01)
        assert st.trace_left == 1.0 and st.trace_right == 0.0
        assert st.flux == pytest.approx(0.0, abs=1e-14)
        assert st.tie

    def test_dry_right_branch_scalar_oracle(self, tf1_q0):
        p = EpsProblem(tf1_q0, 0.05)
        dx = 0.01
        st = interface_solve(p, 0.5, 0.0, dx)
        assert st.trace_right == 0.0
        # independent scalar equation: left half-cell balance with t2 = 0
        coeff = 2 * p.eps / dx
        model = p.model

        def left_flux(w):
            from twophase1d.riemann import godunov_flux

            return (godunov_flux(model, 1, 0.5, w)
                    - coeff * (model.phi(1, w) - model.phi(1, 0.5)))

        target = -coeff * model.phi(2, 0.0)  # right side: G_2(0,0) - diff term
        w = brentq(lambda s: left_flux(s) - target, 0.0, 1.0, xtol=1e-13)
        assert st.trace_left == pytest.approx(w, abs=1e-10)
        assert st.flux >= -1e-12

    def test_graph_invariant_random(self, tf1, rng):
        p = EpsProblem(tf1, 0.05)
        for uL, uR in rng.uniform(0, 1, (100, 2)):
            st = interface_solve(p, uL, uR, 0.01)
            assert st.trace_left == 1.0 or st.trace_right == 0.0
            assert 0.0 <= st.trace_left <= 1.0
            assert 0.0 <= st.trace_right <= 1.0

    def test_steady_profile_flux(self, tf1):
        from twophase1d.steady import build_sub_super

        lo, hi = build_sub_super(tf1, 0.5, 0.05)
        g = Grid1D.from_bounds(-2, 2, 400, 400)
        p = EpsProblem(tf1, 0.05)
        for prof in (lo, hi):
            u = prof.eval(g.centers)
            st = interface_solve(p, u[g.n_left - 1], u[g.n_left], g.dx)
            assert st.flux == pytest.approx(tf1.q, abs=5 * g.dx)


class TestStepParabolic:
    def test_prescribed_flux_steady_constants(self, tf1, grid_small):
        lam = 0.115
        p = EpsProblem(tf1, 0.05, ("flux", lam))
        u0 = np.where(grid_small.centers < 0, 0.1, CASE_B_TRACE)
        out, iface, _ = step_parabolic(p, grid_small, CellField(u0.copy()),
                                       1e-3)
        assert np.max(np.abs(out.values - u0)) <= 1e-12
        assert iface.flux == lam

    def test_conservation_per_step(self, tf1, grid_small, rng):
        p = EpsProblem(tf1, 0.05)
        u0 = rng.uniform(0, 1, grid_small.n_cells)
        dt = 1e-3
        out, _, F = step_parabolic(p, grid_small, CellField(u0.copy()), dt)
        change = np.sum(out.values - u0) * grid_small.dx
        assert change == pytest.approx(dt * (F[0] - F[-1]), abs=1e-12)

    def test_imex_matches_explicit_reference(self, tf1):
        """One explicit-diffusion step agrees with the IMEX step to O(dt^2)."""
        g = Grid1D.from_bounds(-1, 1, 100, 100)
        p = EpsProblem(tf1, 0.05)
        u = 0.4 + 0.2 * np.exp(-((g.centers + 0.5) ** 2) / 0.05)

        def explicit(dt):
            nL, dx = g.n_left, g.dx
            F = _convective_fluxes(p, g, u, OUT)
            F[1:nL] -= (p.eps / dx) * np.diff(tf1.phi(1, u[:nL]))
            F[nL + 1:-1] -= (p.eps / dx) * np.diff(tf1.phi(2, u[nL:]))
            F[nL] = interface_solve(p, u[nL - 1], u[nL], dx).flux
            return u - (dt / dx) * np.diff(F)

        gaps = []
        for dt in (2e-4, 1e-4):
            imex, _, _ = step_parabolic(p, g, CellField(u.copy()), dt)
            gaps.append(np.max(np.abs(imex.values - explicit(dt))))
        assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.25)

    def test_cfl_guard(self, tf1, grid_small):
        p = EpsProblem(tf1, 0.05)
        with pytest.raises(CflError):
            step_parabolic(p, grid_small,
                           CellField(np.full(grid_small.n_cells, 0.5)), 1.0)


class TestRunParabolic:
    def test_zero_time(self, tf1, grid_small):
        p = EpsProblem(tf1, 0.05)
        u0 = np.full(grid_small.n_cells, 0.4)
        traj = run_parabolic(p, grid_small, u0, 0.0)
        assert len(traj) == 1

    def test_maximum_principle(self, tf1, grid_small, rng):
        p = EpsProblem(tf1, 0.08)
        u0 = rng.uniform(0, 1, grid_small.n_cells)
        traj = run_parabolic(p, grid_small, u0, 0.1)
        for u in traj.fields:
            assert np.min(u) >= 0.0 and np.max(u) <= 1.0

    def test_comparison_ordered_pairs(self, tf1, rng):
        g = Grid1D.from_bounds(-1, 1, 60, 60)
        p = EpsProblem(tf1, 0.05)
        for _ in range(10):
            lo = rng.uniform(0.0, 0.5, g.n_cells)
            hi = np.minimum(lo + rng.uniform(0.0, 0.5, g.n_cells), 1.0)
            ta = run_parabolic(p, g, lo, 0.05)
            tb = run_parabolic(p, g, hi, 0.05)
            assert np.min(tb.fields[-1] - ta.fields[-1]) >= -1e-10

    def test_graph_traces_recorded(self, tf1, grid_small):
        p = EpsProblem(tf1, 0.05)
        u0 = np.full(grid_small.n_cells, 0.5)
        traj = run_parabolic(p, grid_small, u0, 0.05)
        assert traj.interface_traces
        for t1, t2 in traj.interface_traces:
            assert t1 == 1.0 or t2 == 0.0

    def test_boundary_flux_mode_keeps_bounds(self, tf1):
        """Prescribing the crossing-level flux at x=0 drives the right rock
        from u_r upward without overshooting the crossing saturation."""
        g = Grid1D.from_bounds(-1, 1, 100, 100)
        u2s = tf1.u_star(2)
        p = EpsProblem(tf1, 0.05, ("flux", tf1.flux(2, u2s)))
        ur = 0.06
        u0 = np.where(g.centers < 0, 1.0, ur)
        traj = run_parabolic(p, g, u0, 0.4)
        right = traj.fields[-1][g.n_left:]
        assert np.all(right >= ur - 1e-10)
        assert np.all(right <= u2s + 1e-10)

    def test_vanishing_capillarity_trend(self, tf1):
        from twophase1d import NON_CLASSICAL, run_hyperbolic

        g = Grid1D.from_bounds(-1, 1, 120, 120)
        u0 = np.full(g.n_cells, 0.5)
        ref = run_hyperbolic(tf1, NON_CLASSICAL, g, u0, 0.25,
                             check_boundaries=False)
        dists = []
        for eps in (0.1, 0.05):
            traj = run_parabolic(EpsProblem(tf1, eps), g, u0, 0.25)
            dists.append(np.sum(np.abs(traj.fields[-1] - ref.fields[-1]))
                         * g.dx)
        assert dists[1] < dists[0]


class TestEnergyEstimate:
    def test_constant_trajectory_zero(self, tf1, grid_small):
        p = EpsProblem(tf1, 0.05, ("flux", 0.115))
        u0 = np.where(grid_small.centers < 0, 0.1, CASE_B_TRACE)
        traj = run_parabolic(p, grid_small, u0, 0.02)
        E1, E2 = energy_estimate(p, traj)
        assert E1 == pytest.approx(0.0, abs=1e-25)
        assert E2 == pytest.approx(0.0, abs=1e-25)

    def test_sweep_bounded_and_decaying(self, tf1):
        g = Grid1D.from_bounds(-1, 1, 100, 100)
        u0 = np.full(g.n_cells, 0.5)
        snaps = np.linspace(0, 0.2, 9)[1:]
        E = {}
        for eps in (0.1, 0.05, 0.025):
            p = EpsProblem(tf1, eps)
            traj = run_parabolic(p, g, u0, 0.2, snapshot_times=snaps)
            E[eps] = energy_estimate(p, traj)
        for side in (0, 1):
            vals = [E[eps][side] for eps in (0.1, 0.05, 0.025)]
            assert max(vals) <= 1.5 * vals[0] + 1e-12
            scaled = [eps * E[eps][side] for eps in (0.1, 0.05, 0.025)]
            assert scaled[0] > scaled[1] > scaled[2]
