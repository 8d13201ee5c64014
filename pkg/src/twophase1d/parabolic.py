"""Degenerate parabolic solver with the capillary-pressure transmission at x=0.

The regularized problem carries the flux f_i(u) - eps * d/dx phi_i(u) in each
rock.  For eps below the capillary-pressure offset P2 - P1 the graph
connection at the interface degenerates to "left trace = 1 or right trace = 0"
together with flux continuity; ``interface_solve`` resolves that pair on the
half-cells adjacent to the interface.  Time stepping is IMEX: explicit Godunov
convection under its own CFL bound, implicit two-point degenerate diffusion,
with the interface flux evaluated at the new iterate.  The implicit system is
tridiagonal and solved by damped Newton with a nonlinear Gauss-Seidel
fallback.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import CflError, DomainError, NumericalError
from .flux_model import FluxModel
from .grids import BoundaryCondition, CellField, Grid1D, Trajectory
from .hyperbolic import DEFAULT_CFL, _boundary_flux, _guard_update
from .riemann import godunov_flux_batch

__all__ = [
    "EpsProblem",
    "InterfaceState",
    "interface_solve",
    "step_parabolic",
    "run_parabolic",
    "energy_estimate",
]

_OUTFLOW = BoundaryCondition.outflow()


@dataclass(frozen=True)
class EpsProblem:
    """Capillarity-regularized problem: model, strength eps, interface mode.

    ``interface_mode`` is ``"graph"`` for the degenerate capillary-pressure
    connection or ``("flux", value)`` to prescribe the total interface flux
    (boundary-value constructions use this).
    """

    model: FluxModel
    eps: float
    interface_mode: object = "graph"

    def __post_init__(self):
        gap = self.model.P2 - self.model.P1
        if not 0.0 < self.eps < gap:
            raise DomainError(
                f"capillarity strength must satisfy 0 < eps < P2-P1={gap}"
            )
        if self.interface_mode != "graph":
            tag, value = self.interface_mode
            if tag != "flux":
                raise DomainError(
                    "interface_mode must be 'graph' or ('flux', value)"
                )
            object.__setattr__(self, "interface_mode", ("flux", float(value)))

    @property
    def prescribed_flux(self) -> Optional[float]:
        if self.interface_mode == "graph":
            return None
        return self.interface_mode[1]

    @property
    def mode_tag(self) -> str:
        if self.interface_mode == "graph":
            return "graph"
        return f"flux({self.interface_mode[1]})"


@dataclass(frozen=True)
class InterfaceState:
    """Interface traces and the common total flux across x=0."""

    trace_left: float
    trace_right: float
    flux: float
    branch: str = "graph"   # saturated_left | dry_right | prescribed
    tie: bool = False


def _g1_scalar(model, side, a, b):
    return float(godunov_flux_batch(model, side,
                                    np.array([a]), np.array([b]))[0])


def interface_solve(problem: EpsProblem, uL: float, uR: float,
                    dx: float) -> InterfaceState:
    """Resolve the interface trace pair against the adjacent half cells.

    Finds (t1, t2) with t1 = 1 or t2 = 0 and equal total half-cell fluxes

        F1 = G_1(uL, t1) - eps*(phi_1(t1)-phi_1(uL))/(dx/2)
        F2 = G_2(t2, uR) - eps*(phi_2(uR)-phi_2(t2))/(dx/2).

    The saturated-left branch (t1=1) leaves a scalar equation for t2 whose
    left side increases monotonically, so a sign check at t2=0 decides the
    branch: when F2(0) <= F1(t1=1) the saturated branch holds, otherwise the
    dry-right branch (t2=0) does, and the matching scalar equation always
    brackets a root.  Both branches coexist only at the degenerate corner
    where the traces are exactly (1, 0); the saturated-left branch is then
    preferred and the tie is flagged.
    """
    model = problem.model
    eps = problem.eps
    if problem.prescribed_flux is not None:
        return InterfaceState(float(uL), float(uR), problem.prescribed_flux,
                              branch="prescribed")
    coeff = 2.0 * eps / dx
    uL = min(max(float(uL), 0.0), 1.0)
    uR = min(max(float(uR), 0.0), 1.0)
    phi1_L = model.phi(1, uL)
    phi2_R = model.phi(2, uR)

    FL = _g1_scalar(model, 1, uL, 1.0) - coeff * (model.phi_of_1(1) - phi1_L)

    def right_flux(v):
        return (_g1_scalar(model, 2, v, uR)
                - coeff * (phi2_R - model.phi(2, v)))

    h0 = right_flux(0.0) - FL
    if h0 <= 0.0:
        if abs(h0) <= 1e-15:
            return InterfaceState(1.0, 0.0, FL, branch="saturated_left",
                                  tie=True)
        h1 = right_flux(1.0) - FL
        if h1 < 0.0:  # roundoff guard; mathematically h1 >= 0
            return InterfaceState(1.0, 1.0, right_flux(1.0),
                                  branch="saturated_left")
        v = brentq(lambda s: right_flux(s) - FL, 0.0, 1.0,
                   xtol=1e-14, rtol=8.9e-16)
        return InterfaceState(1.0, float(v), right_flux(v),
                              branch="saturated_left")

    FR = right_flux(0.0)

    def left_flux(w):
        return (_g1_scalar(model, 1, uL, w)
                - coeff * (model.phi(1, w) - phi1_L))

    k0 = left_flux(0.0) - FR
    if k0 < 0.0:  # roundoff guard; mathematically k0 >= 0
        raise NumericalError(
            "no interface branch brackets a root; dx too coarse for this eps"
        )
    w = brentq(lambda s: left_flux(s) - FR, 0.0, 1.0,
               xtol=1e-14, rtol=8.9e-16)
    return InterfaceState(float(w), 0.0, left_flux(w), branch="dry_right")


# -- IMEX step ---------------------------------------------------------------


def _convective_fluxes(problem, grid, u_old, bc):
    """Explicit Godunov fluxes at same-side faces plus outer boundaries."""
    model = problem.model
    nL = grid.n_left
    uL, uR = u_old[:nL], u_old[nL:]
    Fc = np.zeros(grid.n_cells + 1)
    Fc[0] = _boundary_flux(model, 1, bc[0], uL[0], left_boundary=True)
    if nL > 1:
        Fc[1:nL] = godunov_flux_batch(model, 1, uL[:-1], uL[1:])
    if len(uR) > 1:
        Fc[nL + 1:-1] = godunov_flux_batch(model, 2, uR[:-1], uR[1:])
    Fc[-1] = _boundary_flux(model, 2, bc[1], uR[-1], left_boundary=False)
    return Fc


def _total_fluxes(problem, grid, u, Fc, bc):
    """Total fluxes at the current implicit iterate; returns (F, iface)."""
    model = problem.model
    eps = problem.eps
    dx = grid.dx
    nL, n = grid.n_left, grid.n_cells
    F = Fc.copy()
    phi1 = model.phi(1, u[:nL])
    phi2 = model.phi(2, u[nL:])
    if nL > 1:
        F[1:nL] -= (eps / dx) * np.diff(phi1)
    if n - nL > 1:
        F[nL + 1:-1] -= (eps / dx) * np.diff(phi2)
    iface = interface_solve(problem, u[nL - 1], u[nL], dx)
    F[nL] = iface.flux
    if bc[0].kind == "dirichlet":
        F[0] = Fc[0] - (2.0 * eps / dx) * (phi1[0] - model.phi(1, bc[0].value))
    if bc[1].kind == "dirichlet":
        F[-1] = Fc[-1] - (2.0 * eps / dx) * (model.phi(2, bc[1].value) - phi2[-1])
    return F, iface


def _residual(problem, grid, u, u_old, dt, Fc, bc):
    F, iface = _total_fluxes(problem, grid, u, Fc, bc)
    R = u - u_old + (dt / grid.dx) * np.diff(F)
    return R, F, iface


def _interface_partials(problem, uL, uR, dx, h=1e-7):
    def flux_at(a, b):
        return interface_solve(problem, a, b, dx).flux

    ap, am = min(uL + h, 1.0), max(uL - h, 0.0)
    dL = (flux_at(ap, uR) - flux_at(am, uR)) / (ap - am)
    bp, bm = min(uR + h, 1.0), max(uR - h, 0.0)
    dR = (flux_at(uL, bp) - flux_at(uL, bm)) / (bp - bm)
    return dL, dR


def _jacobian_banded(problem, grid, u, dt, bc):
    """Tridiagonal Jacobian of the residual in solve_banded layout."""
    model = problem.model
    eps = problem.eps
    dx = grid.dx
    lam = dt / dx
    nL, n = grid.n_left, grid.n_cells
    dphi = np.empty(n)
    dphi[:nL] = model.dphi(1, u[:nL])
    dphi[nL:] = model.dphi(2, u[nL:])
    # dF_dl[k] = dF_k/du_{k-1}, dF_dr[k] = dF_k/du_k for face k
    dF_dl = np.zeros(n + 1)
    dF_dr = np.zeros(n + 1)
    for k in range(1, n):
        if k == nL:
            continue
        dF_dl[k] = (eps / dx) * dphi[k - 1]
        dF_dr[k] = -(eps / dx) * dphi[k]
    dL, dR = _interface_partials(problem, u[nL - 1], u[nL], dx)
    dF_dl[nL] = dL
    dF_dr[nL] = dR
    if bc[0].kind == "dirichlet":
        dF_dr[0] = -(2.0 * eps / dx) * dphi[0]
    if bc[1].kind == "dirichlet":
        dF_dl[n] = (2.0 * eps / dx) * dphi[n - 1]
    diag = 1.0 + lam * (dF_dl[1:] - dF_dr[:-1])
    upper = lam * dF_dr[1:]     # J[j, j+1] for j = 0..n-2 (last entry unused)
    lower = -lam * dF_dl[1:-1]  # J[j+1, j] for j = 0..n-2
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower
    return ab


def _gauss_seidel_fallback(problem, grid, u, u_old, dt, Fc, bc, tol,
                           max_sweeps=400):
    """Per-cell monotone scalar solves; emergency path when Newton stalls."""
    u = u.copy()
    n = grid.n_cells
    for _ in range(max_sweeps):
        R, _, _ = _residual(problem, grid, u, u_old, dt, Fc, bc)
        if np.max(np.abs(R)) <= tol:
            return u
        for j in range(n):
            def rj(v):
                uu = u.copy()
                uu[j] = v
                return _residual(problem, grid, uu, u_old, dt, Fc, bc)[0][j]

            r0, r1 = rj(0.0), rj(1.0)
            if r0 >= 0.0:
                u[j] = 0.0
            elif r1 <= 0.0:
                u[j] = 1.0
            else:
                u[j] = brentq(rj, 0.0, 1.0, xtol=1e-14)
    raise NumericalError("implicit solve failed to converge (fallback)")


def _implicit_solve(problem, grid, u_old, dt, Fc, bc, tol, max_iter=200):
    u = u_old.copy()
    R, F, iface = _residual(problem, grid, u, u_old, dt, Fc, bc)
    norm = np.max(np.abs(R))
    for _ in range(max_iter):
        if norm <= tol:
            return u, R, F, iface
        ab = _jacobian_banded(problem, grid, u, dt, bc)
        try:
            delta = solve_banded((1, 1), ab, -R)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular implicit system: {exc}") from exc
        step = 1.0
        accepted = False
        for _ in range(50):
            u_try = np.clip(u + step * delta, 0.0, 1.0)
            R_try, F_try, iface_try = _residual(problem, grid, u_try, u_old,
                                                dt, Fc, bc)
            norm_try = np.max(np.abs(R_try))
            if norm_try < norm * (1.0 - 1e-4 * step) or norm_try <= tol:
                u, R, F, iface, norm = u_try, R_try, F_try, iface_try, norm_try
                accepted = True
                break
            step *= 0.5
        if not accepted:
            u = _gauss_seidel_fallback(problem, grid, u, u_old, dt, Fc, bc, tol)
            R, F, iface = _residual(problem, grid, u, u_old, dt, Fc, bc)
            return u, R, F, iface
    if norm <= tol:
        return u, R, F, iface
    u = _gauss_seidel_fallback(problem, grid, u, u_old, dt, Fc, bc, tol)
    R, F, iface = _residual(problem, grid, u, u_old, dt, Fc, bc)
    return u, R, F, iface


def parabolic_time_step(problem: EpsProblem, grid: Grid1D,
                        cfl: float = DEFAULT_CFL, c_dt: float = 0.5) -> float:
    """min(convective CFL bound, c_dt*dx); implicit diffusion adds no bound."""
    model = problem.model
    L = max(model.lipschitz_bound(1), model.lipschitz_bound(2))
    conv = cfl * grid.dx / L if L > 0 else np.inf
    return min(conv, c_dt * grid.dx)


def step_parabolic(problem: EpsProblem, grid: Grid1D, state: CellField,
                   dt: float, bc=(_OUTFLOW, _OUTFLOW),
                   newton_tol: float = 1e-12):
    """One IMEX step; returns (new state, InterfaceState at the new iterate).

    The final update re-applies the converged fluxes in conservative form, so
    mass is exact to summation roundoff regardless of the Newton tolerance.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    model = problem.model
    L = max(model.lipschitz_bound(1), model.lipschitz_bound(2))
    if L > 0 and dt > DEFAULT_CFL * grid.dx / L * (1.0 + 1e-9):
        raise CflError(
            f"dt={dt} exceeds the convective stability bound "
            f"{DEFAULT_CFL * grid.dx / L}"
        )
    u_old = np.asarray(state.values, dtype=float)
    Fc = _convective_fluxes(problem, grid, u_old, bc)
    u_star, R, F, iface = _implicit_solve(problem, grid, u_old, dt, Fc, bc,
                                          tol=newton_tol)
    if not np.all(np.isfinite(u_star)):
        raise NumericalError("implicit solve produced non-finite saturations")
    u_new = u_old - (dt / grid.dx) * np.diff(F)
    return CellField(_guard_update(u_new), state.time + dt), iface, F


def run_parabolic(problem: EpsProblem, grid: Grid1D, u0, t_end: float,
                  snapshot_times: Optional[Sequence[float]] = None,
                  bc=(_OUTFLOW, _OUTFLOW), cfl: float = DEFAULT_CFL,
                  c_dt: float = 0.5, newton_tol: float = 1e-12,
                  record_every_step: bool = False) -> Trajectory:
    """Advance the regularized problem to t_end, stepping exactly onto snapshots."""
    if t_end < 0:
        raise DomainError("t_end must be >= 0")
    if callable(u0):
        u = np.asarray(u0(grid.centers), dtype=float)
    else:
        u = np.array(u0, dtype=float)
    if u.shape != (grid.n_cells,):
        raise DomainError(f"initial data must have {grid.n_cells} cells")
    if np.min(u) < -1e-12 or np.max(u) > 1.0 + 1e-12:
        raise DomainError("initial data must lie in [0,1]")
    u = np.clip(u, 0.0, 1.0)

    traj = Trajectory(grid=grid, mode_tag=problem.mode_tag, eps=problem.eps,
                      meta={"kind": "parabolic"})
    traj.append(u, 0.0)
    if t_end == 0:
        return traj
    if snapshot_times is None:
        targets = [t_end]
    else:
        targets = sorted(t for t in snapshot_times if 0.0 < t <= t_end)
        if not targets or abs(targets[-1] - t_end) > 1e-14:
            targets.append(t_end)
    dt_base = parabolic_time_step(problem, grid, cfl=cfl, c_dt=c_dt)
    t = 0.0
    field = CellField(u, 0.0)
    for target in targets:
        while t < target - 1e-14:
            dt = min(dt_base, target - t)
            field, iface, F = step_parabolic(problem, grid, field, dt, bc=bc,
                                             newton_tol=newton_tol)
            traj.step_times.append(t)
            traj.step_dts.append(dt)
            traj.interface_flux.append(float(iface.flux))
            traj.left_boundary_flux.append(float(F[0]))
            traj.right_boundary_flux.append(float(F[-1]))
            traj.interface_traces.append((iface.trace_left, iface.trace_right))
            traj.tie_breaks += int(iface.tie)
            t = target if target - t <= dt_base else t + dt
            field.time = t
            if record_every_step:
                traj.append(field.values, t)
        if not record_every_step:
            traj.append(field.values, t)
    if traj.tie_breaks:
        warnings.warn(
            f"interface branch tie-break activated {traj.tie_breaks} times",
            stacklevel=2)
    return traj


def energy_estimate(problem: EpsProblem, trajectory: Trajectory):
    """Discrete capillary energy eps * int int (d/dx phi_i(u))^2 dx dt per side.

    Gradients are face differences inside each subdomain; the time integral
    is the trapezoid rule over the recorded snapshots.
    """
    model = problem.model
    grid = trajectory.grid
    dx = grid.dx
    nL = grid.n_left
    times = np.asarray(trajectory.times)
    s1 = np.empty(len(trajectory))
    s2 = np.empty(len(trajectory))
    for k, u in enumerate(trajectory.fields):
        g1 = np.diff(model.phi(1, u[:nL])) / dx
        g2 = np.diff(model.phi(2, u[nL:])) / dx
        s1[k] = np.sum(g1 * g1) * dx
        s2[k] = np.sum(g2 * g2) * dx
    E1 = problem.eps * np.trapezoid(s1, times)
    E2 = problem.eps * np.trapezoid(s2, times)
    return float(E1), float(E2)
