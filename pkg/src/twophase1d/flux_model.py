"""Two-rock flux model: fractional flow, gravity flux, capillary potentials.

The medium is made of two homogeneous rocks occupying x<0 (side 1) and x>0
(side 2).  Each side carries a convective flux

    f_i(u) = q * c_i(u) + g_i(u),

where ``u`` is the oil saturation, ``q >= 0`` the total flow rate, ``c_i`` the
increasing fractional-flow curve (c_i(0)=0, c_i(1)=1) and ``g_i`` the
buoyancy-driven gravity flux (positive inside (0,1), zero at the endpoints).
The capillary potential is the Kirchhoff transform

    phi_i(u) = C * integral_0^u g_i(s) ds,

a strictly increasing function used by the degenerate-diffusion solver.

Validated models satisfy two structural assumptions:

* each f_i crosses the level q at a saturation ``u_i* = u_star(i)`` in [0,1),
  is increasing up to that crossing, stays strictly above q beyond it, and
  returns to q at full saturation (``validate_H1``);
* near full saturation on side 1 the flux excess f_1 - q admits a Hoelder
  lower bound R*(phi_1(1)-s)**m with exponent m in (0,1) when expressed in
  potential variables (``validate_H2``).  This makes the saturated plateau of
  the steady profiles reachable in finite distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, ModelAssumptionError

__all__ = [
    "ParamFamily",
    "FluxModel",
    "eval_flux",
    "eval_phi",
    "invert_phi",
    "find_u_star",
    "validate_H1",
    "validate_H2",
    "H1Report",
    "H2Report",
]

_SAT_TOL = 1e-12          # slack accepted on the [0,1] saturation box
_DEFAULT_SCAN = 10_000    # sample count for H1 checks and Lipschitz bounds


def _as_array(u):
    return np.asarray(u, dtype=float)


def _check_saturation(u) -> np.ndarray:
    """Clip roundoff-sized excursions, reject genuine out-of-range input."""
    arr = _as_array(u)
    if arr.size and (np.min(arr) < -_SAT_TOL or np.max(arr) > 1.0 + _SAT_TOL):
        raise DomainError(
            f"saturation outside [0,1]: range [{np.min(arr)}, {np.max(arr)}]"
        )
    return np.clip(arr, 0.0, 1.0)


def _golden_min(fun, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section search for the minimizer of ``fun`` on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class ParamFamily:
    """Engineering relative-permeability family.

    c_i(u) = u**alpha_i / (u**alpha_i + (a/b) * (1-u)**beta_i)
    g_i(u) = K_i * u**alpha_i * (1-u)**beta_i / (b*u**alpha_i + a*(1-u)**beta_i)

    with exponents >= 1 and positive mixture constants.  When alpha=beta=1 and
    a == b the curves reduce to polynomials and the capillary potential has a
    closed form; otherwise it is built by quadrature.
    """

    alpha1: float = 1.0
    beta1: float = 1.0
    alpha2: float = 1.0
    beta2: float = 1.0
    a: float = 1.0
    b: float = 1.0
    K1: float = 1.0
    K2: float = 2.0

    def __post_init__(self):
        if min(self.alpha1, self.beta1, self.alpha2, self.beta2) < 1.0:
            raise DomainError("family exponents must be >= 1")
        if self.a <= 0 or self.b <= 0 or self.K1 <= 0 or self.K2 <= 0:
            raise DomainError("family constants a, b, K_i must be > 0")

    def _exponents(self, side: int):
        if side == 1:
            return self.alpha1, self.beta1, self.K1
        return self.alpha2, self.beta2, self.K2

    def c(self, side: int) -> Callable:
        alpha, beta, _ = self._exponents(side)
        ratio = self.a / self.b

        def c_curve(u):
            u = _as_array(u)
            num = u ** alpha
            return num / (num + ratio * (1.0 - u) ** beta)

        return c_curve

    def g(self, side: int) -> Callable:
        alpha, beta, K = self._exponents(side)
        a, b = self.a, self.b

        def g_curve(u):
            u = _as_array(u)
            num = u ** alpha
            den = b * num + a * (1.0 - u) ** beta
            return K * num * (1.0 - u) ** beta / den

        return g_curve

    @property
    def polynomial(self) -> bool:
        """True when g_i is the polynomial (K_i/a) * u * (1-u)."""
        return (
            self.alpha1 == self.beta1 == self.alpha2 == self.beta2 == 1.0
            and self.a == self.b
        )

    def phi(self, side: int, C: float) -> Optional[Callable]:
        if not self.polynomial:
            return None
        _, _, K = self._exponents(side)
        scale = C * K / self.a

        def phi_curve(u):
            u = _as_array(u)
            return scale * (u * u / 2.0 - u ** 3 / 3.0)

        return phi_curve


class _QuadraturePhi:
    """Cumulative table for phi(u) = C * int_0^u g, with local refinement.

    The table holds exact (to quadrature accuracy) node values on a uniform
    2048-interval grid; a query integrates the residual piece from the nearest
    lower node with a 5-point Gauss rule, so evaluation error stays near
    machine precision while remaining vectorized.
    """

    _GL_X, _GL_W = np.polynomial.legendre.leggauss(5)

    def __init__(self, g: Callable, C: float, n: int = 2048):
        self.g = g
        self.C = C
        self.nodes = np.linspace(0.0, 1.0, n + 1)
        h = self.nodes[1] - self.nodes[0]
        mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        pts = mid[:, None] + 0.5 * h * self._GL_X[None, :]
        vals = _as_array(g(pts.ravel())).reshape(pts.shape)
        increments = 0.5 * h * vals @ self._GL_W
        self.table = C * np.concatenate([[0.0], np.cumsum(increments)])

    def __call__(self, u):
        u = _as_array(u)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        idx = np.clip(np.searchsorted(self.nodes, u, side="right") - 1, 0,
                      len(self.nodes) - 2)
        lo = self.nodes[idx]
        half = 0.5 * (u - lo)
        pts = (lo + half)[:, None] + half[:, None] * self._GL_X[None, :]
        vals = _as_array(self.g(pts.ravel())).reshape(pts.shape)
        out = self.table[idx] + self.C * (half * (vals @ self._GL_W))
        return float(out[0]) if scalar else out


class FluxModel:
    """Immutable container for the two-rock flux data.

    Parameters
    ----------
    q : total flow rate (>= 0, code units).
    C : buoyancy constant (> 0).
    P1, P2 : capillary pressure plateaus; only the ordering P1 < P2 matters.
    c, g : pairs of callables (side 1, side 2) on [0,1]; must accept numpy
        arrays.  ``c`` defaults to the identity on both sides.
    phi : optional pair of closed-form capillary potentials; when omitted a
        quadrature-backed table is built from ``g``.
    name : label echoed in reports.

    Construction performs only cheap sanity checks so that deliberately
    degenerate models can be built and fed to the validators; structural
    soundness is established by :func:`validate_H1` / :func:`validate_H2`.
    """

    def __init__(self, q, C, P1, P2, c, g, phi=None, name=""):
        if q < 0:
            raise DomainError("total flow rate q must be >= 0")
        if C <= 0:
            raise DomainError("buoyancy constant C must be > 0")
        if not P1 < P2:
            raise DomainError("capillary plateaus must satisfy P1 < P2")
        self.q = float(q)
        self.C = float(C)
        self.P1 = float(P1)
        self.P2 = float(P2)
        self._c = tuple(c)
        self._g = tuple(g)
        self.name = name
        if phi is None:
            phi = (None, None)
        self._phi = tuple(
            p if p is not None else _QuadraturePhi(self._g[i], self.C)
            for i, p in enumerate(phi)
        )
        self._cache: dict = {}

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_family(cls, q, C, P1, P2, family: ParamFamily, name=""):
        phi = (family.phi(1, C), family.phi(2, C))
        return cls(q, C, P1, P2,
                   c=(family.c(1), family.c(2)),
                   g=(family.g(1), family.g(2)),
                   phi=phi, name=name)

    @classmethod
    def preset(cls, name: str) -> "FluxModel":
        """Named regression models.  ``TF1``: q=0.25, c_i(u)=u,
        g_i(u)=K_i*u*(1-u) with K1=1, K2=2, C=1."""
        key = name.upper().replace("-", "_")
        if key == "TF1":
            return cls.from_family(0.25, 1.0, 1.0, 2.0, ParamFamily(), name="TF1")
        if key == "TF1_Q0":
            return cls.from_family(0.0, 1.0, 1.0, 2.0, ParamFamily(), name="TF1_Q0")
        raise DomainError(f"unknown model preset {name!r}")

    # -- point evaluation --------------------------------------------------

    def _side(self, side: int) -> int:
        if side not in (1, 2):
            raise DomainError(f"subdomain index must be 1 or 2, got {side}")
        return side - 1

    def flux(self, side: int, u):
        """f_i(u) = q*c_i(u) + g_i(u)."""
        i = self._side(side)
        uu = _check_saturation(u)
        out = self.q * _as_array(self._c[i](uu)) + _as_array(self._g[i](uu))
        return float(out) if out.ndim == 0 else out

    def flux_unchecked(self, side: int, u):
        """Same as :meth:`flux` without the domain check (solver hot path)."""
        i = self._side(side)
        return self.q * self._c[i](u) + self._g[i](u)

    def gravity(self, side: int, u):
        i = self._side(side)
        out = _as_array(self._g[i](_check_saturation(u)))
        return float(out) if out.ndim == 0 else out

    def phi(self, side: int, u):
        """Capillary potential phi_i(u) = C * int_0^u g_i."""
        i = self._side(side)
        out = _as_array(self._phi[i](_check_saturation(u)))
        return float(out) if out.ndim == 0 else out

    def dphi(self, side: int, u):
        """phi_i'(u) = C * g_i(u) (exact, no differencing)."""
        i = self._side(side)
        out = self.C * _as_array(self._g[i](_check_saturation(u)))
        return float(out) if out.ndim == 0 else out

    def phi_of_1(self, side: int) -> float:
        key = ("phi1", side)
        if key not in self._cache:
            self._cache[key] = float(self.phi(side, 1.0))
        return self._cache[key]

    def phi_inv(self, side: int, y):
        """Inverse capillary potential, accurate to 1e-12 * phi_i(1).

        Monotone bisection refined by Brent's method on each query; vector
        input is handled per entry (inversion happens outside hot loops).
        """
        from scipy.optimize import brentq

        top = self.phi_of_1(side)
        tol = 1e-12 * max(top, 1e-300)
        y_arr = np.atleast_1d(_as_array(y))
        if y_arr.size and (np.min(y_arr) < -tol or np.max(y_arr) > top + tol):
            raise DomainError(
                f"potential outside [0, phi_{side}(1)={top}]: "
                f"range [{np.min(y_arr)}, {np.max(y_arr)}]"
            )
        out = np.empty_like(y_arr)
        for k, yv in enumerate(y_arr):
            yv = min(max(yv, 0.0), top)
            if yv <= 0.0:
                out[k] = 0.0
            elif yv >= top:
                out[k] = 1.0
            else:
                out[k] = brentq(lambda u: self.phi(side, u) - yv, 0.0, 1.0,
                                xtol=1e-15, rtol=8.9e-16)
        return float(out[0]) if np.ndim(y) == 0 else out

    # -- derived structural quantities --------------------------------------

    def u_star(self, side: int) -> float:
        """Crossing saturation: smallest root of f_i(u)=q on the rising branch."""
        key = ("ustar", side)
        if key not in self._cache:
            self._cache[key] = find_u_star(self, side)
        return self._cache[key]

    def lipschitz_bound(self, side: int, n: int = _DEFAULT_SCAN) -> float:
        """Sampled bound on |f_i'| (central differences on a dense grid)."""
        key = ("lip", side, n)
        if key not in self._cache:
            u = np.linspace(0.0, 1.0, n + 1)
            f = self.flux(side, u)
            h = u[1] - u[0]
            slopes = np.abs(np.diff(f)) / h
            self._cache[key] = float(np.max(slopes))
        return self._cache[key]

    def interior_extrema(self, side: int, n: int = 8192):
        """Locations/values of interior local minima and maxima of f_i.

        Detected by a dense scan and sharpened by golden-section search;
        used to evaluate exact one-sided Godunov fluxes in vectorized form.
        Returns ``(min_x, min_v, max_x, max_v)`` as 1-d arrays.
        """
        key = ("extrema", side, n)
        if key in self._cache:
            return self._cache[key]
        u = np.linspace(0.0, 1.0, n + 1)
        f = self.flux(side, u)
        d = np.diff(f)
        mins_x, mins_v, maxs_x, maxs_v = [], [], [], []
        for k in range(1, n):
            if d[k - 1] < 0.0 <= d[k]:  # local minimum bracket
                lo, hi = u[max(k - 1, 0)], u[min(k + 1, n)]
                x = _golden_min(lambda s: self.flux(side, s), lo, hi)
                mins_x.append(x)
                mins_v.append(self.flux(side, x))
            elif d[k - 1] > 0.0 >= d[k]:  # local maximum bracket
                lo, hi = u[max(k - 1, 0)], u[min(k + 1, n)]
                x = _golden_min(lambda s: -self.flux(side, s), lo, hi)
                maxs_x.append(x)
                maxs_v.append(self.flux(side, x))
        res = (np.array(mins_x), np.array(mins_v),
               np.array(maxs_x), np.array(maxs_v))
        self._cache[key] = res
        return res

    def flux_prime(self, side: int, u: float, h: float = 1e-6) -> float:
        """Flux slope by differencing; one-sided within h of the endpoints."""
        u = float(u)
        if u < -_SAT_TOL or u > 1.0 + _SAT_TOL:
            raise DomainError(f"saturation outside [0,1]: {u}")
        u = min(max(u, 0.0), 1.0)
        if u < h:
            return (self.flux(side, u + h) - self.flux(side, u)) / h
        if u > 1.0 - h:
            return (self.flux(side, u) - self.flux(side, u - h)) / h
        return (self.flux(side, u + h) - self.flux(side, u - h)) / (2.0 * h)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return (f"FluxModel({label} q={self.q}, C={self.C}, "
                f"P1={self.P1}, P2={self.P2})")


# -- module-level operations (thin wrappers over the model methods) ---------


def eval_flux(model: FluxModel, side: int, u):
    """Convective flux f_i(u); raises DomainError outside [0,1]."""
    return model.flux(side, u)


def eval_phi(model: FluxModel, side: int, u):
    """Capillary potential phi_i(u); raises DomainError outside [0,1]."""
    return model.phi(side, u)


def invert_phi(model: FluxModel, side: int, y):
    """Saturation with phi_i(u)=y; raises DomainError outside [0, phi_i(1)]."""
    return model.phi_inv(side, y)


def find_u_star(model: FluxModel, side: int, n: int = _DEFAULT_SCAN,
                max_iter: int = 100) -> float:
    """Smallest saturation where f_i crosses the total flow rate q.

    Bracketed bisection on [0, first sampled local maximum].  Raises
    ModelAssumptionError when no crossing exists below the first local
    maximum or the crossing sits at full saturation.
    """
    q = model.q
    u = np.linspace(0.0, 1.0, n + 1)
    f = model.flux(side, u)
    scale = max(q, 1.0)
    if abs(f[0] - q) <= 1e-12 * scale:
        return 0.0
    # Bisect up to the first sampled local maximum (or u=1 when monotone).
    d = np.diff(f)
    drop = np.nonzero(d < 0.0)[0]
    hi = u[drop[0] + 1] if drop.size else 1.0
    if model.flux(side, hi) < q - 1e-12 * scale:
        raise ModelAssumptionError(
            f"side {side}: flux never reaches q={q} below its first local maximum"
        )
    lo_u, hi_u = 0.0, hi
    flo = f[0] - q
    for _ in range(max_iter):
        mid = 0.5 * (lo_u + hi_u)
        fm = model.flux(side, mid) - q
        if flo * fm <= 0.0:
            hi_u = mid
        else:
            lo_u, flo = mid, fm
    root = 0.5 * (lo_u + hi_u)
    if root >= 1.0 - 1e-9:
        raise ModelAssumptionError(
            f"side {side}: crossing of q={q} sits at full saturation; "
            "no crossing in [0,1)"
        )
    if abs(model.flux(side, root) - q) > 1e-10 * scale:
        raise ModelAssumptionError(
            f"side {side}: bisection failed to locate the crossing of q={q}"
        )
    return float(root)


@dataclass
class H1Report:
    """Outcome of the structural flux checks on both sides."""

    passed: bool
    sides: dict
    message: str = ""

    def __bool__(self):
        return self.passed


def validate_H1(model: FluxModel, n: int = _DEFAULT_SCAN) -> H1Report:
    """Sampling-based check of the flux structure on both sides.

    For each side: a crossing saturation u_i* exists in [0,1); f_i is
    nondecreasing on [0, u_i*]; f_i stays above q - 1e-10 at every sample in
    (u_i*, 1), with strictly positive excess somewhere; f_i(1) = q.  Returns a
    report carrying the first violating sample per side.
    """
    sides = {}
    ok_all = True
    for side in (1, 2):
        q = model.q
        info = {"u_star": None, "ok": True, "violations": []}
        try:
            ustar = find_u_star(model, side, n=n)
            info["u_star"] = ustar
        except ModelAssumptionError as exc:
            info["ok"] = False
            info["violations"].append({"reason": str(exc)})
            sides[side] = info
            ok_all = False
            continue
        u = np.linspace(0.0, 1.0, n + 1)
        f = model.flux(side, u)
        scale = max(q, 1.0)
        rising = u <= ustar + 1e-12
        df = np.diff(f[rising])
        if df.size and np.min(df) < -1e-12 * scale:
            k = int(np.argmin(df))
            info["ok"] = False
            info["violations"].append({
                "reason": "flux not nondecreasing below the crossing",
                "u": float(u[rising][k]), "value": float(df.min()),
            })
        interior = (u > ustar + 1e-12) & (u < 1.0 - 1e-12)
        if np.any(interior):
            excess = f[interior] - q
            if np.min(excess) < -1e-10 * scale:
                k = int(np.argmin(excess))
                info["ok"] = False
                info["violations"].append({
                    "reason": "flux dips below q beyond the crossing",
                    "u": float(u[interior][k]),
                    "value": float(excess.min()),
                })
            if np.max(excess) <= 1e-8 * scale:
                info["ok"] = False
                info["violations"].append({
                    "reason": "flux not strictly above q beyond the crossing",
                    "value": float(excess.max()),
                })
        if abs(f[-1] - q) > 1e-12 * scale:
            info["ok"] = False
            info["violations"].append({
                "reason": "f(1) != q", "value": float(f[-1] - q),
            })
        ok_all &= info["ok"]
        sides[side] = info
    msg = "pass" if ok_all else "; ".join(
        f"side {s}: {v['violations'][0]['reason']}"
        for s, v in sides.items() if not v["ok"]
    )
    return H1Report(passed=ok_all, sides=sides, message=msg)


@dataclass
class H2Report:
    """Fitted Hoelder lower bound of the flux excess near full saturation."""

    passed: bool
    R: float
    m: float
    alpha: float
    message: str = ""

    def __bool__(self):
        return self.passed


def validate_H2(model: FluxModel, side: int = 1, n_samples: int = 200,
                window_frac: float = 0.05, decades: float = 5.0) -> H2Report:
    """Fit f_side(phi^-1(s)) - q ~ R * (phi(1)-s)^m close to full saturation.

    Log-log regression over ``n_samples`` log-spaced potential gaps spanning
    ``decades`` decades below ``window_frac * phi(1)``.  Passes when the
    fitted exponent lies in (0,1) and the excess is strictly positive at all
    samples (so the lower-bound constant R is positive).  The condition is
    needed on side 1 only; side 2 can be probed by passing ``side=2``.
    """
    top = model.phi_of_1(side)
    alpha = window_frac * top
    gaps = np.logspace(math.log10(alpha), math.log10(alpha) - decades, n_samples)
    s = top - gaps
    u = model.phi_inv(side, s)
    excess = model.flux(side, u) - model.q
    if np.min(excess) <= 0.0:
        return H2Report(False, 0.0, float("nan"), alpha,
                        "flux excess nonpositive inside the window")
    m, logR = np.polyfit(np.log(gaps), np.log(excess), 1)
    R = float(np.min(excess / gaps ** m))
    ok = 0.0 < m < 1.0 and R > 0.0
    msg = "pass" if ok else f"fitted exponent m={m:.4f} outside (0,1)"
    return H2Report(passed=bool(ok), R=R, m=float(m), alpha=float(alpha),
                    message=msg)
