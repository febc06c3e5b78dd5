"""Gaussian inner products, cutoffs, projections and the shift map.

Hilbert space L^2(R, e^{-y^2/4} dy) with unstable modes 1, y and neutral
mode psi0 = y^2 - 2.  Profiles are zero-extended beyond their diameter.
"""
import json
from dataclasses import asdict, dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.optimize import brentq

from .errors import ConsistencyError, RangeError
from .level_profile import CAP, Sampled, extract_level, renormalize

SQRT2 = np.sqrt(2.0)
THETA = 0.2
QUAD_ORDER = 80
CENTER_TOL = 1e-8
RAMP = 2.0 / 15.0  # smoothing width of the trapezoid derivative, as a fraction of the transition


@dataclass(frozen=True)
class GaussQuadrature:
    """Nodes/weights for int f(y) e^{-y^2/4} dy (Gauss-Hermite, y = 2t)."""
    order: int = QUAD_ORDER

    def __post_init__(self):
        t, w = hermgauss(self.order)
        object.__setattr__(self, "nodes", 2.0 * t)
        object.__setattr__(self, "weights", 2.0 * w)

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def _values(f, q):
    if callable(f):
        return np.asarray(f(q.nodes), dtype=float) * np.ones_like(q.nodes)
    return np.full_like(q.nodes, float(f))


def inner(f, g, q):
    """<f, g> in the Gaussian space; f, g callables (Sampled) or constants."""
    return q.integrate(_values(f, q) * _values(g, q))


def norm(f, q):
    return np.sqrt(max(inner(f, f, q), 0.0))


psi1 = lambda y: np.ones_like(np.asarray(y, dtype=float))
psi2 = lambda y: np.asarray(y, dtype=float)
psi0 = lambda y: np.asarray(y, dtype=float) ** 2 - 2.0


# ------------------------------------------------------------------ cutoffs

@dataclass(frozen=True)
class SmoothStep:
    """C^2 monotone step from 0 (v <= lo) to 1 (v >= hi).

    The derivative is a trapezoid with smoothstep ramps of width
    ramp*(hi - lo); its plateau is 1/((hi - lo)(1 - ramp)).
    """
    lo: float
    hi: float
    ramp: float = RAMP

    @property
    def peak(self):
        return 1.0 / ((self.hi - self.lo) * (1.0 - self.ramp))

    def _parts(self, v):
        v = np.asarray(v, dtype=float)
        w = self.hi - self.lo
        d = self.ramp * w
        return v, d, self.peak

    def __call__(self, v):
        v, d, P = self._parts(v)
        S = lambda t: t ** 3 - 0.5 * t ** 4
        t1 = np.clip((v - self.lo) / d, 0, 1)
        t2 = np.clip((self.hi - v) / d, 0, 1)
        mid = P * d / 2 + P * (v - self.lo - d)
        out = np.where(v <= self.lo + d, P * d * S(t1), np.where(v >= self.hi - d, 1 - P * d * S(t2), mid))
        return np.where(v <= self.lo, 0.0, np.where(v >= self.hi, 1.0, out))

    def derivative(self, v, nu=1):
        v, d, P = self._parts(v)
        t1 = np.clip((v - self.lo) / d, 0, 1)
        t2 = np.clip((self.hi - v) / d, 0, 1)
        if nu == 1:
            s = lambda t: 3 * t ** 2 - 2 * t ** 3
            return P * np.minimum(s(t1), s(t2))
        if nu == 2:
            ds = lambda t: 6 * t - 6 * t ** 2
            return np.where(v < self.lo + d, P * ds(t1) / d, np.where(v > self.hi - d, -P * ds(t2) / d, 0.0))
        raise ValueError("only first and second derivatives")

    def describe(self):
        return {"lo": self.lo, "hi": self.hi, "ramp": self.ramp, "peak_slope": self.peak,
                "shape": "smoothstep-ramped trapezoid derivative"}


def cutoff_C(theta=THETA):
    """phi_C: 0 for v <= 5 theta/8, 1 for v >= 7 theta/8, slope <= 5/theta."""
    return SmoothStep(5 * theta / 8, 7 * theta / 8)


def cutoff_T(theta=THETA):
    """phi_T(v) = 1 - step on [theta, 2 theta]: 1 on the tip, 0 for v >= 2 theta."""
    s = SmoothStep(theta, 2 * theta)
    return lambda v: 1.0 - s(v)


def zeta(theta=THETA):
    """zeta: 0 for v <= theta/4, 1 for v >= theta/2, 0 <= zeta' <= 5/theta."""
    return SmoothStep(theta / 4, theta / 2)


# --------------------------------------------------------------- quantities

def cylindrical_profile(rp, cut):
    """v_C = phi_C(v) v as a callable Sampled on the profile's y-range."""
    f = lambda y: cut(rp.v(y)) * rp.v(y)
    return Sampled(rp.y_samples, cut(rp.v_samples) * rp.v_samples, func=f)


def _check_order(q):
    if q.order < 40:
        raise ValueError(f"quadrature order {q.order} < 40")


def projections(v_C, q):
    """((p1, p2), c0, |p_minus|) for v_C - sqrt(2)."""
    _check_order(q)
    dv = _values(v_C, q) - SQRT2
    g = [_values(p, q) for p in (psi1, psi2, psi0)]
    nn = [q.integrate(b * b) for b in g]
    co = [q.integrate(dv * b) / n_ for b, n_ in zip(g, nn)]
    tot = q.integrate(dv * dv)
    rest = tot - sum(c * c * n_ for c, n_ in zip(co, nn))
    return (co[0], co[1]), co[2], float(np.sqrt(max(rest, 0.0)))


def kappa_residual(v_C, tau0, q):
    """|tau0| * || v_C - sqrt2 + psi0/(sqrt8 |tau0|) ||."""
    t = abs(tau0)
    dv = _values(v_C, q) - SQRT2 + _values(psi0, q) / (np.sqrt(8.0) * t)
    return t * np.sqrt(q.integrate(dv * dv))


def eccentricity(v_C, q):
    return q.integrate(_values(v_C, q) * (2.0 - q.nodes ** 2))


def expected_eccentricity(tau0):
    return 4 * np.sqrt(2 * np.pi) / abs(tau0)


# ---------------------------------------------------------------- shift map

@dataclass
class SpectralReport:
    tau0: float
    alpha_shift: float
    p_plus_residual: float
    p_plus_1: float
    p_plus_y: float
    c0: float
    kappa_residual: float
    eccentricity: float
    p_minus_norm: float
    theta: float
    quad_order: int
    cap: float
    a: float = float("nan")
    xi: float = float("nan")

    def to_dict(self):
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in asdict(self).items()}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self):
        d = self.to_dict()
        w = max(len(k) for k in d)
        return "\n".join(f"{k:<{w}}  {v!r}" for k, v in d.items())


def spectral_report(rp, tau0, alpha=0.0, theta=THETA, q=None, cap=CAP, meta=None):
    q = q or GaussQuadrature()
    vc = cylindrical_profile(rp, cutoff_C(theta))
    (p1, p2), c0, pm = projections(vc, q)
    meta = meta or {}
    return SpectralReport(float(tau0), float(alpha), max(abs(p1), abs(p2)), p1, p2, c0,
                          kappa_residual(vc, tau0, q), eccentricity(vc, q), pm, theta, q.order, cap,
                          meta.get("a", float("nan")), meta.get("xi", float("nan")))


def profile_at(sol, tau0, alpha=0.0, cap=CAP):
    """Renormalised profile of sol shifted by alpha, at tau0 (h0 = e^{-tau0})."""
    h0 = np.exp(-tau0)
    lp = extract_level(sol.shifted(alpha), h0, cap)
    return renormalize(lp, tau=tau0)


def find_shift(sol, tau0, tol=CENTER_TOL, theta=THETA, q=None, cap=CAP, h_floor=1.0):
    """alpha with <v^alpha_C - sqrt2, 1> = 0 at tau0, plus the report there.

    p(alpha) is decreasing: a larger shift lowers the level h0 - alpha and
    narrows the profile.
    """
    q = q or GaussQuadrature()
    cut = cutoff_C(theta)
    h0 = np.exp(-tau0)
    target = 2.0 * np.sqrt(2.0 * np.pi)
    # admissible alpha keeps the raw height h0 - shift - alpha in [h_floor, cap|xi|]
    a_min = h0 - sol.shift - cap * abs(sol.xi)
    a_max = h0 - sol.shift - h_floor
    if a_min >= a_max:
        raise RangeError(f"tau0={tau0} has no usable heights (cap {cap}, xi {sol.xi})")

    def p(alpha):
        rp = profile_at(sol, tau0, alpha, cap)
        return inner(cylindrical_profile(rp, cut), psi1, q) - target

    lo = hi = min(max(0.0, a_min), a_max)
    p_lo = p_hi = p(lo)
    step = 0.05 * h0
    if p_lo > 0:  # too wide: shift up (increase alpha)
        while p_hi > 0:
            lo, p_lo = hi, p_hi
            if hi >= a_max:
                raise RangeError(f"shift root above usable range at tau0={tau0}")
            hi = min(hi + step, a_max)
            p_hi = p(hi)
            step *= 2
    else:
        while p_lo < 0:
            hi, p_hi = lo, p_lo
            if lo <= a_min:
                raise RangeError(f"shift root below usable range at tau0={tau0}")
            lo = max(lo - step, a_min)
            p_lo = p(lo)
            step *= 2
    if p_lo == 0:
        alpha = lo
    elif p_hi == 0:
        alpha = hi
    else:
        alpha = brentq(p, lo, hi, xtol=1e-13 * max(h0, 1.0), rtol=4 * np.finfo(float).eps, maxiter=200)
    rp = profile_at(sol, tau0, alpha, cap)
    rep = spectral_report(rp, tau0, sol.shift + alpha, theta, q, cap, {"a": sol.a, "xi": sol.xi})
    if abs(rep.p_plus_y) > 1e-6:
        raise ConsistencyError(f"y-projection {rep.p_plus_y:.3g} of a reflection-symmetric profile")
    if rep.p_plus_residual > tol:
        raise ConsistencyError(f"centering residual {rep.p_plus_residual:.3g} > {tol}")
    return alpha, rep
