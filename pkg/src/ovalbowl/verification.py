"""Checks of the sharp asymptotics and two-solution difference diagnostics.

All checks take already extracted profiles (or solutions) and return plain
numbers; the report builders collect them along a tau ladder.
"""
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .bowl_ode import reference_Z0
from .errors import RangeError
from .level_profile import (CAP, extract_level, levelset_mean_curvatures, renormalize,
                            zoom_tip)
from .spectral import (SQRT2, THETA, GaussQuadrature, cutoff_C, cutoff_T, inner, psi0, psi1,
                       psi2, zeta)

Y_MAX = 2.0
Z_BAND = 0.3
RHO_MAX = 1.0
COLLAR_L = 0.5
TREND_BAND = 0.2
MONOTONE_BAND = 1e-4


def _finite_json(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (float, np.floating)):
            v = float(v)
            out[k] = v if np.isfinite(v) else None
        elif isinstance(v, (list, tuple)):
            out[k] = [list(map(float, p)) if isinstance(p, (list, tuple)) else p for p in v]
        else:
            out[k] = v
    return out


# ------------------------------------------------------------ single checks

def check_parabolic(rp, y_max=Y_MAX, n=801):
    t = abs(rp.tau)
    y = np.linspace(-y_max, y_max, n)
    ans = SQRT2 * (1 - (y ** 2 - 2) / (4 * t))
    return float(t * np.max(np.abs(rp.v(y) - ans)))


def check_intermediate(rp, z_band=Z_BAND, n=801):
    st = np.sqrt(abs(rp.tau))
    z = np.linspace(-(SQRT2 - z_band), SQRT2 - z_band, n)
    return float(np.max(np.abs(rp.v(st * z) - np.sqrt(2 - z ** 2))))


def check_tip(Z, Z0, rho_max=RHO_MAX, c2_cells=20):
    """(sup |Z - Z0|, sup of second-difference deviation) on [0, rho_max]."""
    rho = Z.x[Z.x <= rho_max * (1 + 1e-12)]
    val = float(np.max(np.abs(Z(rho) - Z0(rho))))
    d = rho_max / c2_cells
    p = np.linspace(0.0, rho_max, c2_cells + 1)
    # second differences centred on each point; at the axis Z is even
    def dd(f):
        fp = f(p)
        return np.concatenate([[2 * (fp[1] - fp[0])], fp[2:] - 2 * fp[1:-1] + fp[:-2]]) / d ** 2
    c2 = float(np.max(np.abs(dd(Z) - dd(Z0))))
    return val, c2


def tip_second_difference(Z, delta=0.05):
    """2 (Z(delta) - Z(0)) / delta^2, estimate of Z''(0)."""
    return float(2 * (Z(delta) - Z(0.0)) / delta ** 2)


def check_diameter(lp):
    h = lp.h
    ref = np.sqrt(2 * h * np.log(h))
    return abs(lp.d_plus / ref - 1), abs(lp.d_minus / ref - 1)


def check_concavity(lp):
    """max over interior column samples of (V^2)_xx - 1/V^2."""
    x, V = lp.x_columns, lp.V_columns
    if len(x) < 3:
        return float("nan")
    dx = np.diff(x)
    q = V ** 2
    d2 = 2 * ((q[2:] - q[1:-1]) / dx[1:] - (q[1:-1] - q[:-2]) / dx[:-1]) / (dx[1:] + dx[:-1])
    return float(np.max(d2 - 1.0 / q[1:-1]))


def check_collar(Y, tau, theta=THETA, L=COLLAR_L, floor=1e-8, n=401):
    """sup |1 + Y v / (2 Y_v)| on L/sqrt|tau| <= v <= 2 theta; NaN if inapplicable."""
    lo, hi = L / np.sqrt(abs(tau)), 2 * theta
    if lo >= hi:
        return float("nan")
    v = np.linspace(lo, hi, n)
    Yv = Y.derivative(v)
    if np.any(np.abs(Yv) < floor):
        return float("nan")
    return float(np.max(np.abs(1 + Y(v) * v / (2 * Yv))))


def check_meancurv(H, H_h):
    H, H_h = np.asarray(H, float), np.asarray(H_h, float)
    ok = np.isfinite(H) & np.isfinite(H_h) & (H > 0)
    if not ok.any():
        return float("nan")
    return float(np.max(np.abs(H[ok] - H_h[ok]) / H[ok] ** 3))


@dataclass
class ModeFit:
    tau: np.ndarray  # interior ladder points
    c0: np.ndarray
    residual: np.ndarray  # dc0/dtau + sqrt8 c0^2
    scale: np.ndarray  # sqrt8 c0^2


def fit_mode_ode(reports):
    """Finite-difference residuals of dc0/dtau + sqrt8 c0^2 = 0 along a ladder."""
    tau = np.array([r.tau0 for r in reports], float)
    c0 = np.array([r.c0 for r in reports], float)
    o = np.argsort(tau)
    tau, c0 = tau[o], c0[o]
    if len(tau) < 3:
        return ModeFit(tau[:0], c0[:0], c0[:0], c0[:0])
    h1, h2 = tau[1:-1] - tau[:-2], tau[2:] - tau[1:-1]
    # three-point derivative on a possibly uneven ladder
    dc = (-h2 / (h1 * (h1 + h2)) * c0[:-2] + (h2 - h1) / (h1 * h2) * c0[1:-1]
          + h1 / (h2 * (h1 + h2)) * c0[2:])
    sc = np.sqrt(8.0) * c0[1:-1] ** 2
    return ModeFit(tau[1:-1], c0[1:-1], dc + sc, sc)


def check_monotone_tip_map(records, band=MONOTONE_BAND):
    """True iff k rises by at least ``band`` between consecutive rows."""
    ks = [getattr(r, "k", r) for r in records]
    avals = [getattr(r, "a", i) for i, r in enumerate(records)]
    bad = []
    for i in range(len(ks) - 1):
        k0, k1 = ks[i], ks[i + 1]
        if not (np.isfinite(k0) and np.isfinite(k1)) or k1 - k0 < band:
            bad.append((avals[i], avals[i + 1], k0, k1))
    return not bad, bad


def trend_ok(values, band=TREND_BAND):
    """Bounded and non-increasing within a relative band, in ladder order."""
    v = np.asarray(values, float)
    if len(v) == 0 or not np.all(np.isfinite(v)):
        return False
    return bool(np.all(v[1:] <= (1 + band) * v[:-1]))


# ------------------------------------------------------------ asymptotics

@dataclass
class AsymptoticsReport:
    tau: float
    h: float = float("nan")
    parabolic_dev: float = float("nan")
    intermediate_dev: float = float("nan")
    tip_dev: float = float("nan")
    tip_c2_dev: float = float("nan")
    diameter_dev_plus: float = float("nan")
    diameter_dev_minus: float = float("nan")
    concavity_excess: float = float("nan")
    collar_dev: float = float("nan")
    meancurv_C: float = float("nan")
    status: str = "ok"

    @classmethod
    def fields(cls):
        return list(cls.__dataclass_fields__)

    def to_dict(self):
        return _finite_json(asdict(self))


@dataclass(frozen=True)
class CheckConfig:
    cap: float = CAP
    theta: float = THETA
    y_max: float = Y_MAX
    z_band: float = Z_BAND
    rho_max: float = RHO_MAX
    collar_L: float = COLLAR_L
    quad_order: int = 80


def asymptotics_report(sol, tau, cfg=CheckConfig(), Z0=None):
    h = float(np.exp(-tau))
    try:
        lp = extract_level(sol, h, cfg.cap)
    except RangeError as exc:
        return AsymptoticsReport(tau, h, status=f"range: {exc}")
    rp = renormalize(lp)
    Z0 = Z0 or reference_Z0(rho_max=max(4.0, 2 * cfg.rho_max))
    Z = zoom_tip(rp.Y_right, rp.tau, cfg.rho_max)
    tv, tc = check_tip(Z, Z0, cfg.rho_max)
    dp, dm = check_diameter(lp)
    mc = levelset_mean_curvatures(sol, lp)
    return AsymptoticsReport(
        tau, h, check_parabolic(rp, cfg.y_max), check_intermediate(rp, cfg.z_band), tv, tc,
        dp, dm, check_concavity(lp), check_collar(rp.Y_right, rp.tau, cfg.theta, cfg.collar_L),
        check_meancurv(mc.H, mc.H_h))


def tau_ladder(xi, cap=CAP, top=-5.0, bottom=-9.0):
    """Integer ladder top, top-1, ... down to max(bottom, -log(cap |xi|))."""
    lim = max(bottom, -np.log(cap * abs(xi)))
    n = int(np.floor(top - lim + 1e-9)) + 1
    return [top - i for i in range(max(n, 0))]


def asymptotics_ladder(sol, taus, cfg=CheckConfig()):
    Z0 = reference_Z0(rho_max=max(4.0, 2 * cfg.rho_max))
    return [asymptotics_report(sol, t, cfg, Z0) for t in taus]


def ladder_summary(reports, spacing, band=TREND_BAND, meancurv_ratio=3.0):
    """Pass/fail of the trend, boundedness and concavity checks on a ladder."""
    ok = [r for r in reports if r.status == "ok"]
    col = lambda name: [getattr(r, name) for r in ok]
    diam = [max(r.diameter_dev_plus, r.diameter_dev_minus) for r in ok]
    C = np.array(col("meancurv_C"), float)
    out = {}
    for name, vals in (("parabolic", col("parabolic_dev")), ("intermediate", col("intermediate_dev")),
                       ("tip", col("tip_dev")), ("diameter", diam)):
        out[f"{name}_trend"] = trend_ok(vals, band) if ok else True
    out["meancurv_bounded"] = bool(len(C) == 0 or (np.all(C > 0) and C.max() < meancurv_ratio * C.min()))
    out["concavity_ok"] = bool(all(c <= 10 * spacing ** 2 for c in col("concavity_excess")))
    return out


def sweep_analysis(tau0=None, theta=THETA, cap=CAP, quad_order=80, n_h=8, h_lo=np.exp(2.0)):
    """Record filler for sweeps: concavity over usable h, shift and eccentricity at tau0."""
    from .spectral import find_shift

    def fill(sol, rec):
        hi = cap * abs(sol.xi)
        if hi > h_lo:
            rec.concavity_excess = max(check_concavity(extract_level(sol, h, cap))
                                       for h in np.geomspace(h_lo, hi * (1 - 1e-12), n_h))
        if tau0 is not None:
            try:
                alpha, rep = find_shift(sol, tau0, theta=theta, q=GaussQuadrature(quad_order), cap=cap)
                rec.alpha, rec.eccentricity = alpha, rep.eccentricity
            except (RangeError, ValueError) as exc:
                rec.status = f"ok (no shift at tau0={tau0}: {exc})"
    return fill


# ------------------------------------------------------------------ diffs

@dataclass
class DiffReport:
    label1: str
    label2: str
    tau0: float
    theta: float
    w_H_norm: float
    wC_H_norm: float
    p_plus_mismatch: float
    p0_mismatch: float
    W_tip_norm: float
    hausdorff_by_h: list = field(default_factory=list)

    def to_dict(self):
        return _finite_json(asdict(self))

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _tip_grid(theta, n=600):
    lo = np.geomspace(1e-9 * theta, theta / 2, n, endpoint=False)
    return np.concatenate([lo, np.linspace(theta / 2, 2 * theta, n)])


def mu_weight(Y, theta=THETA, v=None):
    """mu(v) from the inverse profile Y, on v (default: tip grid to 2 theta)."""
    v = _tip_grid(theta) if v is None else np.asarray(v, float)
    z = zeta(theta)
    Yv = Y.derivative(v)
    Yval = Y(v)
    mu = -Yval ** 2 / 4
    inner_ = v < theta / 2
    if inner_.any():
        # mu_v = (1 - zeta)(1 + Y_v^2)/v - zeta (Y^2/4)_v ; integrate in s = log v
        s = np.log(v[inner_])
        top = theta / 2
        sg = np.concatenate([s, [np.log(top)]])
        vg = np.exp(sg)
        Yg, Ygv = Y(vg), Y.derivative(vg)
        dmu_ds = (1 - z(vg)) * (1 + Ygv ** 2) - z(vg) * vg * Yg * Ygv / 2
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (dmu_ds[1:] + dmu_ds[:-1]) * np.diff(sg))])
        # mu(v) = mu(top) - int_v^top mu_v
        mu_top = -Y(top) ** 2 / 4
        mu[inner_] = mu_top - (cum[-1] - cum[:-1])
    return v, mu


def tip_norm(W, mu, v):
    """(int_0^{2 theta} W^2 e^mu dv)^{1/2} by the trapezoid rule."""
    f = W ** 2 * np.exp(mu)
    return float(np.sqrt(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(v))))


def level_curve(lp, density=10):
    """Dense points along the level curve in the (x, r) plane."""
    x, V = lp.x_samples, lp.V_samples
    s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(x), np.diff(V)))])
    keep = np.concatenate([[True], np.diff(s) > 0])
    s, x, V = s[keep], x[keep], V[keep]
    t = np.linspace(0.0, s[-1], density * len(s))
    return np.column_stack([CubicSpline(s, x)(t), CubicSpline(s, V)(t)])


def hausdorff_levels(sol1, sol2, hs, cap=CAP, density=10):
    out = []
    for h in hs:
        P = level_curve(extract_level(sol1, h, cap), density)
        Q = level_curve(extract_level(sol2, h, cap), density)
        out.append((float(h), kernels.hausdorff(P, Q)))
    return out


def common_heights(sols, cap=CAP, h_lo=None, n=9):
    """Log-spaced heights usable by every solution (shifted heights)."""
    hi = min(cap * abs(s.xi) + s.shift for s in sols)
    lo = max([s.shift for s in sols] + [0.0]) + 1.0
    lo = max(lo, h_lo) if h_lo is not None else max(lo, np.exp(2.0))
    if not lo < hi:
        raise RangeError(f"no common usable heights: [{lo:.4g}, {hi:.4g}]")
    return list(np.geomspace(lo, hi * (1 - 1e-12), n))


def grid_error_estimate(fine, coarse, hs, cap=CAP):
    """Richardson estimate of the fine solution's level-curve error.

    coarse is the same (a, R, shift) on a grid twice as coarse; for a
    second-order scheme the fine error is about D(fine, coarse)/3.
    """
    return [(h, d / 3.0) for h, d in hausdorff_levels(fine, coarse, hs, cap)]


def diff_solutions(sol1, sol2, tau0, theta=THETA, cap=CAP, quad_order=80, hs=None,
                   labels=("sol1", "sol2")):
    """Difference norms between two (already shifted) solutions at tau0."""
    from .spectral import profile_at
    q = GaussQuadrature(quad_order)
    cut = cutoff_C(theta)
    rp1 = profile_at(sol1, tau0, 0.0, cap)
    rp2 = profile_at(sol2, tau0, 0.0, cap)
    w = lambda y: rp1.v(y) - rp2.v(y)
    wC = lambda y: cut(rp1.v(y)) * rp1.v(y) - cut(rp2.v(y)) * rp2.v(y)
    nw = np.sqrt(inner(w, w, q))
    nwc = np.sqrt(inner(wC, wC, q))
    pp = max(abs(inner(wC, psi1, q)) / inner(psi1, psi1, q), abs(inner(wC, psi2, q)) / inner(psi2, psi2, q))
    p0 = abs(inner(wC, psi0, q)) / inner(psi0, psi0, q)
    phiT = cutoff_T(theta)
    tips = []
    for side in ("right", "left"):
        Y1 = rp1.Y_right if side == "right" else rp1.Y_left
        Y2 = rp2.Y_right if side == "right" else rp2.Y_left
        if min(Y1.x[-1], Y2.x[-1]) < 2 * theta:
            raise RangeError(f"{side} inverse profile does not reach v = 2 theta")
        v, mu = mu_weight(Y1, theta)
        tips.append(tip_norm(phiT(v) * (Y1(v) - Y2(v)), mu, v))
    hs = common_heights([sol1, sol2], cap) if hs is None else hs
    D = hausdorff_levels(sol1, sol2, hs, cap)
    return DiffReport(labels[0], labels[1], float(tau0), theta, float(nw), float(nwc), float(pp),
                      float(p0), float(max(tips)), D)
