"""Level sets of a translator solution and their renormalised profiles.

For a solution u on the (x, r) half-plane the level set at height h above
the tip is the curve {u = xi + h}.  Its radius function V(x) is read off
column by column (root of u(x_i, .) = xi + h); near the two tips the curve
is steep in x, so it is also sampled row by row (root of u(., r_j)) and the
tip branches x = X(r) are kept where |dX/dr| < 1.

Renormalisation at time tau: y = e^{tau/2} x, v = e^{tau/2} V, default
tau = -log h.  Y(v) is the inverse on either side of the maximum and
Z(rho) = |tau|^{1/2} (Y(|tau|^{-1/2} rho) - Y(0)) the zoomed tip.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import ExtractionError, InversionError, RangeError
from .grid import INTERIOR

FORMAT_VERSION = 1
CAP = 0.3  # asymptotics only trusted for h <= CAP * |xi|


class DomainError(RangeError):
    """Level height outside (0, cap*|xi|]."""


@dataclass
class Sampled:
    """A function of one variable on [x[0], x[-1]], zero outside.

    ``func`` (if given) is the evaluator used instead of a cubic spline
    through the samples.
    """
    x: np.ndarray
    values: np.ndarray
    func: object = None
    extend_zero: bool = True

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.func is None:
            self.func = CubicSpline(self.x, self.values)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.func(t), dtype=float)
        if self.extend_zero:
            out = np.where((t < self.x[0]) | (t > self.x[-1]), 0.0, out)
        return out

    def derivative(self, t, nu=1):
        if hasattr(self.func, "derivative"):
            return self.func.derivative(nu)(t)
        return CubicSpline(self.x, self.values).derivative(nu)(t)


# ------------------------------------------------------------------ roots

def _hermite_root(f0, f1, d0, d1, step, level):
    """t in [0,1] where the cubic Hermite through (f0,d0),(f1,d1) hits level.

    Slopes are limited (Fritsch-Carlson) so the cubic is monotone and the
    root unique; bisection then two Newton steps.
    """
    delta = (f1 - f0) / step
    d0 = np.where(d0 * delta > 0, d0, 0.0)
    d1 = np.where(d1 * delta > 0, d1, 0.0)
    al, be = d0 / delta, d1 / delta
    nrm = al * al + be * be
    sc = np.where(nrm > 9.0, 3.0 / np.sqrt(np.maximum(nrm, 1e-300)), 1.0)
    m0, m1 = d0 * sc * step, d1 * sc * step

    def p(t):
        t2, t3 = t * t, t * t * t
        return ((2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * m0
                + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * m1 - level)

    def dp(t):
        t2 = t * t
        return (6 * t2 - 6 * t) * (f0 - f1) + (3 * t2 - 4 * t + 1) * m0 + (3 * t2 - 2 * t) * m1

    lo, hi = np.zeros_like(f0), np.ones_like(f0)
    sgn = np.sign(f1 - f0)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        up = sgn * p(mid) > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    t = 0.5 * (lo + hi)
    for _ in range(2):
        d = dp(t)
        t = np.where(np.abs(d) > 0, np.clip(t - p(t) / np.where(d == 0, 1, d), 0, 1), t)
    return t


def _crossings(lines, ok, level, step, names):
    """First crossing of each line of samples through ``level``.

    lines[:, 2] is the start (< level); lines[:, :2] are the two previous
    samples (mirror or actual neighbours) used by the derivative stencil.
    ok flags samples that are interior nodes.  Returns the offset of the
    crossing from the start, in length units, and the bracket index.
    """
    m, n = lines.shape
    body = lines[:, 2:]
    below = body < level
    j0 = np.argmin(below, axis=1) - 1  # last index below before the first crossing
    if np.any(j0 < 0):
        raise ExtractionError(f"no crossing on {names(int(np.argmax(j0 < 0)))}")
    after = below & (np.arange(body.shape[1])[None, :] > j0[:, None])
    if np.any(after.any(axis=1)):
        raise ExtractionError(f"non-monotone {names(int(np.argmax(after.any(axis=1))))}")
    pad = np.concatenate([lines, np.repeat(lines[:, -1:], 3, axis=1)], axis=1)
    okp = np.concatenate([ok, np.zeros((m, 3), bool)], axis=1)
    k = j0 + 2  # bracket [k, k+1] in padded indexing
    rows = np.arange(m)
    f = [pad[rows, k + s] for s in range(-2, 4)]
    good = np.all([okp[rows, k + s] for s in range(-2, 4)], axis=0)
    d0 = (-f[4] + 8 * f[3] - 8 * f[1] + f[0]) / (12 * step)
    d1 = (-f[5] + 8 * f[4] - 8 * f[2] + f[1]) / (12 * step)
    sec = (f[3] - f[2]) / step
    d0 = np.where(good, d0, sec)
    d1 = np.where(good, d1, sec)
    t = _hermite_root(f[2], f[3], d0, d1, step, level)
    return (j0 + t) * step, j0


# ---------------------------------------------------------------- profiles

@dataclass
class LevelProfile:
    h: float
    d_minus: float
    d_plus: float
    x_samples: np.ndarray  # merged curve, increasing, endpoints included
    V_samples: np.ndarray
    x_columns: np.ndarray = None  # uniform column samples only
    V_columns: np.ndarray = None
    tip_r: np.ndarray = None  # rows kept on the tip branches
    tip_x_plus: np.ndarray = None
    tip_x_minus: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x_samples = np.asarray(self.x_samples, dtype=float)
        self.V_samples = np.asarray(self.V_samples, dtype=float)
        if self.x_columns is None:
            self.x_columns, self.V_columns = self.x_samples, self.V_samples

    @property
    def tau(self):
        return -np.log(self.h)

    def to_csv(self, path):
        write_profile_csv(path, ("x", "V"), self.x_samples, self.V_samples,
                          _header(self.h, self.tau, self.meta))


def usable_heights(sol, cap=CAP):
    """(0, h_max] with h_max = cap*|xi|, expressed in shifted heights."""
    return 0.0, cap * abs(sol.xi) + sol.shift


def extract_level(sol, h, cap=CAP):
    """Level set of graph(u - xi) shifted by sol.shift at height h.

    The raw height above the tip is h - sol.shift (shifting M by alpha*e1
    lowers every level by alpha).
    """
    hr = h - sol.shift
    if not (0 < hr < -sol.xi):
        raise DomainError(f"height {h} outside the solution (raw {hr}, depth {-sol.xi})")
    if hr > cap * abs(sol.xi) * (1 + 1e-12):
        raise DomainError(f"height {h} above the contamination cap {cap}*|xi|")
    g = sol.grid
    U = sol.u
    ok = g.mask == INTERIOR
    level = sol.xi + hr
    c = g.center
    dx, dr = g.dx, g.dr

    # axis row: d+ and d-
    lines = [U[c - 2:, 0], U[:c + 3, 0][::-1]]
    okl = [ok[c - 2:, 0], ok[:c + 3, 0][::-1]]
    n = min(len(lines[0]), len(lines[1]))
    (d_plus, d_minus), _ = _crossings(np.stack([l_[:n] for l_ in lines]),
                                      np.stack([o[:n] for o in okl]), level, dx,
                                      lambda k: ("axis row, right" if k == 0 else "axis row, left"))

    # columns
    cols = np.nonzero(U[:, 0] < level)[0]
    ext = np.concatenate([U[cols][:, 2:0:-1], U[cols]], axis=1)
    okx = np.concatenate([ok[cols][:, 2:0:-1], ok[cols]], axis=1)
    Vc, _ = _crossings(ext, okx, level, dr, lambda k: f"column {cols[k]} (x={g.x_nodes[cols[k]]:.6g})")
    xc = g.x_nodes[cols]

    # rows, both sides of the centre column
    rws = np.nonzero(U[c, :] < level)[0]
    R_lines = U[c - 2:, rws].T
    L_lines = U[:c + 3, rws][::-1].T
    m = min(R_lines.shape[1], L_lines.shape[1])
    both = np.concatenate([R_lines[:, :m], L_lines[:, :m]])
    okb = np.concatenate([ok[c - 2:, rws].T[:, :m], ok[:c + 3, rws][::-1].T[:, :m]])
    X, _ = _crossings(both, okb, level, dx,
                      lambda k: f"row {rws[k % len(rws)]} ({'right' if k < len(rws) else 'left'})")
    Xp, Xm = X[:len(rws)], X[len(rws):]
    rr = g.r_nodes[rws]

    # keep row samples while the branch is steep in x (|dX/dr| < 1)
    def cut(Xs):
        sl = np.abs(np.diff(Xs)) / dr
        bad = np.nonzero(sl >= 1)[0]
        return int(bad[0]) + 1 if len(bad) else len(Xs)
    nk = max(1, min(cut(Xp), cut(Xm)))
    tr, txp, txm = rr[:nk], Xp[:nk], Xm[:nk]
    keep = (xc < txp[-1] - 0.05 * dx) & (xc > -txm[-1] + 0.05 * dx)
    xs = np.concatenate([-txm, xc[keep], txp[::-1]])
    Vs = np.concatenate([tr, Vc[keep], tr[::-1]])
    xs[0], xs[-1] = -d_minus, d_plus  # identical to the row-0 roots
    meta = {"a": sol.a, "xi": sol.xi, "shift": sol.shift, "cap": cap, "dx": dx, "dr": dr,
            "spacing": g.spacing, "raw_height": hr, "format_version": FORMAT_VERSION}
    return LevelProfile(h, float(d_minus), float(d_plus), xs, Vs, xc, Vc, tr, txp, txm, meta)


@dataclass
class RenormalizedProfile:
    tau: float
    h: float
    y_samples: np.ndarray
    v_samples: np.ndarray
    Z_samples: Sampled = None
    scale: float = 1.0  # e^{tau/2}
    profile: LevelProfile = None
    v2: object = None  # spline of V^2 in physical x
    n: int = 2001
    _inverse: dict = field(default_factory=dict, repr=False)

    @property
    def Y_right(self):
        return invert_profile(self, "right")

    @property
    def Y_left(self):
        return invert_profile(self, "left")

    def v(self, y):
        """v(y, tau), zero beyond the diameter."""
        y = np.asarray(y, dtype=float)
        s = self.scale
        out = s * np.sqrt(np.clip(self.v2(y / s), 0.0, None))
        return np.where((y < self.y_samples[0]) | (y > self.y_samples[-1]), 0.0, out)

    @property
    def sampled(self):
        return Sampled(self.y_samples, self.v_samples, func=self.v)

    @property
    def v_max(self):
        return float(self.v_samples.max())

    def to_csv(self, path):
        meta = dict(self.profile.meta) if self.profile is not None else {}
        write_profile_csv(path, ("y", "v"), self.y_samples, self.v_samples,
                          _header(self.h, self.tau, meta))


def _branch(lp, s, side):
    """Evaluator for x(V) on one side of the maximum, in renormalised units."""
    x, V = lp.x_samples, lp.V_samples
    top = int(np.argmax(V))
    if side == "right":
        bx, bV = x[top:], V[top:]
        tip = lp.tip_x_plus
    else:
        bx, bV = x[:top + 1][::-1], V[:top + 1][::-1]
        tip = None if lp.tip_x_minus is None else -lp.tip_x_minus
    if np.any(np.diff(bV) >= 0):
        k = int(np.argmax(np.diff(bV) >= 0))
        raise InversionError(f"profile not strictly monotone on the {side} side near x={bx[k]:.6g}")
    # increasing in v
    vv, yy = (bV * s)[::-1], (bx * s)[::-1]
    pchip = PchipInterpolator(vv, yy)
    if tip is None or len(tip) < 4:
        return pchip, vv[-1]
    # tip rows: x(r) is even in r; a symmetric spline keeps Y_v(0) = 0
    r = lp.tip_r * s
    spl = CubicSpline(np.concatenate([-r[:0:-1], r]), np.concatenate([tip[:0:-1], tip]) * s)
    vs = r[-1]

    def f(v):
        v = np.asarray(v, dtype=float)
        return np.where(v <= vs, spl(np.minimum(v, vs)), pchip(np.clip(v, vv[0], vv[-1])))
    f.derivative = lambda nu=1: (lambda v: np.where(np.asarray(v) <= vs, spl.derivative(nu)(np.minimum(v, vs)),
                                                   pchip.derivative(nu)(np.clip(v, vv[0], vv[-1]))))
    return f, vv[-1]


def renormalize(lp, tau=None, n=2001):
    """Renormalised profile at ``tau`` (default -log h)."""
    tau = -np.log(lp.h) if tau is None else float(tau)
    s = np.exp(tau / 2)
    v2 = CubicSpline(lp.x_samples, lp.V_samples ** 2, bc_type="natural")
    y = np.linspace(-lp.d_minus * s, lp.d_plus * s, n)
    v = s * np.sqrt(np.clip(v2(y / s), 0.0, None))
    return RenormalizedProfile(tau, lp.h, y, v, scale=s, profile=lp, v2=v2, n=n)


def invert_profile(rp, side="right"):
    """Sampled Y(v, tau) on a uniform v-grid over [0, v_max] (built once)."""
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    if side not in rp._inverse:
        func, vmax = _branch(rp.profile, rp.scale, side)
        vg = np.linspace(0.0, vmax, rp.n)
        rp._inverse[side] = Sampled(vg, func(vg), func=func, extend_zero=False)
    return rp._inverse[side]


def zoom_tip(Y, tau, rho_max, n=401, side="right"):
    """Z(rho) = |tau|^{1/2} (Y(|tau|^{-1/2} rho) - Y(0)) on [0, rho_max].

    The left branch is reflected so both tips give Z <= 0.
    """
    st = np.sqrt(abs(tau))
    if rho_max / st > Y.x[-1] * (1 + 1e-12):
        raise RangeError(f"rho_max={rho_max} needs v up to {rho_max / st:.4g}, "
                         f"branch covers {Y.x[-1]:.4g}")
    rho = np.linspace(0.0, rho_max, n)
    vals = Y(rho / st)
    sign = 1.0 if side == "right" else -1.0
    Z = sign * st * (vals - vals[0])
    if side == "right":
        func = lambda p: st * (Y(np.asarray(p) / st) - vals[0])
    else:
        func = lambda p: -st * (Y(np.asarray(p) / st) - vals[0])
    # a callable keeps Z(0) = 0 exactly; samples are what export and checks use
    return Sampled(rho, Z, func=func)


# ----------------------------------------------------------- mean curvature

@dataclass
class MeanCurvatureSamples:
    x: np.ndarray
    V: np.ndarray
    H: np.ndarray  # 1/W on the translator
    H_h: np.ndarray  # level-set mean curvature
    skipped: np.ndarray  # boolean, samples too close to the tips
    source: np.ndarray = None  # "column" or "row"


def _lagrange_weights(t):
    """Cubic Lagrange weights for nodes -1, 0, 1, 2 at offset t, shape (n, 4)."""
    return np.stack([-t * (t - 1) * (t - 2) / 6, (t + 1) * (t - 1) * (t - 2) / 2,
                     -(t + 1) * t * (t - 2) / 2, (t + 1) * t * (t - 1) / 6], axis=-1)


def gradient_at(sol, x, r):
    """(u_x, u_r) at points (x, r): 4th-order nodal differences, bicubic Lagrange."""
    g = sol.grid
    U = sol.u
    p = 4
    ext = np.concatenate([U[:, p:0:-1], U, np.repeat(U[:, -1:], p, axis=1)], axis=1)
    ext = np.concatenate([np.repeat(ext[:1], p, axis=0), ext, np.repeat(ext[-1:], p, axis=0)], axis=0)
    x, r = np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(r, float))
    fx = (x - g.x_nodes[0]) / g.dx
    fr = r / g.dr
    i0, j0 = np.floor(fx).astype(int), np.floor(fr).astype(int)
    I = (i0[:, None] + np.arange(-1, 3))[:, :, None] + p
    J = (j0[:, None] + np.arange(-1, 3))[:, None, :] + p
    ux = (-ext[I + 2, J] + 8 * ext[I + 1, J] - 8 * ext[I - 1, J] + ext[I - 2, J]) / (12 * g.dx)
    ur = (-ext[I, J + 2] + 8 * ext[I, J + 1] - 8 * ext[I, J - 1] + ext[I, J - 2]) / (12 * g.dr)
    wx, wr = _lagrange_weights(fx - i0), _lagrange_weights(fr - j0)
    return (np.einsum("ni,nij,nj->n", wx, ux, wr), np.einsum("ni,nij,nj->n", wx, ur, wr))


def _column_curvatures(x, V, dx):
    n = len(x)
    Vx, Vxx = np.full(n, np.nan), np.full(n, np.nan)
    Vx[1:-1] = (V[2:] - V[:-2]) / (2 * dx)
    Vxx[1:-1] = (V[2:] - 2 * V[1:-1] + V[:-2]) / dx ** 2
    q = np.sqrt(1 + Vx ** 2)
    return -Vxx / q ** 3 + 1.0 / (V * q), Vx


def _row_curvatures(r, X, dr):
    """Tip branch x = X(r) with X even in r; X' <= 0 on the right tip."""
    Xe = np.concatenate([X[1:2], X, [np.nan]])  # mirror below the axis
    Xr = (Xe[2:] - Xe[:-2]) / (2 * dr)
    Xrr = (Xe[2:] - 2 * Xe[1:-1] + Xe[:-2]) / dr ** 2
    q = np.sqrt(1 + Xr ** 2)
    rot = np.where(r > 0, -Xr / np.where(r > 0, r, 1.0) / q, -Xrr)
    return -Xrr / q ** 3 + rot, Xr


def levelset_mean_curvatures(sol, lp, floor=0.02):
    """H = 1/W and H_h of the surface of revolution Sigma^h.

    Column samples are used where |V_x| <= 1 and tip-branch rows where
    |X_r| < 1, each with centred differences.  Samples with V below
    floor*max(V) (other than the axis rows) are skipped and flagged.
    """
    g = sol.grid
    Hc, Vx = _column_curvatures(lp.x_columns, lp.V_columns, g.dx)
    cm = np.isfinite(Vx) & (np.abs(np.nan_to_num(Vx, nan=np.inf)) <= 1)
    xs, Vs, Hh, src = [lp.x_columns[cm]], [lp.V_columns[cm]], [Hc[cm]], [np.full(cm.sum(), "column")]
    if lp.tip_r is not None and len(lp.tip_r) >= 3:
        for sgn, X in ((1.0, lp.tip_x_plus), (-1.0, lp.tip_x_minus)):
            Hr, Xr = _row_curvatures(lp.tip_r, X, g.dr)
            rm = np.isfinite(Xr) & (np.abs(np.nan_to_num(Xr, nan=np.inf)) < 1)
            xs.append(sgn * X[rm])
            Vs.append(lp.tip_r[rm])
            Hh.append(Hr[rm])
            src.append(np.full(rm.sum(), "row"))
    x, V, Hh, src = (np.concatenate(z) for z in (xs, Vs, Hh, src))
    o = np.argsort(x, kind="stable")
    x, V, Hh, src = x[o], V[o], Hh[o], src[o]
    ux, ur = gradient_at(sol, x, V)
    H = 1.0 / np.sqrt(1 + ux ** 2 + ur ** 2)
    skipped = (V < floor * V.max()) & ~((src == "row") & (V == 0))
    H = np.where(skipped, np.nan, H)
    Hh = np.where(skipped, np.nan, Hh)
    return MeanCurvatureSamples(x, V, H, Hh, skipped, src)


# ------------------------------------------------------------------ export

def _header(h, tau, meta):
    keys = " ".join(f"{k}={float(meta[k])!r}" for k in ("a", "xi") if k in meta)
    return f"# profile h={float(h)!r} tau={float(tau)!r} {keys} format_version={FORMAT_VERSION}"


def write_profile_csv(path, names, a, b, header):
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        fh.write(",".join(names) + "\n")
        for p, q in zip(a, b):
            fh.write(f"{p:.17g},{q:.17g}\n")


def read_profile_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    meta = dict(kv.split("=", 1) for kv in header.lstrip("# ").split()[1:])
    return names, data[:, 0], data[:, 1], meta
