"""SO(2)-reduced graphical translator Dirichlet problem on ellipsoidal domains.

The upward moving translator equation div(grad u / W) = 1 / W, W^2 = 1 + |grad u|^2,
reduced by rotation about the x axis, reads

    d_x(u_x / W) + (1/r) d_r(r u_r / W) - 1/W = 0,   u = 0 on the ellipse.

It is discretised in flux form with cut-cell (Shortley-Weller) boundary
distances and solved by damped Newton with an analytic sparse Jacobian.
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import ConsistencyError, FormatError, NonConvergenceError, RangeError
from .grid import A_MAX, A_MIN, INTERIOR, EllipsoidalDomain, Grid2D, make_grid

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
NEWTON_TOL = 1e-10
DEPTH_RTOL = 1e-4
CURVATURE_TOL = 1e-2
MONOTONE_TOL = 1e-9
ROUNDOFF_FACTOR = 64


@dataclass(frozen=True)
class SolverConfig:
    tol: float = NEWTON_TOL
    max_iter: int = 60
    min_damping: float = 2.0**-12
    permc_spec: str = "MMD_AT_PLUS_A"


@dataclass
class GraphSolution:
    domain: EllipsoidalDomain
    grid: Grid2D
    u: np.ndarray  # (nx, nr), zero on boundary and exterior nodes
    xi: float
    residual_inf: float
    newton_iters: int
    config: SolverConfig = field(default_factory=SolverConfig)
    flags: dict = field(default_factory=dict)
    shift: float = 0.0  # translation of graph(u - xi) along e1

    @property
    def a(self):
        return self.domain.a

    @property
    def R(self):
        return self.domain.R

    def height_above_tip(self):
        """u - xi: the tip-normalised translator-with-boundary M^{a,xi}."""
        return self.u - self.xi

    def shifted(self, alpha):
        return replace(self, shift=self.shift + alpha)

    @property
    def tag(self):
        return solution_tag("sol", self.a, self.xi)


def _bind(grid):
    plan = grid.plan
    coef = plan.coefficients(grid.dx, grid.dr, grid.r_nodes)
    return {
        "main_idx": plan.edge_main_idx, "main_coef": coef["main_coef"],
        "other_idx": plan.edge_other_idx, "other_coef": coef["other_coef"],
        "rows": plan.edge_rows, "row_w": coef["row_w"],
        "node_idx": np.ascontiguousarray(np.concatenate([plan.gx_idx, plan.gr_idx], axis=1)),
        "node_coef": np.ascontiguousarray(coef["node_coef"]),
        "slot_edge": plan.slot_edge, "slot_node": plan.slot_node,
        "N": plan.N, "nnz": plan.nnz,
    }


def _gather(u, grid):
    plan = grid.plan
    uu = np.zeros(plan.N + 1)
    uu[:plan.N] = u[plan.I, plan.J]
    return uu


def _scatter(uu, grid):
    plan = grid.plan
    u = np.zeros((grid.nx, grid.nr))
    u[plan.I, plan.J] = uu[:plan.N]
    return u


def assemble_residual(u, grid, domain=None, arrays=None):
    """Residual at interior nodes as an (nx, nr) array (zero elsewhere)."""
    arrays = arrays or _bind(grid)
    res, _ = kernels.assemble(_gather(u, grid), arrays, want_jac=False)
    out = np.zeros((grid.nx, grid.nr))
    out[grid.plan.I, grid.plan.J] = res
    return out


def assemble_jacobian(u, grid, arrays=None):
    """(residual vector, CSR Jacobian) with respect to interior unknowns."""
    arrays = arrays or _bind(grid)
    plan = grid.plan
    res, data = kernels.assemble(_gather(u, grid), arrays, want_jac=True)
    J = sp.csr_matrix((data, plan.jac_indices, plan.jac_indptr), shape=(plan.N, plan.N))
    return res, J


def paraboloid_guess(domain, grid, depth):
    X, Y = np.meshgrid(grid.x_nodes, grid.r_nodes, indexing="ij")
    u = depth * (1 - (domain.a * X / domain.R) ** 2 - ((1 - domain.a) / 2 * Y / domain.R) ** 2)
    u[grid.mask != INTERIOR] = 0.0
    return u


def newton_solve(domain, grid, u0, tol=NEWTON_TOL, max_iter=60, config=None):
    """Damped Newton iteration from u0; returns a GraphSolution.

    Each step halves the damping until the max-norm residual decreases.
    Raises NonConvergenceError when max_iter is exhausted or the line search
    stalls.  The tolerance is raised to the roundoff floor of the flux
    differences, ROUNDOFF_FACTOR * eps * max|u| / min(dx, dr)^2, when that is
    larger (deep solves on fine grids); the solution flags record both.
    """
    config = replace(config or SolverConfig(), tol=tol, max_iter=max_iter)
    arrays = _bind(grid)
    uu = _gather(u0, grid)
    res, J = _residual_jacobian(uu, arrays, grid)
    rnorm = np.abs(res).max()
    h2 = min(grid.dx, grid.dr) ** 2
    floor = lambda: ROUNDOFF_FACTOR * np.finfo(float).eps * np.abs(uu).max() / h2
    eff = max(tol, floor())
    it = 0
    while rnorm > eff:
        if it >= max_iter:
            raise NonConvergenceError(f"Newton did not converge in {max_iter} iterations "
                                      f"(residual {rnorm:.3e})", rnorm, it)
        lu = spla.splu(J.tocsc(), permc_spec=config.permc_spec)
        step = lu.solve(-res)
        t = 1.0
        while True:
            trial = uu.copy()
            trial[:-1] += t * step
            tres, _ = kernels.assemble(trial, arrays, want_jac=False)
            tnorm = np.abs(tres).max()
            if np.isfinite(tnorm) and tnorm < rnorm:
                break
            t *= 0.5
            if t < config.min_damping:
                raise NonConvergenceError(f"line search stalled at residual {rnorm:.3e}", rnorm, it)
        uu = trial
        it += 1
        log.debug("newton %d: residual %.3e -> %.3e (damping %g)", it, rnorm, tnorm, t)
        eff = max(tol, floor())
        if tnorm <= eff:
            rnorm = tnorm
            break
        res, J = _residual_jacobian(uu, arrays, grid)
        rnorm = np.abs(res).max()

    u = _scatter(uu, grid)
    sol = GraphSolution(domain, grid, u, float(u[grid.center, 0]), float(rnorm), it, config)
    sol.flags.update(solution_flags(sol))
    sol.flags["tol_effective"] = float(eff)
    sol.flags["tol_floor"] = float(floor())
    return sol


def _residual_jacobian(uu, arrays, grid):
    plan = grid.plan
    res, data = kernels.assemble(uu, arrays, want_jac=True)
    J = sp.csr_matrix((data, plan.jac_indices, plan.jac_indptr), shape=(plan.N, plan.N))
    return res, J


def solution_flags(sol):
    """Moving-plane sanity checks recorded in the solution metadata."""
    u = sol.u
    inside = sol.grid.mask == INTERIOR
    scale = max(abs(sol.xi), 1.0)
    du_r = np.diff(u, axis=1)
    # only pairs with both nodes interior or the outer one on the boundary
    pair = inside[:, :-1]
    mono_r = float(np.min(np.where(pair, du_r, 0.0)))
    c = sol.grid.center
    right = np.diff(u[c:, :], axis=0)
    mono_x = float(np.min(np.where(inside[c:-1, :], right, 0.0)))
    sym = float(np.max(np.abs(u - u[::-1, :])))
    flags = {
        "monotone_r": bool(mono_r >= -MONOTONE_TOL * scale),
        "monotone_x": bool(mono_x >= -MONOTONE_TOL * scale),
        "min_at_origin": bool(np.isclose(u.min(), sol.xi, rtol=0, atol=1e-12 * scale)),
        "negative_inside": bool(np.all(u[inside] < 0)),
        "symmetry_defect": sym,
    }
    if not (flags["monotone_r"] and flags["monotone_x"]):
        log.warning("solution a=%g xi=%g violates monotonicity beyond tolerance", sol.a, sol.xi)
    return flags


def _rescale(prev, domain, grid, depth):
    """Warm start: previous solution on reference coordinates, rescaled in height."""
    if prev.grid.nx == grid.nx and prev.grid.nr == grid.nr:
        u = prev.u * (depth / prev.xi)
    else:
        from scipy.interpolate import RegularGridInterpolator

        xh = prev.grid.x_nodes / prev.domain.x_semi
        rh = prev.grid.r_nodes / prev.domain.r_semi
        f = RegularGridInterpolator((xh, rh), prev.u / prev.xi, bounds_error=False, fill_value=0.0)
        X, Y = np.meshgrid(grid.x_nodes / domain.x_semi, grid.r_nodes / domain.r_semi, indexing="ij")
        u = depth * f(np.stack([X, Y], axis=-1))
    u[grid.mask != INTERIOR] = 0.0
    return u


def solve_for_R(a, R, nx, nr, warm=None, tol=NEWTON_TOL, config=None):
    """Solve on Omega_{a,R}; warm-start from a previous solution when given."""
    domain = EllipsoidalDomain(a, R)
    grid = make_grid(domain, nx, nr)
    if warm is None:
        depth = -(domain.r_semi**2) / 6
        u0 = paraboloid_guess(domain, grid, depth)
    else:
        depth = warm.xi * (R / warm.R) ** 2
        u0 = _rescale(warm, domain, grid, depth)
    cfg = config or SolverConfig()
    return newton_solve(domain, grid, u0, tol=tol, max_iter=cfg.max_iter, config=cfg)


def find_R_for_depth(a, xi_target, tol=DEPTH_RTOL, nx=801, nr=401, warm=None,
                     R_range=(1e-3, 1e5), newton_tol=NEWTON_TOL, config=None):
    """Find R with u(0,0) = xi_target (relative tolerance tol).

    Uses continuation in R from a shallow solve (or from ``warm``) followed by
    a secant iteration on log|xi| against log R, which is close to linear.
    """
    if not xi_target < 0:
        raise RangeError("xi_target must be negative")
    if not (A_MIN - 1e-12 <= a <= A_MAX + 1e-12):
        raise RangeError(f"a={a} outside [{A_MIN}, 1/3]")
    loose = max(newton_tol, 1e-7)
    target = math.log(-xi_target)

    if warm is None:
        # shallow start: r-semi-axis 3 gives a depth of order one
        R0 = 1.5 * (1 - a)
        cur = solve_for_R(a, R0, nx, nr, None, loose, config)
    else:
        cur = warm if (warm.grid.nx, warm.grid.nr) == (nx, nr) and warm.a == a else \
            solve_for_R(a, warm.R, nx, nr, warm, loose, config)
    history = [(math.log(cur.R), math.log(-cur.xi), cur)]
    slope = 2.0
    step_cap = math.log(1.6)

    for _ in range(200):
        lR, lxi, cur = history[-1]
        err = target - lxi
        if abs(math.expm1(-err)) <= tol and cur.residual_inf <= max(newton_tol, cur.flags.get("tol_floor", 0.0)):
            return cur
        if len(history) >= 2:
            (l0, x0, _), (l1, x1, _) = history[-2], history[-1]
            if abs(l1 - l0) > 1e-14 and abs(x1 - x0) > 1e-14:
                s = (x1 - x0) / (l1 - l0)
                if 0.5 < s < 6:
                    slope = s
        dl = err / slope
        close = abs(err) < 0.1
        dl = max(-step_cap, min(step_cap, dl))
        R_next = math.exp(lR + dl)
        if not (R_range[0] <= R_next <= R_range[1]):
            raise RangeError(f"depth bracket for xi={xi_target} leaves R range {R_range}")
        warm_sol = min(history, key=lambda h: abs(h[0] - (lR + dl)))[2]
        nxt = solve_for_R(a, R_next, nx, nr, warm_sol, newton_tol if close else loose, config)
        history.append((math.log(nxt.R), math.log(-nxt.xi), nxt))
    raise NonConvergenceError(f"depth search for xi={xi_target} did not converge")


def tip_curvatures(sol, check=True):
    """(k, lambda) = (u_xx, u_rr) at the tip from 4th-order centred differences.

    At the tip grad u = 0, so the Hessian equals the second fundamental form and
    the unit-speed translator identity reads k + 2 lambda = 1.
    """
    u, c = sol.u, sol.grid.center
    dx, dr = sol.grid.dx, sol.grid.dr
    ux = u[c - 2:c + 3, 0]
    k = (-ux[0] + 16 * ux[1] - 30 * ux[2] + 16 * ux[3] - ux[4]) / (12 * dx**2)
    ur = u[c, :3]
    lam = (-2 * ur[2] + 32 * ur[1] - 30 * ur[0]) / (12 * dr**2)
    if check and abs(k + 2 * lam - 1) > CURVATURE_TOL:
        raise ConsistencyError(f"tip curvatures violate k + 2 lambda = 1: k={k}, lambda={lam}")
    return float(k), float(lam)


@dataclass
class FamilyRecord:
    a: float
    xi: float
    R: float = math.nan
    k: float = math.nan
    lam: float = math.nan
    residual_inf: float = math.nan
    newton_iters: int = 0
    eccentricity: float = math.nan
    alpha: float = math.nan
    concavity_excess: float = math.nan
    spacing: float = math.nan
    monotone_r: bool = False
    monotone_x: bool = False
    status: str = "ok"

    @classmethod
    def fields(cls):
        return list(cls.__dataclass_fields__)


def family_record(sol, analysis=None):
    k, lam = tip_curvatures(sol, check=False)
    rec = FamilyRecord(a=sol.a, xi=sol.xi, R=sol.R, k=k, lam=lam, residual_inf=sol.residual_inf,
                       newton_iters=sol.newton_iters, spacing=sol.grid.spacing,
                       monotone_r=sol.flags.get("monotone_r", False),
                       monotone_x=sol.flags.get("monotone_x", False))
    if analysis is not None:
        analysis(sol, rec)
    return rec


def sweep_family(a_values, xi, nx=801, nr=401, tol=DEPTH_RTOL, analysis=None, on_record=None,
                 keep=None):
    """Continuation sweep over a at fixed depth xi.

    ``analysis(sol, record)`` may fill extra record fields, ``on_record`` is
    called after every row so partial sweeps persist, and ``keep`` (a dict)
    collects the solutions by a.  Per-a failures are recorded and the sweep
    continues from the last good solution.
    """
    a_values = [float(a) for a in a_values]
    if any(b <= a for a, b in zip(a_values, a_values[1:])):
        raise ValueError("a_values must be strictly increasing")
    records = []
    warm = None
    for a in a_values:
        try:
            start = None
            if warm is not None:
                start = solve_for_R(a, warm.R, nx, nr, warm, max(1e-7, NEWTON_TOL))
            sol = find_R_for_depth(a, xi, tol, nx, nr, warm=start)
            rec = family_record(sol, analysis)
            warm = sol
            if keep is not None:
                keep[a] = sol
        except Exception as exc:  # recorded, sweep continues
            log.warning("sweep a=%g failed: %s", a, exc)
            rec = FamilyRecord(a=a, xi=xi, status=f"error: {type(exc).__name__}: {exc}")
        records.append(rec)
        if on_record is not None:
            on_record(rec)
    return records


# ---------------------------------------------------------------- persistence

def _fmt(v):
    return f"{v:.6g}".replace("-", "m")


def _sibling(stem, ext):
    # tags contain decimal points, so Path.with_suffix would eat part of them
    return stem.parent / (stem.name + ext)


def solution_tag(tag, a, xi):
    return f"{tag}_a{_fmt(a)}_xi{_fmt(xi)}"


def save_solution(sol, directory, tag="sol", extra=None):
    """Write <tag>_a<a>_xi<xi>.json (metadata) and .csv (row-major u, rows = x)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = directory / solution_tag(tag, sol.a, sol.xi)
    meta = {
        "format_version": FORMAT_VERSION,
        "a": sol.a, "R": sol.R, "xi": sol.xi, "shift": sol.shift,
        "nx": sol.grid.nx, "nr": sol.grid.nr, "dx": sol.grid.dx, "dr": sol.grid.dr,
        "residual_inf": sol.residual_inf, "newton_iters": sol.newton_iters,
        "solver": asdict(sol.config), "flags": sol.flags, "layout": "rows=x, columns=r",
    }
    if extra:
        meta["config"] = extra
    _sibling(stem, ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    with open(_sibling(stem, ".csv"), "w", newline="\n") as fh:
        for row in sol.u:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return stem


def load_solution(path):
    """Load a solution from its .json or .csv path (or the common stem)."""
    stem = Path(path)
    if stem.name.endswith((".json", ".csv")):
        stem = stem.parent / stem.name.rsplit(".", 1)[0]
    meta = json.loads(_sibling(stem, ".json").read_text())
    if meta.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {meta.get('format_version')}")
    u = np.loadtxt(_sibling(stem, ".csv"), delimiter=",", ndmin=2)
    domain = EllipsoidalDomain(meta["a"], meta["R"])
    grid = make_grid(domain, meta["nx"], meta["nr"])
    if u.shape != (grid.nx, grid.nr):
        raise FormatError(f"u has shape {u.shape}, expected {(grid.nx, grid.nr)}")
    cfg = SolverConfig(**meta["solver"])
    return GraphSolution(domain, grid, u, meta["xi"], meta["residual_inf"], meta["newton_iters"],
                         cfg, dict(meta["flags"]), meta.get("shift", 0.0))
