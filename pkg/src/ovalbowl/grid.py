"""Ellipsoidal half-domains, uniform grids and the cut-cell stencil plan.

The (x, r) half-plane of the axisymmetric problem is covered by the bounding
box [-R/a, R/a] x [0, 2R/(1-a)] of the ellipse a^2 x^2 + ((1-a)/2)^2 r^2 < R^2.
In reference coordinates (x / X, r / Rr) the ellipse is the unit half-disc, so
the mask and all cut-cell fractions depend on (nx, nr) only; a plan is built
once per grid shape and rescaled for every (a, R).
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError

EXTERIOR, BOUNDARY, INTERIOR = 0, 1, 2
A_MIN = 0.02
A_MAX = 1.0 / 3.0
# cut fractions below this collapse the node onto the boundary
MIN_FRACTION = 1e-8


@dataclass(frozen=True)
class EllipsoidalDomain:
    a: float
    R: float

    def __post_init__(self):
        if not (0 < self.a <= A_MAX + 1e-12):
            raise ConfigError(f"ellipsoidal parameter a={self.a} outside (0, 1/3]")
        if not self.R > 0:
            raise ConfigError(f"R must be positive, got {self.R}")

    @property
    def x_semi(self):
        return self.R / self.a

    @property
    def r_semi(self):
        return 2 * self.R / (1 - self.a)

    def level(self, x, r):
        """a^2 x^2 + ((1-a)/2)^2 r^2 - R^2 (negative inside)."""
        return self.a**2 * x**2 + ((1 - self.a) / 2) ** 2 * r**2 - self.R**2


@dataclass(frozen=True)
class Grid2D:
    nx: int
    nr: int
    x_nodes: np.ndarray = field(repr=False)
    r_nodes: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)

    @property
    def dx(self):
        return self.x_nodes[1] - self.x_nodes[0]

    @property
    def dr(self):
        return self.r_nodes[1] - self.r_nodes[0]

    @property
    def spacing(self):
        return max(self.dx, self.dr)

    @property
    def center(self):
        return (self.nx - 1) // 2

    @property
    def plan(self):
        return stencil_plan(self.nx, self.nr)


def make_grid(domain, nx, nr):
    if nx < 5 or nr < 3 or nx % 2 == 0:
        raise ConfigError(f"need odd nx >= 5 and nr >= 3, got nx={nx}, nr={nr}")
    X, Rr = domain.x_semi, domain.r_semi
    x = np.linspace(-X, X, nx)
    x[(nx - 1) // 2] = 0.0
    r = np.linspace(0.0, Rr, nr)
    return Grid2D(nx, nr, x, r, stencil_plan(nx, nr).mask)


def _three_point(hl, hr):
    """Weights of f'(0) from samples at -hl, 0, hr."""
    return -hr / (hl * (hl + hr)), (hr - hl) / (hl * hr), hl / (hr * (hl + hr))


class StencilPlan:
    """Index structure of the cut-cell flux discretisation on one grid shape.

    Unknowns are the interior nodes in x-major order; index N denotes the zero
    Dirichlet value (boundary nodes and cut points alike).  Each edge carries a
    flux F = g / sqrt(1 + g^2 + o^2) with g the derivative along the edge and o
    the transverse derivative averaged from the endpoint node gradients.
    """

    def __init__(self, nx, nr):
        self.nx, self.nr = nx, nr
        xh = np.linspace(-1.0, 1.0, nx)
        xh[(nx - 1) // 2] = 0.0
        rh = np.linspace(0.0, 1.0, nr)
        self.dxh, self.drh = 2.0 / (nx - 1), 1.0 / (nr - 1)
        XX, RR = np.meshgrid(xh, rh, indexing="ij")
        rho2 = XX**2 + RR**2
        inside = rho2 < 1.0

        # collapse nodes whose cut distance would be degenerate
        xb = np.sqrt(np.clip(1.0 - RR**2, 0, None))
        rb = np.sqrt(np.clip(1.0 - XX**2, 0, None))
        near = ((xb - np.abs(XX)) < MIN_FRACTION * self.dxh) | ((rb - RR) < MIN_FRACTION * self.drh)
        inside &= ~near

        mask = np.zeros((nx, nr), dtype=np.int8)
        nb = np.zeros_like(inside)
        nb[1:, :] |= inside[:-1, :]
        nb[:-1, :] |= inside[1:, :]
        nb[:, 1:] |= inside[:, :-1]
        nb[:, :-1] |= inside[:, 1:]
        mask[nb & ~inside] = BOUNDARY
        mask[inside] = INTERIOR
        self.mask = mask

        I, J = np.nonzero(inside)
        N = I.size
        self.N = N
        self.I, self.J = I, J
        idmap = np.full((nx + 2, nr + 1), N, dtype=np.int64)
        idmap[I + 1, J] = np.arange(N)
        self.idmap = idmap[1:-1, :nr]

        east = idmap[I + 2, J]
        west = idmap[I, J]
        north = idmap[I + 1, J + 1]
        south = np.where(J > 0, idmap[I + 1, np.maximum(J - 1, 0)], N)
        if np.any((J > 0) & (south == N)):
            raise RuntimeError("non-convex mask: interior node without interior south neighbour")

        # cut fractions (1 for regular neighbours)
        fe = np.ones(N)
        fw = np.ones(N)
        fn = np.ones(N)
        cut_e, cut_w, cut_n = east == N, west == N, north == N
        xbJ = np.sqrt(1.0 - rh[J] ** 2)
        fe[cut_e] = (xbJ[cut_e] - xh[I][cut_e]) / self.dxh
        fw[cut_w] = (xbJ[cut_w] + xh[I][cut_w]) / self.dxh
        rbI = np.sqrt(1.0 - xh[I] ** 2)
        fn[cut_n] = (rbI[cut_n] - rh[J][cut_n]) / self.drh
        fe = np.minimum(fe, 1.0)
        fw = np.minimum(fw, 1.0)
        fn = np.minimum(fn, 1.0)
        self.east, self.west, self.north, self.south = east, west, north, south
        self.fe, self.fw, self.fn = fe, fw, fn
        self.axis = J == 0

        # edges: east edge of every interior node, west edge of nodes cut on the
        # west, north edge of every interior node
        node = np.arange(N)
        wcut = np.nonzero(cut_w)[0]
        self.n_xedges = N + wcut.size
        self.xe_left = np.concatenate([node, np.full(wcut.size, N)])
        self.xe_right = np.concatenate([east, wcut])
        self.xe_frac = np.concatenate([fe, fw[wcut]])
        self.re_south = node
        self.re_north = north
        self.re_frac = fn
        self._build_pattern()

    def _build_pattern(self):
        N = self.N
        # stencil node indices for node gradients: (W, C, E) and (S, C, N)
        node = np.arange(N)
        self.gx_idx = np.stack([self.west, node, self.east], axis=1)
        self.gr_idx = np.stack([np.where(self.axis, N, self.south), node,
                                np.where(self.axis, N, self.north)], axis=1)

        xl, xr = self.xe_left, self.xe_right
        # transverse stencil of an x-edge: gr stencils of both endpoints
        xo = np.concatenate([self._pick(self.gr_idx, xl), self._pick(self.gr_idx, xr)], axis=1)
        rs, rn = self.re_south, self.re_north
        ro = np.concatenate([self._pick(self.gx_idx, rs), self._pick(self.gx_idx, rn)], axis=1)
        self.edge_main_idx = np.concatenate([np.stack([xl, xr], 1), np.stack([rs, rn], 1)])
        self.edge_other_idx = np.concatenate([xo, ro])
        self.edge_rows = np.concatenate([np.stack([xl, xr], 1), np.stack([rs, rn], 1)])
        self.n_edges = self.edge_rows.shape[0]

        # Jacobian sparsity: rows of each edge times its 8 stencil columns,
        # plus each node's own gradient stencil
        cols_e = np.concatenate([self.edge_main_idx, self.edge_other_idx], axis=1)  # (E, 8)
        rows_e = self.edge_rows  # (E, 2)
        R = np.broadcast_to(rows_e[:, :, None], (self.n_edges, 2, 8))
        C = np.broadcast_to(cols_e[:, None, :], (self.n_edges, 2, 8))
        cols_n = np.concatenate([self.gx_idx, self.gr_idx], axis=1)  # (N, 6)
        Rn = np.broadcast_to(node[:, None], (N, 6))
        rows_all = np.concatenate([R.ravel(), Rn.ravel()])
        cols_all = np.concatenate([C.ravel(), cols_n.ravel()])
        valid = (rows_all < N) & (cols_all < N)
        key = rows_all * (N + 1) + cols_all
        ukeys, inv = np.unique(key[valid], return_inverse=True)
        self.nnz = ukeys.size
        slot = np.full(key.size, self.nnz, dtype=np.int64)
        slot[valid] = inv
        ne = self.n_edges * 16
        self.slot_edge = slot[:ne].reshape(self.n_edges, 2, 8)
        self.slot_node = slot[ne:].reshape(N, 6)
        rows_u = ukeys // (N + 1)
        self.jac_indices = (ukeys % (N + 1)).astype(np.int32)
        self.jac_indptr = np.searchsorted(rows_u, np.arange(N + 1)).astype(np.int32)

    def _pick(self, idx, nodes):
        out = np.full((nodes.size, idx.shape[1]), self.N, dtype=np.int64)
        ok = nodes < self.N
        out[ok] = idx[nodes[ok]]
        return out

    def coefficients(self, dx, dr, r_nodes):
        """Scale-dependent stencil weights for spacings (dx, dr)."""
        N = self.N
        le, lw, ln = self.fe * dx, self.fw * dx, self.fn * dr
        cw, cc, ce = _three_point(lw, le)
        gx_coef = np.stack([cw, cc, ce], axis=1)
        sw, sc, sn = _three_point(np.full(N, dr), ln)
        gr_coef = np.stack([sw, sc, sn], axis=1)
        gr_coef[self.axis] = 0.0

        hbar_x = 0.5 * (le + lw)
        rj = r_nodes[self.J]
        hbar_r = 0.5 * (ln + dr)

        # x-edges
        xl, xr = self.xe_left, self.xe_right
        xlen = self.xe_frac * dx
        both = (xl < N) & (xr < N)
        wl = np.where(xl < N, np.where(both, 0.5, 1.0), 0.0)
        wr = np.where(xr < N, np.where(both, 0.5, 1.0), 0.0)
        xo = np.concatenate([self._pickc(gr_coef, xl) * wl[:, None],
                             self._pickc(gr_coef, xr) * wr[:, None]], axis=1)
        xmain = np.stack([-1.0 / xlen, 1.0 / xlen], axis=1)
        xrow = np.stack([self._pickv(1.0 / hbar_x, xl), -self._pickv(1.0 / hbar_x, xr)], axis=1)

        # r-edges
        rs, rn = self.re_south, self.re_north
        rlen = self.re_frac * dr
        both = rn < N
        ws = np.where(both, 0.5, 1.0)
        wn = np.where(both, 0.5, 0.0)
        ro = np.concatenate([gx_coef * ws[:, None], self._pickc(gx_coef, rn) * wn[:, None]], axis=1)
        rmain = np.stack([-1.0 / rlen, 1.0 / rlen], axis=1)
        redge = rj + 0.5 * rlen
        south_w = np.where(self.axis, 4.0 / rlen, redge / (np.where(self.axis, 1.0, rj) * hbar_r))
        north_w = np.zeros(N)
        okn = rn < N
        north_w[okn] = -redge[okn] / (rj[rn[okn]] * hbar_r[rn[okn]])
        rrow = np.stack([south_w, north_w], axis=1)

        return {
            "main_coef": np.concatenate([xmain, rmain]),
            "other_coef": np.concatenate([xo, ro]),
            "row_w": np.concatenate([xrow, rrow]),
            "node_coef": np.concatenate([gx_coef, gr_coef], axis=1),
        }

    def _pickc(self, coef, nodes):
        out = np.zeros((nodes.size, coef.shape[1]))
        ok = nodes < self.N
        out[ok] = coef[nodes[ok]]
        return out

    def _pickv(self, vals, nodes):
        out = np.zeros(nodes.size)
        ok = nodes < self.N
        out[ok] = vals[nodes[ok]]
        return out


@lru_cache(maxsize=8)
def stencil_plan(nx, nr):
    return StencilPlan(nx, nr)
