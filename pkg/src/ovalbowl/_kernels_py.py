"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` argument for argument; ``ovalbowl.kernels``
selects the compiled module when it imports.
"""
import numpy as np


def assemble(uu, main_idx, main_coef, other_idx, other_coef, rows, row_w,
             node_idx, node_coef, slot_edge, slot_node, N, nnz, want_jac):
    """Residual of the flux-form translator operator and Jacobian values.

    ``uu`` has N + 1 entries, the last one being the zero Dirichlet value.
    Returns (residual, jac_data) with jac_data None when want_jac is False.
    """
    g = np.einsum("ek,ek->e", main_coef, uu[main_idx])
    o = np.einsum("ek,ek->e", other_coef, uu[other_idx])
    W = np.sqrt(1.0 + g * g + o * o)
    F = g / W
    res = np.bincount(rows.ravel(), (row_w * F[:, None]).ravel(), minlength=N + 1)[:N]

    gx = np.einsum("ek,ek->e", node_coef[:, :3], uu[node_idx[:, :3]])
    gr = np.einsum("ek,ek->e", node_coef[:, 3:], uu[node_idx[:, 3:]])
    Wn = np.sqrt(1.0 + gx * gx + gr * gr)
    res -= 1.0 / Wn
    if not want_jac:
        return res, None

    W3 = W**3
    dg = (1.0 + o * o) / W3
    do = -g * o / W3
    dcols = np.concatenate([dg[:, None] * main_coef, do[:, None] * other_coef], axis=1)
    vals = row_w[:, :, None] * dcols[:, None, :]
    Wn3 = Wn**3
    nvals = np.concatenate([(gx / Wn3)[:, None] * node_coef[:, :3],
                            (gr / Wn3)[:, None] * node_coef[:, 3:]], axis=1)
    data = np.bincount(slot_edge.ravel(), vals.ravel(), minlength=nnz + 1)
    data += np.bincount(slot_node.ravel(), nvals.ravel(), minlength=nnz + 1)
    return res, data[:nnz]


def directed_hausdorff(P, Q):
    """max over p in P of min over q in Q of |p - q| (point sets, shape (n, 2))."""
    best = 0.0
    chunk = max(1, 4_000_000 // max(len(Q), 1))
    for s in range(0, len(P), chunk):
        blk = P[s:s + chunk]
        d2 = (blk[:, None, 0] - Q[None, :, 0]) ** 2 + (blk[:, None, 1] - Q[None, :, 1]) ** 2
        best = max(best, float(np.sqrt(d2.min(axis=1)).max()))
    return best
