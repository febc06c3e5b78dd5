"""Compiled vs numpy kernels, and where a Newton step spends its time.

    python benchmarks/bench_kernels.py [--nx 801 --nr 401] [--repeat 5] [--points 4000]
"""
import argparse
import time

import numpy as np
import scipy.sparse.linalg as spla

from ovalbowl import _kernels_py, kernels
from ovalbowl.grid import EllipsoidalDomain, make_grid
from ovalbowl.translator import _bind, _gather, _residual_jacobian, paraboloid_guess


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nx", type=int, default=801)
    p.add_argument("--nr", type=int, default=401)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--points", type=int, default=4000, help="points per curve for Hausdorff")
    args = p.parse_args()

    dom = EllipsoidalDomain(0.2, 20.0)
    g = make_grid(dom, args.nx, args.nr)
    uu = _gather(paraboloid_guess(dom, g, -100.0), g)
    arr = _bind(g)
    impls = [("numpy", _kernels_py)]
    if kernels.BACKEND == "cython":
        impls.insert(0, ("cython", kernels._impl))
    print(f"grid {args.nx}x{args.nr}, {g.plan.N} unknowns, {g.plan.nnz} Jacobian entries")

    rows = {}
    for name, impl in impls:
        res = best_of(lambda: kernels.assemble(uu, arr, False, impl), args.repeat)
        jac = best_of(lambda: kernels.assemble(uu, arr, True, impl), args.repeat)
        rows[name] = (res, jac)
        print(f"  assemble {name:<6} residual {res * 1e3:9.2f} ms   residual+jacobian {jac * 1e3:9.2f} ms")
    if len(rows) == 2:
        print(f"  speedup residual {rows['numpy'][0] / rows['cython'][0]:.1f}x, "
              f"jacobian {rows['numpy'][1] / rows['cython'][1]:.1f}x")

    res, J = _residual_jacobian(uu, arr, g)
    Jc = J.tocsc()
    t_lu = best_of(lambda: spla.splu(Jc, permc_spec="MMD_AT_PLUS_A"), max(1, args.repeat // 2))
    lu = spla.splu(Jc, permc_spec="MMD_AT_PLUS_A")
    t_solve = best_of(lambda: lu.solve(-res), args.repeat)
    t_asm = min(r[1] for r in rows.values())
    total = t_asm + t_lu + t_solve
    print(f"  newton step: assembly {t_asm * 1e3:.1f} ms ({100 * t_asm / total:.0f}%), "
          f"LU {t_lu * 1e3:.1f} ms ({100 * t_lu / total:.0f}%), solve {t_solve * 1e3:.1f} ms")

    th = np.linspace(0, np.pi, args.points)
    P = np.column_stack([np.cos(th) * 100, np.sin(th) * 10])
    Q = np.column_stack([np.cos(th) * 100.5, np.sin(th) * 10.2])
    try:
        from scipy.spatial.distance import directed_hausdorff as sd
        t = best_of(lambda: max(sd(P, Q)[0], sd(Q, P)[0]), args.repeat)
        print(f"  hausdorff scipy  {t * 1e3:9.2f} ms")
    except ImportError:
        pass
    for name, impl in impls:
        t = best_of(lambda: kernels.hausdorff(P, Q, impl), args.repeat)
        print(f"  hausdorff {name:<6} {t * 1e3:9.2f} ms")


if __name__ == "__main__":
    main()
