import numpy as np
import pytest

from ovalbowl.bowl_ode import integrate_bowl
from ovalbowl.errors import ConfigError, ConsistencyError, FormatError, NonConvergenceError, RangeError
from ovalbowl.grid import BOUNDARY, INTERIOR, EllipsoidalDomain, make_grid
from ovalbowl.translator import (_bind, _gather, assemble_jacobian, assemble_residual,
                                 find_R_for_depth, load_solution, newton_solve, paraboloid_guess,
                                 save_solution, solve_for_R, sweep_family, tip_curvatures)


def bowl_cap(domain, grid, rho_max):
    b = integrate_bowl(3, 1.0, rho_max * 1.01, rho_max / 4000)
    X, Y = np.meshgrid(grid.x_nodes, grid.r_nodes, indexing="ij")
    u = b(np.hypot(X, Y)) - b(rho_max)
    u[grid.mask != INTERIOR] = 0.0
    return u


def test_domain_validation():
    with pytest.raises(ConfigError):
        EllipsoidalDomain(0.5, 1.0)
    with pytest.raises(ConfigError):
        EllipsoidalDomain(0.0, 1.0)
    with pytest.raises(ConfigError):
        EllipsoidalDomain(0.2, -1.0)
    with pytest.raises(ConfigError):
        make_grid(EllipsoidalDomain(0.2, 1.0), 40, 20)


def test_mask_within_one_cell():
    dom = EllipsoidalDomain(0.15, 3.0)
    g = make_grid(dom, 81, 41)
    X, Y = np.meshgrid(g.x_nodes, g.r_nodes, indexing="ij")
    lvl = dom.level(X, Y)
    assert np.all(lvl[g.mask == INTERIOR] < 0)
    b = g.mask == BOUNDARY
    # boundary nodes lie within one cell of the ellipse
    rho = np.sqrt((X[b] / dom.x_semi) ** 2 + (Y[b] / dom.r_semi) ** 2)
    assert np.all(rho - 1 <= max(g.dx / dom.x_semi, g.dr / dom.r_semi) + 1e-12)


def test_zero_state_residual():
    dom = EllipsoidalDomain(0.2, 2.0)
    g = make_grid(dom, 41, 21)
    res = assemble_residual(np.zeros((g.nx, g.nr)), g, dom)
    np.testing.assert_allclose(res[g.mask == INTERIOR], -1.0, rtol=0, atol=1e-15)
    assert np.all(res[g.mask != INTERIOR] == 0)


def test_axis_limit_finite():
    dom = EllipsoidalDomain(0.2, 2.0)
    g = make_grid(dom, 41, 21)
    X, Y = np.meshgrid(g.x_nodes, g.r_nodes, indexing="ij")
    res = assemble_residual(Y ** 2 / 4, g, dom)
    assert np.all(np.isfinite(res[:, 0]))


def test_bowl_residual_second_order():
    # nodes whose stencil avoids the cut cells are O(spacing^2); cut-cell rows
    # carry O(1) truncation, the solution error stays second order (see below)
    for n in (21, 41, 81):
        dom = EllipsoidalDomain(1 / 3, 2.0)
        g = make_grid(dom, 2 * n - 1, n)
        res = assemble_residual(bowl_cap(dom, g, dom.x_semi), g, dom)
        ins = g.mask == INTERIOR
        full = ins.copy()
        full[1:-1, :-1] &= ins[2:, :-1] & ins[:-2, :-1] & ins[1:-1, 1:]
        full[1:-1, 1:] &= ins[1:-1, :-1]
        full[0, :] = full[-1, :] = full[:, -1] = False
        assert np.abs(res[full]).max() <= 0.02 * g.spacing ** 2


def test_jacobian_gradient_check():
    dom = EllipsoidalDomain(0.2, 2.0)
    g = make_grid(dom, 41, 21)
    rng = np.random.default_rng(7)
    u = paraboloid_guess(dom, g, -2.0)
    res, J = assemble_jacobian(u, g)
    arr = _bind(g)
    for _ in range(3):
        d = np.zeros_like(u)
        d[g.mask == INTERIOR] = rng.standard_normal((g.mask == INTERIOR).sum())
        eps = 1e-6
        rp = assemble_residual(u + eps * d, g, arrays=arr)
        rm = assemble_residual(u - eps * d, g, arrays=arr)
        fd = ((rp - rm) / (2 * eps))[g.plan.I, g.plan.J]
        an = J @ _gather(d, g)[:-1]
        assert np.linalg.norm(fd - an) <= 1e-6 * np.linalg.norm(an)


@pytest.fixture(scope="module")
def disc_solution():
    return solve_for_R(1 / 3, 4.0, 161, 81)


def test_round_solution_matches_bowl(disc_solution):
    s = disc_solution
    ref = bowl_cap(s.domain, s.grid, s.domain.x_semi)
    assert np.abs(s.u - ref).max() <= 5 * s.grid.spacing ** 2
    k, lam = tip_curvatures(s)
    assert abs(k - 1 / 3) < 1e-2 and abs(k + 2 * lam - 1) < 1e-3


def test_solution_invariants(disc_solution):
    s = disc_solution
    inside = s.grid.mask == INTERIOR
    assert s.residual_inf <= s.flags["tol_effective"]
    assert s.u[s.grid.center, 0] == s.u.min() == s.xi
    assert np.all(s.u[inside] < 0) and np.all(s.u[~inside] == 0)
    assert np.abs(s.u - s.u[::-1]).max() <= 1e-8 * abs(s.xi)
    assert s.flags["monotone_r"] and s.flags["monotone_x"] and s.flags["negative_inside"]


def test_newton_nonconvergence():
    dom = EllipsoidalDomain(0.2, 2.0)
    g = make_grid(dom, 41, 21)
    with pytest.raises(NonConvergenceError) as ei:
        newton_solve(dom, g, paraboloid_guess(dom, g, -1.0), tol=1e-10, max_iter=1)
    assert ei.value.residual > 0


def test_newton_monotone_decrease(caplog):
    import logging
    dom = EllipsoidalDomain(0.15, 3.0)
    g = make_grid(dom, 81, 41)
    with caplog.at_level(logging.DEBUG, logger="ovalbowl.translator"):
        newton_solve(dom, g, paraboloid_guess(dom, g, -1.0))
    steps = [r.getMessage() for r in caplog.records if r.getMessage().startswith("newton")]
    assert steps
    for m in steps:
        before, after = (float(t.split()[-1]) for t in m.split("(")[0].split("->"))
        assert after < before


def test_depth_monotone_in_R():
    s1 = solve_for_R(0.2, 2.0, 61, 31)
    s2 = solve_for_R(0.2, 2.5, 61, 31)
    assert s1.xi > s2.xi


def test_find_R_roundtrip():
    s = solve_for_R(1 / 3, 3.0, 81, 41)
    t = find_R_for_depth(1 / 3, s.xi, tol=1e-6, nx=81, nr=41)
    assert abs(t.xi - s.xi) <= 1e-6 * abs(s.xi)
    assert t.R == pytest.approx(3.0, rel=1e-5)


def test_find_R_errors():
    with pytest.raises(RangeError):
        find_R_for_depth(0.2, 5.0)
    with pytest.raises(RangeError):
        find_R_for_depth(0.4, -5.0)
    with pytest.raises(RangeError):
        find_R_for_depth(0.2, -1e4, nx=41, nr=21, R_range=(1e-3, 2.0))


def test_grid_convergence_order():
    ks, hs = [], []
    for n in (51, 101, 201, 401):
        s = solve_for_R(0.2, 3.0, 2 * n - 1, n)
        ks.append(tip_curvatures(s, check=False)[0])
        hs.append(s.grid.spacing)
    d = np.abs(np.diff(ks))
    order = -np.polyfit(np.arange(3), np.log2(d), 1)[0]
    assert order >= 1.8
    assert d[-1] <= 10 * hs[-2] ** 2


def test_sweep_records(tmp_path):
    rows = []
    recs = sweep_family([0.25, 1 / 3], -20.0, 81, 41, on_record=rows.append)
    assert len(recs) == 2 == len(rows)
    assert [r.a for r in recs] == sorted(r.a for r in recs)
    assert abs(recs[-1].k - 1 / 3) < 1e-2
    assert recs[0].k < recs[1].k
    with pytest.raises(ValueError):
        sweep_family([0.3, 0.2], -20.0, 41, 21)


def test_sweep_failure_recorded(monkeypatch):
    import ovalbowl.translator as tr
    real = tr.find_R_for_depth

    def flaky(a, *args, **kw):
        if a == 0.25:
            raise NonConvergenceError("forced", 1.0, 3)
        return real(a, *args, **kw)

    monkeypatch.setattr(tr, "find_R_for_depth", flaky)
    recs = tr.sweep_family([0.25, 1 / 3], -20.0, 81, 41)
    assert recs[0].status.startswith("error: NonConvergenceError")
    assert recs[1].status == "ok" and abs(recs[1].k - 1 / 3) < 1e-2


def test_persistence_roundtrip(tmp_path, disc_solution):
    stem = save_solution(disc_solution, tmp_path, "rt")
    assert stem.name.startswith("rt_a0.333333_xi")
    s = load_solution(str(stem) + ".json")
    assert np.array_equal(s.u, disc_solution.u)
    assert s.R == disc_solution.R and s.xi == disc_solution.xi and s.flags == disc_solution.flags
    save_solution(s, tmp_path / "again", "rt")
    assert (tmp_path / "again" / (stem.name + ".csv")).read_bytes() == (tmp_path / (stem.name + ".csv")).read_bytes()


def test_persistence_version_check(tmp_path, disc_solution):
    import json
    stem = save_solution(disc_solution, tmp_path, "v")
    p = tmp_path / (stem.name + ".json")
    meta = json.loads(p.read_text())
    meta["format_version"] = 99
    p.write_text(json.dumps(meta))
    with pytest.raises(FormatError):
        load_solution(stem)


def test_curvature_consistency_error(disc_solution):
    from dataclasses import replace
    bad = replace(disc_solution, u=disc_solution.u * 1.5)
    with pytest.raises(ConsistencyError):
        tip_curvatures(bad)
