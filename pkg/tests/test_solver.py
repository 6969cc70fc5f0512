import csv
import logging

import numpy as np
import pytest

from conftest import exact_m1, exact_m2_u1, relative_error
from polyplane.discretize import assemble
from polyplane.geometry import build_grid, disc, grid_from_mask, shifted_disc
from polyplane.solver import (
    ConvergenceError,
    NonlinearitySpec,
    SolveConfig,
    check_f1,
    parse_nonlinearity,
    residuals,
    solve_linear,
    solve_system,
    write_fields_csv,
)
from polyplane.verify import symmetry_defect

CFG = SolveConfig()


def test_cg_zero_rhs():
    op = assemble(build_grid(disc(), 16))
    x = solve_linear(op, np.zeros(op.dimension))
    assert np.all(x == 0.0)


def test_cg_scalar():
    op = assemble(grid_from_mask(np.ones((1, 1))))
    assert solve_linear(op, [8.0]) == pytest.approx([2.0], abs=1e-14)


@pytest.mark.parametrize("alpha", [0.0, 2.5])
def test_cg_recovers_manufactured_solution(alpha):
    op = assemble(build_grid(disc(), 32), alpha)
    v = np.random.default_rng(7).standard_normal(op.dimension)
    b = op @ v
    stats = {}
    x = solve_linear(op, b, CFG, stats)
    assert np.max(np.abs(op @ x - b)) <= 10 * CFG.cg_tol * np.max(np.abs(b))
    # A^{-1} has norm below 1/(2 pi^2) h^-2 scaling; a loose check on x itself
    assert np.max(np.abs(x - v)) < 1e-6
    assert stats["iterations"] > 0


def test_cg_iteration_cap():
    op = assemble(build_grid(disc(), 32))
    with pytest.raises(ConvergenceError):
        solve_linear(op, np.ones(op.dimension), SolveConfig(cg_max_iter=5))


def test_m1_disc_single_sweep(solve):
    errs = []
    for n in (16, 32, 64):
        st = solve("disc", n, (0.0,), "constant 1")
        assert st.iterations == 1 and st.converged
        g = st.grid
        errs.append(relative_error(st.u(1), exact_m1(g.x1, g.x2)))
        origin = g.lookup(0, 0)
        assert st.u(1)[origin] == pytest.approx(0.25, rel=0.05)
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 0.05


def test_m2_disc(solve):
    st = solve("disc", 64, (0.0, 0.0), "constant 1")
    g = st.grid
    origin = g.lookup(0, 0)
    assert st.u(2)[origin] == pytest.approx(0.25, rel=0.05)
    assert st.u(1)[origin] == pytest.approx(3 / 64, rel=0.05)
    assert relative_error(st.u(1), exact_m2_u1(g.x1, g.x2)) <= 0.05
    assert relative_error(st.u(2), exact_m1(g.x1, g.x2)) <= 0.05


def test_zero_nonlinearity_is_degenerate(caplog):
    g = build_grid(disc(), 16)
    with caplog.at_level(logging.WARNING, logger="polyplane"):
        st = solve_system(g, (1.0, 0.0, 2.0), NonlinearitySpec.constant(0.0))
    assert st.converged and st.degenerate and not st.positive
    assert "degenerate" in caplog.text


@pytest.mark.parametrize("alpha,f", [
    ((0.0,), "affine 1 2"),
    ((1.0, 1.0), "arctan 1 2"),
    ((0.0, 2.0, 0.5), "saturating 0.5 2 0.05"),
])
def test_residual_invariant(solve, alpha, f):
    st = solve("disc", 32, alpha, f)
    res = residuals(st)
    L = st.nonlinearity.lipschitz
    for i, r in enumerate(res):
        bound = 10 * CFG.cg_tol
        if i == st.m - 1:
            # the last equation sees f at the previous Picard iterate
            bound += L * CFG.picard_tol / np.max(np.abs(st.nonlinearity(st.u(1))))
        assert r <= bound
    assert res == pytest.approx(st.residuals)


@pytest.mark.parametrize("alpha,f", [((0.0, 0.0), "constant 1"), ((1.0, 1.0), "arctan 1 2")])
def test_solution_is_positive_and_symmetric(solve, alpha, f):
    st = solve("disc", 32, alpha, f)
    assert st.positive
    assert symmetry_defect(st) <= 100 * CFG.picard_tol


def test_picard_damping_still_converges():
    g = build_grid(disc(), 16)
    st = solve_system(g, (0.0,), NonlinearitySpec.affine(1.0, 2.0), SolveConfig(omega=0.5))
    ref = solve_system(g, (0.0,), NonlinearitySpec.affine(1.0, 2.0))
    assert st.converged
    assert np.max(np.abs(st.u(1) - ref.u(1))) < 1e-8


def test_picard_failure_carries_history():
    g = build_grid(disc(), 16)
    with pytest.raises(ConvergenceError) as exc:
        solve_system(g, (0.0,), NonlinearitySpec.affine(1.0, 2.0), SolveConfig(picard_max_iter=2))
    assert len(exc.value.history) == 2
    assert exc.value.stack is not None and not exc.value.stack.converged


def test_contraction_estimate(solve):
    st = solve("disc", 32, (0.0,), "affine 1 2")
    # L / lambda_1(disc) = 2 / 5.78 approximately
    assert st.contraction_estimate == pytest.approx(2 / 5.783, rel=0.02)


def test_f1_examples():
    rep = check_f1(NonlinearitySpec.affine(1, 2))
    assert rep.ok and rep.lipschitz == 2.0
    rep = check_f1(NonlinearitySpec.affine(-1, 2))
    assert not rep.ok and rep.violated == ["f(0) >= 0"]
    rep = check_f1(NonlinearitySpec.saturating(0.5, 3, 10))
    assert rep.ok and rep.lipschitz == 3.0 and rep.clauses["nondecreasing"]
    assert not check_f1(NonlinearitySpec.affine(1, -1)).clauses["nondecreasing"]


def test_f1_violation_refused():
    with pytest.raises(ValueError, match="f\\(0\\)"):
        solve_system(build_grid(disc(), 8), (0.0,), NonlinearitySpec.affine(-1, 1))


@pytest.mark.parametrize("text", ["constant 1", "affine 1 2", "saturating 0.5 3 10", "arctan 0 1"])
def test_parse_roundtrip(text):
    f = parse_nonlinearity(text)
    assert parse_nonlinearity(str(f)) == f


@pytest.mark.parametrize("text", ["quadratic 1", "affine 1", "constant x", ""])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse_nonlinearity(text)


@pytest.mark.parametrize("f", [NonlinearitySpec.affine(0.3, 2.0), NonlinearitySpec.saturating(0.5, 3, 0.4),
                               NonlinearitySpec.arctan(1.0, 2.0)])
def test_difference_quotient_matches_naive_form(f):
    rng = np.random.default_rng(11)
    u, w = rng.uniform(0, 1, 200), rng.uniform(0, 1, 200)
    naive = (f(w) - f(u)) / (w - u)
    np.testing.assert_allclose(f.difference_quotient(u, w), naive, rtol=1e-8, atol=1e-10)
    assert np.all(f.difference_quotient(u, u) == f.slope(u))


def test_negative_control_solves():
    st = solve_system(build_grid(shifted_disc(), 32), (0.0, 0.0), NonlinearitySpec.constant(1.0))
    assert st.converged and st.positive


def test_fields_csv(tmp_path, solve):
    st = solve("disc", 16, (0.0, 0.0), "constant 1")
    path = tmp_path / "fields.csv"
    write_fields_csv(st, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["i", "j", "x1", "x2", "u_1", "u_2"]
    assert len(rows) == st.grid.size + 1
    back = np.array([[float(v) for v in r[4:]] for r in rows[1:]]).T
    assert np.array_equal(back, st.fields)
