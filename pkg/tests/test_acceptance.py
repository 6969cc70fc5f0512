"""Acceptance criteria, one test each.

Every test records a single ``PASS``/``FAIL`` line; the lines are printed as
they are produced and repeated in the pytest terminal summary. Run directly
(``python3 tests/test_acceptance.py``) to get just the lines.
"""

import functools
import itertools
import math
import sys

import numpy as np
import pytest

from polyplane.discretize import apply, assemble, mirror_matrix
from polyplane.geometry import build_grid, disc, ellipse, lens, shifted_disc, stadium
from polyplane.solver import SolveConfig, parse_nonlinearity, solve_system
from polyplane.symcoeffs import elementary_batch
from polyplane.verify import (
    C_SLACK,
    barrier_check,
    monotonicity_defect,
    singular_profile_experiment,
    stencil_residual,
    sweep_mu,
    symmetry_defect,
)

RESULTS: list[str] = []

CFG = SolveConfig()
SHAPES = {"disc": disc, "ellipse": ellipse, "stadium": stadium}
CATALOG = ("constant 1", "affine 1 2", "arctan 1 2", "saturating 0.5 2 0.05")
SUITE_N = 32


def record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def alpha_family(m):
    mixed = (0.0, 2.0, 0.5)[:m]
    seen = []
    for a in ((0.0,) * m, (1.0,) * m, mixed):
        if a not in seen:
            seen.append(a)
    return seen


def suite_cases():
    for shape in SHAPES:
        for m in (1, 2, 3):
            for alpha in alpha_family(m):
                for f in CATALOG:
                    yield shape, alpha, f


@functools.lru_cache(maxsize=None)
def grid(shape, n):
    return build_grid(SHAPES[shape](), n)


@functools.lru_cache(maxsize=None)
def suite():
    """Solve and sweep every conforming suite case once."""
    rows = []
    for shape, alpha, ftext in suite_cases():
        f = parse_nonlinearity(ftext)
        st = solve_system(grid(shape, SUITE_N), alpha, f, CFG)
        rep = sweep_mu(st, rel_tol=1e-8, f=f)
        rows.append({
            "case": f"{shape} alpha={alpha} f={ftext}",
            "sup": st.sup_u1,
            "sym": symmetry_defect(st),
            "mono": monotonicity_defect(st, x1_min=st.grid.h),
            "mu_hat": rep.mu_hat,
            "first_violation": rep.first_violation,
            "c_range": rep.c_range,
            "L": f.lipschitz,
        })
    return rows


def exact_convergence(m):
    errors = {}
    for n in (16, 32, 64):
        g = build_grid(disc(), n)
        st = solve_system(g, (0.0,) * m, parse_nonlinearity("constant 1"), CFG)
        r2 = g.x1**2 + g.x2**2
        exact = {1: (1 - r2) / 4} if m == 1 else {1: (1 - r2) / 16 - (1 - r2**2) / 64, 2: (1 - r2) / 4}
        errors[n] = {i: float(np.max(np.abs(st.u(i) - e)) / np.max(e)) for i, e in exact.items()}
    return errors


def check_convergence(errors):
    comps = errors[64].keys()
    monotone = all(errors[16][i] > errors[32][i] > errors[64][i] for i in comps)
    small = all(errors[64][i] <= 0.05 for i in comps)
    return monotone and small


def test_exact_radial_m1():
    errors = exact_convergence(1)
    ok = check_convergence(errors)
    detail = ", ".join(f"n={n}: {e[1]:.4f}" for n, e in errors.items())
    assert record(1, "exact radial solution m=1", ok, f"relative max error {detail} (<= 0.05, decreasing)")


def test_exact_radial_m2():
    errors = exact_convergence(2)
    ok = check_convergence(errors)
    detail = "; ".join(f"n={n}: u1 {e[1]:.4f} u2 {e[2]:.4f}" for n, e in errors.items())
    assert record(2, "exact radial solution m=2", ok, f"relative max error {detail} (<= 0.05, decreasing)")


def test_symmetry():
    rows = suite()
    worst = max(rows, key=lambda r: r["sym"])
    ok = worst["sym"] <= 100 * CFG.picard_tol
    assert record(3, "symmetry in x1", ok,
                  f"{len(rows)} cases, max defect {worst['sym']:.3e} ({worst['case']}) <= {100 * CFG.picard_tol:.0e}")


def test_monotonicity():
    rows = suite()
    worst = max(rows, key=lambda r: r["mono"] / r["sup"])
    ok = all(r["mono"] <= 1e-8 * r["sup"] for r in rows)
    assert record(4, "monotone decreasing for x1 >= h", ok,
                  f"{len(rows)} cases, max defect/|u1| {worst['mono'] / worst['sup']:.3e} <= 1e-8")


def test_moving_plane_sweep():
    rows = suite()
    bad = [r for r in rows if r["mu_hat"] != 0.0 or r["first_violation"] is not None]
    detail = f"{len(rows)} cases, mu_hat = 0 in {len(rows) - len(bad)}"
    if bad:
        detail += f"; first failure {bad[0]['case']} mu_hat={bad[0]['mu_hat']}"
    assert record(5, "moving-plane sweep reaches 0", not bad, detail)


def test_negative_control():
    g = build_grid(shifted_disc(), SUITE_N)
    details, ok = [], True
    for alpha in ((0.0,), (0.0, 0.0)):
        st = solve_system(g, alpha, parse_nonlinearity("constant 1"), CFG)
        rep = sweep_mu(st, rel_tol=1e-8)
        rel = symmetry_defect(st) / st.sup_u1
        ok &= rel >= 1e-2 and rep.first_violation is not None and rep.first_violation > 0
        details.append(f"m={len(alpha)}: defect/|u1| {rel:.3g}, first violation lambda={rep.first_violation}")
    assert record(6, "negative control (shifted disc)", ok, "; ".join(details))


def subset_oracle(alpha):
    """Coefficients of prod(a + t) for each row by explicit subset products."""
    n, m = alpha.shape
    out = np.zeros((n, m + 1))
    for mask in itertools.product((False, True), repeat=m):
        chosen = alpha[:, list(mask)]
        out[:, m - sum(mask)] += np.prod(chosen, axis=1)
    return out


def test_sign_equivalence_brute_force():
    rng = np.random.default_rng(20260101)
    trials, agree, max_rel = 100_000, 0, 0.0
    ms = rng.integers(1, 9, size=trials)
    for m in range(1, 9):
        count = int((ms == m).sum())
        alpha = rng.uniform(-5, 5, size=(count, m))
        tiny = np.abs(alpha) < 1e-9
        alpha[tiny] = np.where(alpha[tiny] < 0, -1e-9, 1e-9)
        rec = elementary_batch(alpha)
        ref = subset_oracle(alpha)
        # no cancellation in the coefficients of |alpha|, so they bound the rounding
        scale = elementary_batch(np.abs(alpha))
        max_rel = max(max_rel, float(np.max(np.abs(rec - ref) / scale)))
        coeff_side = np.all(rec >= 0, axis=1)
        shift_side = np.all(alpha >= 0, axis=1)
        agree += int(np.sum(coeff_side == shift_side))
    ok = agree == trials and max_rel <= 1e-12
    assert record(7, "sign equivalence of shifts and coefficients", ok,
                  f"{agree}/{trials} trials agree, recurrence vs subsets max rel diff {max_rel:.2e} <= 1e-12")


def test_c_bounds():
    rows = suite()
    bad = [r for r in rows if r["c_range"] is not None
           and (r["c_range"][0] < -C_SLACK or r["c_range"][1] > r["L"] + C_SLACK)]
    lo = min(r["c_range"][0] for r in rows if r["c_range"])
    hi_gap = max(r["c_range"][1] - r["L"] for r in rows if r["c_range"])
    assert record(8, "coefficient c within [0, L]", not bad,
                  f"{len(rows)} cases x {2 * SUITE_N} planes, min c {lo:.3g}, max c - L {hi_gap:.3g}")


def test_barrier():
    r = 0.5
    details, ok = [], True
    for a in (0.25, 0.5, 0.75):
        for K in (0.0, 1.0, 10.0):
            rep = barrier_check(a, r, K)
            ok &= rep.r_star > 0 and (K != 0.0 or rep.r_star == r)
            details.append(f"a={a} K={K:g} r*={rep.r_star:.3g}")
    assert record(9, "barrier inequality near the puncture", ok, ", ".join(details))


def test_singular_profile():
    peaks, ok, details = [], True, []
    for n in (32, 64):
        g = build_grid(disc(), n)
        rep, st = singular_profile_experiment(g)
        pos = min(e.min_all for e in rep.entries if e.lam > 0)
        zero = max(abs(v) for e in rep.entries if e.lam == 0 for v in e.minima)
        res = stencil_residual(g, st.u(1))
        r = np.hypot(g.x1, g.x2)
        far = (r > 0.1) & np.isfinite(res)
        # leading truncation term of the stencil on ln r is h^2 / (2 pi r^4)
        bound_ok = bool(np.all(np.abs(res[far]) <= 1.5 * g.h**2 / (2 * math.pi * r[far] ** 4)))
        probe = (g.nodes[:, 0] == n // 4) & (g.nodes[:, 1] == 0)
        peaks.append(abs(res[probe][0]))
        ok &= pos > 0 and zero <= 1e-12 and bound_ok
        details.append(f"n={n}: min v (lambda>0) {pos:.3g}, |v| at 0 {zero:.1e}, residual bound {bound_ok}")
    ratio = peaks[0] / peaks[1]
    ok &= abs(ratio - 4.0) < 0.4
    details.append(f"residual ratio under h/2 {ratio:.2f}")
    assert record(10, "singular Green profile", ok, "; ".join(details))


def test_operator_properties():
    exact_mirror, worst = True, 0.0
    for spec in (disc(), ellipse(), stadium(), lens()):
        for n in range(8, 33):
            g = build_grid(spec, n)
            A = assemble(g, 1.5).matrix
            P = mirror_matrix(g)
            exact_mirror &= (P @ A - A @ P).count_nonzero() == 0
            u = 2.0 * g.x1**2 - g.x1 * g.x2 + 0.5 * g.x2**2 + 3.0 * g.x2 - 1.0
            deep = np.ones(g.size, dtype=bool)
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                deep &= g.lookup(g.nodes[:, 0] + di, g.nodes[:, 1] + dj) >= 0
            err = np.abs(apply(assemble(g), u)[deep] + 5.0)
            worst = max(worst, float(err.max()))
    ok = exact_mirror and worst <= 1e-10
    assert record(11, "operator mirror-equivariance and quadratic exactness", ok,
                  f"P A = A P exact for n_cells 8..32: {exact_mirror}; max quadratic error {worst:.2e} <= 1e-10")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
