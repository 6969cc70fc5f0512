"""Moving-plane diagnostics on discrete solutions.

For a plane ``x1 = lam`` the reflection difference of component ``i`` at a
cap node ``x`` (``x1 > lam``) is ``u_i(x_lam) - u_i(x)`` where ``x_lam`` is
the mirror image of ``x``. Sweeping ``lam`` downwards from ``1 - h/2`` and
tracking where these differences stay nonnegative gives a discrete estimate
of the critical plane position.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import BOUNDARY, Grid, cap_nodes, lambda_index
from .solver import FieldStack, NonlinearitySpec
from .symcoeffs import as_alpha, sign_equivalence

__all__ = [
    "ReflectionError",
    "ReflectionDiff",
    "SweepEntry",
    "MovingPlaneReport",
    "BarrierReport",
    "reflection_diff",
    "sweep_mu",
    "symmetry_defect",
    "monotonicity_defect",
    "compute_c",
    "cooperativity_matrix",
    "barrier_constant",
    "barrier_expression",
    "barrier_check",
    "green_ball",
    "green_field",
    "stencil_residual",
    "singular_profile_experiment",
    "write_sweep_csv",
    "write_plotdata",
]

C_SLACK = 1e-9


class ReflectionError(ValueError):
    """A cap node reflected onto a node that should not be exterior."""


@dataclass
class ReflectionDiff:
    """Per-component differences ``v_i = u_i(x_lam) - u_i(x)`` on the cap.

    ``nodes`` are unknown indices of the cap (after removing the reflected
    puncture, if it is a node); ``values`` has shape ``(m, len(nodes))``.
    """

    lam: float
    k: int
    nodes: np.ndarray
    reflected: np.ndarray
    values: np.ndarray
    excluded: tuple[int, int] | None = None

    @property
    def minima(self) -> list[float]:
        if self.values.shape[1] == 0:
            return [math.inf] * self.values.shape[0]
        return [float(v) for v in self.values.min(axis=1)]

    @property
    def argmins(self) -> list[int | None]:
        if self.values.shape[1] == 0:
            return [None] * self.values.shape[0]
        return [int(self.nodes[a]) for a in self.values.argmin(axis=1)]


def _reflected_values(stack: FieldStack, lam: float):
    grid = stack.grid
    k = lambda_index(grid, lam)
    cap = cap_nodes(grid, lam)
    i, j = grid.nodes[cap, 0], grid.nodes[cap, 1]

    excluded = None
    pn = grid.puncture_node
    if pn is not None:
        # the node whose mirror image is the puncture
        hit = (i == k - pn[0]) & (j == pn[1])
        if hit.any():
            excluded = (int(k - pn[0]), int(pn[1]))
            cap, i, j = cap[~hit], i[~hit], j[~hit]

    ri = k - i
    q = grid.lookup(ri, j)
    outside = q < 0
    if outside.any() and grid.conforming:
        cls = grid.classify(ri[outside], j[outside])
        bad = np.flatnonzero(outside)[0]
        raise ReflectionError(
            f"lambda={lam}: node ({i[bad]}, {j[bad]}) reflects to ({ri[bad]}, {j[bad]}) "
            f"classified {int(cls[0])}, not interior, on a conforming grid"
        )
    reflected = np.zeros((stack.m, len(cap)))
    # non-conforming grids extend u by its zero Dirichlet value
    reflected[:, ~outside] = stack.fields[:, q[~outside]]
    return k, cap, q, reflected, excluded


def reflection_diff(stack: FieldStack, lam: float) -> ReflectionDiff:
    """Reflection differences of every component on the cap ``x1 > lam``.

    ``lam`` must be a multiple of ``h/2`` in ``[0, 1)``. On conforming grids a
    reflected node that is not interior raises :class:`ReflectionError`; on
    negative-control grids such nodes take the Dirichlet value 0.
    """
    k, cap, q, reflected, excluded = _reflected_values(stack, lam)
    values = reflected - stack.fields[:, cap]
    return ReflectionDiff(lam, k, cap, q, values, excluded)


def symmetry_defect(stack: FieldStack) -> float:
    """``max |u_i(x) - u_i(-x1, x2)|`` over components and interior nodes.

    A mirror node that is not interior contributes the value 0.
    """
    mirror = stack.grid.mirror
    ref = np.where(mirror >= 0, stack.fields[:, np.maximum(mirror, 0)], 0.0)
    with np.errstate(invalid="ignore"):
        d = np.abs(stack.fields - ref)
    return float(np.max(d[np.isfinite(d)], initial=0.0))


def monotonicity_defect(stack: FieldStack, x1_min: float = 0.0) -> float:
    """Largest positive forward difference ``(u_1(i+1, j) - u_1(i, j)) / h``.

    Taken over pairs of interior nodes with ``x1 >= x1_min`` at the left
    node; 0 means ``u_1`` is nonincreasing in ``x1`` there.
    """
    g = stack.grid
    u = stack.fields[0]
    i, j = g.nodes[:, 0], g.nodes[:, 1]
    right = g.lookup(i + 1, j)
    sel = (right >= 0) & (i >= x1_min * g.n_cells - 1e-9)
    if not sel.any():
        return 0.0
    diff = (u[right[sel]] - u[sel]) * g.n_cells
    return float(max(0.0, np.max(diff)))


def compute_c(stack: FieldStack, lam: float, f: NonlinearitySpec | None = None) -> np.ndarray:
    """Difference quotient ``c = (f(u_1(x_lam)) - f(u_1(x))) / v_1`` on the cap.

    Where ``|v_1| <= 1e-12`` the right derivative of ``f`` at ``u_1(x)`` is
    used; elsewhere the quotient is evaluated in a cancellation-free form
    (see :meth:`NonlinearitySpec.difference_quotient`). Raises ``ValueError``
    if any value leaves ``[-1e-9, L + 1e-9]``.
    """
    f = f or stack.nonlinearity
    if f is None:
        raise ValueError("no nonlinearity supplied")
    _, cap, _, reflected, _ = _reflected_values(stack, lam)
    u = stack.fields[0, cap]
    ur = reflected[0]
    v = ur - u
    c = np.asarray(f.slope(u), dtype=float).copy()
    big = np.abs(v) > 1e-12
    c[big] = f.difference_quotient(u[big], ur[big])
    L = f.lipschitz
    if c.size and (c.min() < -C_SLACK or c.max() > L + C_SLACK):
        raise ValueError(f"c(x, lambda={lam}) range [{c.min():.3e}, {c.max():.3e}] outside [0, {L}]")
    return c


def cooperativity_matrix(alpha, c_value: float) -> np.ndarray:
    """Coupling matrix of the reflected system.

    ``-alpha_i`` on the diagonal, 1 on the superdiagonal and ``c`` in the
    bottom-left corner. For ``m = 1`` corner and diagonal coincide and the
    matrix is ``[[c - alpha_1]]``.
    """
    alpha = as_alpha(alpha)
    m = alpha.m
    A = np.diag([-a for a in alpha]).astype(float)
    if m == 1:
        A[0, 0] += c_value
    else:
        A[np.arange(m - 1), np.arange(1, m)] = 1.0
        A[m - 1, 0] = c_value
    off = A[~np.eye(m, dtype=bool)]
    if off.size and off.min() < 0:
        raise ValueError(f"coupling matrix is not cooperative (c={c_value})")
    return A


def barrier_constant(alpha, lipschitz: float) -> float:
    """``K = max_i sum_j sup a_ij`` for the coupling matrix with ``c in [0, L]``."""
    A = cooperativity_matrix(alpha, lipschitz)
    return float(np.max(A.sum(axis=1)))


def barrier_expression(rho, a: float, K: float, n: int = 2):
    """``Laplace h + K h`` for ``h = (-ln |x|)^a`` at radius ``rho``."""
    rho = np.asarray(rho, dtype=float)
    L = -np.log(rho)
    return (-(n - 2) * a * L ** (a - 1) / rho**2
            + a * (a - 1) * L ** (a - 2) / rho**2
            + K * L**a)


@dataclass
class BarrierReport:
    a: float
    r: float
    K: float
    radii: np.ndarray
    values: np.ndarray
    r_star: float

    @property
    def ok(self) -> bool:
        return self.r_star > 0


def barrier_check(a: float, r: float, K: float, n_samples: int = 2000, rho_min: float = 1e-8) -> BarrierReport:
    """Sample ``Laplace h + K h`` on log-spaced radii in ``[rho_min, r]``.

    ``r_star`` is the largest sampled radius such that the expression is
    ``<= 0`` at it and at every smaller sample (0 if the smallest fails).
    The last sample is exactly ``r``.
    """
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    if not K >= 0.0:
        raise ValueError(f"K must be >= 0, got {K}")
    radii = np.geomspace(min(rho_min, r), r, n_samples)
    radii[-1] = r
    vals = barrier_expression(radii, a, K)
    bad = np.flatnonzero(vals > 0)
    if bad.size == 0:
        r_star = float(r)
    elif bad[0] == 0:
        r_star = 0.0
    else:
        r_star = float(radii[bad[0] - 1])
    return BarrierReport(a, r, K, radii, vals, r_star)


def green_ball(pole, x, radius: float = 1.0):
    """Green function of ``-Laplace`` on the disc of given radius centred at 0.

    Image-point formula ``(1/2pi) ln(|x - pole*| |pole| / (radius |x - pole|))``
    with ``pole*`` the inversion of ``pole`` in the circle;
    ``(1/2pi) ln(radius/|x|)`` when the pole is the centre. ``x`` may be an
    array of shape ``(..., 2)``.
    """
    p = np.asarray(pole, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(np.hypot(x[..., 0], x[..., 1]) > radius * (1 + 1e-14)):
        raise ValueError("point outside the disc")
    if np.hypot(p[0], p[1]) >= radius:
        raise ValueError("pole must lie inside the disc")
    d = np.hypot(x[..., 0] - p[0], x[..., 1] - p[1])
    if np.any(d == 0):
        raise ValueError("x coincides with the pole")
    pn = float(np.hypot(p[0], p[1]))
    if pn == 0.0:
        return np.log(radius / d) / (2 * np.pi)
    star = p * radius**2 / pn**2
    ds = np.hypot(x[..., 0] - star[0], x[..., 1] - star[1])
    return np.log(ds * pn / (radius * d)) / (2 * np.pi)


def green_field(grid: Grid, pole=(0.0, 0.0), radius: float = 1.0) -> np.ndarray:
    """Green function sampled at the unknowns; ``+inf`` at a node on the pole."""
    pts = np.column_stack([grid.x1, grid.x2])
    at_pole = (pts[:, 0] == pole[0]) & (pts[:, 1] == pole[1])
    out = np.full(grid.size, np.inf)
    out[~at_pole] = green_ball(pole, pts[~at_pole], radius)
    return out


def stencil_residual(grid: Grid, values: np.ndarray, exact=None) -> np.ndarray:
    """Five-point ``-Laplace_h`` of ``values`` at unknowns whose 4 neighbours are unknowns.

    ``exact(x1, x2)`` supplies values at neighbours that are not unknowns;
    without it those nodes get NaN.
    """
    h = grid.h
    out = 4.0 * values.copy()
    i, j = grid.nodes[:, 0], grid.nodes[:, 1]
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        q = grid.lookup(i + di, j + dj)
        nb = np.full(grid.size, np.nan)
        nb[q >= 0] = values[q[q >= 0]]
        if exact is not None and np.any(q < 0):
            miss = q < 0
            nb[miss] = exact((i[miss] + di) * h, (j[miss] + dj) * h)
        out -= nb
    return out / h**2


@dataclass
class SweepEntry:
    lam: float
    cap_size: int
    minima: list[float]
    argmins: list[tuple[int, int] | None]
    origin: str
    c_range: tuple[float, float] | None = None

    @property
    def min_all(self) -> float:
        return min(self.minima)


@dataclass
class MovingPlaneReport:
    entries: list[SweepEntry]
    tol: float
    mu_hat: float | None
    first_violation: float | None
    symmetry_defect: float | None = None
    monotonicity_defect: float | None = None
    coefficient_signs: dict | None = None
    c_range: tuple[float, float] | None = None
    lipschitz: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def swept(self) -> list[float]:
        return [e.lam for e in self.entries]

    def lines(self) -> list[str]:
        out = [f"sweep_tol = {self.tol!r}",
               f"sweep_points = {len(self.entries)}",
               f"mu_hat = {'sweep failed' if self.mu_hat is None else repr(self.mu_hat)}",
               f"first_violating_lambda = {'none' if self.first_violation is None else repr(self.first_violation)}"]
        if self.symmetry_defect is not None:
            out.append(f"symmetry_defect = {self.symmetry_defect!r}")
        if self.monotonicity_defect is not None:
            out.append(f"monotonicity_defect = {self.monotonicity_defect!r}")
        if self.c_range is not None:
            out.append(f"c_range = {self.c_range[0]!r} {self.c_range[1]!r}")
            out.append(f"c_within_0_L = {self.c_range[0] >= -C_SLACK and self.c_range[1] <= self.lipschitz + C_SLACK}")
        counts: dict[str, int] = {}
        for e in self.entries:
            counts[e.origin] = counts.get(e.origin, 0) + 1
        out.append("reflected_puncture_location = " + ", ".join(f"{k}:{v}" for k, v in sorted(counts.items())))
        out.extend(f"note = {n}" for n in self.notes)
        return out


def _origin_location(grid: Grid, k: int) -> str:
    # where the reflected puncture (2 lam - p1, p2) sits relative to the domain
    p1, p2 = grid.spec.singular_point
    lam = k / (2 * grid.n_cells)
    x = (2 * lam - p1, p2)
    if grid.spec.contains(*x):
        return "inside"
    ri, rj = x[0] * grid.n_cells, x[1] * grid.n_cells
    if abs(ri - round(ri)) < 1e-9 and abs(rj - round(rj)) < 1e-9:
        if int(grid.classify(int(round(ri)), int(round(rj)))) == BOUNDARY:
            return "boundary-band"
    return "outside"


def _entry(stack, lam, f=None) -> SweepEntry:
    rd = reflection_diff(stack, lam)
    g = stack.grid
    argmins = [None if a is None else (int(g.nodes[a, 0]), int(g.nodes[a, 1])) for a in rd.argmins]
    entry = SweepEntry(lam, len(rd.nodes), rd.minima, argmins, _origin_location(g, rd.k))
    if f is not None and len(rd.nodes):
        c = compute_c(stack, lam, f)
        entry.c_range = (float(c.min()), float(c.max()))
    return entry


def _summarise(entries, tol):
    # entries are in descending lambda order
    mu_hat = None
    first_violation = None
    for e in entries:
        if e.min_all < -tol:
            first_violation = e.lam
            break
        mu_hat = e.lam
    return mu_hat, first_violation


def sweep_mu(stack: FieldStack, tol: float | None = None, rel_tol: float = 1e-8,
             f: NonlinearitySpec | None = None, lambdas=None) -> MovingPlaneReport:
    """Sweep ``lam = 1 - h/2, 1 - h, ..., h/2, 0`` and locate the critical plane.

    ``mu_hat`` is the smallest swept ``lam`` such that every component minimum
    is ``>= -tol`` at that ``lam`` and all larger ones; ``None`` if the very
    first plane already fails. The sweep continues past violations so the
    full profile is recorded. ``tol`` defaults to ``rel_tol * max|u_1|``.
    With ``f`` given the range of the coefficient ``c`` is recorded as well.
    """
    g = stack.grid
    if tol is None:
        tol = rel_tol * stack.sup_u1
    if lambdas is None:
        lambdas = [k / (2 * g.n_cells) for k in range(2 * g.n_cells - 1, -1, -1)]
    else:
        lambdas = sorted(lambdas, reverse=True)
    entries = [_entry(stack, lam, f) for lam in lambdas]
    mu_hat, first_violation = _summarise(entries, tol)
    report = MovingPlaneReport(entries, tol, mu_hat, first_violation)
    report.symmetry_defect = symmetry_defect(stack)
    report.monotonicity_defect = monotonicity_defect(stack)
    report.coefficient_signs = sign_equivalence(stack.alpha)
    if f is not None:
        ranges = [e.c_range for e in entries if e.c_range is not None]
        if ranges:
            report.c_range = (min(r[0] for r in ranges), max(r[1] for r in ranges))
        report.lipschitz = f.lipschitz
    report.notes.append("minima are reported, strict positivity is not asserted at float scale")
    return report


def singular_profile_experiment(grid: Grid, lambda_list=None) -> tuple[MovingPlaneReport, FieldStack]:
    """Inject the disc Green function with pole at the origin as ``u_1`` and sweep.

    The origin node (if present) holds ``+inf``; cap nodes whose mirror is the
    origin are left out of the reflection differences.
    """
    if grid.spec.shape != "disc":
        raise ValueError("the singular profile needs a disc domain")
    radius = grid.spec.params["radius"]
    u1 = green_field(grid, (0.0, 0.0), radius)
    stack = FieldStack(grid, as_alpha([0.0]), u1[None, :].copy(), converged=True)
    if lambda_list is None:
        lambda_list = [k / (2 * grid.n_cells) for k in range(2 * grid.n_cells - 1, -1, -1)]
    lambdas = sorted(lambda_list, reverse=True)
    entries = [_entry(stack, lam) for lam in lambdas]
    # strict positivity is the claim for lam > 0
    report = MovingPlaneReport(entries, 0.0, None, None)
    report.mu_hat, report.first_violation = _summarise([e for e in entries if e.lam > 0], 0.0)
    report.symmetry_defect = symmetry_defect(stack)
    return report, stack


def write_sweep_csv(report: MovingPlaneReport, path) -> None:
    """``lambda, component, min_v, argmin_i, argmin_j`` for each swept plane."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "component", "min_v", "argmin_i", "argmin_j"])
        for e in report.entries:
            for comp, (mv, am) in enumerate(zip(e.minima, e.argmins), start=1):
                ai, aj = ("", "") if am is None else am
                w.writerow([repr(e.lam), comp, repr(mv), ai, aj])


def write_plotdata(report: MovingPlaneReport, path) -> None:
    """Two columns: ``lambda`` and the minimum over components."""
    with open(path, "w") as fh:
        fh.write("# lambda min_v\n")
        for e in sorted(report.entries, key=lambda e: e.lam):
            fh.write(f"{e.lam!r} {e.min_all!r}\n")
