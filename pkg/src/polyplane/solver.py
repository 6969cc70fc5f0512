"""Picard iteration for the cascaded Navier system.

The 2m-th order problem ``prod_i (-Laplace + alpha_i) u = f(u)`` with Navier
conditions is solved as the chain

    (-Laplace + alpha_i) u_i = u_{i+1},   i = 1..m-1
    (-Laplace + alpha_m) u_m = f(u_1)

with ``u_i = 0`` on the boundary. Every linear solve is SPD and handled by
conjugate gradients.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .discretize import SparseOperator, assemble
from .geometry import Grid
from .symcoeffs import AlphaVector, as_alpha

__all__ = [
    "NONLINEARITY_KINDS",
    "NonlinearitySpec",
    "F1Report",
    "check_f1",
    "parse_nonlinearity",
    "SolveConfig",
    "FieldStack",
    "ConvergenceError",
    "solve_linear",
    "solve_system",
    "write_fields_csv",
]

log = logging.getLogger(__name__)

NONLINEARITY_KINDS = {
    "constant": ("c",),
    "affine": ("a", "b"),
    "saturating": ("a", "b", "M"),
    "arctan": ("a", "b"),
}


class ConvergenceError(RuntimeError):
    """Raised when CG or the Picard loop fails to reach its tolerance."""

    def __init__(self, message, history=None, residual=None, stack=None):
        super().__init__(message)
        self.history = list(history or [])
        self.residual = residual
        self.stack = stack


@dataclass(frozen=True)
class NonlinearitySpec:
    """Catalog nonlinearity ``f``.

    ``constant(c)``: ``c``; ``affine(a, b)``: ``a + b u``;
    ``saturating(a, b, M)``: ``a + b min(u, M)``;
    ``arctan(a, b)``: ``a + b arctan(u)``.
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise ValueError(f"unknown nonlinearity {self.kind!r}; expected one of {sorted(NONLINEARITY_KINDS)}")
        names = NONLINEARITY_KINDS[self.kind]
        if len(self.params) != len(names):
            raise ValueError(f"{self.kind} takes {len(names)} parameter(s) {names}, got {len(self.params)}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @classmethod
    def constant(cls, c):
        return cls("constant", (c,))

    @classmethod
    def affine(cls, a, b):
        return cls("affine", (a, b))

    @classmethod
    def saturating(cls, a, b, M):
        return cls("saturating", (a, b, M))

    @classmethod
    def arctan(cls, a, b):
        return cls("arctan", (a, b))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.full_like(u, p[0])
        if self.kind == "affine":
            return p[0] + p[1] * u
        if self.kind == "saturating":
            return p[0] + p[1] * np.minimum(u, p[2])
        return p[0] + p[1] * np.arctan(u)

    @property
    def lipschitz(self) -> float:
        return 0.0 if self.kind == "constant" else abs(self.params[1])

    @property
    def f0(self) -> float:
        return float(self(0.0))

    def slope(self, u):
        """Right derivative of ``f`` at ``u``."""
        u = np.asarray(u, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.zeros_like(u)
        if self.kind == "affine":
            return np.full_like(u, p[1])
        if self.kind == "saturating":
            return np.where(u < p[2], p[1], 0.0)
        return p[1] / (1.0 + u * u)

    def difference_quotient(self, u, w):
        """``(f(w) - f(u)) / (w - u)`` evaluated without cancellation.

        Equal arguments give the right derivative at ``u``.
        """
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        p = self.params
        v = w - u
        same = v == 0
        safe_v = np.where(same, 1.0, v)
        if self.kind == "constant":
            q = np.zeros(np.broadcast(u, w).shape)
        elif self.kind == "affine":
            q = np.full(np.broadcast(u, w).shape, p[1])
        elif self.kind == "saturating":
            lo, hi = np.minimum(u, w), np.maximum(u, w)
            frac = np.where(hi <= p[2], 1.0,
                            np.where(lo >= p[2], 0.0, (p[2] - lo) / np.where(same, 1.0, hi - lo)))
            q = p[1] * frac
        else:
            # arctan w - arctan u = arctan(v / (1 + u w)) when u w > -1
            q = p[1] * np.arctan(safe_v / (1.0 + u * w)) / safe_v
        return np.where(same, self.slope(u), q)

    def __str__(self):
        return f"{self.kind} " + " ".join(f"{p:g}" for p in self.params)


def parse_nonlinearity(text: str) -> NonlinearitySpec:
    """Parse ``"kind p1 p2 ..."`` (e.g. ``"saturating 0.5 3 10"``)."""
    parts = text.split()
    if not parts:
        raise ValueError("empty nonlinearity")
    try:
        params = tuple(float(p) for p in parts[1:])
    except ValueError:
        raise ValueError(f"nonlinearity parameters must be numbers: {text!r}") from None
    return NonlinearitySpec(parts[0], params)


@dataclass
class F1Report:
    nonlinearity: str
    lipschitz: float
    clauses: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.clauses.values())

    @property
    def violated(self) -> list[str]:
        return [k for k, v in self.clauses.items() if not v]


def check_f1(f: NonlinearitySpec) -> F1Report:
    """Clause-by-clause check: Lipschitz, ``f(0) >= 0``, nondecreasing."""
    p = f.params
    # every catalog kind is globally Lipschitz once its parameters are finite
    lipschitz_ok = all(math.isfinite(x) for x in p)
    nondecreasing = True if f.kind == "constant" else p[1] >= 0.0
    clauses = {
        "lipschitz": lipschitz_ok,
        "f(0) >= 0": f.f0 >= 0.0,
        "nondecreasing": nondecreasing,
    }
    return F1Report(str(f), f.lipschitz, clauses)


@dataclass(frozen=True)
class SolveConfig:
    picard_tol: float = 1e-10
    picard_max_iter: int = 200
    omega: float = 1.0
    cg_tol: float = 1e-12
    cg_max_iter: int = 10_000
    estimate_contraction: bool = True

    def __post_init__(self):
        if not (self.picard_tol > 0 and self.cg_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError(f"damping omega must lie in (0, 1], got {self.omega}")
        if self.picard_max_iter < 1 or self.cg_max_iter < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass
class FieldStack:
    """Grid fields ``u_1..u_m`` (rows of ``fields``) plus solve diagnostics."""

    grid: Grid
    alpha: AlphaVector
    fields: np.ndarray
    nonlinearity: NonlinearitySpec | None = None
    iterations: int = 0
    converged: bool = False
    updates: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    contraction_estimate: float | None = None
    cg_iterations: int = 0

    @property
    def m(self) -> int:
        return self.fields.shape[0]

    def u(self, i: int) -> np.ndarray:
        """Component ``u_i`` with 1-based ``i``."""
        return self.fields[i - 1]

    @property
    def minima(self) -> list[float]:
        return [float(np.min(c)) for c in self.fields]

    @property
    def sup_u1(self) -> float:
        return float(np.max(np.abs(self.fields[0][np.isfinite(self.fields[0])])))

    @property
    def positive(self) -> bool:
        return bool(np.all(self.fields > 0))

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.fields == 0))


def solve_linear(op: SparseOperator, rhs, cfg: SolveConfig = SolveConfig(), stats: dict | None = None) -> np.ndarray:
    """Conjugate gradients from a zero initial guess.

    Stops when ``max|r| <= cg_tol * max|rhs|`` on the true residual; the
    recursive residual drives the inner loop and a few restarts from the
    current iterate absorb its drift.
    """
    A = op.matrix
    b = np.asarray(rhs, dtype=float)
    if b.shape != (op.dimension,):
        raise ValueError(f"rhs has shape {b.shape}, operator dimension is {op.dimension}")
    x = np.zeros_like(b)
    bnorm = np.max(np.abs(b)) if b.size else 0.0
    if bnorm == 0.0:
        return x
    target = cfg.cg_tol * bnorm
    total = 0
    r = b.copy()
    for _restart in range(4):
        if _restart:
            r = b - A @ x
        if np.max(np.abs(r)) <= target:
            break
        p = r.copy()
        rr = r @ r
        for _ in range(cfg.cg_max_iter - total):
            Ap = A @ p
            step = rr / (p @ Ap)
            x += step * p
            r -= step * Ap
            total += 1
            if np.max(np.abs(r)) <= target:
                break
            rr_new = r @ r
            p *= rr_new / rr
            p += r
            rr = rr_new
        if total >= cfg.cg_max_iter:
            break
    final = np.max(np.abs(b - A @ x)) / bnorm
    if stats is not None:
        stats["iterations"] = stats.get("iterations", 0) + total
        stats["residual"] = final
    # allow the true residual a little slack above the recursive one
    if final > 10.0 * cfg.cg_tol:
        raise ConvergenceError(
            f"CG stopped after {total} iterations with relative residual {final:.3e}",
            residual=final,
        )
    return x


def _chain_solve(ops, top, cfg, stats):
    """Solve the cascade top-down given the right-hand side of the last equation."""
    m = len(ops)
    out = np.empty((m, ops[0].dimension))
    rhs = top
    for i in range(m - 1, -1, -1):
        out[i] = solve_linear(ops[i], rhs, cfg, stats)
        rhs = out[i]
    return out


def _contraction(ops, lipschitz, cfg, n_iter=12):
    # power iteration on the SPD composed inverse prod_i (-Laplace + alpha_i)^{-1}
    n = ops[0].dimension
    v = np.ones(n) / math.sqrt(n)
    rho = 0.0
    for _ in range(n_iter):
        w = _chain_solve(ops, v, cfg, {})[0]
        rho = float(v @ w)
        v = w / np.linalg.norm(w)
    return lipschitz * rho


def solve_system(grid: Grid, alpha, f: NonlinearitySpec, cfg: SolveConfig = SolveConfig()) -> FieldStack:
    """Damped Picard iteration on ``u_1``.

    Each sweep solves ``(-Laplace + alpha_m) u_m = f(u_1)`` and back-substitutes
    down the chain; the new ``u_1`` is blended with weight ``omega``, which is
    halved whenever the update norm grows. Raises :class:`ConvergenceError`
    (carrying the partial stack and update history) if the sup-norm update
    does not drop below ``picard_tol``.
    """
    alpha = as_alpha(alpha)
    report = check_f1(f)
    if not report.ok:
        raise ValueError(f"nonlinearity {f} violates (f1): {', '.join(report.violated)}")
    ops = [assemble(grid, a) for a in alpha]
    stack = FieldStack(grid, alpha, np.zeros((alpha.m, grid.size)), nonlinearity=f)
    if cfg.estimate_contraction and f.lipschitz > 0:
        stack.contraction_estimate = _contraction(ops, f.lipschitz, cfg)
        log.info("Picard contraction estimate L*rho = %.4g", stack.contraction_estimate)

    stats: dict = {}
    omega = cfg.omega
    u1 = np.zeros(grid.size)
    fields = stack.fields
    for it in range(1, cfg.picard_max_iter + 1):
        new = _chain_solve(ops, f(u1), cfg, stats)
        u1_next = (1.0 - omega) * u1 + omega * new[0]
        update = float(np.max(np.abs(u1_next - u1)))
        if stack.updates and update > stack.updates[-1] and omega > 1.0 / 1024:
            omega *= 0.5
            log.debug("update grew to %.3e; damping omega -> %g", update, omega)
        stack.updates.append(update)
        u1 = u1_next
        fields = new
        fields[0] = u1
        stack.iterations = it
        # a constant f makes the first sweep exact
        if update < cfg.picard_tol or f.lipschitz == 0.0:
            stack.converged = True
            break
    stack.fields = fields
    stack.cg_iterations = stats.get("iterations", 0)
    stack.residuals = residuals(stack, ops)
    if not stack.converged:
        raise ConvergenceError(
            f"Picard did not converge in {cfg.picard_max_iter} iterations "
            f"(last update {stack.updates[-1]:.3e})",
            history=stack.updates,
            stack=stack,
        )
    if not stack.positive:
        level = "degenerate (identically zero)" if stack.degenerate else "not strictly positive"
        log.warning("converged solution is %s; min u_i = %s", level, stack.minima)
    return stack


def residuals(stack: FieldStack, ops=None) -> list[float]:
    """Sup-norm residual of every chain equation, relative to its right-hand side."""
    if ops is None:
        ops = [assemble(stack.grid, a) for a in stack.alpha]
    out = []
    m = stack.m
    for i in range(m):
        rhs = stack.fields[i + 1] if i + 1 < m else stack.nonlinearity(stack.fields[0])
        r = ops[i].matrix @ stack.fields[i] - rhs
        scale = max(float(np.max(np.abs(rhs))), np.finfo(float).tiny)
        out.append(float(np.max(np.abs(r))) / scale)
    return out


def write_fields_csv(stack: FieldStack, path) -> None:
    """Write ``i, j, x1, x2, u_1 .. u_m`` for every interior node."""
    g = stack.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x1", "x2"] + [f"u_{k}" for k in range(1, stack.m + 1)])
        for p in range(g.size):
            i, j = (int(v) for v in g.nodes[p])
            w.writerow([i, j, repr(i / g.n_cells), repr(j / g.n_cells)]
                       + [repr(float(v)) for v in stack.fields[:, p]])
