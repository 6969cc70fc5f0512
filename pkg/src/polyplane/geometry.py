"""Planar domains, uniform node grids and moving-plane geometry.

All domains live in the plane and are normalised so that ``sup x1 = 1``.
Reflections are taken across the vertical line ``x1 = lam``; ``lam`` is kept
on the half-grid lattice ``h/2 * Z`` so a node always reflects onto a node.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "SHAPES",
    "DomainSpec",
    "ValidationReport",
    "Grid",
    "EXTERIOR",
    "BOUNDARY",
    "INTERIOR",
    "PUNCTURE",
    "make_domain",
    "disc",
    "ellipse",
    "stadium",
    "lens",
    "shifted_disc",
    "validate_domain",
    "build_grid",
    "grid_from_mask",
    "reflect",
    "lambda_index",
    "cap_nodes",
    "write_grid_csv",
]

EXTERIOR, BOUNDARY, INTERIOR, PUNCTURE = 0, 1, 2, 3
CLASS_NAMES = {EXTERIOR: "exterior", BOUNDARY: "boundary", INTERIOR: "interior", PUNCTURE: "puncture"}

SHAPES = ("disc", "ellipse", "stadium", "lens", "shifted-disc")

_DEFAULTS = {
    "disc": {"radius": 1.0},
    "ellipse": {"a": 1.0, "b": 0.6},
    "stadium": {"half_length": 0.5, "cap_radius": 0.5},
    "lens": {"offset": 0.5},
    "shifted-disc": {"center": 0.3, "radius": 0.7},
}


@dataclass(frozen=True)
class DomainSpec:
    """Analytic description of a planar domain.

    ``negative_control`` marks a domain that is deliberately allowed to
    break the structural assumptions (x1-symmetry in practice).
    """

    shape: str
    params: dict = field(default_factory=dict)
    singular_point: tuple[float, float] = (0.0, 0.0)
    negative_control: bool = False

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        merged = dict(_DEFAULTS[self.shape])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameter(s) {sorted(unknown)} for shape {self.shape!r}")
        merged.update({k: float(v) for k, v in self.params.items()})
        for k, v in merged.items():
            if not math.isfinite(v):
                raise ValueError(f"{self.shape}: parameter {k} must be finite")
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "singular_point", tuple(float(c) for c in self.singular_point))
        if self.shape == "shifted-disc" and not self.negative_control:
            object.__setattr__(self, "negative_control", True)

    def contains(self, x1, x2):
        """Strict membership test, vectorised over numpy arrays."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        p = self.params
        if self.shape == "disc":
            return x1 * x1 + x2 * x2 < p["radius"] ** 2
        if self.shape == "ellipse":
            return (x1 / p["a"]) ** 2 + (x2 / p["b"]) ** 2 < 1.0
        if self.shape == "stadium":
            L, R = p["half_length"], p["cap_radius"]
            d = np.maximum(np.abs(x1) - L, 0.0)
            return d * d + x2 * x2 < R * R
        if self.shape == "lens":
            d = p["offset"]
            rho2 = 1.0 + d * d
            return ((x2 - d) ** 2 + x1 * x1 < rho2) & ((x2 + d) ** 2 + x1 * x1 < rho2)
        # shifted-disc
        c, r = p["center"], p["radius"]
        return (x1 - c) ** 2 + x2 * x2 < r * r

    @property
    def x1_bounds(self) -> tuple[float, float]:
        p = self.params
        if self.shape == "disc":
            return -p["radius"], p["radius"]
        if self.shape == "ellipse":
            return -p["a"], p["a"]
        if self.shape == "stadium":
            e = p["half_length"] + p["cap_radius"]
            return -e, e
        if self.shape == "lens":
            return -1.0, 1.0
        return p["center"] - p["radius"], p["center"] + p["radius"]

    @property
    def x2_halfwidth(self) -> float:
        p = self.params
        if self.shape in ("disc", "shifted-disc"):
            return p["radius"]
        if self.shape == "ellipse":
            return p["b"]
        if self.shape == "stadium":
            return p["cap_radius"]
        d = p["offset"]
        return math.sqrt(1.0 + d * d) - d

    @property
    def sup_x1(self) -> float:
        return self.x1_bounds[1]

    @property
    def description(self) -> str:
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.shape}({args})"


def make_domain(shape: str, negative_control: bool = False, singular_point=(0.0, 0.0), **params) -> DomainSpec:
    return DomainSpec(shape, params, tuple(singular_point), negative_control)


def disc(radius: float = 1.0) -> DomainSpec:
    return DomainSpec("disc", {"radius": radius})


def ellipse(b: float = 0.6, a: float = 1.0) -> DomainSpec:
    return DomainSpec("ellipse", {"a": a, "b": b})


def stadium(half_length: float = 0.5, cap_radius: float = 0.5) -> DomainSpec:
    return DomainSpec("stadium", {"half_length": half_length, "cap_radius": cap_radius})


def lens(offset: float = 0.5) -> DomainSpec:
    return DomainSpec("lens", {"offset": offset})


def shifted_disc(center: float = 0.3, radius: float = 0.7) -> DomainSpec:
    return DomainSpec("shifted-disc", {"center": center, "radius": radius}, negative_control=True)


@dataclass
class ValidationReport:
    domain: str
    checks: dict[str, bool]
    witnesses: dict[str, str]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]

    def lines(self) -> list[str]:
        out = []
        for name, passed in self.checks.items():
            line = f"{name} = {'pass' if passed else 'FAIL'}"
            if name in self.witnesses:
                line += f"  ({self.witnesses[name]})"
            out.append(line)
        return out


def validate_domain(spec: DomainSpec, samples: int = 801) -> ValidationReport:
    """Check the structural assumptions on a fine symmetric sampling.

    Never raises on a failed assumption; the report lists what broke and a
    witness point where one exists.
    """
    lo, hi = spec.x1_bounds
    X = 1.05 * max(abs(lo), abs(hi))
    Y = 1.05 * spec.x2_halfwidth
    # odd sample count keeps x1 = 0 on the sampling and the sampling symmetric
    k = samples // 2
    n = 2 * k + 1
    xs = X * np.arange(-k, k + 1) / k
    ys = Y * np.arange(-k, k + 1) / k
    X1, X2 = np.meshgrid(xs, ys, indexing="ij")
    inside = spec.contains(X1, X2)

    checks: dict[str, bool] = {}
    witnesses: dict[str, str] = {}

    convex = True
    for jj in range(n):
        idx = np.flatnonzero(inside[:, jj])
        if idx.size and idx[-1] - idx[0] + 1 != idx.size:
            convex = False
            gap = idx[np.flatnonzero(np.diff(idx) > 1)[0]] + 1
            witnesses["x1_convex"] = f"gap at ({xs[gap]:.6g}, {ys[jj]:.6g})"
            break
    checks["x1_convex"] = convex

    mismatch = inside != inside[::-1, :]
    checks["x1_symmetric"] = not mismatch.any()
    if mismatch.any():
        a, b = np.argwhere(mismatch)[0]
        witnesses["x1_symmetric"] = (
            f"({xs[a]:.6g}, {ys[b]:.6g}) {'inside' if inside[a, b] else 'outside'}, "
            f"mirror ({-xs[a]:.6g}, {ys[b]:.6g}) {'inside' if inside[n - 1 - a, b] else 'outside'}"
        )

    p = spec.singular_point
    checks["puncture_inside"] = bool(spec.contains(p[0], p[1]))
    if not checks["puncture_inside"]:
        witnesses["puncture_inside"] = f"singular point {p} not in domain"
    checks["sup_x1_is_1"] = abs(spec.sup_x1 - 1.0) <= 1e-12
    if not checks["sup_x1_is_1"]:
        witnesses["sup_x1_is_1"] = f"sup x1 = {spec.sup_x1:.12g}"
    return ValidationReport(spec.description, checks, witnesses)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform node grid with spacing ``h = 1/n_cells`` over a domain.

    Nodes are ``(i*h, j*h)`` for integer ``i in [-I, I]``, ``j in [-J, J]``.
    ``node_class`` and ``unknown`` are indexed ``[i + I, j + J]``; ``unknown``
    holds the unknown number of an interior node and -1 elsewhere. Unknowns
    are numbered lexicographically with ``i`` slowest.
    """

    spec: DomainSpec
    n_cells: int
    I: int
    J: int
    node_class: np.ndarray
    unknown: np.ndarray
    nodes: np.ndarray
    puncture_node: tuple[int, int] | None

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def conforming(self) -> bool:
        return not self.spec.negative_control

    @property
    def x1(self) -> np.ndarray:
        return self.nodes[:, 0] / self.n_cells

    @property
    def x2(self) -> np.ndarray:
        return self.nodes[:, 1] / self.n_cells

    def in_box(self, i, j):
        i = np.asarray(i)
        j = np.asarray(j)
        return (np.abs(i) <= self.I) & (np.abs(j) <= self.J)

    def classify(self, i, j) -> np.ndarray:
        """Node class for integer coordinates; outside the index box is exterior."""
        return self._gather(self.node_class, i, j, EXTERIOR)

    def lookup(self, i, j) -> np.ndarray:
        """Unknown index for integer coordinates, -1 if not an interior node."""
        return self._gather(self.unknown, i, j, -1)

    def _gather(self, table, i, j, fill):
        i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        ok = self.in_box(i, j)
        out = np.full(i.shape, fill, dtype=table.dtype)
        out[ok] = table[i[ok] + self.I, j[ok] + self.J]
        return out

    @cached_property
    def mirror(self) -> np.ndarray:
        """Unknown index of ``(-i, j)`` for every unknown (-1 when that node is not interior)."""
        return self.lookup(-self.nodes[:, 0], self.nodes[:, 1])

    @property
    def is_mirror_symmetric(self) -> bool:
        return bool(np.array_equal(self.node_class, self.node_class[::-1, :]))

    def to_array(self, values, fill=np.nan) -> np.ndarray:
        """Scatter per-unknown values into the ``(2I+1, 2J+1)`` node array."""
        out = np.full(self.unknown.shape, fill, dtype=float)
        out[self.nodes[:, 0] + self.I, self.nodes[:, 1] + self.J] = values
        return out


def build_grid(spec: DomainSpec, n_cells: int, exclude_puncture: bool = False) -> Grid:
    """Classify the nodes of the ``h = 1/n_cells`` lattice against ``spec``.

    Interior nodes lie strictly inside the domain; boundary nodes are exterior
    nodes with an interior 4-neighbour (they carry the zero Dirichlet value).
    With ``exclude_puncture`` a node coinciding with the singular point is
    classified ``PUNCTURE`` and removed from the unknowns.
    """
    if n_cells < 8:
        raise ValueError(f"n_cells must be >= 8, got {n_cells}")
    report = validate_domain(spec)
    if not report.ok and not spec.negative_control:
        raise ValueError(f"domain {spec.description} violates {report.failed}; "
                         "set negative_control to use it anyway")
    lo, hi = spec.x1_bounds
    I = math.ceil(max(abs(lo), abs(hi)) * n_cells) + 1
    J = math.ceil(spec.x2_halfwidth * n_cells) + 1
    ii, jj = _index_mesh(I, J)
    inside = spec.contains(ii / n_cells, jj / n_cells)

    cls = np.where(inside, INTERIOR, EXTERIOR).astype(np.int8)
    puncture = None
    p = spec.singular_point
    pi, pj = p[0] * n_cells, p[1] * n_cells
    if abs(pi - round(pi)) < 1e-9 and abs(pj - round(pj)) < 1e-9:
        puncture = (int(round(pi)), int(round(pj)))
        if exclude_puncture and abs(puncture[0]) <= I and abs(puncture[1]) <= J:
            cls[puncture[0] + I, puncture[1] + J] = PUNCTURE
    return _finish_grid(spec, n_cells, I, J, cls, puncture)


def grid_from_mask(interior: np.ndarray, n_cells: int = 1, spec: DomainSpec | None = None) -> Grid:
    """Grid from an explicit boolean interior mask of shape ``(2I+1, 2J+1)``.

    Mostly useful for small hand-built operators; no domain validation and
    no minimum size is applied.
    """
    interior = np.asarray(interior, dtype=bool)
    a, b = interior.shape
    if a % 2 == 0 or b % 2 == 0:
        raise ValueError("mask dimensions must be odd so that (0, 0) is the centre node")
    padded = np.pad(interior, 1)
    cls = np.where(padded, INTERIOR, EXTERIOR).astype(np.int8)
    spec = spec or DomainSpec("disc", {"radius": 1.0})
    return _finish_grid(spec, n_cells, a // 2 + 1, b // 2 + 1, cls, None, min_nodes=1)


def _finish_grid(spec, n_cells, I, J, cls, puncture, min_nodes=4) -> Grid:
    interior = cls == INTERIOR
    near = np.zeros_like(interior)
    near[1:, :] |= interior[:-1, :]
    near[:-1, :] |= interior[1:, :]
    near[:, 1:] |= interior[:, :-1]
    near[:, :-1] |= interior[:, 1:]
    cls[(cls == EXTERIOR) & near] = BOUNDARY

    count = int(interior.sum())
    if count < min_nodes:
        raise ValueError(f"only {count} interior nodes at n_cells={n_cells}")
    unknown = np.full(cls.shape, -1, dtype=np.int64)
    unknown[interior] = np.arange(count)
    ii, jj = _index_mesh(I, J)
    nodes = np.column_stack([ii[interior], jj[interior]]).astype(np.int64)
    for a in (cls, unknown, nodes):
        a.setflags(write=False)
    return Grid(spec, n_cells, I, J, cls, unknown, nodes, puncture)


def _index_mesh(I, J):
    return np.meshgrid(np.arange(-I, I + 1), np.arange(-J, J + 1), indexing="ij")


def reflect(x, lam: float):
    """Reflect ``x = (x1, x2)`` across the line ``x1 = lam``."""
    return (2.0 * lam - x[0], x[1])


def lambda_index(grid: Grid, lam: float) -> int:
    """Return ``k`` with ``lam = k*h/2``; reject values off the half-grid lattice."""
    k = round(2.0 * lam * grid.n_cells)
    if abs(k - 2.0 * lam * grid.n_cells) > 1e-9:
        raise ValueError(f"lambda={lam!r} is not a multiple of h/2 = {0.5 / grid.n_cells!r}")
    if not 0 <= k < 2 * grid.n_cells:
        raise ValueError(f"lambda={lam!r} outside [0, 1)")
    return int(k)


def cap_nodes(grid: Grid, lam: float) -> np.ndarray:
    """Unknown indices of interior nodes with ``x1 > lam`` (sorted)."""
    k = lambda_index(grid, lam)
    return np.flatnonzero(2 * grid.nodes[:, 0] > k)


def write_grid_csv(grid: Grid, path) -> None:
    """Write every node of the index box as ``i, j, x1, x2, class``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x1", "x2", "class"])
        for a in range(2 * grid.I + 1):
            for b in range(2 * grid.J + 1):
                i, j = a - grid.I, b - grid.J
                w.writerow([i, j, repr(i / grid.n_cells), repr(j / grid.n_cells),
                            CLASS_NAMES[int(grid.node_class[a, b])]])
