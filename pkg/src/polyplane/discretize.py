"""Five-point finite-difference operators ``-Laplace + alpha`` with zero Dirichlet data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import Grid

__all__ = ["SparseOperator", "assemble", "apply", "write_coo", "mirror_matrix"]

_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Assembled ``-Laplace_h + shift`` on the interior unknowns of a grid."""

    matrix: sp.csr_matrix
    shift: float
    h: float

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def indptr(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def data(self) -> np.ndarray:
        return self.matrix.data

    def __matmul__(self, v):
        return apply(self, v)


def assemble(grid: Grid, alpha_i: float = 0.0) -> SparseOperator:
    """Assemble the shifted 5-point Laplacian.

    Diagonal ``4/h^2 + alpha_i``, ``-1/h^2`` for each interior neighbour;
    neighbours that are not interior carry zero Dirichlet data and are dropped.
    Raises ``ValueError`` for a negative shift. The M-matrix structure
    (positive diagonal, nonpositive off-diagonal, diagonal dominance) is
    checked before returning.
    """
    alpha_i = float(alpha_i)
    if not alpha_i >= 0.0:
        raise ValueError(f"shift alpha_i must be >= 0, got {alpha_i}")
    n = grid.size
    inv_h2 = float(grid.n_cells) ** 2
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, 4.0 * inv_h2 + alpha_i)]
    for di, dj in _OFFSETS:
        nb = grid.lookup(grid.nodes[:, 0] + di, grid.nodes[:, 1] + dj)
        keep = nb >= 0
        rows.append(np.flatnonzero(keep))
        cols.append(nb[keep])
        vals.append(np.full(int(keep.sum()), -inv_h2))
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    A.sort_indices()
    _check_m_matrix(A)
    return SparseOperator(A, alpha_i, grid.h)


def _check_m_matrix(A: sp.csr_matrix) -> None:
    diag = A.diagonal()
    off = A - sp.diags(diag)
    if np.any(diag <= 0):
        raise AssertionError("nonpositive diagonal entry")
    if off.nnz and off.data.max() > 0:
        raise AssertionError("positive off-diagonal entry")
    if np.any(diag < np.asarray(abs(off).sum(axis=1)).ravel()):
        raise AssertionError("operator is not diagonally dominant")


def apply(op: SparseOperator, field) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    if field.shape != (op.dimension,):
        raise ValueError(f"field has shape {field.shape}, operator dimension is {op.dimension}")
    return op.matrix @ field


def mirror_matrix(grid: Grid) -> sp.csr_matrix:
    """Permutation matrix of ``(i, j) -> (-i, j)`` on the unknowns.

    Only defined for grids whose interior node set is mirror symmetric.
    """
    perm = grid.mirror
    if np.any(perm < 0):
        raise ValueError("interior node set is not mirror symmetric")
    n = grid.size
    return sp.csr_matrix((np.ones(n), (np.arange(n), perm)), shape=(n, n))


def write_coo(op: SparseOperator, path) -> None:
    """Dump ``row col value`` triples, one per line, row-major."""
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"# dimension {op.dimension} shift {op.shift!r} h {op.h!r}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {float(v)!r}\n")
