"""Elementary symmetric coefficients of the shifted product prod_i (alpha_i + t).

The coefficients ``s_0, ..., s_m`` are stored in ascending powers of ``t`` so
that ``s_m == 1`` and ``s_k`` is the elementary symmetric polynomial of degree
``m - k`` in the shifts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "AlphaVector",
    "SymCoeffs",
    "as_alpha",
    "expand_characteristic",
    "symmetric_coefficient",
    "all_nonnegative_signs",
    "sign_equivalence",
    "elementary_batch",
]

# subset enumeration is exponential in m
_SUBSET_LIMIT = 20


@dataclass(frozen=True)
class AlphaVector:
    """Ordered shifts ``(alpha_1, ..., alpha_m)``."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 1:
            raise ValueError("alpha must contain at least one shift")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"alpha entries must be finite, got {vals}")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True)
class SymCoeffs:
    """Coefficients ``s_0, ..., s_m`` of ``prod (alpha_i + t)``, ascending in ``t``."""

    coeffs: tuple[float, ...]

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    @property
    def m(self) -> int:
        return len(self.coeffs) - 1


def as_alpha(alpha: AlphaVector | Iterable[float]) -> AlphaVector:
    if isinstance(alpha, AlphaVector):
        return alpha
    return AlphaVector(tuple(alpha))


def _recurrence(values: Sequence[float]) -> list[float]:
    # multiply the running polynomial by (a + t), highest power first so the
    # update can be done in place
    c = [1.0]
    for a in values:
        c.append(0.0)
        for k in range(len(c) - 1, 0, -1):
            c[k] = c[k - 1] + a * c[k]
        c[0] = a * c[0]
    return c


def expand_characteristic(alpha) -> SymCoeffs:
    """Expand ``prod_{i=1}^m (alpha_i + t) = sum_k s_k t^k``.

    Uses the O(m^2) convolution recurrence. ``s_m`` is exactly 1.

    >>> expand_characteristic([1, 2]).coeffs
    (2.0, 3.0, 1.0)
    """
    alpha = as_alpha(alpha)
    return SymCoeffs(tuple(_recurrence(alpha.values)))


def _subset_sum(values: Sequence[float], size: int) -> float:
    if size == 0:
        return 1.0
    return math.fsum(math.prod(c) for c in itertools.combinations(values, size))


def symmetric_coefficient(alpha, k: int, method: str = "auto") -> float:
    """Return ``s_k(alpha)``, the sum of all products of ``m - k`` distinct shifts.

    ``method="subset"`` enumerates subsets directly (only for m <= 20),
    ``method="recurrence"`` reads the coefficient off
    :func:`expand_characteristic`. ``"auto"`` picks subsets when allowed.
    """
    alpha = as_alpha(alpha)
    m = alpha.m
    if not 0 <= k <= m:
        raise IndexError(f"k={k} outside 0..{m}")
    if method == "auto":
        method = "subset" if m <= _SUBSET_LIMIT else "recurrence"
    if method == "subset":
        if m > _SUBSET_LIMIT:
            raise ValueError(f"subset enumeration limited to m <= {_SUBSET_LIMIT}")
        return _subset_sum(alpha.values, m - k)
    if method == "recurrence":
        return expand_characteristic(alpha)[k]
    raise ValueError(f"unknown method {method!r}")


def all_nonnegative_signs(alpha) -> bool:
    """True iff every ``s_k(alpha) >= 0`` (exact comparison, no tolerance)."""
    return all(s >= 0.0 for s in expand_characteristic(alpha))


def sign_equivalence(alpha) -> dict:
    """Evaluate both sides of the shift/coefficient sign equivalence.

    Returns a dict with the coefficient-side predicate, the shift-side
    predicate ``min alpha_i >= 0`` and whether they agree. The coefficient
    side is also reported restricted to ``s_0..s_{m-1}`` which is the form the
    symmetry theorem's hypothesis is stated in (``s_m`` is always 1).
    """
    alpha = as_alpha(alpha)
    coeffs = expand_characteristic(alpha)
    coeff_side = all(s >= 0.0 for s in coeffs)
    lower_side = all(s >= 0.0 for s in coeffs.coeffs[:-1])
    shift_side = min(alpha.values) >= 0.0
    return {
        "alpha": alpha.values,
        "coeffs": coeffs.coeffs,
        "coeffs_nonnegative": coeff_side,
        "lower_coeffs_nonnegative": lower_side,
        "shifts_nonnegative": shift_side,
        "agree": coeff_side == shift_side,
    }


def elementary_batch(alpha: np.ndarray) -> np.ndarray:
    """Vectorised recurrence over rows of an ``(N, m)`` array.

    Returns an ``(N, m + 1)`` array of ascending coefficients.
    """
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    n, m = alpha.shape
    c = np.zeros((n, m + 1))
    c[:, 0] = 1.0
    for i in range(m):
        a = alpha[:, i]
        for k in range(i + 1, 0, -1):
            c[:, k] = c[:, k - 1] + a * c[:, k]
        c[:, 0] = a * c[:, 0]
    return c
