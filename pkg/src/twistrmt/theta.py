"""Representation numbers of diagonal ternary quadratic forms.

For the congruent-number curve the twist coefficients are
``c(n) = r_1(n) - 2 r_2(n)`` with ``r_1, r_2`` the representation numbers of
``2x^2 + y^2 + 8z^2`` and ``2x^2 + y^2 + 32z^2`` at odd ``n``.
"""
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TernaryForm",
    "MemoryBudgetError",
    "CONGRUENT_FORMS",
    "representation_counts",
    "theta_coefficients_batch",
    "DEFAULT_MEMORY_BUDGET",
]

DEFAULT_MEMORY_BUDGET = 2 * 1024 ** 3
_BLOCK_ENTRIES = 1 << 22


class MemoryBudgetError(MemoryError):
    """The requested table does not fit in the configured budget."""


@dataclass(frozen=True)
class TernaryForm:
    """Positive definite diagonal form ``a x^2 + b y^2 + c z^2``."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("coefficients must be positive")

    def __call__(self, x, y, z):
        return self.a * x * x + self.b * y * y + self.c * z * z


CONGRUENT_FORMS = (TernaryForm(2, 1, 8), TernaryForm(2, 1, 32))


def _binary_counts(a, b, T):
    # number of (x, y) with a x^2 + b y^2 = n, for n <= T
    ys = np.arange(-math.isqrt(T // b), math.isqrt(T // b) + 1, dtype=np.int64)
    by2 = b * ys * ys
    xmax = math.isqrt(T // a)
    counts = np.zeros(T + 1, dtype=np.int64)
    rows = max(1, _BLOCK_ENTRIES // ys.size)
    for start in range(-xmax, xmax + 1, rows):
        xs = np.arange(start, min(start + rows, xmax + 1), dtype=np.int64)
        vals = (a * xs * xs)[:, None] + by2[None, :]
        vals = vals[vals <= T]
        counts += np.bincount(vals, minlength=T + 1)
    return counts


def representation_counts(form, T):
    """``r(n)`` = number of integer ``(x, y, z)`` with ``form(x, y, z) = n``, ``n <= T``.

    The binary part ``a x^2 + b y^2`` is tabulated once, then shifted by
    ``c z^2`` for each ``z``; total work is ``O(T^{3/2})``.
    """
    T = int(T)
    if T < 0:
        raise ValueError("T must be nonnegative")
    two = _binary_counts(form.a, form.b, T)
    out = two.copy()
    for z in range(1, math.isqrt(T // form.c) + 1):
        k = form.c * z * z
        out[k:] += 2 * two[: T + 1 - k]
    return out


def theta_coefficients_batch(forms=CONGRUENT_FORMS, T=1000,
                             memory_budget=DEFAULT_MEMORY_BUDGET):
    """``c(n) = r_1(n) - 2 r_2(n)`` for ``0 <= n <= T``.

    Parameters
    ----------
    forms : (TernaryForm, TernaryForm)
    T : int
    memory_budget : int
        Bytes; the tables need about ``32 (T + 1)`` bytes.

    Returns
    -------
    ndarray of int64, shape ``(T + 1,)``
        Indexed by ``n``. Only odd ``n`` carry twist coefficients.

    Examples
    --------
    >>> theta_coefficients_batch(T=5)[[1, 3, 5]].tolist()
    [-2, -4, 0]
    """
    T = int(T)
    if T < 1:
        raise ValueError("T must be at least 1")
    need = 32 * (T + 1) + 8 * _BLOCK_ENTRIES
    if need > memory_budget:
        raise MemoryBudgetError(f"T = {T} needs about {need} bytes, budget {memory_budget}")
    first, second = forms
    return representation_counts(first, T) - 2 * representation_counts(second, T)
