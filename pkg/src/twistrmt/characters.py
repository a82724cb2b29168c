"""Kronecker symbols, fundamental discriminants and quadratic character tables."""
import math

import numpy as np

__all__ = [
    "kronecker",
    "kronecker_array",
    "is_fundamental_discriminant",
    "fundamental_discriminants",
    "prime_discriminant_factors",
    "character_table",
    "factorize",
    "prime_sieve",
    "squarefree_mask",
]


def kronecker(d, n):
    """Kronecker symbol ``(d / n)`` for arbitrary integers.

    Binary algorithm: strip factors of 2 with the ``(d/2)`` rule, handle
    the sign of ``n`` with ``(d/-1)``, then run Jacobi reciprocity.

    Examples
    --------
    >>> kronecker(-3, 2)
    -1
    >>> kronecker(5, 4)
    1
    """
    d = int(d)
    n = int(n)
    if n == 0:
        return 1 if abs(d) == 1 else 0
    if d % 2 == 0 and n % 2 == 0:
        return 0
    result = 1
    if n < 0:
        n = -n
        if d < 0:
            result = -result
    v = (n & -n).bit_length() - 1
    n >>= v
    if v % 2 == 1 and d % 8 in (3, 5):
        result = -result
    # Jacobi symbol (d / n), n odd and positive
    a = d % n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def prime_sieve(limit):
    """All primes ``<= limit`` as an int64 array."""
    limit = int(limit)
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    is_p[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_p[p]:
            is_p[p * p::2 * p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def squarefree_mask(limit):
    """Boolean array ``m -> m is squarefree`` for ``0 <= m <= limit``."""
    mask = np.ones(int(limit) + 1, dtype=bool)
    mask[0] = False
    for p in prime_sieve(math.isqrt(int(limit))):
        mask[p * p::p * p] = False
    return mask


def factorize(n):
    """Prime factorisation of ``|n|`` as a ``{p: e}`` dict, by trial division."""
    n = abs(int(n))
    out = {}
    for p in (2, 3):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    p = 5
    step = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += step
        step = 6 - step
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _legendre_table(p):
    # (n / p) for n = 0..p-1
    table = -np.ones(p, dtype=np.int8)
    table[(np.arange(1, p, dtype=np.int64) ** 2) % p] = 1
    table[0] = 0
    return table


# (d / 2) as a function of d mod 8
_TWO_ADIC = np.array([0, 1, 0, -1, 0, -1, 0, 1], dtype=np.int8)


def kronecker_array(ds, n):
    """``kronecker(d, n)`` for every ``d`` in ``ds`` and a fixed ``n``.

    Uses complete multiplicativity in the lower argument, so each prime
    factor of ``n`` costs one table lookup per ``d``.
    """
    ds = np.asarray(ds, dtype=np.int64)
    n = int(n)
    if n == 0:
        return np.where(np.abs(ds) == 1, 1, 0).astype(np.int8)
    out = np.ones(ds.shape, dtype=np.int8)
    if n < 0:
        out[ds < 0] = -1
        n = -n
    for p, e in factorize(n).items():
        if p == 2:
            vals = _TWO_ADIC[ds % 8]
        else:
            vals = _legendre_table(p)[ds % p]
        if e % 2 == 0:
            vals = vals * vals
        out = out * vals
    return out


def is_fundamental_discriminant(d):
    """True when ``d`` is the discriminant of a quadratic field."""
    d = int(d)
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return _squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(abs(m))
    return False


def _squarefree(m):
    return all(e == 1 for e in factorize(m).values())


def fundamental_discriminants(lo, hi, sign=None, parity=None, coprime_to=None,
                              even_sign_for=None, prime_only=False,
                              character=None):
    """Fundamental discriminants ``d`` with ``lo <= d <= hi``.

    Parameters
    ----------
    lo, hi : int
        Inclusive bounds.
    sign : {None, +1, -1}
        Keep only positive or only negative ``d``.
    parity : {None, "odd", "even"}
    coprime_to : int, optional
        Keep ``d`` with ``gcd(d, coprime_to) = 1``.
    even_sign_for : EllipticCurveData, optional
        Keep twists with ``w_E kronecker(d, -N) = +1`` and ``gcd(d, N) = 1``.
    prime_only : bool
        Keep ``d`` whose absolute value is prime.
    character : (int, int), optional
        Pair ``(p, value)``; keep ``d`` with ``kronecker(d, p) = value``.

    Returns
    -------
    ndarray of int64
        Sorted by ``|d|``, negative first on ties.
    """
    lo, hi = int(lo), int(hi)
    if hi < lo:
        return np.empty(0, dtype=np.int64)
    d = np.arange(lo, hi + 1, dtype=np.int64)
    d = d[(d != 0) & (d != 1)]
    top = int(np.abs(d).max(initial=1))
    sqf = squarefree_mask(top)
    r = d % 4
    ok = (r == 1) & sqf[np.abs(d)]
    m = d // 4
    ok |= (r == 0) & np.isin(m % 4, (2, 3)) & sqf[np.abs(m)]
    d = d[ok]
    if sign is not None:
        d = d[d > 0] if sign > 0 else d[d < 0]
    if parity == "odd":
        d = d[d % 2 == 1]
    elif parity == "even":
        d = d[d % 2 == 0]
    elif parity not in (None, "all"):
        raise ValueError(f"unknown parity {parity!r}")
    if coprime_to is not None:
        d = d[np.gcd(d, int(coprime_to)) == 1]
    if even_sign_for is not None:
        curve = even_sign_for
        d = d[np.gcd(d, curve.conductor) == 1]
        d = d[curve.root_number * kronecker_array(d, -curve.conductor) == 1]
    if prime_only:
        primes = np.zeros(top + 1, dtype=bool)
        primes[prime_sieve(top)] = True
        d = d[primes[np.abs(d)]]
    if character is not None:
        p, value = character
        d = d[kronecker_array(d, p) == value]
    order = np.lexsort((d, np.abs(d)))
    return d[order]


def prime_discriminant_factors(d):
    """Split a fundamental discriminant into prime discriminants.

    Returns the list of ``-4``, ``8``, ``-8`` and ``(-1)^((p-1)/2) p``
    whose product is ``d``.
    """
    d = int(d)
    if not is_fundamental_discriminant(d):
        raise ValueError(f"{d} is not a fundamental discriminant")
    odd = []
    rest = abs(d)
    while rest % 2 == 0:
        rest //= 2
    for p in sorted(factorize(rest)):
        odd.append(p if p % 4 == 1 else -p)
    prod = math.prod(odd)
    if d % 2:
        return odd
    # even part is whatever is left: -4, 8 or -8
    return [d // prod] + odd


def character_table(d):
    """Values of ``kronecker(d, n)`` for ``n = 0, ..., |d| - 1``.

    ``n -> kronecker(d, n)`` is periodic with period ``|d|`` for a
    fundamental discriminant ``d``, so the table determines it.
    """
    q = abs(int(d))
    n = np.arange(q, dtype=np.int64)
    table = np.ones(q, dtype=np.int8)
    for f in prime_discriminant_factors(d):
        if f == -4:
            table *= np.array([0, 1, 0, -1], dtype=np.int8)[n % 4]
        elif f == 8:
            table *= _TWO_ADIC[n % 8]
        elif f == -8:
            table *= np.array([0, 1, 0, 1, 0, -1, 0, -1], dtype=np.int8)[n % 8]
        else:
            p = abs(f)
            table *= _legendre_table(p)[n % p]
    return table
