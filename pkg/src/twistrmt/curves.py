"""Elliptic curves over Q: point counts, Hecke coefficients and Euler products.

Coefficients follow the integer normalisation ``a_p = p + 1 - #E(F_p)``,
so the Hasse bound reads ``|a_p| <= 2 sqrt(p)``.
"""
import hashlib
import math
import os
import random
from dataclasses import dataclass, field

import numpy as np

from .characters import factorize, prime_sieve

__all__ = [
    "EllipticCurveData",
    "CoefficientTable",
    "builtin_curves",
    "get_curve",
    "load_curve_registry",
    "ap_point_count",
    "ap_naive",
    "ap_bsgs",
    "ap_table",
    "an_table",
    "local_factor_ak",
    "arithmetic_factor_ak",
    "root_number_numeric",
    "cache_dir",
]

NAIVE_LIMIT = 5000


@dataclass(frozen=True)
class EllipticCurveData:
    """Weierstrass model ``[a1, a2, a3, a4, a6]`` with conductor and sign."""

    label: str
    weierstrass: tuple
    conductor: int
    root_number: int = 1

    def __post_init__(self):
        object.__setattr__(self, "weierstrass", tuple(int(a) for a in self.weierstrass))
        if len(self.weierstrass) != 5:
            raise ValueError("a Weierstrass model has five coefficients")
        if self.discriminant == 0:
            raise ValueError(f"{self.label}: singular model")
        if self.root_number not in (1, -1):
            raise ValueError("root number must be +1 or -1")
        if self.conductor < 1:
            raise ValueError("conductor must be positive")

    @property
    def b_invariants(self):
        a1, a2, a3, a4, a6 = self.weierstrass
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def c_invariants(self):
        b2, b4, b6, _ = self.b_invariants
        return b2 * b2 - 24 * b4, -b2 ** 3 + 36 * b2 * b4 - 216 * b6

    @property
    def discriminant(self):
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def bad_primes(self):
        return tuple(sorted(factorize(self.conductor)))

    def is_good(self, p):
        return self.conductor % p != 0

    def key(self):
        """Short digest of the model, used to name cache files."""
        text = ",".join(map(str, self.weierstrass))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


_BUILTIN = (
    EllipticCurveData("E11", (0, -1, 1, -10, -20), 11, 1),
    EllipticCurveData("E19", (0, 1, 1, -9, -15), 19, 1),
    EllipticCurveData("E32", (0, 0, 0, -1, 0), 32, 1),
)


def builtin_curves():
    """The curves of conductor 11, 19 and 32 used throughout."""
    return list(_BUILTIN)


def load_curve_registry(path):
    """Read user curves from a text file.

    One curve per line: ``label a1 a2 a3 a4 a6 conductor [root_number]``.
    Blank lines and text after ``#`` are ignored. A missing root number is
    determined numerically with :func:`root_number_numeric`.
    """
    curves = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (7, 8):
                raise ValueError(f"{path}:{lineno}: expected 7 or 8 fields")
            label = parts[0]
            coeffs = tuple(int(v) for v in parts[1:6])
            conductor = int(parts[6])
            if len(parts) == 8:
                curve = EllipticCurveData(label, coeffs, conductor, int(parts[7]))
            else:
                curve = EllipticCurveData(label, coeffs, conductor, 1)
                curve = EllipticCurveData(label, coeffs, conductor,
                                          root_number_numeric(curve))
            curves[label] = curve
    return curves


def get_curve(label, registry=None):
    """Look up a curve by label among the built-ins and an optional registry file."""
    if isinstance(label, EllipticCurveData):
        return label
    table = {c.label: c for c in _BUILTIN}
    if registry is not None:
        table.update(load_curve_registry(registry))
    try:
        return table[label]
    except KeyError:
        raise KeyError(f"unknown curve {label!r}") from None


# ---------------------------------------------------------------- point counts

def ap_naive(curve, p):
    """``p + 1 - #E(F_p)`` by direct enumeration, O(p).

    For odd ``p`` the equation is rewritten as ``(2y + a1 x + a3)^2 = f(x)``
    and each ``x`` contributes ``1 + (f(x) / p)`` points. For ``p = 2`` the
    affine points are enumerated directly.
    """
    a1, a2, a3, a4, a6 = curve.weierstrass
    if p == 2:
        count = 1
        for x in range(2):
            for y in range(2):
                if (y * y + a1 * x * y + a3 * y - x ** 3 - a2 * x * x - a4 * x - a6) % 2 == 0:
                    count += 1
        return 3 - count
    b2, b4, b6, _ = curve.b_invariants
    x = np.arange(p, dtype=np.int64)
    f = ((((4 * x + b2) % p) * x % p + 2 * b4) % p * x + b6) % p
    is_square = np.zeros(p, dtype=bool)
    is_square[(x * x) % p] = True
    chi = np.where(f == 0, 0, np.where(is_square[f], 1, -1))
    return int(-chi.sum())


def _ec_add(P, Q, A, p):
    # affine addition on y^2 = x^3 + A x + B; None is the point at infinity
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + A) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def _ec_mul(k, P, A, p):
    if k < 0:
        k = -k
        P = None if P is None else (P[0], -P[1] % p)
    R = None
    while k:
        if k & 1:
            R = _ec_add(R, P, A, p)
        P = _ec_add(P, P, A, p)
        k >>= 1
    return R


def _multiples_hitting(P, target, bound, A, p):
    """All ``s`` in ``[-bound, bound]`` with ``s P = target`` (baby-step giant-step)."""
    width = math.isqrt(2 * bound + 1) + 1
    baby = {}
    zeros = [0]
    R = None
    for j in range(width + 1):
        if R is not None:
            baby.setdefault(R[0], []).append((j, R[1]))
        elif j:
            zeros += [j, -j]
        R = _ec_add(R, P, A, p)
    stride = 2 * width + 1
    giant = _ec_mul(-stride, P, A, p)
    centre = -bound + width
    G = _ec_add(target, _ec_mul(-centre, P, A, p), A, p)
    out = []
    while centre - width <= bound:
        if G is None:
            out.extend(centre + e for e in zeros)
        else:
            for j, y in baby.get(G[0], ()):
                # an order-2 point matches both signs
                if y == G[1]:
                    out.append(centre + j)
                if (p - y) % p == G[1]:
                    out.append(centre - j)
        G = _ec_add(G, giant, A, p)
        centre += stride
    return [s for s in out if -bound <= s <= bound]


def ap_bsgs(curve, p):
    """``a_p`` at a good prime ``p >= 5`` by Mestre's baby-step giant-step.

    With ``f(x) = x^3 + A x + B`` and ``v = f(x0)``, the point
    ``(v x0, v^2)`` lies on ``Y^2 = X^3 + A v^2 X + B v^3``, which is the
    curve itself when ``v`` is a square and its quadratic twist otherwise.
    Each such point restricts ``chi(v) a_p`` to the ``s`` with
    ``(p + 1 - s) P = O``; intersecting over random ``x0`` leaves one value.
    """
    c4, c6 = curve.c_invariants
    A = (-27 * c4) % p
    B = (-54 * c6) % p
    bound = math.isqrt(4 * p)
    rng = random.Random(p)
    candidates = None
    for _ in range(64):
        x0 = rng.randrange(p)
        v = (x0 * x0 * x0 + A * x0 + B) % p
        if v == 0:
            continue
        chi = 1 if pow(v, (p - 1) // 2, p) == 1 else -1
        Av = A * v * v % p
        P = (v * x0 % p, v * v % p)
        sols = _multiples_hitting(P, _ec_mul(p + 1, P, Av, p), bound, Av, p)
        found = {chi * s for s in sols}
        candidates = found if candidates is None else candidates & found
        if len(candidates) == 1:
            return candidates.pop()
    # only reachable for very small p, where the group orders are ambiguous
    return ap_naive(curve, p)


def ap_point_count(curve, p):
    """``a_p = p + 1 - #E(F_p)``, including the bad-reduction values.

    Examples
    --------
    >>> ap_point_count(get_curve("E11"), 3)
    -1
    """
    p = int(p)
    if p < NAIVE_LIMIT or not curve.is_good(p):
        return ap_naive(curve, p)
    return ap_bsgs(curve, p)


def cache_dir():
    """Directory for cached coefficient tables, or None when caching is off.

    Taken from ``TWISTRMT_CACHE``; ``off`` disables caching. Defaults to
    ``$XDG_CACHE_HOME/twistrmt`` (or ``~/.cache/twistrmt``).
    """
    env = os.environ.get("TWISTRMT_CACHE")
    if env is not None:
        return None if env.strip().lower() in ("", "off", "none", "0") else env
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return os.path.join(base, "twistrmt")


def _cached_ap(curve, limit):
    root = cache_dir()
    if root is None or not os.path.isdir(root):
        return None
    prefix = f"ap_{curve.key()}_"
    best = None
    for name in os.listdir(root):
        if name.startswith(prefix) and name.endswith(".npy"):
            try:
                size = int(name[len(prefix):-4])
            except ValueError:
                continue
            if size >= limit and (best is None or size < best):
                best = size
    if best is None:
        return None
    data = np.load(os.path.join(root, f"{prefix}{best}.npy"))
    return data[:, data[0] <= limit]


def _store_ap(curve, limit, data):
    root = cache_dir()
    if root is None:
        return
    os.makedirs(root, exist_ok=True)
    final = os.path.join(root, f"ap_{curve.key()}_{limit}.npy")
    tmp = f"{final}.{os.getpid()}.tmp.npy"
    np.save(tmp, data)
    os.replace(tmp, final)


def ap_table(curve, limit):
    """Primes ``p <= limit`` and their ``a_p``, as two int64 arrays.

    Results are cached on disk (see :func:`cache_dir`).
    """
    limit = int(limit)
    cached = _cached_ap(curve, limit)
    if cached is not None:
        return cached[0].copy(), cached[1].copy()
    primes = prime_sieve(limit)
    values = np.fromiter((ap_point_count(curve, int(p)) for p in primes),
                         dtype=np.int64, count=primes.size)
    if limit >= 1000:
        _store_ap(curve, limit, np.vstack([primes, values]))
    return primes, values


@dataclass
class CoefficientTable:
    """Integer coefficients ``a_n`` for ``n <= limit`` (``an[0]`` unused)."""

    curve: EllipticCurveData
    primes: np.ndarray
    ap_values: np.ndarray
    an: np.ndarray
    _ap: dict = field(default=None, repr=False)

    @property
    def limit(self):
        return self.an.size - 1

    def ap(self, p):
        if self._ap is None:
            self._ap = dict(zip(self.primes.tolist(), self.ap_values.tolist()))
        return self._ap[int(p)]

    def scaled(self):
        """``a_n / n`` as floats, the weights of the central-value series."""
        out = self.an.astype(float)
        out[1:] /= np.arange(1, out.size)
        out[0] = 0.0
        return out


def _smallest_prime_factor(limit):
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in prime_sieve(math.isqrt(limit)):
        view = spf[p * p::p]
        view[view == 0] = p
    idx = np.flatnonzero(spf == 0)
    spf[idx] = idx
    spf[:2] = 0
    return spf


def an_table(curve, limit):
    """Hecke coefficients ``a_n`` for ``1 <= n <= limit``.

    Prime powers come from ``a_{p^{r+1}} = a_p a_{p^r} - p a_{p^{r-1}}`` at
    good ``p`` and ``a_{p^r} = a_p^r`` at bad ``p``; all other ``n`` are
    split as (largest power of their smallest prime) times cofactor.
    Processing ``n`` in blocks ``[m, 2m)`` keeps every lookup in an
    already finished block.

    Examples
    --------
    >>> an_table(get_curve("E11"), 9).an[9]
    -2
    """
    limit = int(limit)
    if limit < 1:
        raise ValueError("limit must be at least 1")
    primes, values = ap_table(curve, limit)
    an = np.zeros(limit + 1, dtype=np.int64)
    an[1] = 1
    an[primes] = values
    for p, a in zip(primes.tolist(), values.tolist()):
        if p * p > limit:
            break
        good = curve.is_good(p)
        prev, cur = 1, a
        q = p * p
        while q <= limit:
            prev, cur = cur, (a * cur - p * prev) if good else a * cur
            an[q] = cur
            q *= p
    spf = _smallest_prime_factor(limit)
    ppart = np.zeros(limit + 1, dtype=np.int64)
    ppart[1] = 1
    lo = 2
    while lo <= limit:
        hi = min(2 * lo, limit + 1)
        n = np.arange(lo, hi, dtype=np.int64)
        p = spf[n]
        q = n // p
        ppart[n] = np.where(spf[q] == p, ppart[q] * p, p)
        comp = ppart[n] != n
        nc = n[comp]
        an[nc] = an[ppart[nc]] * an[nc // ppart[nc]]
        lo = hi
    return CoefficientTable(curve, primes, values, an)


# ------------------------------------------------------------ Euler products

def local_factor_ak(p, ap, k, good=True):
    """Local factor at ``p`` of the arithmetic constant ``a_k(E)``.

    ``(1 - 1/p)^{k(k-1)/2} (m_k p/(p+1) + 1/(p+1))`` where ``m_k`` is the
    average of ``L_p^{-k}`` over the two values ``L_p = 1 -+ a_p/p + 1/p``.
    At a bad prime ``L_p = 1 -+ a_p/p``.
    """
    inv = 1.0 / p
    extra = inv if good else 0.0
    plus = 1.0 - ap * inv + extra
    minus = 1.0 + ap * inv + extra
    mean = 0.5 * (plus ** (-k) + minus ** (-k))
    return (1.0 - inv) ** (0.5 * k * (k - 1)) * (mean * p / (p + 1.0) + 1.0 / (p + 1.0))


def _log_local_factors(curve, primes, values, k):
    p = primes.astype(float)
    a = values.astype(float)
    extra = (curve.conductor % primes != 0).astype(float)
    plus = 1.0 - a / p + extra / p
    minus = 1.0 + a / p + extra / p
    if np.any(plus <= 0) or np.any(minus <= 0):
        raise ValueError("local Euler values must be positive")
    mean = 0.5 * (plus ** (-k) + minus ** (-k))
    return (0.5 * k * (k - 1)) * np.log1p(-1.0 / p) + np.log(mean * p / (p + 1.0) + 1.0 / (p + 1.0))


def arithmetic_factor_ak(curve, k, prime_cutoff):
    """Truncated Euler product for the arithmetic constant ``a_k(E)``.

    Parameters
    ----------
    curve : EllipticCurveData
    k : float
    prime_cutoff : int
        Product over primes ``p <= prime_cutoff``.

    Returns
    -------
    value : float
    tail : float
        ``|a_k(P) - a_k(P/2)|``, a stability estimate for the truncation.
    """
    prime_cutoff = int(prime_cutoff)
    if prime_cutoff < 2:
        raise ValueError("prime_cutoff must be at least 2")
    primes, values = ap_table(curve, prime_cutoff)
    logs = _log_local_factors(curve, primes, values, float(k))
    full = math.exp(math.fsum(logs))
    half = math.exp(math.fsum(logs[primes <= prime_cutoff // 2]))
    return full, abs(full - half)


# --------------------------------------------------------------- root number

def _symmetric_sum(bn, scale, delta, w):
    # sum b_n [exp(-scale n delta) + w exp(-scale n / delta)]
    n = np.arange(bn.size, dtype=float)
    return math.fsum(bn * (np.exp(-scale * n * delta) + w * np.exp(-scale * n / delta)))


def root_number_numeric(curve, deltas=(1.1, 1.3)):
    """Sign of the functional equation, read off from the L-series.

    For the correct sign ``w`` the combination
    ``sum (a_n/n) [exp(-2 pi n delta/sqrt N) + w exp(-2 pi n/(delta sqrt N))]``
    does not depend on ``delta``; the wrong sign generically does.
    """
    scale = 2.0 * math.pi / math.sqrt(curve.conductor)
    limit = int(40.0 * max(deltas) / scale) + 10
    bn = an_table(EllipticCurveData(curve.label, curve.weierstrass, curve.conductor, 1),
                  limit).scaled()
    defects = {}
    for w in (1, -1):
        vals = [_symmetric_sum(bn, scale, dl, w) for dl in deltas]
        defects[w] = abs(vals[0] - vals[1])
    return min(defects, key=defects.get)
