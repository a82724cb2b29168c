"""Moments of det(U - I) over SO(2N) and the value density they determine.

The moment ``M(N, s) = E|det(U - I)|^s`` has a closed Gamma-product form.
The density ``P(N, x)`` of ``det(U - I)`` on ``(0, 4^N)`` is recovered from
it by numerical Mellin inversion.

Notes
-----
Write ``u = ln(4^N / x)`` and ``F(s) = M(N, s) / 4^{Ns}``. Then

    x P(N, x) = (1 / 2 pi i) * integral of F(s) e^{s u} ds

along any contour to the right of the poles of ``F``, which all lie on the
real axis at ``s <= -1/2``. For ``N >= 3`` the integral is taken along the
vertical line through the real saddle point of ``F(s) e^{su}``; the
integrand then decays like a Gaussian near the real axis and like
``|t|^{-N(N-1/2)}`` further out, and the trapezoid rule converges
geometrically. For ``N <= 2`` the algebraic decay is too slow and a
hyperbolic contour bending into the left half plane is used instead.
"""
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, polygamma, psi

from .special import (
    DomainError,
    PoleError,
    log_barnes_g,
    log_gamma_complex,
)

__all__ = [
    "MomentSpec",
    "DensityGrid",
    "NonConvergenceError",
    "SmallXWarning",
    "moment_so_even",
    "log_moment_so_even",
    "g_k_product",
    "g_k_product_exact",
    "g_k_barnes",
    "moment_asymptotic_ratio",
    "h_small_x",
    "h_asymptotic_constant",
    "density_po",
    "density_grid",
    "bin_probabilities",
    "cdf_small_x",
    "SMALL_X_LIMIT",
]

LOG4 = math.log(4.0)
SMALL_X_LIMIT = 1e-2


class NonConvergenceError(ArithmeticError):
    """Quadrature did not reach the requested tail tolerance."""


class SmallXWarning(UserWarning):
    """Argument lies outside the regime where the small-x law applies."""


@dataclass(frozen=True)
class MomentSpec:
    """Half-dimension ``N`` of SO(2N) and moment order ``s``."""

    N: int
    s: complex = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")


@dataclass
class DensityGrid:
    """Tabulated density values ``ps`` at abscissae ``xs`` for SO(2N)."""

    N: int
    xs: np.ndarray
    ps: np.ndarray
    edges: np.ndarray = None
    counts: np.ndarray = None

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ps = np.asarray(self.ps, dtype=float)
        if self.xs.shape != self.ps.shape:
            raise ValueError("xs and ps must have the same shape")
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if self.xs.size and (self.xs[0] <= 0 or self.xs[-1] > 4.0 ** self.N):
            raise ValueError("xs must lie in (0, 4^N]")

    def to_csv(self, path):
        """Write ``x,p`` rows, or ``bin_lo,bin_hi,density`` for histograms."""
        with open(path, "w", newline="") as fh:
            if self.edges is None:
                fh.write("x,p\n")
                for x, p in zip(self.xs, self.ps):
                    fh.write(f"{float(x)!r},{float(p)!r}\n")
            else:
                fh.write("bin_lo,bin_hi,density\n")
                for lo, hi, p in zip(self.edges[:-1], self.edges[1:], self.ps):
                    fh.write(f"{float(lo)!r},{float(hi)!r},{float(p)!r}\n")


def _check_N(N):
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    return int(N)


def _log_constant(N):
    # sum_j ln Gamma(N+j-1) - ln Gamma(j-1/2)
    j = np.arange(1, N + 1)
    return math.fsum(gammaln(N + j - 1) - gammaln(j - 0.5))


def _log_ratio(N, s, const=None):
    """ln(M(N, s) / 4^{Ns}) for an array of complex ``s``.

    Uses Gamma(s + a + i) = Gamma(s + a) (s + a)...(s + a + i - 1) so only
    two log-gamma evaluations per point are needed.
    """
    s = np.asarray(s, dtype=complex)
    if const is None:
        const = _log_constant(N)
    out = N * (log_gamma_complex(s + 0.5) - log_gamma_complex(s + N))
    if N > 1:
        i = np.arange(1, N)
        weights = (N - i).astype(float)
        num = np.log(s[..., None] + (i - 0.5))
        den = np.log(s[..., None] + (N + i - 1.0))
        out = out + (num - den) @ weights
    return const + out


def _as_N_s(spec, s):
    if isinstance(spec, MomentSpec):
        return spec.N, spec.s if s is None else s
    if s is None:
        raise TypeError("moment order s is required")
    return spec, s


def log_moment_so_even(spec, s=None):
    """Natural log of the SO(2N) moment ``E|det(U - I)|^s``.

    Parameters
    ----------
    spec : MomentSpec or int
        Either a :class:`MomentSpec` or the half-dimension ``N``.
    s : complex or array_like, optional
        Moment order; required when ``spec`` is an integer.

    Returns
    -------
    complex or ndarray
        Log of the moment. The imaginary part is only defined mod 2 pi.
    """
    N, s = _as_N_s(spec, s)
    N = _check_N(N)
    arr = np.asarray(s, dtype=complex)
    shifted = arr + 0.5
    if np.any((shifted.imag == 0) & (shifted.real <= 0)
              & (shifted.real == np.round(shifted.real))):
        raise PoleError("moment has poles at s = -1/2, -3/2, ...")
    flat = np.atleast_1d(arr)[..., None]
    j = np.arange(1, N + 1)
    # Pair each Gamma(s + a) with Gamma(a) so that the sum vanishes
    # identically at s = 0 instead of cancelling between large terms.
    if np.all(flat.imag == 0) and np.all(flat.real > -0.5):
        sr = flat.real
        terms = ((gammaln(sr + j - 0.5) - gammaln(j - 0.5))
                 - (gammaln(sr + j + N - 1.0) - gammaln(j + N - 1.0)))
        terms = terms.astype(complex)
    else:
        terms = ((log_gamma_complex(flat + j - 0.5) - gammaln(j - 0.5))
                 - (log_gamma_complex(flat + j + N - 1.0) - gammaln(j + N - 1.0)))
    out = terms.sum(axis=-1) + N * LOG4 * flat[..., 0]
    return complex(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def moment_so_even(spec, s=None):
    """SO(2N) moment ``M(N, s) = E|det(U - I)|^s`` under Haar measure.

    ``M(N, s) = 2^{2Ns} prod_{j=1}^N Gamma(N+j-1) Gamma(s+j-1/2)
    / (Gamma(j-1/2) Gamma(s+j+N-1))``, evaluated in log scale.

    Parameters
    ----------
    spec : MomentSpec or int
        Either a :class:`MomentSpec` or the half-dimension ``N``.
    s : complex or array_like, optional
        Moment order; required when ``spec`` is an integer.

    Returns
    -------
    float, complex or ndarray
        Real when every ``s`` is real.

    Examples
    --------
    >>> moment_so_even(5, 0)
    1.0
    >>> round(moment_so_even(1, 1), 12)
    2.0
    """
    N, s = _as_N_s(spec, s)
    arr = np.asarray(s, dtype=complex)
    val = np.exp(log_moment_so_even(N, arr))
    if np.all(arr.imag == 0):
        val = np.real(val)
        return float(val) if arr.ndim == 0 else val
    return complex(val) if arr.ndim == 0 else val


def g_k_product_exact(k):
    """``2^{k(k+1)/2} prod_{l=1}^{k-1} l! / (2l)!`` as an exact fraction."""
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    k = int(k)
    val = Fraction(2) ** (k * (k + 1) // 2)
    for l in range(1, k):
        val *= Fraction(math.factorial(l), math.factorial(2 * l))
    return val


def g_k_product(k):
    """Leading coefficient of the integer moments, as a float.

    Examples
    --------
    >>> g_k_product(3)
    2.6666666666666665
    """
    return float(g_k_product_exact(k))


def g_k_barnes(k):
    """Leading coefficient of the moments for real ``k > -1/2``.

    ``2^{k^2/2} G(1+k) sqrt(Gamma(1+2k) / (G(1+2k) Gamma(1+k)))``,
    which agrees with :func:`g_k_product` at positive integers.
    """
    k = float(k)
    if not k > -0.5:
        raise DomainError("g_k_barnes requires k > -1/2")
    log_val = (0.5 * k * k * math.log(2.0) + log_barnes_g(1.0 + k)
               + 0.5 * (gammaln(1.0 + 2.0 * k) - log_barnes_g(1.0 + 2.0 * k)
                        - gammaln(1.0 + k)))
    return math.exp(log_val)


def moment_asymptotic_ratio(N, k):
    """``M(N, k) / (g_k N^{k(k-1)/2})``, which tends to 1 as ``N`` grows."""
    N = _check_N(N)
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    log_m = log_moment_so_even(N, float(k)).real
    return math.exp(log_m - math.log(g_k_product(k))
                    - 0.5 * k * (k - 1) * math.log(N))


def h_small_x(N):
    """Coefficient ``h(N)`` in ``P(N, x) ~ h(N) x^{-1/2}`` as ``x -> 0``.

    ``h(N) = 2^{-N} Gamma(N)^{-1} prod_{j=1}^N Gamma(N+j-1) Gamma(j)
    / (Gamma(j-1/2) Gamma(j+N-3/2))``.

    Examples
    --------
    >>> round(h_small_x(1) * 2 * math.pi, 12)
    1.0
    """
    N = _check_N(N)
    j = np.arange(1, N + 1)
    terms = (gammaln(N + j - 1) + gammaln(j) - gammaln(j - 0.5)
             - gammaln(j + N - 1.5))
    return math.exp(-N * math.log(2.0) - gammaln(N) + math.fsum(terms))


def h_asymptotic_constant():
    """Large-N constant ``2^{-7/8} G(1/2) pi^{-1/4}`` of ``h(N) / N^{3/8}``."""
    return math.exp(-0.875 * math.log(2.0) + log_barnes_g(0.5)
                    - 0.25 * math.log(math.pi))


# Hyperbolic contour s(theta) = mu (1 + sin(i theta - alpha)) - 1/2 for
# N <= 2. The parameters were tuned against the closed-form N = 1 density
# and balance discretisation error against roundoff growth e^{mu u}.
_HYP_ALPHA = 1.17
_HYP_SCALE = 15.0
_HYP_STEP = 0.05
_HYP_HALF_NODES = 60


def _density_hyperbolic(N, x, const):
    u = N * LOG4 - math.log(x)
    mu = _HYP_SCALE / u
    theta = np.arange(-_HYP_HALF_NODES, _HYP_HALF_NODES + 1) * _HYP_STEP
    w = 1j * theta - _HYP_ALPHA
    s = mu * (1.0 + np.sin(w)) - 0.5
    ds = 1j * mu * np.cos(w)
    vals = np.exp(_log_ratio(N, s, const) + s * u) * ds
    return (_HYP_STEP / (2j * math.pi) * vals.sum()).real / x


def _saddle_slope(N, s, u):
    j = np.arange(1, N + 1)
    return float(np.sum(psi(s + j - 0.5) - psi(s + j + N - 1.0))) + u


def _saddle_curvature(N, s):
    j = np.arange(1, N + 1)
    return float(np.sum(polygamma(1, s + j - 0.5)
                        - polygamma(1, s + j + N - 1.0)))


_SADDLE_FLOOR = -0.25


def _saddle(N, u, lower=_SADDLE_FLOOR):
    if _saddle_slope(N, lower, u) >= 0:
        return lower
    hi = 1.0
    while _saddle_slope(N, hi, u) < 0:
        hi *= 2.0
    return brentq(lambda s: _saddle_slope(N, s, u), lower, hi, xtol=1e-12)


def _density_vertical(N, x, const, c=None, tail_tol=1e-18, max_nodes=2_000_000):
    u = N * LOG4 - math.log(x)
    residue = 0.0
    if c is None:
        c = _saddle(N, u)
        if c == _SADDLE_FLOOR:
            # Small x: the pole at -1/2 dominates. Take its residue
            # h(N) x^{1/2} exactly and integrate the remainder on a line
            # midway to the next pole at -3/2.
            residue = h_small_x(N) * math.sqrt(x)
            c = -1.0
        dist = 0.5 if c < -0.5 else c + 0.5
    elif not c > -0.5:
        raise ValueError("contour_c must exceed -1/2")
    else:
        dist = c + 0.5
    width = 1.0 / math.sqrt(max(abs(_saddle_curvature(N, c)), 1e-300))
    # Step from the distance to the nearest pole, which bounds the strip of
    # analyticity, and the growth rate u of x^{-s} across that strip.
    step = min(0.5 * width, 2.0 * math.pi * dist / (40.0 + u * dist))
    phi0 = _log_ratio(N, np.array([c]), const)[0].real + c * u

    def integrand(t):
        s = c + 1j * np.asarray(t, dtype=float)
        return np.exp(_log_ratio(N, s, const) + s * u - phi0).real

    tmax = 8.0 * width
    while np.any(np.abs(integrand([tmax, 1.5 * tmax, 2.0 * tmax])) >= tail_tol):
        tmax *= 2.0
        if tmax / step > max_nodes:
            raise NonConvergenceError(
                f"integrand tail above {tail_tol:g} at height {tmax:g}")
    n = int(math.ceil(tmax / step))
    t = np.arange(n + 1) * step
    vals = integrand(t)
    # symmetric in t: (1/2pi) int_{-inf}^{inf} = (1/pi) int_0^inf
    total = step * (math.fsum(vals) - 0.5 * vals[0])
    return (residue + total / math.pi * math.exp(phi0)) / x


def density_po(N, x, contour_c=None, method="auto"):
    """Density of ``det(U - I)`` for Haar-random ``U`` in SO(2N).

    Parameters
    ----------
    N : int
        Half-dimension, ``N >= 1``.
    x : float or array_like
        Points in ``(0, 4^N)``.
    contour_c : float, optional
        Abscissa of a vertical inversion contour (must exceed -1/2). By
        default the contour passes through the saddle point.
    method : {"auto", "vertical", "hyperbolic"}
        ``"auto"`` uses the hyperbolic contour for ``N <= 2`` and the
        vertical line otherwise. Supplying ``contour_c`` implies
        ``"vertical"``.

    Returns
    -------
    float or ndarray

    Raises
    ------
    NonConvergenceError
        If the vertical-line integrand does not decay below tolerance,
        which happens for ``N = 1`` on a vertical line.

    Examples
    --------
    >>> round(density_po(1, 2.0) * 2 * math.pi, 10)
    1.0
    """
    N = _check_N(N)
    arr = np.asarray(x, dtype=float)
    top = 4.0 ** N
    if np.any(~(arr > 0)) or np.any(arr >= top):
        raise DomainError("density_po requires 0 < x < 4^N")
    if method not in ("auto", "vertical", "hyperbolic"):
        raise ValueError(f"unknown method {method!r}")
    if contour_c is not None:
        method = "vertical"
    elif method == "auto":
        method = "hyperbolic" if N <= 2 else "vertical"
    const = _log_constant(N)
    flat = arr.ravel()
    out = np.empty_like(flat)
    for i, xi in enumerate(flat):
        if method == "hyperbolic":
            out[i] = _density_hyperbolic(N, float(xi), const)
        else:
            out[i] = _density_vertical(N, float(xi), const, contour_c)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def density_grid(N, xs, threads=1, **kwargs):
    """Evaluate :func:`density_po` on ascending ``xs`` as a :class:`DensityGrid`.

    Each point is computed independently, so the values do not depend on
    ``threads``.
    """
    xs = np.asarray(xs, dtype=float)
    if threads <= 1 or xs.size < 2:
        ps = density_po(N, xs, **kwargs)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ps = np.array(list(pool.map(lambda v: density_po(N, v, **kwargs), xs)))
    return DensityGrid(N, xs, np.atleast_1d(ps))


def _dyadic_pieces(ya, yb):
    # split [ya, yb] at powers of two so each piece spans at most a factor 2
    cuts = [ya]
    j = math.floor(math.log2(yb)) if yb > 0 else 0
    inner = []
    while j > -4:
        c = 2.0 ** j
        if c <= ya:
            break
        if c < yb:
            inner.append(c)
        j -= 1
    cuts.extend(sorted(inner))
    cuts.append(yb)
    return list(zip(cuts[:-1], cuts[1:]))


def bin_probabilities(N, edges, nodes=24):
    """Model probability of each bin ``[edges[i], edges[i+1])``.

    Gauss-Legendre quadrature in ``y = sqrt(x)`` on the lower half of the
    support, which absorbs the ``x^{-1/2}`` singularity, and in
    ``y = sqrt(4^N - x)`` on the upper half. The lower range in ``y`` is
    split at powers of two so that the rule resolves the density on
    every scale.
    """
    edges = np.asarray(edges, dtype=float)
    top = 4.0 ** N
    if np.any(np.diff(edges) <= 0) or edges[0] < 0 or edges[-1] > top:
        raise ValueError("edges must increase within [0, 4^N]")
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    mid = 0.5 * top
    ys, ws, lower = [], [], []
    owner = []
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        parts = []
        if min(b, mid) > a:
            parts.append((True, math.sqrt(a), math.sqrt(min(b, mid))))
        if b > max(a, mid):
            parts.append((False, math.sqrt(top - b), math.sqrt(top - max(a, mid))))
        for is_low, ya, yb in parts:
            pieces = _dyadic_pieces(ya, yb) if is_low else [(ya, yb)]
            for lo, hi in pieces:
                half = 0.5 * (hi - lo)
                ys.append(half * gx + 0.5 * (hi + lo))
                ws.append(half * gw)
                lower.append(np.full(nodes, is_low))
                owner.append(np.full(nodes, i))
    y = np.concatenate(ys)
    w = np.concatenate(ws)
    low = np.concatenate(lower)
    x = np.where(low, y * y, top - y * y)
    vals = density_po(N, x) * 2 * y * w
    return np.bincount(np.concatenate(owner), weights=vals, minlength=edges.size - 1)


def cdf_small_x(N, X, limit=SMALL_X_LIMIT):
    """Small-x approximation ``2 sqrt(X) h(N)`` to ``P(det(U - I) <= X)``.

    A :class:`SmallXWarning` is issued when ``X`` exceeds ``limit``; the
    value is still returned.
    """
    if X < 0:
        raise DomainError("X must be nonnegative")
    if X > limit:
        warnings.warn(f"X = {X:g} is outside the small-x regime (X <= {limit:g})",
                      SmallXWarning, stacklevel=2)
    return 2.0 * math.sqrt(X) * h_small_x(N)
