"""Log-gamma and Barnes G evaluation.

Everything here works in log scale where the linear value can overflow;
callers exponentiate once at the end.
"""
import math

import numpy as np
from scipy.special import gammaln

__all__ = [
    "DomainError",
    "PoleError",
    "log_gamma_real",
    "log_gamma_complex",
    "log_barnes_g",
    "barnes_g",
    "ZETA_PRIME_MINUS_ONE",
]

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)

# zeta'(-1) = 1/12 - log(Glaisher's constant)
ZETA_PRIME_MINUS_ONE = -0.16542114370045092921391966024278

# B_{2k} / (2k (2k-1)), k = 1..10
_STIRLING = np.array([
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
])

# B_{2k+2} / (4k(k+1)), k = 1..8, for the Barnes G expansion
_BARNES = np.array([
    -1.0 / 30.0 / 8.0,
    1.0 / 42.0 / 24.0,
    -1.0 / 30.0 / 48.0,
    5.0 / 66.0 / 80.0,
    -691.0 / 2730.0 / 120.0,
    7.0 / 6.0 / 168.0,
    -3617.0 / 510.0 / 224.0,
    43867.0 / 798.0 / 288.0,
])

_SHIFT_TARGET = 10.0


class DomainError(ValueError):
    """Argument outside the domain of a real-valued special function."""


class PoleError(ZeroDivisionError):
    """Argument sits on a pole of the function."""


def log_gamma_real(x):
    """Natural log of Gamma for positive real arguments.

    Parameters
    ----------
    x : float or array_like
        Strictly positive arguments.

    Returns
    -------
    float or ndarray
        ``ln Gamma(x)``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("log_gamma_real requires x > 0")
    out = gammaln(arr)
    return float(out) if out.ndim == 0 else out


def _stirling(z):
    z2inv = 1.0 / (z * z)
    series = np.zeros_like(z)
    for coef in _STIRLING[::-1]:
        series = series * z2inv + coef
    return (z - 0.5) * np.log(z) - z + HALF_LOG_2PI + series / z


def _log_sin_pi(z):
    # log(sin(pi z)) without overflow for large |Im z|
    w = np.pi * z
    out = np.empty_like(w)
    near = np.abs(w.imag) < 20.0
    out[near] = np.log(np.sin(w[near]))
    upper = ~near & (w.imag >= 0)
    wu = w[upper]
    out[upper] = -1j * wu + np.log1p(-np.exp(2j * wu)) + np.log(0.5j)
    lower = ~near & (w.imag < 0)
    wl = w[lower]
    out[lower] = 1j * wl + np.log1p(-np.exp(-2j * wl)) + np.log(-0.5j)
    return out


def _log_gamma_right(z):
    # Re z >= 1/2: pull the argument up to Re z >= 10, then Stirling
    shift = np.maximum(0, np.ceil(_SHIFT_TARGET - z.real)).astype(int)
    acc = np.zeros_like(z)
    w = z.copy()
    for k in range(int(shift.max(initial=0))):
        active = shift > k
        acc[active] += np.log(w[active])
        w[active] += 1.0
    return _stirling(w) - acc


def log_gamma_complex(z):
    """Log-gamma for complex arguments.

    For ``Re z >= 1/2`` the result is the branch of ``ln Gamma`` that is
    continuous along vertical lines (the same branch as
    :func:`scipy.special.loggamma`). Left of that line the reflection
    formula is used and the imaginary part is only fixed modulo ``2 pi``,
    which is all that matters once the value is exponentiated.

    Parameters
    ----------
    z : complex or array_like

    Returns
    -------
    complex or ndarray of complex
    """
    arr = np.asarray(z, dtype=complex)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    on_pole = (arr.imag == 0) & (arr.real <= 0) & (arr.real == np.round(arr.real))
    if np.any(on_pole):
        raise PoleError("log_gamma_complex has poles at non-positive integers")
    out = np.empty_like(arr)
    right = arr.real >= 0.5
    out[right] = _log_gamma_right(arr[right])
    left = ~right
    if np.any(left):
        zl = arr[left]
        out[left] = LOG_PI - _log_sin_pi(zl) - _log_gamma_right(1.0 - zl)
    return complex(out[0]) if scalar else out


def _log_barnes_asymptotic(x):
    # ln G(x + 1) for x >= ~11
    series = np.zeros_like(x)
    x2inv = 1.0 / (x * x)
    for coef in _BARNES[::-1]:
        series = (series + coef) * x2inv
    return ((x * x / 2.0 - 1.0 / 12.0) * np.log(x) - 0.75 * x * x
            + x * HALF_LOG_2PI + ZETA_PRIME_MINUS_ONE + series)


def log_barnes_g(x):
    """Log of the Barnes G function for positive real ``x``.

    Uses ``G(x + 1) = Gamma(x) G(x)`` to move the argument to ``x >= 12``
    and the large-argument expansion there.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("barnes_g is only implemented for x > 0")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    shift = np.maximum(0, np.ceil(12.0 - arr)).astype(int)
    acc = np.zeros_like(arr)
    w = arr.copy()
    for k in range(int(shift.max(initial=0))):
        active = shift > k
        acc[active] += gammaln(w[active])
        w[active] += 1.0
    out = _log_barnes_asymptotic(w - 1.0) - acc
    return float(out[0]) if scalar else out


def barnes_g(x):
    """Barnes G function for positive real ``x`` (linear scale)."""
    return np.exp(log_barnes_g(x))
