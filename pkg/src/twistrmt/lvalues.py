"""Central values of quadratic twists and their integer discretisation.

For a fundamental discriminant ``d`` coprime to the conductor ``N`` the
twist has conductor ``N d^2`` and sign ``w_E kronecker(d, -N)``. When the
sign is +1 its central value is

    L(1/2, chi_d) = 2 sum_n (a_n / n) chi_d(n) exp(-2 pi n / (|d| sqrt N)).

More generally, for every ``delta > 0``,

    L = sum_n (a_n / n) chi_d(n) [exp(-lam n delta) + w exp(-lam n / delta)]

with ``lam = 2 pi / (|d| sqrt N)`` and ``w`` the sign; only the correct
``w`` makes the right side independent of ``delta``.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .characters import character_table, factorize, kronecker

__all__ = [
    "TwistRecord",
    "CurveCalibration",
    "CalibrationError",
    "AmbiguityError",
    "twist_sign",
    "series_length",
    "twisted_sum",
    "central_value",
    "central_values",
    "functional_equation_defect",
    "calibrate_kappa",
    "discretize",
    "divisor_count",
    "fit_tau_divisor",
]


class CalibrationError(ValueError):
    """No scale discretises every reference value."""


class AmbiguityError(ValueError):
    """A value sits too close to a rounding boundary to discretise."""


@dataclass
class TwistRecord:
    """One quadratic twist: discriminant, sign, central value, coefficient."""

    d: int
    sign: int
    lvalue: float = 0.0
    c: int = 0
    is_zero: bool = False


@dataclass
class CurveCalibration:
    """Scale ``kappa`` per discretisation class.

    ``classes`` is ``"single"`` (one scale for every ``d``) or ``"mod8"``
    (keyed by ``(sign of d, d mod 8)``). ``tau_divisor`` relates the
    divisor-count unit to this normalisation: with it, coefficients of
    squarefree ``|d|`` are multiples of ``tau(|d|) / tau_divisor``.
    """

    curve: object
    kappa: dict
    classes: str = "single"
    residual: float = 0.0
    sizes: dict = field(default_factory=dict)
    tau_divisor: int = 1

    def class_of(self, d):
        if self.classes == "single":
            return "all"
        return (1 if d > 0 else -1, int(d) % 8)

    def kappa_for(self, d):
        try:
            return self.kappa[self.class_of(d)]
        except KeyError:
            raise CalibrationError(f"no calibration for the class of d = {d}") from None


def twist_sign(curve, d):
    """Sign ``w_E kronecker(d, -N)`` of the functional equation of the twist.

    Raises
    ------
    ValueError
        If ``gcd(d, N) > 1``.
    """
    if math.gcd(int(d), curve.conductor) != 1:
        raise ValueError(f"d = {d} is not coprime to the conductor {curve.conductor}")
    return curve.root_number * kronecker(d, -curve.conductor)


def _decay(curve, d):
    return 2.0 * math.pi / (abs(int(d)) * math.sqrt(curve.conductor))


def series_length(lam, epsilon):
    """Terms needed so the tail of ``2 sum (a_n/n) chi(n) e^{-lam n}`` is below ``epsilon``.

    With ``|a_n| <= d(n) sqrt(n)`` and ``d(n) <= 2 sqrt(n)`` each term is at
    most ``2 e^{-lam n}``, so the tail past ``M`` is at most
    ``4 e^{-lam (M+1)} / (1 - e^{-lam})``.
    """
    return int(math.ceil(math.log(4.0 / (epsilon * -math.expm1(-lam))) / lam))


def twisted_sum(bn, d, lam, length, table=None):
    """``sum_{n <= length} bn[n] kronecker(d, n) exp(-lam n)``.

    ``bn`` is viewed as a ``K x |d|`` matrix (row ``k`` holds
    ``n = k|d| ... k|d| + |d| - 1``); the rows are combined with weights
    ``exp(-lam |d| k)`` and the result is paired with the periodic character
    and ``exp(-lam r)``. ``bn`` must extend to a multiple of ``|d|`` past
    ``length``.
    """
    q = abs(int(d))
    rows = length // q + 1
    if rows * q > bn.size:
        raise ValueError("coefficient table too short for this twist")
    if table is None:
        table = character_table(d)
    block = bn[: rows * q].reshape(rows, q)
    weights = np.exp(-lam * q * np.arange(rows))
    col = weights @ block
    r = np.arange(q)
    return float(np.dot(table * np.exp(-lam * r), col))


def _table_length(curve, ds, epsilon):
    qmax = max(abs(int(d)) for d in ds)
    lam = _decay(curve, qmax)
    return series_length(lam, epsilon) + 2 * qmax + 2


def central_value(curve, d, epsilon=1e-8, coefficients=None):
    """``L(1/2, chi_d)`` for an even-sign twist, accurate to ``epsilon``.

    Parameters
    ----------
    curve : EllipticCurveData
    d : int
        Fundamental discriminant coprime to the conductor (``d = 1`` gives
        the untwisted value).
    epsilon : float
        Bound on the truncation error.
    coefficients : CoefficientTable or ndarray, optional
        Precomputed table, or ``a_n / n`` weights, long enough for ``d``.

    Raises
    ------
    ValueError
        If the twist has sign -1, whose central value vanishes.
    """
    return float(central_values(curve, [d], epsilon, coefficients)[0])


def _weights(curve, ds, epsilon, coefficients):
    from .curves import CoefficientTable, an_table

    need = _table_length(curve, ds, epsilon)
    if coefficients is None:
        return an_table(curve, need).scaled()
    bn = coefficients.scaled() if isinstance(coefficients, CoefficientTable) else coefficients
    if bn.size < need:
        raise ValueError(f"coefficient table has {bn.size} entries, {need} needed")
    return bn


def central_values(curve, ds, epsilon=1e-8, coefficients=None, threads=1):
    """:func:`central_value` for many discriminants; result order follows ``ds``.

    Every ``d`` is computed independently in a fixed order of summation,
    so the values do not depend on ``threads``.
    """
    ds = [int(d) for d in ds]
    if not ds:
        return np.empty(0)
    for d in ds:
        if twist_sign(curve, d) != 1:
            raise ValueError(f"twist by d = {d} has odd sign; its central value is 0")
    bn = _weights(curve, ds, epsilon, coefficients)

    def one(d):
        lam = _decay(curve, d)
        table = np.ones(1, dtype=np.int8) if d == 1 else character_table(d)
        return 2.0 * twisted_sum(bn, d, lam, series_length(lam, epsilon), table)

    if threads <= 1:
        return np.array([one(d) for d in ds])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.array(list(pool.map(one, ds)))


def functional_equation_defect(curve, d, sign=None, delta=1.1, epsilon=1e-10,
                               coefficients=None):
    """Check a claimed sign through the ``delta``-family of series.

    Returns ``(S(delta), S(1))`` where
    ``S(delta) = sum (a_n/n) chi_d(n) [exp(-lam n delta) + w exp(-lam n / delta)]``
    with ``w = sign`` (default: :func:`twist_sign`). For the true sign both
    entries equal the central value, which is 0 when the sign is -1.
    """
    d = int(d)
    w = twist_sign(curve, d) if sign is None else int(sign)
    lam = _decay(curve, d)
    slow = lam / max(delta, 1.0 / delta)
    need = series_length(slow, epsilon) + 2 * abs(d) + 2
    from .curves import CoefficientTable, an_table

    if coefficients is None:
        bn = an_table(curve, need).scaled()
    elif isinstance(coefficients, CoefficientTable):
        bn = coefficients.scaled()
    else:
        bn = coefficients
    table = np.ones(1, dtype=np.int8) if d == 1 else character_table(d)

    def part(rate):
        return twisted_sum(bn, d, rate, series_length(rate, epsilon), table)

    s_delta = part(lam * delta) + w * part(lam / delta)
    s_one = (1 + w) * part(lam)
    return s_delta, s_one


# ----------------------------------------------------------- discretisation

def divisor_count(n):
    """Number of positive divisors of ``n``."""
    return math.prod(e + 1 for e in factorize(n).values())


def _fit(qs, tol, max_multiplier):
    """Largest ``kappa`` with every ``sqrt(q / kappa)`` within ``tol`` of an integer."""
    qs = np.asarray(qs, dtype=float)
    qmin = qs.min()
    for m in range(1, max_multiplier + 1):
        kappa = qmin / (m * m)
        c = np.rint(np.sqrt(qs / kappa))
        # least-squares refinement of q = kappa c^2 with c fixed
        kappa = float(np.dot(qs, c * c) / np.dot(c ** 2, c ** 2))
        resid = np.abs(np.sqrt(qs / kappa) - c)
        if resid.max() <= tol:
            return kappa, float(resid.max())
    return None


def calibrate_kappa(curve, references, tol=1e-3, max_multiplier=64):
    """Fit the scale ``kappa`` so that ``L sqrt|d| / kappa`` are perfect squares.

    The smallest reference value is hypothesised to be ``kappa m^2`` for
    ``m = 1, 2, ...``; the first ``m`` under which every reference rounds to
    an integer square root within ``tol`` is kept (so ``kappa`` is the
    largest consistent scale) and refined by least squares. If no single
    scale works, references are split by the sign of ``d`` and ``d mod 8``
    and each class is fitted separately.

    Parameters
    ----------
    curve : EllipticCurveData
    references : sequence of TwistRecord
        Even-sign twists with positive central values.

    Returns
    -------
    CurveCalibration

    Raises
    ------
    CalibrationError
        If some class cannot be fitted.
    """
    refs = list(references)
    if not refs:
        raise CalibrationError("no reference twists")
    for r in refs:
        if r.sign != 1 or not r.lvalue > 0:
            raise ValueError(f"reference d = {r.d} must have sign +1 and a positive value")
    qs = np.array([r.lvalue * math.sqrt(abs(r.d)) for r in refs])
    single = _fit(qs, tol, max_multiplier)
    if single is not None:
        return CurveCalibration(curve, {"all": single[0]}, "single", single[1],
                                {"all": len(refs)})
    calib = CurveCalibration(curve, {}, "mod8")
    groups = {}
    for r, q in zip(refs, qs):
        groups.setdefault(calib.class_of(r.d), []).append(q)
    worst = 0.0
    for key in sorted(groups):
        fit = _fit(groups[key], tol, max_multiplier)
        if fit is None:
            raise CalibrationError(f"class {key} of {curve.label} has no consistent scale")
        calib.kappa[key] = fit[0]
        calib.sizes[key] = len(groups[key])
        worst = max(worst, fit[1])
    calib.residual = worst
    return calib


def _tau_unit(d, divisor):
    q = abs(int(d))
    f = factorize(q)
    if any(e > 1 for e in f.values()):
        return 1
    return max(1, math.prod(e + 1 for e in f.values()) // divisor)


def fit_tau_divisor(calib, references, limit=64):
    """Smallest power of two ``s`` with ``tau(|d|)/s`` dividing every reference coefficient.

    Calibration picks the largest consistent scale, which can remove a
    fixed power of 2 from the coefficients; ``s`` puts it back so that the
    divisor-count refinement is applied in the calibrated units.

    Parameters
    ----------
    calib : CurveCalibration
    references : sequence of TwistRecord
        Twists with positive central values.

    Returns
    -------
    int
    """
    cs = []
    for r in references:
        c, _ = discretize(calib.curve, calib, r.d, r.lvalue)
        cs.append((r.d, c))
    s = 1
    while s < limit:
        if all(c % _tau_unit(d, s) == 0 for d, c in cs):
            return s
        s *= 2
    return limit


def discretize(curve, calib, d, L, tau_refined=False, tol=1e-3):
    """Integer coefficient ``c`` with ``L = kappa c^2 / sqrt|d|`` and a zero flag.

    ``c`` is the nearest integer to ``sqrt(L sqrt|d| / kappa)``, and the
    twist counts as vanishing when ``c = 0``; for exactly discretised
    values this is the threshold ``L < kappa / sqrt|d|``. With
    ``tau_refined`` and squarefree ``|d|`` the coefficient is rounded to a
    multiple of ``u = tau(|d|) / tau_divisor`` (see :func:`fit_tau_divisor`),
    so the zero threshold becomes ``kappa u^2 / (4 sqrt|d|)``.

    Raises
    ------
    AmbiguityError
        If ``L sqrt|d| / kappa`` lies within ``tol`` of a rounding boundary.
    """
    if isinstance(calib, CurveCalibration):
        kappa, divisor = calib.kappa_for(d), calib.tau_divisor
    else:
        kappa, divisor = float(calib), 1
    if L == 0:
        return 0, True
    x = max(L, 0.0) * math.sqrt(abs(d)) / kappa
    unit = _tau_unit(d, divisor) if tau_refined else 1
    r = math.sqrt(x) / unit
    c = int(math.floor(r + 0.5))
    boundary = (math.floor(r) + 0.5) * unit
    if abs(x - boundary * boundary) < tol:
        raise AmbiguityError(f"d = {d}: L sqrt|d|/kappa = {x:.6g} is at a rounding boundary")
    c *= unit
    return c, c == 0
