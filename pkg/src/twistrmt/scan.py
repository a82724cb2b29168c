"""Scans over families of quadratic twists.

A scan enumerates fundamental discriminants under a set of filters, assigns
each its functional-equation sign, and fills in central values and
discretised coefficients with one of three engines:

``series``
    exponentially convergent series for each even-sign twist, then
    calibration of the scale ``kappa`` and discretisation;
``theta``
    ternary theta-series coefficients (conductor 32 only, odd ``d``);
``import``
    coefficients ``c(|d|)`` read from a text file.

For the coefficient engines ``L = kappa c^2 / sqrt|d|`` with ``kappa`` either
given or fitted against a few series values.
"""
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .characters import fundamental_discriminants, kronecker_array
from .curves import EllipticCurveData, an_table, get_curve
from .lvalues import (
    CalibrationError,
    CurveCalibration,
    TwistRecord,
    _decay,
    calibrate_kappa,
    central_values,
    discretize,
    fit_tau_divisor,
    series_length,
)
from .theta import DEFAULT_MEMORY_BUDGET, theta_coefficients_batch

__all__ = [
    "ScanConfig",
    "ScanResult",
    "InsufficientDataError",
    "run_scan",
    "family_discriminants",
    "load_coefficient_file",
    "default_engine",
    "ENGINES",
]

ENGINES = ("series", "theta", "import")
_THETA_SAMPLE = 24


class InsufficientDataError(ValueError):
    """Too little data for the requested observable."""


@dataclass
class ScanConfig:
    """Family of twists and how to evaluate them.

    Parameters
    ----------
    curve : str
        Curve label.
    T : int
        Largest ``|d|``.
    dmin : int
        Smallest ``|d|``.
    parity : {"all", "odd", "even"}
    sign : {"even", "all"}
        Keep only even-sign twists, or every twist coprime to the conductor.
    d_sign : {0, 1, -1}
        Restrict to positive or negative ``d`` (0 keeps both).
    prime_only : bool
        Keep ``d`` with ``|d|`` prime.
    character : (int, int) or None
        Keep ``d`` with ``kronecker(d, p) = value``.
    engine : {"series", "theta", "import"}
    epsilon : float
        Truncation error of the series.
    coefficient_file : str or None
        Source for the import engine.
    kappa : float or None
        Scale for the coefficient engines; fitted when ``None``.
    tau_refined : bool
        Round series coefficients to multiples of ``tau(|d|)``.
    calibration_size : int
        References per discretisation class for the series engine.
    registry : str or None
        Extra curve registry file.
    threads : int
        Worker threads. Never changes the output.
    """

    curve: str = "E11"
    T: int = 1000
    dmin: int = 1
    parity: str = "all"
    sign: str = "even"
    d_sign: int = 0
    prime_only: bool = False
    character: tuple = None
    engine: str = "series"
    epsilon: float = 1e-8
    coefficient_file: str = None
    kappa: float = None
    tau_refined: bool = False
    calibration_size: int = 50
    registry: str = None
    threads: int = 1

    def __post_init__(self):
        self.T = int(self.T)
        self.dmin = int(self.dmin)
        if self.T < 3:
            raise ValueError("T must be at least 3")
        if self.dmin < 1 or self.dmin > self.T:
            raise ValueError("need 1 <= dmin <= T")
        if self.parity not in ("all", "odd", "even"):
            raise ValueError(f"unknown parity {self.parity!r}")
        if self.sign not in ("even", "all"):
            raise ValueError(f"unknown sign filter {self.sign!r}")
        if self.d_sign not in (0, 1, -1):
            raise ValueError("d_sign must be 0, 1 or -1")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.engine == "import" and not self.coefficient_file:
            raise ValueError("the import engine needs a coefficient file")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.character is not None:
            self.character = (int(self.character[0]), int(self.character[1]))
        if self.calibration_size < 1:
            raise ValueError("calibration_size must be positive")

    def resolve_curve(self):
        return get_curve(self.curve, self.registry)

    def snapshot(self):
        """Plain-data view of the configuration, minus ``threads``."""
        out = asdict(self)
        out.pop("threads")
        if out["character"] is not None:
            out["character"] = list(out["character"])
        return out


@dataclass
class ScanResult:
    """Records of a scan, sorted by ``|d|`` (negative first on ties)."""

    config: ScanConfig
    curve: EllipticCurveData
    records: list
    calibration: CurveCalibration = None
    notes: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def arrays(self, T=None):
        """Columns ``d, sign, lvalue, c, is_zero`` as arrays, for ``|d| <= T``."""
        d = np.array([r.d for r in self.records], dtype=np.int64)
        keep = np.ones(d.size, dtype=bool) if T is None else np.abs(d) <= T
        return {
            "d": d[keep],
            "sign": np.array([r.sign for r in self.records], dtype=np.int64)[keep],
            "lvalue": np.array([r.lvalue for r in self.records], dtype=float)[keep],
            "c": np.array([r.c for r in self.records], dtype=np.int64)[keep],
            "is_zero": np.array([r.is_zero for r in self.records], dtype=bool)[keep],
        }

    def to_csv(self, path):
        """Write ``d,sign,lvalue,c,is_zero`` rows; floats use shortest round-trip repr."""
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def csv_text(self):
        lines = ["d,sign,lvalue,c,is_zero"]
        for r in self.records:
            lines.append(f"{r.d},{r.sign},{float(r.lvalue)!r},{r.c},{int(r.is_zero)}")
        return "\n".join(lines) + "\n"


def default_engine(curve):
    """``theta`` for the conductor-32 curve ``y^2 = x^3 - x``, else ``series``."""
    return "theta" if _is_congruent_curve(curve) else "series"


def _is_congruent_curve(curve):
    return curve.conductor == 32 and curve.weierstrass == (0, 0, 0, -1, 0)


def family_discriminants(config, curve=None):
    """Discriminants selected by ``config`` with their signs."""
    curve = curve or config.resolve_curve()
    lo = config.dmin
    hi = config.T
    parity = None if config.parity == "all" else config.parity
    kw = dict(parity=parity, prime_only=config.prime_only, character=config.character)
    if config.sign == "even":
        kw["even_sign_for"] = curve
    else:
        kw["coprime_to"] = curve.conductor
    sides = []
    if config.d_sign in (0, -1):
        sides.append(fundamental_discriminants(-hi, -lo, **kw))
    if config.d_sign in (0, 1):
        sides.append(fundamental_discriminants(lo, hi, **kw))
    ds = np.concatenate(sides) if sides else np.empty(0, dtype=np.int64)
    ds = ds[np.lexsort((ds, np.abs(ds)))]
    signs = curve.root_number * kronecker_array(ds, -curve.conductor).astype(np.int64)
    return ds, signs


def load_coefficient_file(path):
    """Read ``|d| c`` pairs (ascending ``|d|``, ``#`` comments) into a dict."""
    table = {}
    last = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected '|d| c'")
            n, c = int(parts[0]), int(parts[1])
            if n <= last:
                raise ValueError(f"{path}:{lineno}: |d| must be strictly ascending")
            table[n] = c
            last = n
    return table


def _coefficient_table_for(curve, ds, epsilon):
    qmax = int(np.abs(ds).max())
    lam = _decay(curve, qmax)
    return an_table(curve, series_length(lam, epsilon) + 2 * qmax + 2)


def _series_records(config, curve, ds, signs):
    even = ds[signs == 1]
    values = {}
    if even.size:
        table = _coefficient_table_for(curve, even, config.epsilon)
        L = central_values(curve, even, config.epsilon, table.scaled(), config.threads)
        values = dict(zip(even.tolist(), L.tolist()))
    records = [TwistRecord(int(d), int(w), max(values.get(int(d), 0.0), 0.0))
               for d, w in zip(ds, signs)]
    floor = max(1e3 * config.epsilon, 1e-6)
    taken = {}
    refs = []
    for r in records:
        if r.sign != 1 or r.lvalue <= floor:
            continue
        key = (1 if r.d > 0 else -1, r.d % 8)
        if taken.get(key, 0) < config.calibration_size:
            taken[key] = taken.get(key, 0) + 1
            refs.append(r)
    calib = None
    if refs:
        calib = calibrate_kappa(curve, refs)
        if config.tau_refined:
            calib.tau_divisor = fit_tau_divisor(calib, refs)
    for r in records:
        if r.sign != 1:
            r.lvalue, r.c, r.is_zero = 0.0, 0, True
        elif calib is None:
            r.c, r.is_zero = 0, True
        else:
            r.c, r.is_zero = discretize(curve, calib, r.d, r.lvalue, config.tau_refined)
    return records, calib


def _fit_coefficient_kappa(curve, ds, signs, coeff, epsilon, threads):
    # kappa such that L = kappa c^2 / sqrt|d|, from a few series values
    picks = [int(d) for d, w, c in zip(ds, signs, coeff) if w == 1 and c != 0]
    picks = picks[:_THETA_SAMPLE]
    if not picks:
        raise InsufficientDataError("no nonzero coefficient to fix the scale")
    L = central_values(curve, picks, epsilon, threads=threads)
    cmap = dict(zip(ds.tolist(), coeff.tolist()))
    ratios = np.array([l * math.sqrt(abs(d)) / cmap[d] ** 2 for d, l in zip(picks, L)])
    kappa = float(np.median(ratios))
    spread = float(np.max(np.abs(ratios / kappa - 1.0)))
    if spread > 1e-4:
        raise CalibrationError(
            f"coefficients do not match the series (relative spread {spread:.2e})")
    return kappa, spread, len(picks)


def _coefficient_records(config, curve, ds, signs, coeff):
    coeff = np.abs(np.asarray(coeff, dtype=np.int64))
    if config.kappa is not None:
        kappa, spread, size = float(config.kappa), 0.0, 0
    else:
        kappa, spread, size = _fit_coefficient_kappa(
            curve, ds, signs, coeff, config.epsilon, config.threads)
    calib = CurveCalibration(curve, {"all": kappa}, "single", spread, {"all": size})
    records = []
    for d, w, c in zip(ds.tolist(), signs.tolist(), coeff.tolist()):
        if w != 1:
            records.append(TwistRecord(d, w, 0.0, 0, True))
        else:
            records.append(TwistRecord(d, w, kappa * c * c / math.sqrt(abs(d)), c, c == 0))
    return records, calib


def run_scan(config, memory_budget=DEFAULT_MEMORY_BUDGET):
    """Evaluate every twist of the family described by ``config``.

    Returns
    -------
    ScanResult

    Raises
    ------
    ValueError
        If the engine cannot serve the family (theta needs odd ``d`` on the
        conductor-32 curve; import needs every ``|d|`` in the file).
    """
    curve = config.resolve_curve()
    ds, signs = family_discriminants(config, curve)
    notes = []
    if ds.size == 0:
        return ScanResult(config, curve, [], None, ["empty family"])
    if config.engine == "series":
        records, calib = _series_records(config, curve, ds, signs)
    elif config.engine == "theta":
        if not _is_congruent_curve(curve):
            raise ValueError("the theta engine is wired for y^2 = x^3 - x only")
        if np.any(ds % 2 == 0):
            raise ValueError("the theta engine covers odd d only; use parity='odd'")
        coeff = theta_coefficients_batch(T=config.T, memory_budget=memory_budget)
        records, calib = _coefficient_records(config, curve, ds, signs, coeff[np.abs(ds)])
    else:
        table = load_coefficient_file(config.coefficient_file)
        missing = [int(d) for d in ds if abs(int(d)) not in table]
        if missing:
            raise InsufficientDataError(
                f"coefficient file lacks {len(missing)} discriminants, first |d| = {abs(missing[0])}")
        coeff = np.array([table[abs(int(d))] for d in ds], dtype=np.int64)
        records, calib = _coefficient_records(config, curve, ds, signs, coeff)
    if calib is not None:
        notes.append(f"kappa classes: {calib.classes}")
    return ScanResult(config, curve, records, calib, notes)
