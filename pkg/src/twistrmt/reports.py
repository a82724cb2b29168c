"""Observables computed from twist scans, with their conjectured values.

All counts are over even-sign twists. Ratios are invariant under rescaling
every central value by a positive constant.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .characters import kronecker_array
from .curves import ap_point_count, arithmetic_factor_ak
from .moments import bin_probabilities, g_k_barnes, h_small_x, moment_so_even
from .sampler import histogram_density
from .scan import InsufficientDataError

__all__ = [
    "ReportRecord",
    "n_from_T",
    "t_grid",
    "vanishing_count",
    "vanishing_counts",
    "conjecture1_ratio",
    "eq23_scaling",
    "rp_ratio",
    "rp_conjectured",
    "rp_report",
    "qp_ratio",
    "qp_conjectured",
    "qp_report",
    "family_moment",
    "moment_report",
    "value_histogram",
    "histogram_report",
    "bulk_bins",
    "MIN_ZEROS",
    "REFERENCE_RATIOS",
]

MIN_ZEROS = 10
BULK_COUNT = 100

# Published R_p data: {curve: {p: (conjectured, observed)}} at the scan
# sizes below.
REFERENCE_T = {"E11": 333605031, "E19": 263273979, "E32": 930584451}
REFERENCE_RATIOS = {
    "E11": {3: (1.2909944, 1.2774873), 5: (0.84515425, 0.84938811),
            7: (1.2909944, 1.288618), 11: (None, 0.0), 13: (0.74535599, 0.73266305),
            17: (1.118034, 1.1282072), 19: (1.0, 1.000864), 23: (1.0425721, 1.0470095),
            29: (1.0, 0.99769402), 31: (0.80064077, 0.78332934),
            37: (0.92393644, 0.91867671), 41: (1.2126781, 1.2400086),
            43: (1.1470787, 1.1642671), 47: (0.84515425, 0.82819492),
            53: (1.118034, 1.1332312), 59: (0.91986621, 0.91329134),
            61: (0.82199494, 0.79865031), 67: (1.1088319, 1.1216776),
            71: (1.0425721, 1.0497774), 73: (0.94733093, 0.94345043),
            79: (1.1338934, 1.1562237), 83: (1.0741723, 1.0854551),
            89: (0.84515425, 0.82410673), 97: (1.0741723, 1.0877289),
            101: (0.98058068, 0.97846254), 103: (1.1677484, 1.1976448),
            107: (0.84515425, 0.82186438), 109: (0.91287093, 0.89933354),
            113: (0.92393644, 0.9146531), 127: (0.93933644, 0.93052596),
            131: (1.1470787, 1.171545), 137: (1.052079, 1.0603352),
            139: (0.93094934, 0.91532106), 149: (1.069045, 1.0833831)},
    "E19": {3: (1.7320508, 1.7018241), 5: (0.57735027, 0.57825622),
            7: (1.1338934, 1.134852), 11: (0.77459667, 0.76491219),
            13: (1.3416408, 1.3632977), 17: (1.183216, 1.196637), 19: (None, 0.0),
            23: (1.0, 0.99857962), 29: (0.81649658, 0.80174375),
            31: (1.1338934, 1.143379), 37: (0.9486833, 0.94311279),
            41: (1.1547005, 1.1683113), 43: (1.0229915, 1.0229106),
            47: (1.0645813, 1.0708874), 53: (0.79772404, 0.77715638),
            59: (1.1055416, 1.1196252), 61: (1.0162612, 1.0199932),
            67: (1.0606602, 1.0705574), 71: (0.91986621, 0.90939741),
            73: (1.099525, 1.1110782), 79: (0.90453403, 0.8922209),
            83: (0.8660254, 0.84732408), 89: (0.87447463, 0.85750248),
            97: (0.92144268, 0.90867892), 101: (0.94280904, 0.93032086),
            103: (0.87333376, 0.855721), 107: (1.183216, 1.2153554),
            109: (1.1577675, 1.1844329), 113: (0.9486833, 0.93966595),
            127: (0.98449518, 0.98005032), 131: (1.1208971, 1.1413931),
            137: (1.0219806, 1.0285831), 139: (1.0975994, 1.1176423),
            149: (0.86855395, 0.84844439)},
    "E32": {3: (1.0, 0.99925886), 5: (1.4142136, 1.4113424), 7: (1.0, 1.0003445),
            11: (1.0, 1.0001457), 13: (0.63245553, 0.61626177),
            17: (0.89442719, 0.88962298), 19: (1.0, 1.0006726), 23: (1.0, 1.0000812),
            29: (1.4142136, 1.4615854), 31: (1.0, 1.0008405),
            37: (1.0540926, 1.0603105), 41: (0.78446454, 0.76494748),
            43: (1.0, 1.0006774), 47: (1.0, 0.99951502), 53: (0.76696499, 0.74137107),
            59: (1.0, 0.99969828), 61: (1.1766968, 1.1996892), 67: (1.0, 1.0002831),
            71: (1.0, 0.99992715), 73: (1.0846523, 1.0950853), 79: (1.0, 0.99882039),
            83: (1.0, 0.99979996), 89: (0.89442719, 0.88154899),
            97: (0.8304548, 0.80811684), 101: (1.0198039, 1.0229108),
            103: (1.0, 1.0004009), 107: (1.0, 1.0009282), 109: (0.94686415, 0.94015124),
            113: (1.1313708, 1.1534106), 127: (1.0, 0.99904006),
            131: (1.0, 0.99916309), 137: (1.1744404, 1.2066518), 139: (1.0, 1.0000469),
            149: (0.91064169, 0.89706709)},
}


@dataclass
class ReportRecord:
    """Tabulated observable.

    ``rows`` are tuples matching ``columns`` (ascending in ``T`` for grid
    reports); ``constants`` holds fitted or derived scalars and ``flags``
    explains degenerate entries.
    """

    observable: str
    columns: tuple
    rows: list
    constants: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def csv_text(self):
        lines = [f"# observable={self.observable}"]
        for key in sorted(self.constants):
            lines.append(f"# {key}={_fmt(self.constants[key])}")
        for flag in self.flags:
            lines.append(f"# flag={flag}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def n_from_T(T):
    """Matrix size ``N`` matched to a family of conductors up to ``T``: ``ln T`` rounded half up.

    Examples
    --------
    >>> n_from_T(788299808)
    20
    """
    if T < 3:
        raise ValueError("T must be at least 3")
    return int(math.floor(math.log(T) + 0.5))


def t_grid(T, points=20, lo=None):
    """Geometric grid of integer cutoffs ending at ``T``."""
    lo = max(3, int(T) // 100) if lo is None else int(lo)
    grid = np.unique(np.rint(np.geomspace(lo, int(T), int(points))).astype(np.int64))
    return [int(t) for t in grid]


def _family(result, T=None):
    cols = result.arrays(T)
    keep = cols["sign"] == 1
    return {k: v[keep] for k, v in cols.items()}


def vanishing_count(result, T=None):
    """Even-sign twists with ``is_zero`` and ``|d| <= T`` (default: the whole scan)."""
    return int(_family(result, T)["is_zero"].sum())


def vanishing_counts(result, grid):
    """:func:`vanishing_count` at every ``T`` of ``grid``."""
    fam = _family(result)
    zeros = np.sort(np.abs(fam["d"][fam["is_zero"]]))
    return [int(np.searchsorted(zeros, t, side="right")) for t in grid]


def family_size(result, T):
    """Number of even-sign twists with ``|d| <= T``."""
    return int(_family(result, T)["d"].size)


def _top_decade_mean(grid, values):
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    top = grid >= grid[-1] / 10.0
    return float(values[top].mean())


def conjecture1_ratio(result, grid):
    """Vanishing count divided by ``T^{3/4} (ln T)^{-5/8}`` along ``grid``.

    ``c_E`` is fitted as the mean ratio over the top decade of the grid.
    A flag is raised when fewer than ``MIN_ZEROS`` zeros are seen.
    """
    grid = sorted(int(t) for t in grid)
    counts = vanishing_counts(result, grid)
    ratios = [n / (t ** 0.75 * math.log(t) ** -0.625) for t, n in zip(grid, counts)]
    c_E = _top_decade_mean(grid, ratios)
    rows = [(t, n, r, c_E) for t, n, r in zip(grid, counts, ratios)]
    flags = []
    if counts[-1] < MIN_ZEROS:
        flags.append(f"insufficient data: {counts[-1]} vanishing twists")
    return ReportRecord("conj1", ("T", "count", "value", "predicted"), rows,
                        {"c_E": c_E, "curve": result.curve.label}, flags)


def eq23_scaling(result, grid, tau_refined=True, a_half=None):
    """Vanishing counts against the small-value heuristic.

    With ``tau_refined`` the count is divided by ``T^{3/4} (ln T)^{11/8}``.
    Otherwise it is divided by ``T* T^{-1/4} h(N)`` with ``T*`` the family
    size and ``N = n_from_T(T)``; the heuristic constant
    ``(8/3) sqrt(kappa) a_{-1/2}`` is reported as the predicted column when
    ``a_half`` is given.
    """
    grid = sorted(int(t) for t in grid)
    counts = vanishing_counts(result, grid)
    rows = []
    predicted = None
    constants = {"curve": result.curve.label, "tau_refined": bool(tau_refined)}
    if not tau_refined and a_half is not None and result.calibration is not None:
        kappa = min(result.calibration.kappa.values())
        predicted = 8.0 / 3.0 * math.sqrt(kappa) * a_half
        constants.update(kappa=kappa, a_half=a_half)
    for t, n in zip(grid, counts):
        if tau_refined:
            scale = t ** 0.75 * math.log(t) ** 1.375
        else:
            scale = family_size(result, t) * t ** -0.25 * h_small_x(n_from_T(t))
        rows.append((t, n, n / scale if scale > 0 else 0.0, predicted))
    flags = []
    if counts[-1] < MIN_ZEROS:
        flags.append(f"insufficient data: {counts[-1]} vanishing twists")
    return ReportRecord("eq23", ("T", "count", "value", "predicted"), rows, constants, flags)


def _good_ap(curve, p):
    p = int(p)
    if not curve.is_good(p):
        raise ValueError(f"{curve.label} has bad reduction at p = {p}")
    return ap_point_count(curve, p)


def rp_conjectured(curve, p):
    """``sqrt((p + 1 - a_p) / (p + 1 + a_p))``."""
    a = _good_ap(curve, p)
    return math.sqrt((p + 1 - a) / (p + 1 + a))


def qp_conjectured(curve, p, k):
    """``((p + 1 + a_p) / (p + 1 - a_p))^k``."""
    a = _good_ap(curve, p)
    return ((p + 1 + a) / (p + 1 - a)) ** k


def _split(result, p, T):
    fam = _family(result, T)
    ch = kronecker_array(fam["d"], int(p))
    return fam, ch


def rp_ratio(result, p, T=None):
    """Vanishing count with ``kronecker(d, p) = +1`` over that with ``-1``.

    Returns
    -------
    value : float or None
        ``None`` when the denominator is 0 (and the numerator is not).
    flag : str or None
    """
    fam, ch = _split(result, p, T)
    num = int((fam["is_zero"] & (ch == 1)).sum())
    den = int((fam["is_zero"] & (ch == -1)).sum())
    if den == 0:
        if num == 0:
            return 0.0, "no vanishing twists in either class"
        return None, "zero denominator"
    if num == 0 and not (ch == 1).any():
        return 0.0, f"family has no d with kronecker(d, {p}) = +1"
    return num / den, None


def qp_ratio(result, p, k, T=None):
    """Sum of ``L^k`` over ``kronecker(d, p) = +1`` twists over the same for ``-1``.

    For ``k < 0`` vanishing twists are left out; they are counted by
    :func:`rp_ratio` instead.

    Raises
    ------
    InsufficientDataError
        If either class is empty.
    """
    fam, ch = _split(result, p, T)
    L = fam["lvalue"]
    keep = ~fam["is_zero"] if k < 0 else np.ones(L.size, dtype=bool)
    plus = keep & (ch == 1)
    minus = keep & (ch == -1)
    if not plus.any() or not minus.any():
        raise InsufficientDataError(f"empty class for p = {p}")
    if k == 0:
        return plus.sum() / minus.sum()
    return math.fsum(L[plus] ** k) / math.fsum(L[minus] ** k)


def _rows_over(result, grid, ps, fn, conj):
    rows = []
    flags = []
    for p in ps:
        try:
            predicted = conj(p)
        except ValueError:
            predicted = None
        for t in grid:
            value, flag = fn(p, t)
            if flag:
                flags.append(f"p={p} T={t}: {flag}")
            rows.append((p, t, value, predicted))
    return rows, flags


def rp_report(result, ps, grid=None):
    """:func:`rp_ratio` against :func:`rp_conjectured` for each prime and cutoff."""
    grid = [result.config.T] if grid is None else sorted(int(t) for t in grid)
    rows, flags = _rows_over(result, grid, ps, lambda p, t: rp_ratio(result, p, t),
                             lambda p: rp_conjectured(result.curve, p))
    return ReportRecord("rp", ("p", "T", "value", "predicted"), rows,
                        {"curve": result.curve.label}, flags)


def qp_report(result, ps, k, grid=None):
    """:func:`qp_ratio` against :func:`qp_conjectured` for each prime and cutoff."""
    grid = [result.config.T] if grid is None else sorted(int(t) for t in grid)

    def one(p, t):
        try:
            return qp_ratio(result, p, k, t), None
        except InsufficientDataError as exc:
            return None, str(exc)

    rows, flags = _rows_over(result, grid, ps, one,
                             lambda p: qp_conjectured(result.curve, p, k))
    return ReportRecord("qp", ("p", "T", "value", "predicted"), rows,
                        {"curve": result.curve.label, "k": k}, flags)


def family_moment(result, k, T=None, prime_cutoff=10000):
    """Mean of ``L^k`` over the even-sign family and its predicted value.

    The prediction is ``g_k a_k(E) (ln T)^{k(k-1)/2}``; vanishing twists are
    left out when ``k < 0``.

    Returns
    -------
    value, predicted : float
    """
    T = result.config.T if T is None else int(T)
    fam = _family(result, T)
    L = fam["lvalue"]
    if k < 0:
        L = L[~fam["is_zero"]]
    if L.size == 0:
        raise InsufficientDataError("empty family")
    if k == 0:
        return 1.0, 1.0
    value = math.fsum(L ** k) / L.size
    a_k, _ = arithmetic_factor_ak(result.curve, k, prime_cutoff)
    predicted = g_k_barnes(k) * a_k * math.log(T) ** (k * (k - 1) / 2)
    return value, predicted


def moment_report(result, k, grid=None, prime_cutoff=10000):
    grid = [result.config.T] if grid is None else sorted(int(t) for t in grid)
    rows = []
    for t in grid:
        value, predicted = family_moment(result, k, t, prime_cutoff)
        rows.append((t, value, predicted))
    return ReportRecord("moment", ("T", "value", "predicted"), rows,
                        {"curve": result.curve.label, "k": k,
                         "prime_cutoff": prime_cutoff})


def value_histogram(result, bins=40, T=None, N_override=None):
    """Histogram of central values against ``P_O(N, x)``.

    Values are rescaled so their mean equals the first moment of
    ``P_O(N, .)``; no arithmetic factor is folded in.

    Returns
    -------
    empirical, model : DensityGrid
        Same bins. ``model.counts`` holds expected counts.
    """
    T = result.config.T if T is None else int(T)
    fam = _family(result, T)
    L = fam["lvalue"]
    if L.size == 0 or not L.sum() > 0:
        raise InsufficientDataError("empty family")
    N = int(N_override) if N_override is not None else n_from_T(T)
    x = L * (moment_so_even(N, 1.0) / L.mean())
    top = min(float(np.quantile(x, 0.995)), 4.0 ** N)
    edges = np.linspace(0.0, top, int(bins) + 1)
    empirical = histogram_density(x, edges, N)
    probs = bin_probabilities(N, edges)
    inside = int(empirical.counts.sum())
    widths = np.diff(edges)
    model = type(empirical)(N, empirical.xs, probs / probs.sum() / widths,
                            edges=edges, counts=probs / probs.sum() * inside)
    return empirical, model


def bulk_bins(model, minimum=BULK_COUNT):
    """Mask of bins whose expected count is at least ``minimum``."""
    return np.asarray(model.counts) >= minimum


def histogram_report(result, bins=40, T=None, N_override=None):
    empirical, model = value_histogram(result, bins, T, N_override)
    bulk = bulk_bins(model)
    rows = []
    for i in range(len(empirical.xs)):
        rows.append((empirical.edges[i], empirical.edges[i + 1], empirical.ps[i],
                     model.ps[i], int(empirical.counts[i]), float(model.counts[i]),
                     bool(bulk[i])))
    constants = {"curve": result.curve.label, "N": model.N}
    return ReportRecord("hist", ("bin_lo", "bin_hi", "density", "model", "count",
                                 "expected", "bulk"), rows, constants)
