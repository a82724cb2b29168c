import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistrmt.characters import fundamental_discriminants, prime_sieve
from twistrmt.curves import get_curve
from twistrmt.lvalues import TwistRecord, central_value
from twistrmt.reports import (
    REFERENCE_RATIOS,
    ReportRecord,
    conjecture1_ratio,
    eq23_scaling,
    family_moment,
    family_size,
    histogram_report,
    moment_report,
    n_from_T,
    qp_conjectured,
    qp_ratio,
    qp_report,
    rp_conjectured,
    rp_ratio,
    rp_report,
    t_grid,
    value_histogram,
    vanishing_count,
    vanishing_counts,
)
from twistrmt.scan import (
    InsufficientDataError,
    ScanConfig,
    ScanResult,
    default_engine,
    family_discriminants,
    load_coefficient_file,
    run_scan,
)
from twistrmt.theta import theta_coefficients_batch

from oracles import representation_brute

CURVES = ["E11", "E19", "E32"]


def synthetic(records, curve="E11", T=None):
    T = T or max(abs(r.d) for r in records)
    return ScanResult(ScanConfig(curve, T), get_curve(curve), records)


def rescaled(result, lam):
    recs = [TwistRecord(r.d, r.sign, r.lvalue * lam, r.c, r.is_zero) for r in result.records]
    return ScanResult(result.config, result.curve, recs, result.calibration)


# ------------------------------------------------------------------ config

def test_config_validation():
    with pytest.raises(ValueError):
        ScanConfig("E11", 2)
    with pytest.raises(ValueError):
        ScanConfig("E11", 100, dmin=200)
    with pytest.raises(ValueError):
        ScanConfig("E11", 100, parity="prime")
    with pytest.raises(ValueError):
        ScanConfig("E11", 100, engine="magic")
    with pytest.raises(ValueError):
        ScanConfig("E11", 100, engine="import")
    assert "threads" not in ScanConfig("E11", 100).snapshot()


def test_default_engine():
    assert default_engine(get_curve("E32")) == "theta"
    assert default_engine(get_curve("E11")) == "series"


def test_family_filters():
    cfg = ScanConfig("E11", 2000, d_sign=-1, prime_only=True)
    ds, signs = family_discriminants(cfg)
    assert np.all(ds < 0) and np.all(signs == 1)
    primes = set(prime_sieve(2000).tolist())
    assert all(abs(int(d)) in primes for d in ds)
    assert np.all(np.diff(np.abs(ds)) >= 0)


def test_theta_engine_rejections():
    with pytest.raises(ValueError):
        run_scan(ScanConfig("E11", 100, engine="theta"))


def test_all_sign_scan_marks_odd_twists(e11):
    res = run_scan(ScanConfig("E11", 300, sign="all"))
    odd = [r for r in res.records if r.sign == -1]
    assert odd and all(r.lvalue == 0.0 and r.is_zero and r.c == 0 for r in odd)
    assert vanishing_count(res) == vanishing_count(run_scan(ScanConfig("E11", 300)))


def test_empty_family():
    res = run_scan(ScanConfig("E11", 3, d_sign=1))
    assert len(res) == 0 and res.notes
    with pytest.raises(InsufficientDataError):
        family_moment(res, 1)
    with pytest.raises(InsufficientDataError):
        value_histogram(res)


def test_scan_csv(e32_theta_2000, tmp_path):
    text = e32_theta_2000.csv_text()
    lines = text.splitlines()
    assert lines[0] == "d,sign,lvalue,c,is_zero"
    assert len(lines) == len(e32_theta_2000) + 1
    d, sign, lval, c, z = lines[1].split(",")
    assert float(lval) == e32_theta_2000.records[0].lvalue
    assert z in ("0", "1")
    path = tmp_path / "scan.csv"
    e32_theta_2000.to_csv(path)
    assert path.read_text() == text


def test_import_engine(e32_theta_2000, tmp_path):
    c = theta_coefficients_batch(T=2000)
    path = tmp_path / "coeff.txt"
    lines = ["# |d| c"] + [f"{n} {int(c[n])}" for n in range(1, 2001, 2)]
    path.write_text("\n".join(lines) + "\n")
    assert load_coefficient_file(path)[5] == 0
    res = run_scan(ScanConfig("E32", 2000, parity="odd", engine="import",
                              coefficient_file=str(path)))
    assert res.csv_text() == e32_theta_2000.csv_text()
    short = tmp_path / "short.txt"
    short.write_text("1 -2\n3 -4\n")
    with pytest.raises(InsufficientDataError):
        run_scan(ScanConfig("E32", 100, parity="odd", engine="import",
                            coefficient_file=str(short)))
    bad = tmp_path / "bad.txt"
    bad.write_text("3 1\n1 1\n")
    with pytest.raises(ValueError):
        load_coefficient_file(bad)


def test_theta_scan_values_match_series(e32_series_2000, e32_theta_2000):
    series = {r.d: r.lvalue for r in e32_series_2000.records if r.sign == 1}
    for r in e32_theta_2000.records:
        if r.sign == 1:
            assert r.lvalue == pytest.approx(series[r.d], abs=1e-7)


# ---------------------------------------------------------------- counting

def test_vanishing_count_below_family():
    res = run_scan(ScanConfig("E32", 200, parity="odd", engine="series"))
    smallest = min(abs(r.d) for r in res.records if r.sign == 1)
    assert vanishing_count(res, smallest - 1) == 0


def test_vanishing_count_e32_brute(e32):
    res = run_scan(ScanConfig("E32", 100, parity="odd", engine="series"))
    ds = fundamental_discriminants(-100, 100, parity="odd", even_sign_for=e32)
    by_series = sum(abs(central_value(e32, int(d))) < 1e-6 for d in ds)
    by_forms = sum(representation_brute(2, 1, 8, abs(int(d)))
                   == 2 * representation_brute(2, 1, 32, abs(int(d))) for d in ds)
    assert vanishing_count(res) == by_series == by_forms > 0


def test_vanishing_counts_monotone(e32_theta_1e6):
    grid = t_grid(10 ** 6, 30)
    counts = vanishing_counts(e32_theta_1e6, grid)
    assert counts == sorted(counts)
    assert counts[-1] == vanishing_count(e32_theta_1e6)
    assert counts[3] == vanishing_count(e32_theta_1e6, grid[3])


def test_t_grid():
    g = t_grid(10 ** 5, 20)
    assert g[-1] == 10 ** 5 and g[0] == 1000
    assert g == sorted(set(g))


@pytest.mark.parametrize("T,N", [(math.exp(10), 10), (788299808, 20), (930584451, 21)])
def test_n_from_T(T, N):
    assert n_from_T(T) == N


def test_n_from_T_domain():
    with pytest.raises(ValueError):
        n_from_T(2)


# --------------------------------------------------------------- conjectures

@pytest.mark.parametrize("label,p,want", [("E11", 3, 1.2909944), ("E19", 5, 0.57735027),
                                          ("E32", 13, 0.63245553)])
def test_rp_conjectured_examples(label, p, want):
    assert rp_conjectured(get_curve(label), p) == pytest.approx(want, abs=1e-7)


def test_rp_conjectured_matches_table():
    for label, rows in REFERENCE_RATIOS.items():
        E = get_curve(label)
        for p, (conj, _) in rows.items():
            if E.is_good(p):
                assert rp_conjectured(E, p) == pytest.approx(conj, abs=1e-7)


@pytest.mark.parametrize("label", CURVES)
def test_conjectured_identities(label):
    E = get_curve(label)
    for p in prime_sieve(100):
        p = int(p)
        if not E.is_good(p):
            with pytest.raises(ValueError):
                rp_conjectured(E, p)
            continue
        from twistrmt.curves import ap_point_count
        a = ap_point_count(E, p)
        assert qp_conjectured(E, p, -0.5) == pytest.approx(rp_conjectured(E, p), rel=1e-15)
        assert rp_conjectured(E, p) == math.sqrt((p + 1 - a) / (p + 1 + a))
        assert qp_conjectured(E, p, 0) == 1.0


def test_qp_conjectured_example(e11):
    assert qp_conjectured(e11, 3, 1) == pytest.approx(0.6)


# ------------------------------------------------------------ empirical ratios

def _balanced():
    recs = []
    # kronecker(d, 3): -8 -> +1 ... choose d with both classes
    for d, z, L in [(-4, True, 0.0), (-7, True, 0.0), (-8, True, 0.0),
                    (-19, True, 0.0), (-24, False, 1.0), (-20, False, 1.0)]:
        recs.append(TwistRecord(d, 1, L, 0 if z else 1, z))
    return synthetic(recs)


def test_rp_ratio_symmetric():
    from twistrmt.characters import kronecker
    res = _balanced()
    plus = sum(r.is_zero and kronecker(r.d, 5) == 1 for r in res.records)
    minus = sum(r.is_zero and kronecker(r.d, 5) == -1 for r in res.records)
    assert plus == minus
    assert rp_ratio(res, 5) == (1.0, None)


def test_rp_ratio_zero_denominator():
    res = synthetic([TwistRecord(-4, 1, 0.0, 0, True), TwistRecord(-7, 1, 1.0, 1, False)])
    # kronecker(-4, 5) = +1 and kronecker(-7, 5) = -1
    assert rp_ratio(res, 5) == (None, "zero denominator")


def test_rp_ratio_e11_p11(e11_neg_5000):
    value, flag = rp_ratio(e11_neg_5000, 11)
    assert value == 0.0 and flag
    rec = rp_report(e11_neg_5000, [11])
    assert rec.rows[0][2] == 0.0 and rec.flags


def test_qp_ratio_rules():
    # kronecker(-4, 5) = +1, kronecker(-7, 5) = -1
    pair = synthetic([TwistRecord(-4, 1, 2.0, 1, False), TwistRecord(-7, 1, 3.0, 1, False)])
    assert qp_ratio(pair, 5, 0) == 1.0
    assert qp_ratio(pair, 5, 1) == pytest.approx(2.0 / 3.0)
    lonely = synthetic([TwistRecord(-4, 1, 1.0, 1, False)])
    with pytest.raises(InsufficientDataError):
        qp_ratio(lonely, 5, 1)
    rec = qp_report(lonely, [5], 1)
    assert rec.rows[0][2] is None and rec.flags


@pytest.mark.parametrize("lam", [10.0, 0.37])
def test_ratios_invariant_under_rescaling(e32_series_2000, lam):
    res = e32_series_2000
    big = rescaled(res, lam)
    for p in (3, 5, 7):
        assert rp_ratio(big, p) == rp_ratio(res, p)
        for k in (1, 0.5, -0.5):
            assert qp_ratio(big, p, k) == pytest.approx(qp_ratio(res, p, k), rel=1e-12)
    a, _ = value_histogram(res, bins=20)
    b, _ = value_histogram(big, bins=20)
    assert np.array_equal(a.counts, b.counts)
    assert np.allclose(a.ps, b.ps, rtol=1e-12)


# ------------------------------------------------------------ scaling laws

def test_conj1_all_zero_counts():
    recs = [TwistRecord(-7, 1, 1.0, 1, False), TwistRecord(-19, 1, 2.0, 1, False)]
    rec = conjecture1_ratio(synthetic(recs, T=100), [10, 50, 100])
    assert rec.column("value").tolist() == [0.0, 0.0, 0.0]
    assert rec.constants["c_E"] == 0.0
    assert rec.flags


def test_conj1_grid_refinement(e11_neg_5000):
    coarse = conjecture1_ratio(e11_neg_5000, [100, 1000, 5000])
    fine = conjecture1_ratio(e11_neg_5000, [100, 300, 1000, 3000, 5000])
    a = dict(zip(coarse.column("T"), coarse.column("value")))
    b = dict(zip(fine.column("T"), fine.column("value")))
    assert all(a[t] == b[t] for t in a)


def test_eq23_tau_drift(e32_theta_1e6):
    rec = eq23_scaling(e32_theta_1e6, [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6], tau_refined=True)
    v = rec.column("value")
    assert v.max() / v.min() - 1 <= 0.30
    assert rec.column("count").tolist() == vanishing_counts(
        e32_theta_1e6, [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])


def test_eq23_log_power_bookkeeping(e32_theta_1e6):
    grid = [10 ** 4, 10 ** 5, 10 ** 6]
    tau = eq23_scaling(e32_theta_1e6, grid, tau_refined=True).column("value")
    conj = conjecture1_ratio(e32_theta_1e6, grid).column("value")
    logs = np.log(grid)
    assert np.allclose(conj / tau, logs ** 2, rtol=1e-12)


def test_eq23_plain_form(e32_theta_1e6):
    from twistrmt.moments import h_small_x
    rec = eq23_scaling(e32_theta_1e6, [10 ** 5], tau_refined=False, a_half=0.72)
    t = 10 ** 5
    want = vanishing_count(e32_theta_1e6, t) / (family_size(e32_theta_1e6, t) * t ** -0.25
                                                * h_small_x(n_from_T(t)))
    assert rec.rows[0][2] == pytest.approx(want, rel=1e-14)
    assert rec.rows[0][3] == pytest.approx(
        8 / 3 * math.sqrt(e32_theta_1e6.calibration.kappa["all"]) * 0.72)


def test_tau_refined_detects_more_zeros():
    plain = run_scan(ScanConfig("E32", 2000, parity="odd", engine="series"))
    refined = run_scan(ScanConfig("E32", 2000, parity="odd", engine="series",
                                  tau_refined=True))
    assert vanishing_count(refined) >= vanishing_count(plain)
    for a, b in zip(plain.records, refined.records):
        assert b.is_zero or not a.is_zero
    # theta coefficients carry 2 tau(|d|); the largest consistent scale keeps tau(|d|)/2
    assert refined.calibration.tau_divisor == 2
    from twistrmt.lvalues import divisor_count
    for r in refined.records:
        if r.sign == 1:
            assert r.c % (divisor_count(abs(r.d)) // 2) == 0


# ------------------------------------------------------------------ moments

def test_family_moment_k0(e11_neg_5000):
    assert family_moment(e11_neg_5000, 0) == (1.0, 1.0)


def test_family_moment_e32(e32_theta_1e6):
    value, predicted = family_moment(e32_theta_1e6, 1)
    assert 0.5 <= value / predicted <= 2.0
    rec = moment_report(e32_theta_1e6, 1, [10 ** 5, 10 ** 6])
    assert rec.columns == ("T", "value", "predicted") and len(rec.rows) == 2


# --------------------------------------------------------------- histograms

def test_histogram_model_counts(e11_neg_5000):
    emp, model = value_histogram(e11_neg_5000, bins=25)
    assert model.counts.sum() == pytest.approx(emp.counts.sum())
    assert emp.N == n_from_T(5000)
    rec = histogram_report(e11_neg_5000, bins=25, N_override=6)
    assert rec.constants["N"] == 6
    assert len(rec.rows) == 25


# ----------------------------------------------------------- determinism

def test_report_determinism():
    cfg = ScanConfig("E19", 1500, d_sign=-1)
    a, b = run_scan(cfg), run_scan(ScanConfig("E19", 1500, d_sign=-1, threads=3))
    assert a.csv_text() == b.csv_text()
    for make in (lambda r: rp_report(r, [3, 5, 7], [500, 1500]),
                 lambda r: conjecture1_ratio(r, [500, 1000, 1500]),
                 lambda r: histogram_report(r, bins=10)):
        assert make(a).csv_text() == make(b).csv_text()


def test_report_record_csv(tmp_path):
    rec = ReportRecord("x", ("T", "value"), [(10, 0.5), (20, None)], {"c": 1.5}, ["careful"])
    text = rec.csv_text()
    assert text == "# observable=x\n# c=1.5\n# flag=careful\nT,value\n10,0.5\n20,\n"
    rec.to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text() == text


@given(st.integers(3, 10 ** 9))
def test_n_from_T_rounds_log(T):
    assert abs(n_from_T(T) - math.log(T)) <= 0.5
