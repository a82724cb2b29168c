import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistrmt.characters import prime_sieve
from twistrmt.curves import (
    EllipticCurveData,
    an_table,
    ap_bsgs,
    ap_naive,
    ap_point_count,
    ap_table,
    arithmetic_factor_ak,
    builtin_curves,
    cache_dir,
    get_curve,
    load_curve_registry,
    local_factor_ak,
    root_number_numeric,
)

from oracles import an_brute, ap_brute

CURVES = ["E11", "E19", "E32"]


def test_builtin_curves():
    curves = {c.label: c for c in builtin_curves()}
    assert [c.conductor for c in curves.values()] == [11, 19, 32]
    assert curves["E32"].weierstrass == (0, 0, 0, -1, 0)
    assert all(c.root_number == 1 for c in curves.values())


@pytest.mark.parametrize("label", CURVES)
def test_root_number_from_series(label):
    assert root_number_numeric(get_curve(label)) == 1


def test_bad_models_rejected():
    with pytest.raises(ValueError):
        EllipticCurveData("sing", (0, 0, 0, 0, 0), 1)
    with pytest.raises(ValueError):
        EllipticCurveData("x", (0, 0, 0, -1, 0), 32, root_number=0)
    with pytest.raises(KeyError):
        get_curve("nope")


@pytest.mark.parametrize("label,p,want", [("E11", 3, -1), ("E32", 5, -2), ("E32", 3, 0),
                                          ("E19", 5, 3), ("E32", 13, 6)])
def test_ap_examples(label, p, want):
    assert ap_point_count(get_curve(label), p) == want


@pytest.mark.parametrize("label", CURVES)
def test_ap_matches_enumeration(label):
    E = get_curve(label)
    for p in prime_sieve(200):
        assert ap_point_count(E, int(p)) == ap_brute(E.weierstrass, int(p)), p


@pytest.mark.parametrize("label", CURVES)
def test_bad_prime_values(label):
    E = get_curve(label)
    for p in E.bad_primes:
        assert ap_point_count(E, p) in (-1, 0, 1)


@pytest.mark.parametrize("label", CURVES)
def test_bsgs_matches_character_sum(label):
    E = get_curve(label)
    rng = random.Random(label)
    primes = [int(p) for p in prime_sieve(60000) if p > 5]
    for p in rng.sample(primes, 60):
        assert ap_bsgs(E, p) == ap_naive(E, p), p


@pytest.mark.parametrize("label", CURVES)
def test_hasse_bound(label):
    E = get_curve(label)
    primes, values = ap_table(E, 20000)
    good = np.array([E.is_good(int(p)) for p in primes])
    assert np.all(values[good] ** 2 <= 4 * primes[good])


@pytest.mark.parametrize("label", CURVES)
def test_an_matches_brute_recursion(label):
    E = get_curve(label)
    assert an_table(E, 300).an[1:].tolist() == an_brute(E.weierstrass, E.conductor, 300)[1:]


def test_an_examples():
    E = get_curve("E11")
    t = an_table(E, 20)
    assert t.an[1] == 1
    assert t.an[9] == -2
    assert t.an[15] == t.an[3] * t.an[5]
    assert t.ap(3) == -1
    assert t.limit == 20
    assert t.scaled()[9] == pytest.approx(-2 / 9)


@pytest.mark.parametrize("label", CURVES)
def test_multiplicativity(label):
    E = get_curve(label)
    an = an_table(E, 200000).an
    rng = random.Random(1)
    done = 0
    while done < 200:
        m, n = rng.randint(2, 400), rng.randint(2, 400)
        if math.gcd(m, n) == 1:
            assert an[m * n] == an[m] * an[n]
            done += 1


@pytest.mark.parametrize("label", CURVES)
def test_good_prime_recursion(label):
    E = get_curve(label)
    an = an_table(E, 5 ** 7).an
    for p in (3, 5):
        if not E.is_good(p):
            continue
        q = p
        while q * p * p <= an.size - 1:
            assert an[q * p * p] == an[p] * an[q * p] - p * an[q]
            q *= p


def _prime_power_coefficients(ap, p, terms):
    seq = [1, ap]
    while len(seq) < terms:
        seq.append(ap * seq[-1] - p * seq[-2])
    return seq


@pytest.mark.parametrize("label", CURVES)
@pytest.mark.parametrize("p", [3, 5, 7])
@pytest.mark.parametrize("chi", [-1, 1])
def test_local_geometric_series(label, p, chi):
    # sum_r a_{p^r} chi^r p^{-r} = 1 / ((1 - alpha chi/p)(1 - beta chi/p))
    E = get_curve(label)
    if not E.is_good(p):
        return
    ap = ap_point_count(E, p)
    an = an_table(E, 10 ** 6).an
    seq = _prime_power_coefficients(ap, p, 31)
    assert [int(an[p ** r]) for r in range(31) if p ** r <= 10 ** 6] == \
        [s for r, s in enumerate(seq) if p ** r <= 10 ** 6]
    want = float(1 / (1 - Fraction(chi * ap, p) + Fraction(1, p)))
    partial = float(sum(Fraction(s * chi ** r, p ** r) for r, s in enumerate(seq)))
    # |a_{p^r}| <= (r + 1) p^{r/2}, so the tail past r = 30 is bounded explicitly
    bound = sum((r + 1) * p ** (-r / 2) for r in range(31, 400))
    assert abs(partial - want) <= bound
    long = _prime_power_coefficients(ap, p, 120)
    total = float(sum(Fraction(s * chi ** r, p ** r) for r, s in enumerate(long)))
    assert total == pytest.approx(want, abs=1e-10)


def test_ak_trivial_cases():
    E = get_curve("E11")
    assert arithmetic_factor_ak(E, 0, 1000)[0] == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        arithmetic_factor_ak(E, 1, 1)


def test_ak_local_factor_exact():
    # k = 1, E11, p = 3, a_3 = -1
    p, ap = 3, -1
    plus = 1 - Fraction(ap, p) + Fraction(1, p)
    minus = 1 + Fraction(ap, p) + Fraction(1, p)
    want = (1 / plus + 1 / minus) / 2 * Fraction(p, p + 1) + Fraction(1, p + 1)
    assert local_factor_ak(p, ap, 1) == pytest.approx(float(want), rel=1e-15)


def test_ak_bad_prime_convention():
    p, ap = 11, 1
    want = 0.5 * ((1 - ap / p) ** -1 + (1 + ap / p) ** -1) * p / (p + 1) + 1 / (p + 1)
    assert local_factor_ak(p, ap, 1, good=False) == pytest.approx(want, rel=1e-15)


def test_ak_product_of_local_factors():
    E = get_curve("E11")
    val, _ = arithmetic_factor_ak(E, 2, 50)
    prod = 1.0
    for p in prime_sieve(50):
        prod *= local_factor_ak(int(p), ap_point_count(E, int(p)), 2, E.is_good(int(p)))
    assert val == pytest.approx(prod, rel=1e-13)


# The Euler product for a_k converges only conditionally: after the
# first-order terms cancel, the local logs behave like (a_p^2/p - 1)/p,
# whose partial sums oscillate with the Sato-Tate fluctuations of a_p.
# The stability target is met for E19 but not E11 or E32 at these cutoffs.
@pytest.mark.parametrize("label", [
    pytest.param("E11", marks=pytest.mark.xfail(strict=True, reason="oscillating Euler tail")),
    "E19",
    pytest.param("E32", marks=pytest.mark.xfail(strict=True, reason="oscillating Euler tail")),
])
def test_ak_half_truncation_stability(label):
    E = get_curve(label)
    a, _ = arithmetic_factor_ak(E, -0.5, 10 ** 4)
    b, _ = arithmetic_factor_ak(E, -0.5, 10 ** 5)
    assert abs(b - a) / b <= 1e-4


@pytest.mark.xfail(strict=True, reason="tail estimate oscillates as the cutoff doubles")
@pytest.mark.parametrize("k", [-0.5, 1, 2])
def test_ak_tail_decreases_under_doubling(k):
    for label in CURVES:
        E = get_curve(label)
        tails = [arithmetic_factor_ak(E, k, P)[1] for P in (1000, 2000, 4000, 8000, 16000, 32000)]
        assert all(b < a for a, b in zip(tails, tails[1:])), label


@pytest.mark.parametrize("label", CURVES)
def test_ak_tail_shrinks_overall(label):
    # the weaker statement that does hold: the tail at 64000 is well below the tail at 1000
    E = get_curve(label)
    for k in (-0.5, 1, 2):
        t0 = arithmetic_factor_ak(E, k, 1000)[1]
        t1 = arithmetic_factor_ak(E, k, 64000)[1]
        assert t1 < 1e-3 and t1 < 10 * max(t0, 1e-4)


def test_registry_file(tmp_path):
    path = tmp_path / "curves.txt"
    path.write_text("# user curves\nmine 0 -1 1 -10 -20 11 1\nauto 0 0 0 -1 0 32\n")
    reg = load_curve_registry(path)
    assert reg["mine"].conductor == 11
    assert reg["auto"].root_number == 1
    assert get_curve("mine", path).weierstrass == (0, -1, 1, -10, -20)
    path.write_text("broken 1 2 3\n")
    with pytest.raises(ValueError):
        load_curve_registry(path)


def test_cache_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv("TWISTRMT_CACHE", str(tmp_path))
    assert cache_dir() == str(tmp_path)
    E = get_curve("E19")
    p1, v1 = ap_table(E, 3000)
    assert any(name.endswith(".npy") for name in
               [f.name for f in tmp_path.iterdir()])
    p2, v2 = ap_table(E, 2000)
    assert np.array_equal(p1[p1 <= 2000], p2) and np.array_equal(v1[p1 <= 2000], v2)
    monkeypatch.setenv("TWISTRMT_CACHE", "off")
    assert cache_dir() is None


@settings(max_examples=20)
@given(st.sampled_from(CURVES), st.integers(2, 3000))
def test_an_prefix_consistency(label, n):
    E = get_curve(label)
    assert an_table(E, n).an.tolist() == an_table(E, 3000).an[: n + 1].tolist()
