"""
Vanishing twists of y^2 = x^3 - x
=================================

Central values of quadratic twists of the congruent number curve come from
ternary theta series. This demo counts the vanishing ones and splits them
by the character value at small primes.
"""

# %%
# Theta coefficients c(n) = r1(n) - 2 r2(n) for the two ternary forms.
from twistrmt.theta import theta_coefficients_batch

c = theta_coefficients_batch(T=40)
print([(n, int(c[n])) for n in range(1, 40, 2)])

# %%
# A scan over odd fundamental discriminants up to 10^5. The scale kappa in
# L = kappa c^2 / sqrt|d| is fitted against the direct series.
from twistrmt.scan import ScanConfig, run_scan

result = run_scan(ScanConfig("E32", 10 ** 5, parity="odd", engine="theta"))
print(result.calibration.kappa, len(result))

# %%
# Vanishing counts grow roughly like T^{3/4} times a power of log T.
from twistrmt.reports import eq23_scaling, t_grid

rec = eq23_scaling(result, t_grid(10 ** 5, 6), tau_refined=True)
for T, n, v, _ in rec.rows:
    print(T, n, round(v, 4))

# %%
# The ratio of vanishing counts with chi_d(p) = +1 and -1 against
# sqrt((p + 1 - a_p) / (p + 1 + a_p)).
from twistrmt.reports import rp_conjectured, rp_ratio

for p in (3, 5, 7, 13, 17):
    value, _ = rp_ratio(result, p)
    print(p, round(value, 4), round(rp_conjectured(result.curve, p), 4))
