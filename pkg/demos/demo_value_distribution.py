"""
Central values of twists of a conductor 11 curve
================================================

Direct series evaluation, discretisation of the values, and their
distribution against the SO(2N) model.
"""

# %%
# The sign of each twist decides whether its central value is forced to 0.
from twistrmt.curves import get_curve
from twistrmt.lvalues import central_value, twist_sign

E = get_curve("E11")
for d in (-3, -4, -7, -8, -19, -23):
    w = twist_sign(E, d)
    print(d, w, central_value(E, d) if w == 1 else 0.0)

# %%
# Values are kappa c^2 / sqrt|d| for integers c, so sqrt(L sqrt|d| / kappa)
# sits on integers once kappa is fitted.
import math

from twistrmt.scan import ScanConfig, run_scan

result = run_scan(ScanConfig("E11", 20000, d_sign=-1))
kappa = result.calibration.kappa
print(kappa)
for r in result.records[:12]:
    x = math.sqrt(r.lvalue * math.sqrt(abs(r.d)) / result.calibration.kappa_for(r.d))
    print(r.d, round(x, 6), r.c)

# %%
# Histogram of the values, rescaled to the mean of the SO(2N) density with
# N the rounded log of the cutoff.
from twistrmt.reports import histogram_report

rec = histogram_report(result, bins=15)
print("N =", rec.constants["N"])
for lo, hi, dens, model, count, expected, bulk in rec.rows:
    print(f"[{lo:6.2f}, {hi:6.2f})  {dens:7.4f}  {model:7.4f}  {'*' if bulk else ''}")

# %%
# The proportion of vanishing twists.
from twistrmt.reports import vanishing_count, family_size

print(vanishing_count(result), family_size(result, 20000))
