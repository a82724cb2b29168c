"""
Characteristic polynomials of random orthogonal matrices
========================================================

Moments and density of det(U - I) for Haar-random U in SO(2N), checked
against a Monte-Carlo sample.
"""

# %%
# Moments have a closed gamma-product form. The zeroth is 1 and the first
# is 2 for every N.
import numpy as np

from twistrmt.moments import bin_probabilities, density_po, g_k_barnes, moment_so_even
from twistrmt.sampler import empirical_moment, sample_values

for N in (1, 5, 20):
    print(N, [round(float(moment_so_even(N, k)), 6) for k in (0, 1, 2, 3)])

# %%
# For large N the k-th moment grows like g_k N^{k(k-1)/2}.
for k in (1, 2, 3):
    print(k, g_k_barnes(k), moment_so_even(400, k) / 400 ** (k * (k - 1) / 2))

# %%
# The density comes from inverting the moments along a vertical contour.
# Near 0 it blows up like x^{-1/2}.
xs = np.array([1e-6, 1e-3, 0.1, 1.0, 10.0, 100.0])
print(density_po(5, xs) * np.sqrt(xs))

# %%
# A sample of 20000 matrices from SO(10) against the exact first moment.
mean, se = empirical_moment(5, 1, 20000, seed=1)
print(f"sample mean {mean:.4f} +- {se:.4f}, exact {moment_so_even(5, 1):.4f}")

# %%
# Binned comparison on a logarithmic grid.
values = sample_values(5, 20000, seed=2)
edges = np.concatenate([[0.0], np.geomspace(1e-2, 4.0 ** 5, 12)])
counts, _ = np.histogram(values, edges)
expected = bin_probabilities(5, edges) * values.size
for lo, hi, c, e in zip(edges[:-1], edges[1:], counts, expected):
    print(f"[{lo:9.3g}, {hi:9.3g})  observed {c:5d}  expected {e:8.1f}")
