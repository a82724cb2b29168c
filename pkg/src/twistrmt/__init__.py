"""Random-matrix models for central values of quadratic twists of elliptic curves.

Submodules
----------
special
    log-gamma and Barnes G.
moments
    moments and value density of ``det(U - I)`` over SO(2N).
sampler
    Haar sampling of SO(2N) and Monte-Carlo estimates.
characters
    Kronecker symbols and fundamental discriminants.
curves
    elliptic curves, point counting, Hecke coefficients, Euler products.
lvalues, theta
    central values of twists and their integer discretisation.
scan, reports
    twist families and the statistics computed from them.
io, cli
    run manifests and the ``twistrmt`` command.
"""
__version__ = "0.1.0"

from .curves import EllipticCurveData, arithmetic_factor_ak, builtin_curves, get_curve
from .lvalues import TwistRecord, calibrate_kappa, central_value, discretize, twist_sign
from .moments import (
    DensityGrid,
    MomentSpec,
    density_po,
    g_k_barnes,
    g_k_product,
    h_small_x,
    moment_so_even,
)
from .sampler import empirical_moment, sample_so2n, sample_values
from .scan import ScanConfig, run_scan
from .theta import TernaryForm, theta_coefficients_batch

__all__ = [
    "EllipticCurveData",
    "arithmetic_factor_ak",
    "builtin_curves",
    "get_curve",
    "TwistRecord",
    "calibrate_kappa",
    "central_value",
    "discretize",
    "twist_sign",
    "DensityGrid",
    "MomentSpec",
    "density_po",
    "g_k_barnes",
    "g_k_product",
    "h_small_x",
    "moment_so_even",
    "empirical_moment",
    "sample_so2n",
    "sample_values",
    "ScanConfig",
    "run_scan",
    "TernaryForm",
    "theta_coefficients_batch",
]
