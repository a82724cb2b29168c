"""Haar-random SO(2N) matrices and Monte-Carlo checks of the moment formulas.

Samples are generated in fixed-size chunks. Chunk ``i`` draws from its own
Philox stream keyed by ``(seed, i)``, so the output for a given seed does
not depend on how many threads process the chunks.
"""
import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .moments import DensityGrid

__all__ = [
    "HeavyTailWarning",
    "CHUNK_SIZE",
    "chunk_rng",
    "haar_batch",
    "sample_so2n",
    "char_poly_at_one",
    "sample_values",
    "empirical_moment",
    "histogram_density",
    "empirical_density",
]

CHUNK_SIZE = 4096
NEGATIVE_TOL = 1e-10


class HeavyTailWarning(UserWarning):
    """Sample moment whose population variance is infinite."""


def chunk_rng(seed, chunk):
    """Independent generator for chunk ``chunk`` of the stream ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(chunk),))
    return np.random.Generator(np.random.Philox(ss))


def haar_batch(rng, N, count):
    """``count`` Haar-distributed matrices in SO(2N), shape ``(count, 2N, 2N)``.

    QR of a Gaussian matrix with the columns of Q rescaled so that R has a
    positive diagonal gives Haar measure on O(2N). Flipping the last column
    of the matrices with determinant -1 maps that coset onto SO(2N) while
    preserving the measure.
    """
    n = 2 * N
    z = rng.standard_normal((count, n, n))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    q = q * np.where(diag < 0, -1.0, 1.0)[:, None, :]
    sign, _ = np.linalg.slogdet(q)
    q[sign < 0, :, -1] *= -1.0
    return q


def sample_so2n(N, seed):
    """One Haar-random matrix in SO(2N), determined by ``seed``.

    This is the first matrix of the stream used by :func:`sample_values`.
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    return haar_batch(chunk_rng(seed, 0), int(N), 1)[0]


def char_poly_at_one(U):
    """``det(U - I)`` for an orthogonal ``U`` (or a stack of them).

    Computed by LU factorisation. Values in ``(-1e-10, 0)`` are roundoff
    and are returned as 0.

    Examples
    --------
    >>> char_poly_at_one(np.array([[-1.0, 0.0], [0.0, -1.0]]))
    4.0
    """
    U = np.asarray(U, dtype=float)
    n = U.shape[-1]
    val = np.linalg.det(U - np.eye(n))
    val = np.where((val < 0) & (val > -NEGATIVE_TOL), 0.0, val)
    return float(val) if val.ndim == 0 else val


def _chunk_values(N, seed, chunk, count):
    return char_poly_at_one(haar_batch(chunk_rng(seed, chunk), N, count))


def sample_values(N, n_samples, seed, threads=1, chunk_size=CHUNK_SIZE):
    """``det(U - I)`` for ``n_samples`` Haar-random ``U`` in SO(2N).

    Parameters
    ----------
    N : int
    n_samples : int
    seed : int
        64-bit seed; equal seeds give bit-identical output.
    threads : int
        Worker threads. Does not affect the values.
    chunk_size : int
        Matrices per RNG stream. Part of the reproducibility contract.

    Returns
    -------
    ndarray of float, shape ``(n_samples,)``
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    N = int(N)
    n_samples = int(n_samples)
    sizes = [min(chunk_size, n_samples - start)
             for start in range(0, n_samples, chunk_size)]
    jobs = list(enumerate(sizes))
    if threads <= 1 or len(jobs) < 2:
        parts = [_chunk_values(N, seed, i, m) for i, m in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _chunk_values(N, seed, *job), jobs))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


def empirical_moment(N, k, n_samples, seed, threads=1):
    """Sample mean of ``det(U - I)^k`` and its standard error.

    Warns with :class:`HeavyTailWarning` for ``k <= -1/4``, where the
    ``x^{-1/2}`` behaviour of the density near 0 makes the variance of
    ``det(U - I)^k`` infinite and the standard error meaningless.

    Returns
    -------
    mean, stderr : float
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    if k <= -0.25:
        warnings.warn("moment of order <= -1/4 has infinite variance",
                      HeavyTailWarning, stacklevel=2)
    vals = sample_values(N, n_samples, seed, threads) ** k
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(vals.size))
    return mean, stderr


def histogram_density(values, edges, N):
    """Normalised histogram of ``values`` as a :class:`DensityGrid`.

    ``xs`` holds bin centres, ``ps`` the density (area 1 over the values
    that fall inside ``edges``), and ``edges``/``counts`` the raw bins.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot build a histogram from an empty sample")
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(values, bins=edges)
    total = counts.sum()
    if total == 0:
        raise ValueError("no sample falls inside the bins")
    ps = counts / (total * np.diff(edges))
    centres = 0.5 * (edges[:-1] + edges[1:])
    return DensityGrid(N, centres, ps, edges=edges, counts=counts)


def empirical_density(N, n_samples, bins, seed, threads=1):
    """Histogram of ``det(U - I)`` over Haar-random SO(2N).

    Parameters
    ----------
    bins : int or array_like
        Number of equal-width bins on ``[0, 4^N]``, or explicit edges.
    """
    if n_samples <= 0:
        raise ValueError("cannot build a histogram from an empty sample")
    if np.ndim(bins) == 0:
        edges = np.linspace(0.0, 4.0 ** N, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    return histogram_density(sample_values(N, n_samples, seed, threads), edges, N)
