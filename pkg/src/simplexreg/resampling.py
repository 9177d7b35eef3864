"""Seeded, replicate-indexed bootstrap machinery.

Replicate ``r`` of stream ``name`` always draws from the generator seeded
by ``SeedSequence(seed, spawn_key=(crc32(name), r))``. Its output does not
depend on how replicates are split across worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
import zlib

import numpy as np

from simplexreg.errors import ParameterError

__all__ = ["replicate_rng", "run_replicates", "percentile_interval",
           "percentile_p_value"]


def _stream_id(name):
    return zlib.crc32(str(name).encode("utf-8"))


def replicate_rng(seed, stream, replicate):
    """Generator for one bootstrap replicate of a named stream."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(_stream_id(stream), int(replicate)))
    return np.random.Generator(np.random.PCG64(ss))


def run_replicates(func, replicates, seed, stream, workers=1, chunk=500):
    """Evaluate ``func(rng)`` for ``replicates`` independent generators.

    Parameters
    ----------
    func : callable
        Receives a :class:`numpy.random.Generator`; returns an array or
        ``None`` to mark the replicate as discarded.
    replicates : int
    seed : int
    stream : str
        Name of the random substream, e.g. ``"bootstrap"``.
    workers : int, default 1
        Thread count. Results are identical for any value.

    Returns
    -------
    list
        One entry per replicate, in replicate order.
    """
    if seed is None:
        raise ParameterError("a seed is required for resampling")
    replicates = int(replicates)
    if replicates < 1:
        raise ParameterError("replicates must be positive")

    def block(start):
        stop = min(start + chunk, replicates)
        return [func(replicate_rng(seed, stream, r)) for r in range(start, stop)]

    starts = range(0, replicates, chunk)
    if workers is None or workers <= 1:
        blocks = [block(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            blocks = list(pool.map(block, starts))
    return [item for b in blocks for item in b]


def percentile_interval(samples, level=0.95, axis=0):
    """Lower and upper percentile bounds of bootstrap samples."""
    alpha = 1.0 - level
    lo, hi = np.quantile(samples, [alpha / 2, 1 - alpha / 2], axis=axis)
    return lo, hi


def percentile_p_value(samples, null=0.0, axis=0):
    """Two-sided p-value by inverting percentile intervals.

    The percentile interval at level ``1 - a`` excludes ``null`` exactly when
    ``a`` exceeds twice the smaller tail fraction of samples on either side
    of ``null``, so the smallest such ``a`` is that doubled fraction. It is
    floored at ``1 / B`` (``B`` samples), the resolution of the bootstrap.
    """
    samples = np.asarray(samples, dtype=float)
    B = samples.shape[axis]
    below = np.mean(samples <= null, axis=axis)
    above = np.mean(samples >= null, axis=axis)
    p = np.minimum(1.0, 2.0 * np.minimum(below, above))
    return np.maximum(p, 1.0 / B)
