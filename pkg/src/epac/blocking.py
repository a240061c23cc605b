"""Blocking analysis for correlated time series.

Implements the Flyvbjerg-Petersen block-averaging hierarchy with an
automatic plateau pick: block until the error estimate stops growing
within its own uncertainty, then average the plateau levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_BLOCKS = 16


@dataclass(frozen=True)
class MeanEstimate:
    """Sample mean with an autocorrelation-aware standard error."""

    value: float
    stderr: float
    n_samples: int


def blocking_levels(samples: np.ndarray):
    """Error estimate and its uncertainty at each blocking level."""
    block = np.asarray(samples, dtype=float)
    err, err_err = [], []
    while block.size >= MIN_BLOCKS:
        n = block.size
        e2 = block.var(ddof=1) / n
        err.append(np.sqrt(e2))
        err_err.append(np.sqrt(e2 / (2.0 * (n - 1))))
        if n % 2 == 1:
            block = block[:-1]
        block = 0.5 * (block[0::2] + block[1::2])
    return np.array(err), np.array(err_err)


def blocking_stderr(samples: np.ndarray, relsigma: float = 1.0) -> float:
    """Plateau standard error of the mean of a correlated series."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2:
        return 0.0
    if n < 2 * MIN_BLOCKS:
        return float(np.sqrt(samples.var(ddof=1) / n))
    err, err_err = blocking_levels(samples)
    if err[-1] == 0.0:
        return 0.0
    # walk back from the deepest level while estimates agree within noise
    i = err.size - 1
    while i > 0:
        weights = 1.0 / err_err[i:] ** 2
        avg = np.sum(err[i:] * weights) / np.sum(weights)
        if abs(err[i - 1] - avg) > relsigma * err_err[i - 1]:
            break
        i -= 1
    weights = 1.0 / err_err[i:] ** 2
    return float(np.sum(err[i:] * weights) / np.sum(weights))


def mean_with_error(samples: np.ndarray) -> MeanEstimate:
    samples = np.asarray(samples, dtype=float)
    return MeanEstimate(
        value=float(samples.mean()),
        stderr=blocking_stderr(samples),
        n_samples=samples.size,
    )


def combine_replicas(estimates) -> MeanEstimate:
    """Pool independent replica means: mean of means, errors in quadrature."""
    values = np.array([e.value for e in estimates])
    errs = np.array([e.stderr for e in estimates])
    n = sum(e.n_samples for e in estimates)
    return MeanEstimate(
        value=float(values.mean()),
        stderr=float(np.sqrt(np.sum(errs**2)) / errs.size),
        n_samples=n,
    )
