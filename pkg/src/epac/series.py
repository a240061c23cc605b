"""Shared value types: correlation series and spectra.

A :class:`CorrelationSeries` is a uniformly sampled complex time series
C(t) tagged with its origin (exact, canonical, cmd, epac, ...) and the
inverse temperature it was computed at.  Line spectra (sums of delta
functions) and continuous FFT-based estimates are deliberately distinct
types; nothing ever broadens a line silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonuniformGrid

KIND_EXACT = "exact"
KIND_CANONICAL = "canonical"
KIND_CMD = "cmd"
KIND_EPAC = "epac"


def _freeze(a, dtype):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CorrelationSeries:
    """C(t) on an ascending time grid; values complex."""

    times: np.ndarray
    values: np.ndarray
    kind: str
    beta: float
    stderr: np.ndarray = None

    def __post_init__(self):
        t = _freeze(self.times, float)
        v = _freeze(self.values, complex)
        if t.ndim != 1 or v.shape != t.shape:
            raise ValueError("times and values must be matching 1-D arrays")
        if t.size >= 2 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly ascending")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if self.stderr is not None:
            e = _freeze(self.stderr, float)
            if e.shape != t.shape:
                raise ValueError("stderr shape mismatch")
            object.__setattr__(self, "stderr", e)
        if not (self.beta == math.inf or self.beta > 0):
            raise ValueError("beta must be positive or inf")

    @property
    def dt(self) -> float:
        """Grid spacing; raises if the grid is not uniform."""
        t = self.times
        if t.size < 2:
            raise NonuniformGrid("need at least two samples")
        steps = np.diff(t)
        dt = steps[0]
        if not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
            raise NonuniformGrid("time grid is not uniform")
        return float(dt)


@dataclass(frozen=True)
class SpectralLines:
    """Discrete spectrum: weights attached to delta functions."""

    frequencies: np.ndarray
    weights: np.ndarray
    kind: str
    beta: float

    def __post_init__(self):
        f = _freeze(self.frequencies, float)
        w = _freeze(self.weights, float)
        if f.ndim != 1 or w.shape != f.shape:
            raise ValueError("frequencies and weights must match")
        if f.size >= 2 and not np.all(np.diff(f) > 0):
            raise ValueError("line frequencies must be strictly ascending")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "weights", w)

    def weight_at(self, omega: float, tol: float = 1e-9) -> float:
        """Total weight within tol of a frequency (0.0 when absent)."""
        mask = np.abs(self.frequencies - omega) <= tol
        return float(self.weights[mask].sum())


@dataclass(frozen=True)
class SpectrumEstimate:
    """Continuous spectrum estimate from a windowed discrete transform."""

    frequencies: np.ndarray
    values: np.ndarray
    window: str
    dt: float
    time_span: float

    def __post_init__(self):
        f = _freeze(self.frequencies, float)
        v = _freeze(self.values, complex)
        if f.ndim != 1 or v.shape != f.shape:
            raise ValueError("frequencies and values must match")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", v)

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])
