"""Fourier-space analysis: Kubo factor, windowed transforms, peaks.

The detailed-balance factor E(omega) converts canonical (Kubo) spectra
into standard ones.  Sampled correlation series are transformed with an
explicit window after symmetrizing via C(-t) = conj(C(t)); delta-line
spectra stay a separate type and are never broadened silently.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NonuniformGrid
from .series import CorrelationSeries, SpectralLines, SpectrumEstimate

WINDOWS = ("rectangular", "hann")


def coth(x):
    """Stable hyperbolic cotangent via expm1; elementwise."""
    x = np.asarray(x, dtype=float)
    out = 1.0 + 2.0 / np.expm1(2.0 * np.where(x == 0.0, 1.0, x))
    return np.where(x == 0.0, np.inf, out)


def kubo_factor(omega, beta: float, hbar: float = 1.0):
    """E(omega) = (beta hbar omega / 2) (coth(beta hbar omega / 2) + 1).

    Monotone increasing, E(0) = 1, E ~ beta hbar omega for large omega,
    exponentially small for large negative omega.  A series branch
    covers |x| small enough that 1/x would overflow.
    """
    x = np.asarray(beta * hbar * omega / 2.0, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    out = np.where(
        small,
        1.0 + x + x * x / 3.0,
        safe * (2.0 + 2.0 / np.expm1(2.0 * safe)),
    )
    return float(out) if np.ndim(omega) == 0 else out


def canonical_to_standard(spec, beta: float, hbar: float = 1.0):
    """Multiply a spectrum by E(omega), pointwise or line by line."""
    if isinstance(spec, SpectralLines):
        return SpectralLines(
            frequencies=spec.frequencies,
            weights=spec.weights * kubo_factor(spec.frequencies, beta, hbar),
            kind="standard",
            beta=spec.beta,
        )
    if isinstance(spec, SpectrumEstimate):
        return SpectrumEstimate(
            frequencies=spec.frequencies,
            values=spec.values * kubo_factor(spec.frequencies, beta, hbar),
            window=spec.window,
            dt=spec.dt,
            time_span=spec.time_span,
        )
    raise TypeError("expected SpectralLines or SpectrumEstimate")


def fourier_transform_series(
    series: CorrelationSeries, window: str = "hann"
) -> SpectrumEstimate:
    """Windowed discrete-time Fourier transform of a one-sided series.

    The series is extended to negative times by C(-t) = conj(C(t)),
    windowed over the full two-sided span (window peak 1 at t = 0), and
    transformed with the convention S(w) = dt * sum_t e^{i w t} C(t).
    """
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}")
    dt = series.dt  # raises NonuniformGrid when the grid is not uniform
    if abs(series.times[0]) > 1e-12:
        raise NonuniformGrid("series must start at t = 0")
    c = series.values
    n_one = c.size
    two_sided = np.concatenate([np.conj(c[:0:-1]), c])
    n = two_sided.size  # 2*n_one - 1, odd; t = 0 sits at index n_one - 1
    if window == "hann":
        w = np.hanning(n)
    else:
        w = np.ones(n)
    x = two_sided * w
    # S(w_k) = dt * sum_j x_j e^{i w_k t_j}, t_j = (j - (n_one - 1)) dt
    coeffs = n * np.fft.ifft(x)
    freqs = 2.0 * math.pi * np.fft.fftfreq(n, d=dt)
    phase = np.exp(-1j * freqs * (n_one - 1) * dt)
    values = dt * phase * coeffs
    order = np.fft.fftshift(np.arange(n))
    return SpectrumEstimate(
        frequencies=freqs[order],
        values=values[order],
        window=window,
        dt=dt,
        time_span=float(series.times[-1]),
    )


def extract_peaks(spec: SpectrumEstimate, threshold: float):
    """Local maxima of |S| above threshold, sub-bin refined.

    Returns a list of (frequency, height, width) with the center from a
    three-point parabola and the width as the parabola's half-max span.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    mag = np.abs(spec.values)
    freqs = spec.frequencies
    peaks = []
    for i in range(1, mag.size - 1):
        if mag[i] < threshold:
            continue
        if not (mag[i] >= mag[i - 1] and mag[i] > mag[i + 1]):
            continue
        a, b, c = mag[i - 1], mag[i], mag[i + 1]
        denom = a - 2.0 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0.0 else 0.0
        d_omega = freqs[i + 1] - freqs[i]
        center = freqs[i] + shift * d_omega
        height = b - 0.25 * (a - c) * shift
        curvature = abs(denom) / d_omega**2
        width = 2.0 * math.sqrt(height / curvature) if curvature > 0 else d_omega
        peaks.append((float(center), float(height), float(width)))
    return peaks


def spectrum_power(spec: SpectrumEstimate) -> float:
    """(1/2pi) int |S|^2 dw on the discrete grid (Plancherel partner)."""
    return float(np.sum(np.abs(spec.values) ** 2) * spec.bin_width / (2.0 * math.pi))


def windowed_time_power(series: CorrelationSeries, window: str = "hann") -> float:
    """dt * sum |C w|^2 over the symmetrized two-sided series."""
    c = series.values
    two_sided = np.concatenate([np.conj(c[:0:-1]), c])
    n = two_sided.size
    w = np.hanning(n) if window == "hann" else np.ones(n)
    return float(np.sum(np.abs(two_sided * w) ** 2) * series.dt)
