"""Closed-form correlation functions from the effective frequency.

Given the curvature of the standard effective potential at its minimum
(one frequency omega_beta, one offset Q_min), analytic continuation of
the single-pole Matsubara Green function gives the real-time position
correlation in closed form: a thermally weighted cosine, an odd sine,
and the constant Q_min^2.  The second-order variant renormalizes the
kinetic mass (m -> Z_beta) and nothing else; at infinite beta the
thermal factor collapses and a single complex exponential remains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .series import KIND_EPAC, CorrelationSeries, SpectralLines
from .spectra import kubo_factor


@dataclass(frozen=True)
class EpacParameters:
    """Inputs for the closed forms.

    z_beta is the second-order kinetic (wavefunction) renormalization;
    it is always an external input, never computed here.  beta may be
    math.inf for the zero-temperature forms.
    """

    omega_beta: float
    q_min: float
    mass: float = 1.0
    beta: float = 1.0
    hbar: float = 1.0
    z_beta: float = None

    def __post_init__(self):
        if not self.omega_beta > 0:
            raise ValueError("omega_beta must be positive")
        if not (self.beta == math.inf or self.beta > 0):
            raise ValueError("beta must be positive or inf")
        if self.z_beta is not None and not self.z_beta > 0:
            raise ValueError("z_beta must be positive when given")
        if not (self.mass > 0 and self.hbar > 0):
            raise ValueError("mass and hbar must be positive")

    @property
    def curvature(self) -> float:
        """m omega_beta^2, the curvature this frequency encodes."""
        return self.mass * self.omega_beta**2

    def with_z(self, z_beta: float) -> "EpacParameters":
        return replace(self, z_beta=z_beta)


def _coth_half(beta: float, hbar: float, omega: float) -> float:
    x = 0.5 * beta * hbar * omega
    return 1.0 + 2.0 / math.expm1(2.0 * x)


def _single_mode_series(
    times, amp_mass: float, omega: float, p: EpacParameters
) -> CorrelationSeries:
    times = np.asarray(times, dtype=float)
    amplitude = p.hbar / (2.0 * amp_mass * omega)
    if p.beta == math.inf:
        values = amplitude * np.exp(-1j * omega * times) + p.q_min**2
    else:
        thermal = amplitude * _coth_half(p.beta, p.hbar, omega)
        values = (
            thermal * np.cos(omega * times)
            - 1j * amplitude * np.sin(omega * times)
            + p.q_min**2
        )
    return CorrelationSeries(
        times=times, values=values, kind=KIND_EPAC, beta=p.beta
    )


def epac_correlation(p: EpacParameters, times) -> CorrelationSeries:
    """Leading-order closed form at finite temperature.

    (hbar / 2 m w) [coth(beta hbar w / 2) cos(w t) - i sin(w t)] + Q_min^2,
    with w = omega_beta.  Exact for harmonic potentials; strictly
    periodic with period 2 pi / w for everything else too.
    """
    if p.beta == math.inf:
        raise ValueError("finite beta required; use epac_zero_temperature")
    if p.z_beta is not None:
        raise ValueError("leading order takes no z_beta; use epac2_correlation")
    return _single_mode_series(times, p.mass, p.omega_beta, p)


def epac_spectral_function(p: EpacParameters) -> SpectralLines:
    """Antisymmetric pair of delta lines at +-omega_beta.

    Weights +-(pi hbar / m omega_beta); the commutator spectrum of a
    single oscillation mode.
    """
    weight = math.pi * p.hbar / (p.mass * p.omega_beta)
    return SpectralLines(
        frequencies=np.array([-p.omega_beta, p.omega_beta]),
        weights=np.array([-weight, weight]),
        kind="spectral_function",
        beta=p.beta,
    )


def epac_spectrum(p: EpacParameters) -> SpectralLines:
    """Fourier transform of the leading-order closed form.

    Lines at +-omega_beta with weight E(omega) pi/(m omega_beta^2 beta)
    each, plus 2 pi Q_min^2 at omega = 0 when the minimum is offset.
    """
    if p.beta == math.inf:
        raise ValueError("finite beta required")
    base = math.pi / (p.mass * p.omega_beta**2 * p.beta)
    freqs = [-p.omega_beta, p.omega_beta]
    weights = [
        base * kubo_factor(-p.omega_beta, p.beta, p.hbar),
        base * kubo_factor(p.omega_beta, p.beta, p.hbar),
    ]
    if p.q_min != 0.0:
        freqs.insert(1, 0.0)
        weights.insert(1, 2.0 * math.pi * p.q_min**2)
    return SpectralLines(
        frequencies=np.array(freqs),
        weights=np.array(weights),
        kind=KIND_EPAC,
        beta=p.beta,
    )


def second_order_frequency(p: EpacParameters) -> float:
    """omega^S = sqrt(curvature / Z_beta) = omega_beta sqrt(m / Z_beta)."""
    if p.z_beta is None:
        raise ValueError("second order needs z_beta")
    return math.sqrt(p.curvature / p.z_beta)


def epac2_correlation(p: EpacParameters, times) -> CorrelationSeries:
    """Second-order closed form: kinetic mass renormalized to Z_beta.

    Identical to the leading order when Z_beta = m; still one mode, so
    the pole count never changes, only its position and residue.
    """
    if p.beta == math.inf:
        raise ValueError("finite beta required; use epac_zero_temperature")
    omega_s = second_order_frequency(p)
    return _single_mode_series(times, p.z_beta, omega_s, p)


def epac_zero_temperature(p: EpacParameters, times) -> CorrelationSeries:
    """Zero-temperature limit: one complex exponential plus Q_min^2.

    Uses the renormalized (Z, omega^S) pair when z_beta is present,
    otherwise the bare-mass leading order.  |C(t) - Q_min^2| is constant
    in time.
    """
    if p.beta != math.inf:
        raise ValueError("flag beta as math.inf for the zero-temperature form")
    if p.z_beta is None:
        return _single_mode_series(times, p.mass, p.omega_beta, p)
    omega_s = second_order_frequency(p)
    return _single_mode_series(times, p.z_beta, omega_s, p)
