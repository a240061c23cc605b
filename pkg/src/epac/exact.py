"""Exact quantum reference: 1D eigensolver and correlation functions.

Finite-difference Schroedinger eigensolver with Dirichlet boundaries
(3-point stencil by default; a 5-point variant exists purely as an
independent cross-check for golden values), plus the eigensum forms of
the real-time, canonical (Kubo) and zero-temperature position
correlation functions, their discrete spectra, and the generating
function of a source-tilted Hamiltonian.  The last provides a fully
independent route to the standard effective potential against which the
sampling pipeline is checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig_banded, eigh_tridiagonal
from scipy.special import logsumexp

from .errors import BoundaryLeak, NotConverged, TruncationError
from .potentials import PotentialSpec, SystemParams, eval_potential
from .series import (
    KIND_CANONICAL,
    KIND_EXACT,
    CorrelationSeries,
    SpectralLines,
)

BOUNDARY_TOL = 1e-6
TAIL_TOL = 1e-10
LINE_WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform position grid for the eigensolver."""

    q_min: float
    q_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError("n_points must be >= 16")
        if not self.q_min < self.q_max:
            raise ValueError("q_min must be < q_max")

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_points)


# accurate default: low harmonic eigenvalues good to < 1e-6 with the
# 3-point stencil, still a fraction of a second to diagonalize
DEFAULT_GRID = GridSpec(-8.0, 8.0, 48001)

# working grid for the shallow double well pipeline; low eigenvalues
# good to ~1e-6, cheap enough for repeated tilted solves
DOUBLE_WELL_GRID = GridSpec(-8.0, 8.0, 2001)


@dataclass(frozen=True)
class EigenSystem:
    """Lowest eigenpairs on a grid plus position matrix elements.

    wavefunctions[n, i] = psi_n(q_i), normalized so that
    sum_i psi_m psi_n h = delta_mn.  q_elements[m, n] = <m|q|n>.
    """

    energies: np.ndarray
    wavefunctions: np.ndarray
    grid: GridSpec
    q_elements: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        e = np.array(self.energies, dtype=float)
        psi = np.array(self.wavefunctions, dtype=float)
        x = np.array(self.q_elements, dtype=float)
        for arr in (e, psi, x):
            arr.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "wavefunctions", psi)
        object.__setattr__(self, "q_elements", x)

    @property
    def n_states(self) -> int:
        return self.energies.size


def _kinetic_bands(mass: float, hbar: float, h: float, n: int, stencil: int):
    """Band representation (lower form) of -(hbar^2/2m) d2/dq2."""
    pref = hbar * hbar / (2.0 * mass * h * h)
    if stencil == 3:
        diag = np.full(n, 2.0 * pref)
        off1 = np.full(n - 1, -pref)
        return [diag, off1]
    if stencil == 5:
        diag = np.full(n, 2.5 * pref)
        off1 = np.full(n - 1, -4.0 * pref / 3.0)
        off2 = np.full(n - 2, pref / 12.0)
        return [diag, off1, off2]
    raise ValueError("stencil must be 3 or 5")


def solve_eigensystem(
    pot: PotentialSpec,
    sys: SystemParams,
    grid: GridSpec,
    n_states: int,
    stencil: int = 3,
) -> EigenSystem:
    """Lowest n_states eigenpairs of -(hbar^2/2m) d2/dq2 + V(q).

    Dirichlet boundaries; wavefunctions are returned on the full grid
    with exact zeros at the endpoints.  Raises BoundaryLeak when any
    requested state has visible amplitude next to the boundary and
    NotConverged when the grid cannot resolve that many states.
    """
    n_interior = grid.n_points - 2
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    if n_states > n_interior // 8:
        raise NotConverged(
            f"{n_states} states on {grid.n_points} points: refine the grid"
        )
    q = grid.points()
    h = grid.spacing
    v = eval_potential(pot, q[1:-1])
    bands = _kinetic_bands(pot.mass, sys.hbar, h, n_interior, stencil)
    bands[0] = bands[0] + v
    if stencil == 3:
        energies, vecs = eigh_tridiagonal(
            bands[0], bands[1], select="i", select_range=(0, n_states - 1)
        )
    else:
        a_band = np.zeros((3, n_interior))
        a_band[0] = bands[0]
        a_band[1, : n_interior - 1] = bands[1]
        a_band[2, : n_interior - 2] = bands[2]
        energies, vecs = eig_banded(
            a_band, lower=True, select="i", select_range=(0, n_states - 1)
        )
    # normalize on the trapezoid == rectangle measure (endpoints are 0)
    psi = vecs.T / np.sqrt(h)
    norms = np.sqrt(np.sum(psi * psi, axis=1) * h)
    psi /= norms[:, None]
    # deterministic sign: largest-magnitude sample positive
    flip = psi[np.arange(n_states), np.argmax(np.abs(psi), axis=1)] < 0
    psi[flip] *= -1.0
    edge = max(np.max(np.abs(psi[:, 0])), np.max(np.abs(psi[:, -1])))
    if edge > BOUNDARY_TOL:
        raise BoundaryLeak(
            f"wavefunction amplitude {edge:.2e} at the boundary; widen the grid"
        )
    full = np.zeros((n_states, grid.n_points))
    full[:, 1:-1] = psi
    x_elements = (full * q) @ full.T * h
    return EigenSystem(
        energies=energies,
        wavefunctions=full,
        grid=grid,
        q_elements=x_elements,
        hbar=sys.hbar,
    )


def harmonic_reference(
    n_states: int,
    grid: GridSpec = None,
    mass: float = 1.0,
    omega: float = 1.0,
    hbar: float = 1.0,
) -> EigenSystem:
    """Closed-form harmonic eigensystem (ladder-operator matrix elements).

    Independent of the finite-difference solver; used to cross-check the
    eigensum code paths against analytic results.
    """
    if grid is None:
        grid = GridSpec(-10.0, 10.0, 1001)
    q = grid.points()
    xi = np.sqrt(mass * omega / hbar) * q
    psi = np.zeros((n_states, q.size))
    psi[0] = (mass * omega / (math.pi * hbar)) ** 0.25 * np.exp(-0.5 * xi * xi)
    if n_states > 1:
        psi[1] = math.sqrt(2.0) * xi * psi[0]
    for n in range(1, n_states - 1):
        psi[n + 1] = (
            math.sqrt(2.0 / (n + 1)) * xi * psi[n]
            - math.sqrt(n / (n + 1)) * psi[n - 1]
        )
    energies = hbar * omega * (np.arange(n_states) + 0.5)
    x = np.zeros((n_states, n_states))
    length = math.sqrt(hbar / (2.0 * mass * omega))
    for n in range(n_states - 1):
        x[n, n + 1] = x[n + 1, n] = length * math.sqrt(n + 1)
    return EigenSystem(
        energies=energies, wavefunctions=psi, grid=grid, q_elements=x, hbar=hbar
    )


def _thermal_weights(energies: np.ndarray, beta: float) -> np.ndarray:
    """Normalized Boltzmann weights; rejects under-truncated sums."""
    x = beta * (energies - energies[0])
    w = np.exp(-x)
    z = w.sum()
    if w[-1] / z >= TAIL_TOL:
        raise TruncationError(
            f"Boltzmann tail {w[-1] / z:.2e} >= {TAIL_TOL}; include more states"
        )
    return w / z


def exact_correlation(
    eig: EigenSystem, beta: float, times
) -> CorrelationSeries:
    """<q(t) q(0)> at inverse temperature beta, from the eigensum."""
    times = np.asarray(times, dtype=float)
    w = _thermal_weights(eig.energies, beta)
    omega = (eig.energies[None, :] - eig.energies[:, None]) / eig.hbar
    amp = w[:, None] * eig.q_elements**2
    values = _phase_sum(amp, omega, times)
    return CorrelationSeries(times=times, values=values, kind=KIND_EXACT, beta=beta)


def _canonical_weights(energies: np.ndarray, beta: float) -> np.ndarray:
    """Thermal x Kubo weight matrix, stable for deep downward transitions.

    w_n (1 - e^{-beta dE})/(beta dE) rewritten as
    (e^{-x_n} - e^{-x_m})/(Z beta dE) with x_n = beta (E_n - E_0), so
    both exponentials stay bounded; the dE -> 0 diagonal limit is the
    plain Boltzmann weight.
    """
    x = beta * (energies - energies[0])
    z = np.exp(-x).sum()
    y = beta * (energies[None, :] - energies[:, None])  # beta (E_m - E_n)
    small = np.abs(y) < 1e-6
    ys = np.where(small, 1.0, y)
    ratio = (np.exp(-x)[:, None] - np.exp(-x)[None, :]) / ys
    series = np.exp(-x)[:, None] * (1.0 - y / 2.0 + y * y / 6.0)
    return np.where(small, series, ratio) / z


def exact_canonical_correlation(
    eig: EigenSystem, beta: float, times
) -> CorrelationSeries:
    """Kubo (canonical) position correlation function from the eigensum."""
    times = np.asarray(times, dtype=float)
    _thermal_weights(eig.energies, beta)  # truncation guard
    delta = eig.energies[None, :] - eig.energies[:, None]
    omega = delta / eig.hbar
    amp = _canonical_weights(eig.energies, beta) * eig.q_elements**2
    values = _phase_sum(amp, omega, times)
    return CorrelationSeries(
        times=times, values=values, kind=KIND_CANONICAL, beta=beta
    )


def _phase_sum(amp: np.ndarray, omega: np.ndarray, times: np.ndarray) -> np.ndarray:
    """sum_nm amp[n,m] exp(-i omega[n,m] t), chunked over t."""
    values = np.empty(times.size, dtype=complex)
    chunk = max(1, int(2e6 // max(1, omega.size)))
    for start in range(0, times.size, chunk):
        t = times[start : start + chunk]
        phases = np.exp(-1j * omega[None, :, :] * t[:, None, None])
        values[start : start + chunk] = np.einsum("nm,tnm->t", amp, phases)
    return values


def _merged_lines(freqs: np.ndarray, weights: np.ndarray):
    """Sort lines and merge entries with identical frequency."""
    order = np.argsort(freqs, kind="stable")
    freqs = freqs[order]
    weights = weights[order]
    out_f, out_w = [], []
    for f, wt in zip(freqs, weights):
        if out_f and abs(f - out_f[-1]) <= 1e-12 * max(1.0, abs(f)):
            out_w[-1] += wt
        else:
            out_f.append(f)
            out_w.append(wt)
    return np.array(out_f), np.array(out_w)


def exact_spectrum(
    eig: EigenSystem, beta: float, kind: str = KIND_EXACT
) -> SpectralLines:
    """Discrete spectrum: lines at (E_m - E_n)/hbar.

    Standard weights are (2 pi / Z) e^{-beta E_n} |<m|q|n>|^2; canonical
    weights carry the extra Kubo factor.  Lines below the weight floor
    are dropped.
    """
    w = _thermal_weights(eig.energies, beta)
    delta = eig.energies[None, :] - eig.energies[:, None]
    omega = delta / eig.hbar
    if kind == KIND_EXACT:
        weights = 2.0 * math.pi * w[:, None] * eig.q_elements**2
    elif kind == KIND_CANONICAL:
        weights = (
            2.0 * math.pi
            * _canonical_weights(eig.energies, beta)
            * eig.q_elements**2
        )
    else:
        raise ValueError(f"unknown spectrum kind {kind!r}")
    mask = np.abs(weights) >= LINE_WEIGHT_FLOOR
    freqs, wts = _merged_lines(omega[mask].ravel(), weights[mask].ravel())
    return SpectralLines(frequencies=freqs, weights=wts, kind=kind, beta=beta)


def zero_temperature_correlation(eig: EigenSystem, times) -> CorrelationSeries:
    """Ground-state correlation sum_m e^{-i(E_m-E_0)t/hbar} |<m|q|0>|^2."""
    times = np.asarray(times, dtype=float)
    amp = eig.q_elements[0] ** 2
    total = amp.sum()
    if total > 0 and amp[-1] / total >= LINE_WEIGHT_FLOOR:
        raise TruncationError("ground-state sum not converged; add states")
    omega = (eig.energies - eig.energies[0]) / eig.hbar
    values = np.exp(-1j * omega[None, :] * times[:, None]) @ amp
    return CorrelationSeries(
        times=times, values=values, kind=KIND_EXACT, beta=math.inf
    )


def tilted_generating_function(
    pot: PotentialSpec,
    sys: SystemParams,
    grid: GridSpec,
    source: float,
    n_states: int = None,
) -> float:
    """w(J) = (1/beta) log sum_n e^{-beta E_n(J)} for V(q) - J q.

    The eigenvalue route to the generating function; the independent
    check for the quadrature built on the sampled effective classical
    potential.  States are added until e^{-beta(E_n - E_0)} < 1e-12.
    """
    coeffs = list(pot.coefficients)
    while len(coeffs) < 2:
        coeffs.append(0.0)
    coeffs[1] -= source
    tilted = PotentialSpec(tuple(coeffs), mass=pot.mass, symmetric=None)
    q = grid.points()
    v = eval_potential(tilted, q)
    imin = int(np.argmin(v))
    margin = max(2, grid.n_points // 50)
    if imin < margin or imin >= grid.n_points - margin:
        raise BoundaryLeak(
            "tilted potential minimum at the grid edge; enlarge the grid"
        )
    n = n_states or 32
    beta = sys.beta
    while True:
        eig = solve_eigensystem(tilted, sys, grid, n)
        x = beta * (eig.energies - eig.energies[0])
        if math.exp(-x[-1]) < 1e-12 or n_states is not None:
            break
        n *= 2
        if n > (grid.n_points - 2) // 8:
            raise TruncationError("grid too small for the requested beta")
    e0 = eig.energies[0]
    return float(-e0 + logsumexp(-x) / beta)
