"""Centroid molecular dynamics on the effective classical potential.

Dual sampling: initial centroid positions come from a Nose-Hoover
thermostatted walk on the effective classical potential (momenta are
drawn exactly Gaussian), then each phase-space point is propagated
microcanonically with velocity Verlet and the position autocorrelation
is averaged over the ensemble.  Forces come from the fitted polynomial,
so trajectories are deterministic and cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocking import blocking_stderr
from .effective_potential import CLASSICAL, EffectivePotentialCurve
from .errors import EnergyDrift, ThermostatDivergence
from .potentials import SystemParams
from .series import KIND_CMD, CorrelationSeries

# default guard against integrator blow-up: the bounded velocity-Verlet
# energy oscillation at the dt precondition limit is ~(0.05)^2/8 ~ 3e-4
# relative, so the default sits just above it; precision studies pass
# their own tolerance together with a suitably small step
ENERGY_TOL = 5e-4


def _frequency_scale(ecp: EffectivePotentialCurve, mass: float) -> float:
    """Largest sqrt(V''/m) over the tabulated grid; sets step limits."""
    if ecp.poly is not None:
        curv = ecp.poly.deriv(2)(ecp.grid)
    else:
        curv = np.gradient(np.gradient(ecp.values, ecp.grid), ecp.grid)
    peak = float(np.max(np.abs(curv)))
    return math.sqrt(max(peak, 1e-12) / mass)


def _require_resolved(dt: float, omega_max: float):
    if dt > 0.05 / omega_max:
        raise ValueError(
            f"dt = {dt:g} too large for curvature scale {omega_max:g}; "
            f"need dt <= {0.05 / omega_max:g}"
        )


@dataclass(frozen=True)
class CentroidEnsemble:
    """Initial phase-space points for the centroid trajectories."""

    positions: np.ndarray
    momenta: np.ndarray
    beta: float
    mass: float
    seed: int

    def __post_init__(self):
        q = np.array(self.positions, dtype=float)
        p = np.array(self.momenta, dtype=float)
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError("positions and momenta must be matching 1-D arrays")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "positions", q)
        object.__setattr__(self, "momenta", p)

    def __len__(self) -> int:
        return self.positions.size


def sample_initial_centroids(
    ecp: EffectivePotentialCurve,
    sys: SystemParams,
    n: int,
    seed: int,
    *,
    mass: float = 1.0,
    n_walkers: int = 64,
    decorrelation_periods: float = 2.0,
    equilibration_periods: float = 20.0,
) -> CentroidEnsemble:
    """Canonical (q_c, p_c) ensemble on the effective classical potential.

    Positions are stride-decorrelated draws from thermostatted walkers;
    momenta are exact Gaussians at temperature 1/beta.  n = 0 yields a
    valid empty ensemble.
    """
    if ecp.kind != CLASSICAL:
        raise ValueError("initial sampling runs on the classical curve")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if n == 0:
        return CentroidEnsemble(
            positions=np.empty(0),
            momenta=np.empty(0),
            beta=sys.beta,
            mass=mass,
            seed=seed,
        )
    omega_max = _frequency_scale(ecp, mass)
    dt = 0.04 / omega_max
    period = 2.0 * math.pi / omega_max
    stride = max(1, int(round(decorrelation_periods * period / dt)))
    n_walkers = min(n_walkers, n)
    kt = 1.0 / sys.beta

    # one Nose-Hoover chain (length 2) per walker; simple and ergodic
    # enough for a single dof on a smooth potential
    tau = period / (2.0 * math.pi)
    q_mass = np.array([kt * tau * tau, kt * tau * tau])
    q = rng.normal(0.0, math.sqrt(kt) / omega_max, n_walkers) + float(
        ecp.grid[np.argmin(ecp.values)]
    )
    p = rng.normal(0.0, math.sqrt(mass * kt), n_walkers)
    vxi = rng.normal(0.0, np.sqrt(kt / q_mass), (n_walkers, 2))
    xi = np.zeros((n_walkers, 2))

    def nhc_half(p_arr, kin_mass):
        nonlocal vxi, xi
        delta = 0.5 * dt
        kin2 = p_arr * p_arr / kin_mass
        g2 = (q_mass[0] * vxi[:, 0] ** 2 - kt) / q_mass[1]
        vxi[:, 1] += 0.25 * delta * g2
        e = np.exp(-0.125 * delta * vxi[:, 1])
        g1 = (kin2 - kt) / q_mass[0]
        vxi[:, 0] = (vxi[:, 0] * e + 0.25 * delta * g1) * e
        s = np.exp(-0.5 * delta * vxi[:, 0])
        p_arr = p_arr * s
        kin2 = kin2 * s * s
        xi += 0.5 * delta * vxi
        e = np.exp(-0.125 * delta * vxi[:, 1])
        g1 = (kin2 - kt) / q_mass[0]
        vxi[:, 0] = (vxi[:, 0] * e + 0.25 * delta * g1) * e
        g2 = (q_mass[0] * vxi[:, 0] ** 2 - kt) / q_mass[1]
        vxi[:, 1] += 0.25 * delta * g2
        return p_arr

    def steps(n_steps):
        nonlocal q, p
        for _ in range(n_steps):
            p = nhc_half(p, mass)
            p = p + 0.5 * dt * ecp.force(q)
            q = q + dt * p / mass
            p = p + 0.5 * dt * ecp.force(q)
            p = nhc_half(p, mass)

    steps(max(1, int(round(equilibration_periods * period / dt))))
    draws = []
    needed = n
    while needed > 0:
        steps(stride)
        take = min(n_walkers, needed)
        draws.append(q[:take].copy())
        needed -= take
    positions = np.concatenate(draws)
    if not np.all(np.isfinite(positions)):
        raise ThermostatDivergence("centroid sampling walk diverged")
    momenta = rng.normal(0.0, math.sqrt(mass * kt), n)
    return CentroidEnsemble(
        positions=positions, momenta=momenta, beta=sys.beta, mass=mass, seed=seed
    )


def propagate_centroid(
    ecp: EffectivePotentialCurve,
    point,
    dt: float,
    n_steps: int,
    mass: float = 1.0,
    energy_tol: float = ENERGY_TOL,
):
    """Velocity-Verlet trajectory of one centroid on the classical curve.

    Returns (positions, momenta) including the initial point.  Raises
    EnergyDrift when p^2/2m + V drifts beyond energy_tol relative to
    the energy scale over the run.
    """
    omega_max = _frequency_scale(ecp, mass)
    _require_resolved(dt, omega_max)
    q = np.atleast_1d(np.asarray(point[0], dtype=float)).copy()
    p = np.atleast_1d(np.asarray(point[1], dtype=float)).copy()
    scalar = np.ndim(point[0]) == 0
    qs = np.empty((n_steps + 1,) + q.shape)
    ps = np.empty_like(qs)
    qs[0], ps[0] = q, p
    f = ecp.force(q)
    for k in range(n_steps):
        p = p + 0.5 * dt * f
        q = q + dt * p / mass
        f = ecp.force(q)
        p = p + 0.5 * dt * f
        qs[k + 1], ps[k + 1] = q, p
    stride = max(1, n_steps // 512)
    energies = ps[::stride] ** 2 / (2.0 * mass) + ecp.evaluate(qs[::stride])
    scale = max(float(np.max(np.abs(energies[0]))), 1.0 / (mass * omega_max**2))
    drift = float(np.max(np.abs(energies - energies[0]))) / scale
    if drift > energy_tol:
        raise EnergyDrift(f"relative energy drift {drift:.2e} > {energy_tol:.0e}")
    if scalar:
        return qs[:, 0], ps[:, 0]
    return qs, ps


def centroid_correlation(
    ensemble: CentroidEnsemble,
    ecp: EffectivePotentialCurve,
    dt: float,
    t_max: float,
    *,
    n_origins: int = 1,
    origin_stride: int = None,
    energy_tol: float = ENERGY_TOL,
) -> CorrelationSeries:
    """<q_c(t) q_c(0)> over the ensemble, microcanonical propagation.

    With n_origins > 1 each trajectory also contributes shifted time
    origins (stationarity makes them equivalent); the standard error is
    batch means over ensemble members.
    """
    if len(ensemble) == 0:
        raise ValueError("empty ensemble")
    mass = ensemble.mass
    omega_max = _frequency_scale(ecp, mass)
    _require_resolved(dt, omega_max)
    n_lag = int(round(t_max / dt)) + 1
    if origin_stride is None:
        origin_stride = max(1, int(round(2.0 * math.pi / omega_max / dt)))
    n_steps = n_lag - 1 + (n_origins - 1) * origin_stride
    q = ensemble.positions.copy()
    p = ensemble.momenta.copy()
    history = np.empty((n_steps + 1, len(ensemble)))
    history[0] = q
    f = ecp.force(q)
    energy0 = p**2 / (2.0 * mass) + ecp.evaluate(q)
    for k in range(n_steps):
        p += 0.5 * dt * f
        q += dt * p / mass
        f = ecp.force(q)
        p += 0.5 * dt * f
        history[k + 1] = q
    energy1 = p**2 / (2.0 * mass) + ecp.evaluate(q)
    scale = max(float(np.max(np.abs(energy0))), 1.0 / (mass * omega_max**2))
    drift = float(np.max(np.abs(energy1 - energy0))) / scale
    if drift > energy_tol:
        raise EnergyDrift(f"relative energy drift {drift:.2e} > {energy_tol:.0e}")
    # per-member lag products averaged over origins
    per_member = np.zeros((n_lag, len(ensemble)))
    for o in range(n_origins):
        start = o * origin_stride
        origin = history[start]
        per_member += history[start : start + n_lag] * origin
    per_member /= n_origins
    mean = per_member.mean(axis=1)
    stderr = per_member.std(axis=1, ddof=1) / math.sqrt(len(ensemble))
    times = np.arange(n_lag) * dt
    return CorrelationSeries(
        times=times,
        values=mean.astype(complex),
        kind=KIND_CMD,
        beta=ensemble.beta,
        stderr=stderr,
    )
