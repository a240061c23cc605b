"""Normal-mode path-integral molecular dynamics with Nose-Hoover chains.

Samples the ring-polymer (quasi-particle) distribution at inverse
temperature beta.  The cyclic spring matrix is diagonalized once by an
orthogonal cosine/sine transform; every normal mode carries its own
Nose-Hoover chain (massive thermostatting) and a fictitious mass chosen
so that all modes evolve on the common time scale beta*hbar/(2*pi),
which keeps sampling efficiency uniform in temperature.  Fictitious
masses never bias static averages.

The centroid constraint is implemented by construction: the zero mode
is simply not propagated, so the centroid is fixed to machine
precision.  The constrained mean force estimator is the bead-averaged
physical force, accumulated with blocking error analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .blocking import MeanEstimate, blocking_stderr, combine_replicas
from .errors import ThermostatDivergence
from .potentials import (
    PotentialSpec,
    SystemParams,
    curvature_scale,
    eval_force,
    eval_potential,
)

STDERR_FLOOR = 1e-14

_SY_WEIGHTS = {
    1: (1.0,),
    3: (
        1.0 / (2.0 - 2.0 ** (1.0 / 3.0)),
        1.0 - 2.0 / (2.0 - 2.0 ** (1.0 / 3.0)),
        1.0 / (2.0 - 2.0 ** (1.0 / 3.0)),
    ),
    7: (
        0.784513610477560,
        0.235573213359357,
        -1.17767998417887,
        1.0 - 2.0 * (0.784513610477560 + 0.235573213359357 - 1.17767998417887),
        -1.17767998417887,
        0.235573213359357,
        0.784513610477560,
    ),
}


@lru_cache(maxsize=16)
def _mode_data(P: int):
    """Orthogonal normal-mode matrix and cyclic-Laplacian eigenvalues.

    Row 0 is the centroid mode (u_0 = sqrt(P) * centroid); rows come in
    cosine/sine pairs, plus the alternating mode for even P.  The spring
    term satisfies sum_j (q_j - q_{j+1})^2 = sum_k lam_k u_k^2.
    """
    j = np.arange(P)
    rows = [np.full(P, 1.0 / math.sqrt(P))]
    lam = [0.0]
    for k in range(1, P // 2 + 1):
        if 2 * k == P:
            rows.append((-1.0) ** j / math.sqrt(P))
            lam.append(4.0)
        else:
            ang = 2.0 * math.pi * k * j / P
            eig = 4.0 * math.sin(math.pi * k / P) ** 2
            rows.append(math.sqrt(2.0 / P) * np.cos(ang))
            lam.append(eig)
            rows.append(math.sqrt(2.0 / P) * np.sin(ang))
            lam.append(eig)
    matrix = np.vstack(rows)
    eigenvalues = np.array(lam)
    matrix.setflags(write=False)
    eigenvalues.setflags(write=False)
    return matrix, eigenvalues


def normal_mode_transform(beads: np.ndarray) -> np.ndarray:
    """Bead positions (..., P) -> mode amplitudes; u_0 = sqrt(P)*centroid."""
    beads = np.asarray(beads, dtype=float)
    matrix, _ = _mode_data(beads.shape[-1])
    return beads @ matrix.T


def inverse_normal_mode_transform(modes: np.ndarray) -> np.ndarray:
    """Inverse of :func:`normal_mode_transform` (orthogonal, so transpose)."""
    modes = np.asarray(modes, dtype=float)
    matrix, _ = _mode_data(modes.shape[-1])
    return modes @ matrix


def quasiparticle_potential(
    pot: PotentialSpec, sys: SystemParams, P: int, beads: np.ndarray
):
    """Ring-polymer potential: springs between adjacent beads + V/P.

    sum_j [ m P / (2 beta^2 hbar^2) (q_j - q_{j+1})^2 + V(q_j)/P ]
    with periodic wrap q_{P+1} = q_1.  Accepts batched beads (..., P).
    """
    if P < 2:
        raise ValueError("need at least two beads")
    beads = np.asarray(beads, dtype=float)
    if beads.shape[-1] != P:
        raise ValueError("last axis must hold the P beads")
    pref = pot.mass * P / (2.0 * (sys.beta * sys.hbar) ** 2)
    diff = beads - np.roll(beads, -1, axis=-1)
    spring = pref * np.sum(diff * diff, axis=-1)
    vmean = np.sum(eval_potential(pot, beads), axis=-1) / P
    out = spring + vmean
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PathState:
    """Snapshot of one ring polymer: bead positions and mode momenta."""

    beads: np.ndarray
    mode_momenta: np.ndarray

    def __post_init__(self):
        beads = np.array(self.beads, dtype=float)
        mom = np.array(self.mode_momenta, dtype=float)
        if beads.ndim != 1 or beads.size < 2 or mom.shape != beads.shape:
            raise ValueError("beads and mode momenta must be matching 1-D, P >= 2")
        beads.setflags(write=False)
        mom.setflags(write=False)
        object.__setattr__(self, "beads", beads)
        object.__setattr__(self, "mode_momenta", mom)
        modes = normal_mode_transform(beads)
        modes.setflags(write=False)
        object.__setattr__(self, "_modes", modes)

    @property
    def trotter_number(self) -> int:
        return self.beads.size

    @property
    def normal_modes(self) -> np.ndarray:
        return self._modes

    @property
    def centroid(self) -> float:
        return float(self.beads.mean())


@dataclass
class ThermostatChain:
    """Chain variables for the massive Nose-Hoover thermostats.

    positions/velocities have shape (systems, modes, links); masses has
    one entry per link.
    """

    positions: np.ndarray
    velocities: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        if self.masses.ndim != 1 or self.masses.size < 2:
            raise ValueError("chain needs at least two links")
        if self.positions.shape != self.velocities.shape:
            raise ValueError("chain state shapes must match")
        if self.positions.shape[-1] != self.masses.size:
            raise ValueError("last axis must hold the chain links")

    def energy(self, kt: float) -> np.ndarray:
        """Thermostat contribution to the conserved quantity, per system."""
        kin = 0.5 * np.sum(self.velocities**2 * self.masses, axis=(-2, -1))
        pot = kt * np.sum(self.positions, axis=(-2, -1))
        return kin + pot


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs for the PIMD sampler.

    The integration step is beta*hbar/steps_per_period, i.e. a fixed
    number of steps per fictitious mode period; thermostat masses use
    the time scale beta*hbar/(2*pi) per mode.
    """

    production_steps: int = 30000
    equilibration_steps: int = 4000
    steps_per_period: int = 120
    chain_length: int = 4
    suzuki_yoshida: int = 3
    chain_substeps: int = 1
    replicas: int = 4
    seed: int = 20240
    drift_tolerance: float = 2e-2
    drift_check_interval: int = 2000
    curvature_reference: float = None

    def __post_init__(self):
        if self.chain_length < 2:
            raise ValueError("chain_length must be >= 2")
        if self.suzuki_yoshida not in _SY_WEIGHTS:
            raise ValueError("suzuki_yoshida must be one of 1, 3, 7")
        if self.production_steps < 1 or self.equilibration_steps < 0:
            raise ValueError("bad step counts")


@dataclass(frozen=True)
class ForceTable:
    """Centroid mean-force samples on a grid, with blocking errors."""

    centroids: np.ndarray
    force: np.ndarray
    stderr: np.ndarray
    n_samples: np.ndarray
    beta: float
    trotter_number: int
    seed: int = None

    def __post_init__(self):
        qc = np.array(self.centroids, dtype=float)
        f = np.array(self.force, dtype=float)
        e = np.array(self.stderr, dtype=float)
        n = np.array(self.n_samples, dtype=int)
        if not (qc.shape == f.shape == e.shape == n.shape) or qc.ndim != 1:
            raise ValueError("table columns must be matching 1-D arrays")
        if qc.size >= 2 and not np.all(np.diff(qc) > 0):
            raise ValueError("centroid grid must be strictly ascending")
        if not np.all(e > 0):
            raise ValueError("standard errors must be positive")
        for arr in (qc, f, e, n):
            arr.setflags(write=False)
        object.__setattr__(self, "centroids", qc)
        object.__setattr__(self, "force", f)
        object.__setattr__(self, "stderr", e)
        object.__setattr__(self, "n_samples", n)


class _NormalModeSampler:
    """Batched NVT integrator over independent ring polymers.

    One column per system (a grid point or a replica); all elementwise
    updates act on (systems, modes) arrays so batched and single runs
    follow identical arithmetic per column.
    """

    def __init__(
        self,
        pot: PotentialSpec,
        sys: SystemParams,
        P: int,
        cfg: SamplerConfig,
        *,
        centroids=None,
        n_systems: int = None,
        rngs=None,
        span: float = 3.0,
    ):
        if P < 2:
            raise ValueError("need at least two beads")
        self.pot = pot
        self.sys = sys
        self.P = P
        self.cfg = cfg
        self.constrained = centroids is not None
        if self.constrained:
            centroids = np.asarray(centroids, dtype=float)
            n_systems = centroids.size
        self.n_systems = n_systems
        self.matrix, lam = _mode_data(P)
        beta, hbar, mass = sys.beta, sys.hbar, pot.mass
        self.kt = 1.0 / beta
        self.kappa = mass * P * lam / (beta * hbar) ** 2
        vref = cfg.curvature_reference or curvature_scale(pot, span)
        tau = beta * hbar / (2.0 * math.pi)
        self.mu = (self.kappa + vref / P) * tau * tau
        self.dt = beta * hbar / cfg.steps_per_period
        self.idx = slice(1, None) if self.constrained else slice(None)
        self.mu_active = self.mu[self.idx]
        n_modes = self.mu_active.size
        chain_mass = np.full(cfg.chain_length, self.kt * tau * tau)
        self.sy = _SY_WEIGHTS[cfg.suzuki_yoshida]

        self.u = np.zeros((n_systems, P))
        if self.constrained:
            self.u[:, 0] = math.sqrt(P) * centroids
        self.p = np.empty((n_systems, n_modes))
        xi = np.zeros((n_systems, n_modes, cfg.chain_length))
        vxi = np.empty_like(xi)
        sigma_u = np.sqrt(self.kt / (self.kappa + vref / P))
        sigma_p = np.sqrt(self.mu_active * self.kt)
        sigma_v = np.sqrt(self.kt / chain_mass)
        for s in range(n_systems):
            rng = rngs[s]
            self.u[s, self.idx] += rng.normal(size=n_modes) * sigma_u[self.idx]
            self.p[s] = rng.normal(size=n_modes) * sigma_p
            vxi[s] = rng.normal(size=(n_modes, cfg.chain_length)) * sigma_v
        self.chain = ThermostatChain(xi, vxi, chain_mass)
        self.q, self.f_beads, self.f_modes = self._forces()
        self._reference = None

    def _forces(self):
        q = self.u @ self.matrix
        f_beads = eval_force(self.pot, q)
        f_modes = (f_beads @ self.matrix.T) / self.P - self.kappa * self.u
        return q, f_beads, f_modes

    def _nhc_half(self):
        p = self.p
        xi = self.chain.positions
        vxi = self.chain.velocities
        q_mass = self.chain.masses
        kt = self.kt
        links = q_mass.size
        kin2 = p * p / self.mu_active
        for w in self.sy:
            delta = w * 0.5 * self.dt / self.cfg.chain_substeps
            for _ in range(self.cfg.chain_substeps):
                g = (q_mass[links - 2] * vxi[..., links - 2] ** 2 - kt) / q_mass[-1]
                vxi[..., -1] += 0.25 * delta * g
                for j in range(links - 2, -1, -1):
                    e = np.exp(-0.125 * delta * vxi[..., j + 1])
                    if j == 0:
                        g = (kin2 - kt) / q_mass[0]
                    else:
                        g = (q_mass[j - 1] * vxi[..., j - 1] ** 2 - kt) / q_mass[j]
                    vxi[..., j] = (vxi[..., j] * e + 0.25 * delta * g) * e
                s = np.exp(-0.5 * delta * vxi[..., 0])
                p *= s
                kin2 *= s * s
                xi += 0.5 * delta * vxi
                for j in range(links - 1):
                    e = np.exp(-0.125 * delta * vxi[..., j + 1])
                    if j == 0:
                        g = (kin2 - kt) / q_mass[0]
                    else:
                        g = (q_mass[j - 1] * vxi[..., j - 1] ** 2 - kt) / q_mass[j]
                    vxi[..., j] = (vxi[..., j] * e + 0.25 * delta * g) * e
                g = (q_mass[links - 2] * vxi[..., links - 2] ** 2 - kt) / q_mass[-1]
                vxi[..., -1] += 0.25 * delta * g

    def _step(self):
        self._nhc_half()
        self.p += 0.5 * self.dt * self.f_modes[:, self.idx]
        self.u[:, self.idx] += self.dt * self.p / self.mu_active
        self.q, self.f_beads, self.f_modes = self._forces()
        self.p += 0.5 * self.dt * self.f_modes[:, self.idx]
        self._nhc_half()

    def conserved_quantity(self) -> np.ndarray:
        kin = 0.5 * np.sum(self.p * self.p / self.mu_active, axis=1)
        pot = quasiparticle_potential(self.pot, self.sys, self.P, self.q)
        return kin + pot + self.chain.energy(self.kt)

    def _check_drift(self, label=""):
        current = self.conserved_quantity()
        scale = np.maximum(np.abs(self._reference), self.p.shape[1] * self.kt)
        drift = np.abs(current - self._reference) / scale
        drift = np.where(np.isfinite(drift), drift, np.inf)
        worst = int(np.argmax(drift))
        if drift[worst] > self.cfg.drift_tolerance:
            raise ThermostatDivergence(
                f"conserved quantity drifted by {drift[worst]:.2e} "
                f"(system {worst}{label}); reduce the step size"
            )

    def max_drift(self) -> float:
        current = self.conserved_quantity()
        scale = np.maximum(np.abs(self._reference), self.p.shape[1] * self.kt)
        return float(np.max(np.abs(current - self._reference) / scale))

    def run(self, n_steps: int, channels=(), label="") -> dict:
        record = {name: np.empty((n_steps, self.n_systems)) for name in channels}
        if self._reference is None:
            self._reference = self.conserved_quantity()
        interval = self.cfg.drift_check_interval
        for step in range(n_steps):
            self._step()
            for name in channels:
                record[name][step] = self._channel(name)
            if interval and (step + 1) % interval == 0:
                self._check_drift(label)
        return record

    def _channel(self, name: str) -> np.ndarray:
        if name == "force":
            return self.f_beads.mean(axis=1)
        if name == "centroid_sq":
            c = self.u[:, 0] / math.sqrt(self.P)
            return c * c
        if name == "position_sq":
            return np.mean(self.q * self.q, axis=1)
        raise ValueError(f"unknown channel {name!r}")

    def state(self, system: int = 0) -> PathState:
        momenta = np.zeros(self.P)
        momenta[self.idx] = self.p[system]
        return PathState(beads=self.q[system].copy(), mode_momenta=momenta)

    def centroids(self) -> np.ndarray:
        return self.u[:, 0] / math.sqrt(self.P)


def _spawn_rngs(seed: int, n: int):
    root = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(n)]


def sample_constrained(
    pot: PotentialSpec,
    sys: SystemParams,
    P: int,
    q_c: float,
    cfg: SamplerConfig,
) -> MeanEstimate:
    """Mean centroid force at one fixed centroid position.

    The centroid is held exactly (the zero mode is not propagated); the
    estimator is the bead-averaged physical force with a blocking
    standard error.
    """
    span = max(3.0, abs(q_c) + 1.0)
    sampler = _NormalModeSampler(
        pot, sys, P, cfg, centroids=[q_c], rngs=_spawn_rngs(cfg.seed, 1), span=span
    )
    sampler.run(cfg.equilibration_steps)
    sampler._reference = None
    rec = sampler.run(cfg.production_steps, channels=("force",))
    samples = rec["force"][:, 0]
    err = max(blocking_stderr(samples), STDERR_FLOOR * (1.0 + abs(samples.mean())))
    return MeanEstimate(
        value=float(samples.mean()), stderr=err, n_samples=samples.size
    )


def centroid_force_grid(
    pot: PotentialSpec,
    sys: SystemParams,
    P: int,
    grid,
    cfg: SamplerConfig,
) -> ForceTable:
    """Constrained mean force at every grid point.

    Grid points run as one batch with per-point counter-based random
    streams derived from the master seed, so results are reproducible
    and independent of batching.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("need a 1-D centroid grid")
    if grid.size >= 2 and not np.all(np.diff(grid) > 0):
        raise ValueError("centroid grid must be strictly ascending")
    span = max(3.0, float(np.max(np.abs(grid))) + 1.0)
    sampler = _NormalModeSampler(
        pot,
        sys,
        P,
        cfg,
        centroids=grid,
        rngs=_spawn_rngs(cfg.seed, grid.size),
        span=span,
    )
    try:
        sampler.run(cfg.equilibration_steps)
        sampler._reference = None
        rec = sampler.run(cfg.production_steps, channels=("force",), label=" of grid")
    except ThermostatDivergence as exc:
        raise ThermostatDivergence(f"{exc} [grid {grid.min()}..{grid.max()}]") from exc
    forces = rec["force"]
    mean = forces.mean(axis=0)
    stderr = np.array(
        [
            max(blocking_stderr(forces[:, i]), STDERR_FLOOR * (1.0 + abs(mean[i])))
            for i in range(grid.size)
        ]
    )
    return ForceTable(
        centroids=grid,
        force=mean,
        stderr=stderr,
        n_samples=np.full(grid.size, cfg.production_steps),
        beta=sys.beta,
        trotter_number=P,
        seed=cfg.seed,
    )


@dataclass(frozen=True)
class VarianceEstimate:
    """Unconstrained-run observables used for cross checks."""

    centroid_sq: MeanEstimate
    position_sq: MeanEstimate


def centroid_variance_estimate(
    pot: PotentialSpec,
    sys: SystemParams,
    P: int,
    cfg: SamplerConfig,
) -> VarianceEstimate:
    """<q_0^2> (centroid) and bead-averaged <q^2> from unconstrained PIMD.

    The centroid estimate equals the canonical correlation at t = 0 for
    linear operators; the bead-position variance carries the usual
    Trotter bias and is used for convergence monitoring.
    """
    sampler = _NormalModeSampler(
        pot,
        sys,
        P,
        cfg,
        n_systems=cfg.replicas,
        rngs=_spawn_rngs(cfg.seed, cfg.replicas),
    )
    sampler.run(cfg.equilibration_steps)
    sampler._reference = None
    rec = sampler.run(
        cfg.production_steps, channels=("centroid_sq", "position_sq")
    )
    estimates = {}
    for name in ("centroid_sq", "position_sq"):
        per_replica = [
            MeanEstimate(
                value=float(rec[name][:, r].mean()),
                stderr=max(blocking_stderr(rec[name][:, r]), STDERR_FLOOR),
                n_samples=cfg.production_steps,
            )
            for r in range(cfg.replicas)
        ]
        estimates[name] = combine_replicas(per_replica)
    return VarianceEstimate(
        centroid_sq=estimates["centroid_sq"],
        position_sq=estimates["position_sq"],
    )
