"""Polynomial model potentials and system-wide parameters.

A potential is a plain polynomial V(q) = sum_k c_k q^k with a positive
leading coefficient of even degree, so the spectrum is discrete and all
path integrals converge.  Everything downstream (eigensolver, samplers,
effective potentials) works off this one representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegreeTooHigh

_MAX_MINIMA_DEGREE = 8


@dataclass(frozen=True)
class PotentialSpec:
    """Confining polynomial potential with particle mass.

    Parameters
    ----------
    coefficients : sequence of float
        c_k for V(q) = sum_k c_k q^k, constant term first.
    mass : float
        Particle mass, > 0.
    symmetric : bool, optional
        True when V(q) = V(-q).  Inferred from the coefficients when
        omitted; an explicit True is validated against them.
    """

    coefficients: tuple
    mass: float = 1.0
    symmetric: bool = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs or not any(c != 0.0 for c in coeffs):
            raise ValueError("potential needs at least one nonzero coefficient")
        object.__setattr__(self, "coefficients", coeffs)
        if not self.mass > 0.0:
            raise ValueError("mass must be positive")
        degree = self.degree
        if degree % 2 != 0 or coeffs[degree] <= 0.0:
            raise ValueError(
                "leading nonzero coefficient must have even degree and be "
                "positive (confining potential)"
            )
        odd_free = all(c == 0.0 for c in coeffs[1::2])
        if self.symmetric is None:
            object.__setattr__(self, "symmetric", odd_free)
        elif self.symmetric and not odd_free:
            raise ValueError("symmetric potential has nonzero odd coefficients")

    @property
    def degree(self) -> int:
        """Degree of the highest nonzero term."""
        coeffs = self.coefficients
        return max(k for k, c in enumerate(coeffs) if c != 0.0)


@dataclass(frozen=True)
class SystemParams:
    """Inverse temperature and unit constants.

    The default profile is natural units, hbar = boltzmann = 1; physical
    unit systems are expressed by overriding the constants.
    """

    beta: float
    hbar: float = 1.0
    boltzmann: float = 1.0

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")
        if not (self.hbar > 0.0 and self.boltzmann > 0.0):
            raise ValueError("hbar and boltzmann must be positive")

    @property
    def kt(self) -> float:
        """Thermal energy 1/beta."""
        return 1.0 / self.beta

    @property
    def temperature(self) -> float:
        return 1.0 / (self.boltzmann * self.beta)


def _horner(coeffs, q):
    acc = np.zeros_like(np.asarray(q, dtype=float))
    for c in reversed(coeffs):
        acc = acc * q + c
    return acc


def eval_potential(pot: PotentialSpec, q):
    """Evaluate V(q) by Horner's scheme.  Accepts scalars or arrays."""
    out = _horner(pot.coefficients, q)
    return float(out) if np.ndim(q) == 0 else out


def derivative_coefficients(coeffs) -> tuple:
    """Coefficients of d/dq of a polynomial given constant-first."""
    return tuple(k * c for k, c in enumerate(coeffs))[1:] or (0.0,)


def eval_force(pot: PotentialSpec, q):
    """Force -dV/dq, consistent with :func:`eval_potential`."""
    out = -_horner(derivative_coefficients(pot.coefficients), q)
    return float(out) if np.ndim(q) == 0 else out


def eval_curvature(pot: PotentialSpec, q):
    """Second derivative d2V/dq2."""
    d2 = derivative_coefficients(derivative_coefficients(pot.coefficients))
    out = _horner(d2, q)
    return float(out) if np.ndim(q) == 0 else out


def classical_minima(pot: PotentialSpec) -> list:
    """Locations of the classical minima, ascending.

    Real roots of dV/dq with positive second derivative.  Limited to
    degree 8 so the companion-matrix root finder stays trustworthy.
    """
    if pot.degree > _MAX_MINIMA_DEGREE:
        raise DegreeTooHigh(
            f"degree {pot.degree} > {_MAX_MINIMA_DEGREE} not supported"
        )
    deriv = derivative_coefficients(pot.coefficients)
    # np.roots wants highest-degree first and no leading zeros
    rev = list(reversed(deriv))
    while rev and rev[0] == 0.0:
        rev.pop(0)
    if not rev or len(rev) == 1:
        return []
    roots = np.roots(rev)
    minima = []
    for r in roots:
        if abs(r.imag) > 1e-9 * max(1.0, abs(r)):
            continue
        q = float(r.real)
        if eval_curvature(pot, q) > 1e-12:
            minima.append(q)
    minima.sort()
    # collapse numerically duplicated roots
    out = []
    for q in minima:
        if not out or abs(q - out[-1]) > 1e-9 * max(1.0, abs(q)):
            out.append(q)
    return out


def harmonic(omega: float = 1.0, mass: float = 1.0) -> PotentialSpec:
    """V(q) = m omega^2 q^2 / 2."""
    return PotentialSpec((0.0, 0.0, 0.5 * mass * omega**2), mass=mass)


def double_well(a: float = 0.5, b: float = 0.1, mass: float = 1.0) -> PotentialSpec:
    """V(q) = -a q^2 + b q^4, the shallow double well used throughout."""
    return PotentialSpec((0.0, 0.0, -a, 0.0, b), mass=mass)


def barrier_height(pot: PotentialSpec) -> float:
    """V at the origin minus V at the deepest minimum (0 for single wells)."""
    minima = classical_minima(pot)
    if not minima:
        return 0.0
    vmin = min(eval_potential(pot, q) for q in minima)
    return eval_potential(pot, 0.0) - vmin


def curvature_scale(pot: PotentialSpec, span: float) -> float:
    """max(1, max |V''| on [-span, span]); sets sampler time scales."""
    q = np.linspace(-span, span, 201)
    return max(1.0, float(np.max(np.abs(eval_curvature(pot, q)))))
