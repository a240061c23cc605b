"""Effective potentials: force fits, generating function, Legendre transform.

The sampled centroid mean force is fitted to a polynomial (odd basis for
symmetric systems) by weighted least squares, integrated to the
effective classical potential, converted to the generating function by
a stabilized log-sum-exp quadrature over the source strength J, and
Legendre-transformed to the standard effective potential whose
curvature at the minimum defines the single oscillation frequency used
by the analytic continuation.

Statistical errors propagate out of the force-fit covariance: linearly
for the classical curve, by coefficient-ensemble resampling through the
nonlinear quadrature/Legendre stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline
from scipy.special import logsumexp

from .errors import (
    BoundaryDominated,
    FlatCurvature,
    IllConditioned,
    MinimumAtEdge,
    SupremumAtEdge,
)
from .pimd import ForceTable

CLASSICAL = "classical"
STANDARD = "standard"

CONDITION_LIMIT = 1e12
# quadrature tails are cut where the integrand has fallen by e^-45
# (~3e-20 relative, beyond double precision); keeps the range local so
# the polynomial extrapolation is only trusted where it has to be
EXPONENT_DECAY = 45.0


@dataclass(frozen=True)
class ForceFit:
    """Weighted least-squares polynomial fit of a centroid force table."""

    poly: Polynomial
    powers: tuple
    coefficients: np.ndarray
    covariance: np.ndarray
    chi2_dof: float
    beta: float

    def basis_polynomials(self):
        """One Polynomial per fitted coefficient, same domain mapping."""
        out = []
        for p in self.powers:
            coef = np.zeros(p + 1)
            coef[p] = 1.0
            out.append(Polynomial(coef, domain=self.poly.domain))
        return out

    def sample_coefficients(self, rng, n: int) -> np.ndarray:
        """Draw coefficient vectors from the fit covariance."""
        return rng.multivariate_normal(
            self.coefficients, self.covariance, size=n, method="svd"
        )

    def poly_from_coefficients(self, coeffs) -> Polynomial:
        full = np.zeros(max(self.powers) + 1)
        for p, c in zip(self.powers, coeffs):
            full[p] = c
        return Polynomial(full, domain=self.poly.domain)


def fit_force_polynomial(
    table: ForceTable, degree: int, symmetric: bool = False
) -> ForceFit:
    """Fit F(q_c) to a polynomial with weights 1/stderr^2.

    For symmetric systems only odd powers enter the basis.  The design
    matrix lives on a [-1, 1] mapped abscissa so high degrees stay
    well conditioned; IllConditioned signals a degree the grid cannot
    support.
    """
    q = table.centroids
    if degree >= q.size:
        raise ValueError("fit degree must be below the number of grid points")
    if degree < 1:
        raise ValueError("fit degree must be at least 1")
    domain = (float(q[0]), float(q[-1]))
    off, scl = Polynomial([0.0], domain=domain).mapparms()
    y = off + scl * q
    powers = tuple(range(1, degree + 1, 2)) if symmetric else tuple(range(degree + 1))
    design = np.column_stack([y**p for p in powers])
    weights = 1.0 / table.stderr
    wx = design * weights[:, None]
    wf = table.force * weights
    cond = np.linalg.cond(wx)
    if cond > CONDITION_LIMIT:
        raise IllConditioned(
            f"condition number {cond:.2e} > {CONDITION_LIMIT:.0e}; lower the degree"
        )
    coeffs, _, _, _ = np.linalg.lstsq(wx, wf, rcond=None)
    residual = wf - wx @ coeffs
    dof = max(1, q.size - len(powers))
    chi2_dof = float(residual @ residual) / dof
    covariance = np.linalg.inv(wx.T @ wx)
    full = np.zeros(degree + 1)
    for p, c in zip(powers, coeffs):
        full[p] = c
    return ForceFit(
        poly=Polynomial(full, domain=domain),
        powers=powers,
        coefficients=coeffs,
        covariance=covariance,
        chi2_dof=chi2_dof,
        beta=table.beta,
    )


@dataclass(frozen=True)
class EffectivePotentialCurve:
    """Tabulated effective potential, classical or standard kind.

    Classical curves keep the fitted force polynomial so they can be
    evaluated anywhere (quadrature needs the tails); standard curves are
    grid-only and interpolated.  The anchor note records the additive
    convention.
    """

    kind: str
    beta: float
    grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray = None
    poly: Polynomial = None
    force_poly: Polynomial = None
    anchor: str = ""

    def __post_init__(self):
        if self.kind not in (CLASSICAL, STANDARD):
            raise ValueError(f"unknown curve kind {self.kind!r}")
        g = np.array(self.grid, dtype=float)
        v = np.array(self.values, dtype=float)
        if g.ndim != 1 or v.shape != g.shape:
            raise ValueError("grid and values must be matching 1-D arrays")
        if not np.all(np.diff(g) > 0):
            raise ValueError("grid must be strictly ascending")
        g.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        if self.stderr is not None:
            e = np.array(self.stderr, dtype=float)
            e.setflags(write=False)
            object.__setattr__(self, "stderr", e)

    def evaluate(self, q):
        """Curve value at arbitrary q (polynomial if available)."""
        if self.poly is not None:
            return self.poly(q)
        return CubicSpline(self.grid, self.values)(q)

    def force(self, q):
        """-dV/dq at arbitrary q; needs the polynomial representation."""
        if self.force_poly is not None:
            return self.force_poly(q)
        if self.poly is not None:
            return -self.poly.deriv()(q)
        return -CubicSpline(self.grid, self.values)(q, 1)

    @classmethod
    def from_potential_polynomial(
        cls, poly: Polynomial, beta: float, grid, kind: str = CLASSICAL
    ) -> "EffectivePotentialCurve":
        """Build a curve from a known potential polynomial (tests, demos)."""
        grid = np.asarray(grid, dtype=float)
        return cls(
            kind=kind,
            beta=beta,
            grid=grid,
            values=poly(grid),
            poly=poly,
            force_poly=-poly.deriv(),
            anchor="as given",
        )


def integrate_to_ecp(
    fit: ForceFit, anchor_q: float = 0.0, grid=None
) -> EffectivePotentialCurve:
    """Integrate a fitted force to the effective classical potential.

    V(q) = -int_anchor^q F(s) ds, termwise antiderivative, with
    V(anchor) = 0 exactly.  The standard error band follows from the
    force-fit coefficient covariance.
    """
    vpoly = -fit.poly.integ()
    vpoly -= vpoly(anchor_q)
    if grid is None:
        lo, hi = fit.poly.domain
        grid = np.linspace(lo, hi, 201)
    grid = np.asarray(grid, dtype=float)
    basis_v = []
    for b in fit.basis_polynomials():
        ib = -b.integ()
        basis_v.append(ib(grid) - ib(anchor_q))
    basis_v = np.array(basis_v)
    variance = np.einsum("ig,ij,jg->g", basis_v, fit.covariance, basis_v)
    return EffectivePotentialCurve(
        kind=CLASSICAL,
        beta=fit.beta,
        grid=grid,
        values=vpoly(grid),
        stderr=np.sqrt(np.maximum(variance, 0.0)),
        poly=vpoly,
        force_poly=fit.poly,
        anchor=f"V({anchor_q:g}) = 0",
    )


@dataclass(frozen=True)
class GeneratingFunction:
    """w(J) tabulated on a source grid, normalized to w(0) = 0."""

    source_grid: np.ndarray
    values: np.ndarray
    beta: float
    tail_mass: float = 0.0
    stderr: np.ndarray = None

    def __post_init__(self):
        j = np.array(self.source_grid, dtype=float)
        v = np.array(self.values, dtype=float)
        if j.ndim != 1 or v.shape != j.shape:
            raise ValueError("source grid and values must match")
        if not np.all(np.diff(j) > 0):
            raise ValueError("source grid must be strictly ascending")
        j.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "source_grid", j)
        object.__setattr__(self, "values", v)


def _generating_values(
    potential_poly: Polynomial,
    beta: float,
    j_grid: np.ndarray,
    window: tuple,
    n_quad: int,
    max_extension: float,
):
    """Core quadrature for w(J); returns (values incl. J=0 norm, tail mass)."""
    half = 0.5 * (window[1] - window[0])
    center = 0.5 * (window[1] + window[0])
    factor = 2.0
    while True:
        lo = center - factor * half
        hi = center + factor * half
        q = np.linspace(lo, hi, n_quad)
        v = potential_poly(q)
        j_all = np.concatenate(([0.0], j_grid))
        exponent = beta * (j_all[:, None] * q[None, :] - v[None, :])
        peak = exponent.max(axis=1)
        decayed = (exponent[:, 0] < peak - EXPONENT_DECAY) & (
            exponent[:, -1] < peak - EXPONENT_DECAY
        )
        if np.all(decayed) or factor >= max_extension:
            break
        factor *= 1.5
    arg = np.argmax(exponent, axis=1)
    margin = max(2, int(0.05 * n_quad))
    if np.any(arg < margin) or np.any(arg >= n_quad - margin):
        bad = j_all[(arg < margin) | (arg >= n_quad - margin)]
        raise BoundaryDominated(
            f"integrand maximum at the edge for J = {bad[np.argmax(np.abs(bad))]:g}; "
            "the tabulated force range cannot support this source strength"
        )
    dq = q[1] - q[0]
    log_w = logsumexp(exponent, axis=1) + math.log(dq)
    values = (log_w - log_w[0]) / beta
    inside = (q >= window[0]) & (q <= window[1])
    rel = np.exp(exponent - peak[:, None])
    tail = 1.0 - rel[:, inside].sum(axis=1) / rel.sum(axis=1)
    return values[1:], float(tail.max())


def generating_function_from_ecp(
    ecp: EffectivePotentialCurve,
    j_grid,
    n_quad: int = 4001,
    max_extension: float = 8.0,
) -> GeneratingFunction:
    """w(J) = (1/beta) log int dq e^{beta (J q - V(q))}, with w(0) = 0.

    Log-sum-exp quadrature on an adaptively extended range; the fitted
    polynomial extrapolates the curve beyond the sampled window, and
    tail_mass records how much integrand mass that extrapolation
    carries (flag for the caller when it exceeds ~1%).
    """
    if ecp.kind != CLASSICAL:
        raise ValueError("generating function needs the classical curve")
    if ecp.poly is None:
        raise ValueError("curve lacks a polynomial representation")
    j_grid = np.asarray(j_grid, dtype=float)
    values, tail = _generating_values(
        ecp.poly,
        ecp.beta,
        j_grid,
        (float(ecp.grid[0]), float(ecp.grid[-1])),
        n_quad,
        max_extension,
    )
    return GeneratingFunction(
        source_grid=j_grid, values=values, beta=ecp.beta, tail_mass=tail
    )


_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(fn, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section maximum of a unimodal function on [lo, hi]."""
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > tol * (abs(a) + abs(b) + 1.0):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = fn(d)
    return max(fc, fd)


def convex_conjugate(x: np.ndarray, f: np.ndarray, y_grid: np.ndarray) -> np.ndarray:
    """sup_x { x y - f(x) } per y, golden-section refined on a spline.

    Unimodal by convexity of f, so the neighbors of the grid argmax
    bracket the supremum; SupremumAtEdge asks the caller for a wider
    x grid.
    """
    spline = CubicSpline(x, f)
    out = np.empty(y_grid.size)
    for k, yv in enumerate(np.asarray(y_grid, dtype=float)):
        vals = x * yv - f
        i = int(np.argmax(vals))
        if i == 0 or i == x.size - 1:
            raise SupremumAtEdge(
                f"supremum for y = {yv:g} at the grid edge; extend the grid"
            )
        refined = _golden_max(
            lambda s: s * yv - float(spline(s)), x[i - 1], x[i + 1]
        )
        out[k] = max(refined, vals[i])
    return out


def legendre_transform(w: GeneratingFunction, q_grid) -> EffectivePotentialCurve:
    """Standard effective potential V(Q) = sup_J { J Q - w(J) }.

    Reported with V(Q_min) = 0; the anchor note keeps the applied shift
    so curves with different conventions can be re-aligned.
    """
    q_grid = np.asarray(q_grid, dtype=float)
    values = convex_conjugate(w.source_grid, w.values, q_grid)
    shift = float(values.min())
    return EffectivePotentialCurve(
        kind=STANDARD,
        beta=w.beta,
        grid=q_grid,
        values=values - shift,
        anchor=f"V(Q_min) = 0 (shifted by {shift:.6g})",
    )


@dataclass(frozen=True)
class EffectiveFrequency:
    """Oscillation frequency from the curvature at the curve minimum."""

    omega: float
    q_min: float
    window_spread: float
    stat_error: float = 0.0


def effective_frequency(
    curve: EffectivePotentialCurve,
    mass: float,
    window: int = 5,
    flat_tol: float = 1e-10,
) -> EffectiveFrequency:
    """omega = sqrt(V''(Q_min)/m) from a local quadratic fit.

    Q_min comes from parabolic interpolation of the discrete minimum;
    the curvature from a least-squares parabola over +-window points.
    The spread over window +-1 sizes is reported as a systematic error
    bar contribution.
    """
    v = curve.values
    q = curve.grid
    i = int(np.argmin(v))
    if i == 0 or i == v.size - 1:
        raise MinimumAtEdge("curve minimum at the grid edge")

    def _curvature(half_width: int):
        lo = max(0, i - half_width)
        hi = min(v.size, i + half_width + 1)
        if hi - lo < 3:
            raise MinimumAtEdge("not enough points around the minimum")
        coeffs = np.polynomial.polynomial.polyfit(q[lo:hi] - q[i], v[lo:hi], 2)
        return 2.0 * coeffs[2]

    denom = v[i - 1] - 2.0 * v[i] + v[i + 1]
    if denom <= flat_tol:
        raise FlatCurvature("discrete minimum has no usable curvature")
    q_min = q[i] + 0.5 * (v[i - 1] - v[i + 1]) / denom * (q[i + 1] - q[i])
    curvature = _curvature(window)
    if curvature <= flat_tol:
        raise FlatCurvature(f"curvature {curvature:.2e} below {flat_tol:.0e}")
    omega = math.sqrt(curvature / mass)
    spread = 0.0
    for alt in (window - 1, window + 1):
        if alt >= 2:
            c = _curvature(alt)
            if c > 0:
                spread = max(spread, abs(math.sqrt(c / mass) - omega))
    return EffectiveFrequency(
        omega=omega, q_min=float(q_min), window_spread=spread
    )


@dataclass(frozen=True)
class StandardPotentialResult:
    """Everything the Legendre stage produces for one temperature."""

    classical: EffectivePotentialCurve
    generating: GeneratingFunction
    standard: EffectivePotentialCurve
    frequency: EffectiveFrequency


def standard_potential_pipeline(
    fit: ForceFit,
    j_grid,
    q_grid,
    anchor_q: float = 0.0,
    mass: float = 1.0,
    error_samples: int = 16,
    error_seed: int = 7,
    curvature_window: int = 5,
) -> StandardPotentialResult:
    """Force fit -> classical curve -> w(J) -> V(Q) -> omega, with errors.

    Statistical error bands on the standard curve and on omega come from
    re-running the quadrature and transform over an ensemble of force
    coefficient vectors drawn from the fit covariance.  When the
    supremum search hits the source-grid edge the J range is widened
    automatically (same spacing) and the quadrature rerun.
    """
    ecp = integrate_to_ecp(fit, anchor_q)
    j_grid = np.asarray(j_grid, dtype=float)
    for _ in range(5):
        w = generating_function_from_ecp(ecp, j_grid)
        try:
            curve = legendre_transform(w, q_grid)
            break
        except SupremumAtEdge:
            spacing = j_grid[1] - j_grid[0]
            half = 1.5 * (j_grid[-1] - j_grid[0]) / 2.0
            center = 0.5 * (j_grid[0] + j_grid[-1])
            n = 2 * int(round(half / spacing)) + 1
            j_grid = center + spacing * (np.arange(n) - n // 2)
    else:
        raise SupremumAtEdge(
            "supremum still at the source-grid edge after repeated extension"
        )
    freq = effective_frequency(curve, mass, window=curvature_window)
    stderr = None
    stat_err = 0.0
    if error_samples > 1 and np.any(np.diag(fit.covariance) > 0):
        rng = np.random.default_rng(error_seed)
        draws = fit.sample_coefficients(rng, error_samples)
        member_values = []
        member_omegas = []
        window = (float(ecp.grid[0]), float(ecp.grid[-1]))
        for row in draws:
            poly = fit.poly_from_coefficients(row)
            vpoly = -poly.integ()
            vpoly -= vpoly(anchor_q)
            try:
                w_vals, _ = _generating_values(
                    vpoly, fit.beta, w.source_grid, window, 2001, 8.0
                )
                v_vals = convex_conjugate(
                    w.source_grid, w_vals, np.asarray(q_grid, dtype=float)
                )
            except (BoundaryDominated, SupremumAtEdge):
                continue
            v_vals = v_vals - v_vals.min()
            member_values.append(v_vals)
            member_curve = EffectivePotentialCurve(
                kind=STANDARD, beta=fit.beta, grid=q_grid, values=v_vals
            )
            try:
                member_omegas.append(
                    effective_frequency(
                        member_curve, mass, window=curvature_window
                    ).omega
                )
            except (FlatCurvature, MinimumAtEdge):
                continue
        if len(member_values) >= 2:
            stderr = np.std(np.array(member_values), axis=0, ddof=1)
            curve = EffectivePotentialCurve(
                kind=STANDARD,
                beta=curve.beta,
                grid=curve.grid,
                values=curve.values,
                stderr=stderr,
                anchor=curve.anchor,
            )
        if len(member_omegas) >= 2:
            stat_err = float(np.std(member_omegas, ddof=1))
    freq = EffectiveFrequency(
        omega=freq.omega,
        q_min=freq.q_min,
        window_spread=freq.window_spread,
        stat_error=stat_err,
    )
    return StandardPotentialResult(
        classical=ecp, generating=w, standard=curve, frequency=freq
    )
