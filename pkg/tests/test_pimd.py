import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epac.errors import ThermostatDivergence
from epac.exact import exact_canonical_correlation
from epac.pimd import (
    ForceTable,
    PathState,
    SamplerConfig,
    ThermostatChain,
    _mode_data,
    _NormalModeSampler,
    _spawn_rngs,
    centroid_force_grid,
    centroid_variance_estimate,
    inverse_normal_mode_transform,
    normal_mode_transform,
    quasiparticle_potential,
    sample_constrained,
)
from epac.potentials import SystemParams, double_well, eval_potential, harmonic

SYS1 = SystemParams(beta=1.0)


class TestNormalModes:
    def test_matrix_orthogonal(self):
        for P in (2, 3, 8, 33):
            matrix, _ = _mode_data(P)
            assert np.max(np.abs(matrix @ matrix.T - np.eye(P))) < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 33), st.integers(0, 2**31))
    def test_round_trip(self, P, seed):
        beads = np.random.default_rng(seed).normal(size=P)
        back = inverse_normal_mode_transform(normal_mode_transform(beads))
        assert np.max(np.abs(back - beads)) < 1e-12

    def test_constant_path_single_mode(self):
        modes = normal_mode_transform(np.full(16, 1.3))
        assert modes[0] == pytest.approx(1.3 * math.sqrt(16))
        assert np.max(np.abs(modes[1:])) < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 24), st.integers(0, 2**31))
    def test_spring_quadratic_form(self, P, seed):
        beads = np.random.default_rng(seed).normal(size=P)
        _, lam = _mode_data(P)
        modes = normal_mode_transform(beads)
        diff = beads - np.roll(beads, -1)
        assert np.sum(diff**2) == pytest.approx(
            float(np.sum(lam * modes**2)), rel=1e-10, abs=1e-10
        )


class TestQuasiparticlePotential:
    def test_collapsed_path(self):
        pot = double_well()
        beads = np.full(12, 0.8)
        assert quasiparticle_potential(pot, SYS1, 12, beads) == pytest.approx(
            eval_potential(pot, 0.8), abs=1e-12
        )

    def test_two_beads_explicit(self):
        pot = harmonic()
        a, b = 0.4, -0.9
        expected = (
            pot.mass * 2 / (2 * SYS1.beta**2) * 2 * (a - b) ** 2
            + (eval_potential(pot, a) + eval_potential(pot, b)) / 2
        )
        got = quasiparticle_potential(pot, SYS1, 2, np.array([a, b]))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_against_naive_loop(self):
        pot = double_well()
        rng = np.random.default_rng(11)
        beads = rng.normal(size=8)
        pref = pot.mass * 8 / (2 * (SYS1.beta * SYS1.hbar) ** 2)
        naive = 0.0
        for j in range(8):
            naive += pref * (beads[j] - beads[(j + 1) % 8]) ** 2
            naive += eval_potential(pot, beads[j]) / 8
        got = quasiparticle_potential(pot, SYS1, 8, beads)
        assert got == pytest.approx(naive, abs=1e-12)


class TestStateTypes:
    def test_pathstate_centroid_is_zero_mode(self):
        rng = np.random.default_rng(3)
        state = PathState(beads=rng.normal(size=16), mode_momenta=np.zeros(16))
        assert state.centroid == pytest.approx(
            state.normal_modes[0] / math.sqrt(16), abs=1e-12
        )
        assert state.trotter_number == 16

    def test_chain_validation(self):
        with pytest.raises(ValueError):
            ThermostatChain(np.zeros((1, 2, 1)), np.zeros((1, 2, 1)), np.ones(1))

    def test_force_table_validation(self):
        with pytest.raises(ValueError):
            ForceTable(
                centroids=np.array([0.0, 1.0]),
                force=np.array([0.0, -1.0]),
                stderr=np.array([0.0, 1e-3]),  # zero stderr forbidden
                n_samples=np.array([10, 10]),
                beta=1.0,
                trotter_number=8,
            )
        with pytest.raises(ValueError):
            ForceTable(
                centroids=np.array([1.0, 0.0]),  # not ascending
                force=np.array([0.0, -1.0]),
                stderr=np.array([1e-3, 1e-3]),
                n_samples=np.array([10, 10]),
                beta=1.0,
                trotter_number=8,
            )


FAST = SamplerConfig(production_steps=2000, equilibration_steps=500, seed=9)


class TestConstrainedSampling:
    def test_harmonic_force_exact(self):
        # the harmonic estimator is -m w^2 q_c identically, so even a
        # short run is exact to machine precision
        est = sample_constrained(harmonic(), SYS1, 32, 0.7, FAST)
        assert est.value == pytest.approx(-0.7, abs=1e-12)

    def test_symmetric_zero(self):
        est = sample_constrained(double_well(), SYS1, 16, 0.0, FAST)
        assert abs(est.value) < 3 * est.stderr + 1e-3

    def test_constraint_held_exactly(self):
        sampler = _NormalModeSampler(
            double_well(), SYS1, 16, FAST,
            centroids=np.array([0.4]), rngs=_spawn_rngs(1, 1),
        )
        sampler.run(500)
        assert abs(sampler.centroids()[0] - 0.4) < 1e-12

    def test_grid_determinism(self):
        grid = np.linspace(-1.5, 1.5, 5)
        t1 = centroid_force_grid(double_well(), SYS1, 16, grid, FAST)
        t2 = centroid_force_grid(double_well(), SYS1, 16, grid, FAST)
        assert np.array_equal(t1.force, t2.force)
        assert np.array_equal(t1.stderr, t2.stderr)

    def test_antisymmetric_force(self):
        grid = np.linspace(-1.2, 1.2, 5)
        table = centroid_force_grid(
            double_well(), SYS1, 16, grid,
            SamplerConfig(production_steps=8000, equilibration_steps=1500, seed=21),
        )
        for i in range(5):
            j = 4 - i
            sigma = math.hypot(table.stderr[i], table.stderr[j])
            assert abs(table.force[i] + table.force[j]) < 3 * sigma + 5e-3

    def test_divergence_detected(self):
        # an absurdly long step makes the chain integration blow up
        bad = SamplerConfig(
            production_steps=4000,
            equilibration_steps=0,
            steps_per_period=2,
            seed=2,
            drift_check_interval=200,
        )
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(ThermostatDivergence):
                sample_constrained(double_well(), SYS1, 16, 1.0, bad)


class TestConservedQuantity:
    def test_drift_below_tolerance_1e5_steps(self):
        # spec invariant at the test step size (the production default)
        cfg = SamplerConfig(production_steps=100000, equilibration_steps=1000, seed=5)
        sampler = _NormalModeSampler(
            double_well(), SYS1, 32, cfg,
            centroids=np.array([0.7]), rngs=_spawn_rngs(5, 1),
        )
        sampler.run(cfg.equilibration_steps)
        sampler._reference = None
        sampler.run(100000)
        assert sampler.max_drift() < 1e-4


def harmonic_position_variance_finite_p(P, beta, mass=1.0, omega=1.0, hbar=1.0):
    """Exact <q^2> of the P-bead ring polymer for a harmonic potential."""
    _, lam = _mode_data(P)
    kappa = mass * P * lam / (beta * hbar) ** 2
    return float(np.mean(1.0 / (beta * (kappa + mass * omega**2 / P))))


class TestUnconstrainedVariance:
    CFG = SamplerConfig(
        production_steps=30000, equilibration_steps=5000, seed=11, replicas=8
    )

    def test_harmonic_centroid_variance(self):
        var = centroid_variance_estimate(harmonic(), SYS1, 32, self.CFG)
        # the ring-polymer centroid variance is exactly classical
        assert var.centroid_sq.value == pytest.approx(
            1.0, abs=3 * var.centroid_sq.stderr
        )

    def test_harmonic_position_variance_matches_finite_p(self):
        var = centroid_variance_estimate(harmonic(), SYS1, 16, self.CFG)
        expected = harmonic_position_variance_finite_p(16, 1.0)
        assert var.position_sq.value == pytest.approx(
            expected, abs=3 * var.position_sq.stderr
        )

    def test_trotter_bias_decreases_monotonically(self):
        # the finite-P bias of <q^2> shrinks monotonically toward the
        # quantum value (the sampler reproduces the finite-P law above)
        exact = 0.5 / math.tanh(0.5)
        biases = [
            exact - harmonic_position_variance_finite_p(P, 1.0)
            for P in (8, 16, 32, 64)
        ]
        assert all(b > 0 for b in biases)
        assert all(a > b for a, b in zip(biases, biases[1:]))

    def test_classical_limit_trend(self):
        # beta -> 0: centroid variance approaches 1/(beta m w^2)
        beta = 0.25
        sys = SystemParams(beta=beta)
        var = centroid_variance_estimate(harmonic(), sys, 8, self.CFG)
        assert var.centroid_sq.value == pytest.approx(
            1.0 / beta, abs=3 * var.centroid_sq.stderr
        )

    def test_double_well_beta10_matches_oracle(self, dw_eigensystem):
        sys10 = SystemParams(beta=10.0)
        var = centroid_variance_estimate(double_well(), sys10, 64, self.CFG)
        oracle = exact_canonical_correlation(
            dw_eigensystem(10.0), 10.0, [0.0]
        ).values[0].real
        assert var.centroid_sq.value == pytest.approx(
            oracle, abs=3 * var.centroid_sq.stderr
        )


class TestForceSlope:
    def test_harmonic_fit_slope(self):
        from epac.effective_potential import fit_force_polynomial

        grid = np.linspace(-2.0, 2.0, 9)
        table = centroid_force_grid(harmonic(), SYS1, 32, grid, FAST)
        fit = fit_force_polynomial(table, degree=3, symmetric=True)
        slope = fit.poly.deriv()(0.0)
        assert slope == pytest.approx(-1.0, rel=0.02)
