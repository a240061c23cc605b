import math

import numpy as np
import pytest

from epac.errors import BoundaryLeak, NotConverged, TruncationError
from epac.exact import (
    DEFAULT_GRID,
    DOUBLE_WELL_GRID,
    EigenSystem,
    GridSpec,
    exact_canonical_correlation,
    exact_correlation,
    exact_spectrum,
    harmonic_reference,
    solve_eigensystem,
    tilted_generating_function,
    zero_temperature_correlation,
)
from epac.potentials import SystemParams, double_well, harmonic
from epac.spectra import kubo_factor

SYS1 = SystemParams(beta=1.0)


class TestSolver:
    def test_harmonic_spectrum_default_grid(self):
        eig = solve_eigensystem(harmonic(), SYS1, DEFAULT_GRID, 10)
        assert np.max(np.abs(eig.energies - (np.arange(10) + 0.5))) < 1e-6

    def test_ladder_element(self):
        eig = solve_eigensystem(harmonic(), SYS1, DEFAULT_GRID, 4)
        assert eig.q_elements[0, 1] == pytest.approx(1 / math.sqrt(2), abs=1e-6)

    def test_orthonormality(self):
        eig = solve_eigensystem(double_well(), SYS1, DOUBLE_WELL_GRID, 12)
        h = eig.grid.spacing
        overlap = eig.wavefunctions @ eig.wavefunctions.T * h
        assert np.max(np.abs(overlap - np.eye(12))) < 1e-6

    def test_elements_symmetric(self):
        eig = solve_eigensystem(double_well(), SYS1, DOUBLE_WELL_GRID, 12)
        assert np.max(np.abs(eig.q_elements - eig.q_elements.T)) < 1e-10

    def test_parity_selection_rule(self):
        eig = solve_eigensystem(double_well(), SYS1, DOUBLE_WELL_GRID, 10)
        for m in range(10):
            for n in range(m % 2, 10, 2):
                assert abs(eig.q_elements[m, n]) < 1e-8

    def test_boundary_leak(self):
        with pytest.raises(BoundaryLeak):
            solve_eigensystem(harmonic(), SYS1, GridSpec(-2.0, 2.0, 64), 5)

    def test_not_converged(self):
        with pytest.raises(NotConverged):
            solve_eigensystem(harmonic(), SYS1, GridSpec(-8.0, 8.0, 64), 20)

    def test_convergence_order(self):
        # halving the spacing cuts the harmonic E_0 error by >= 3.5x
        errs = []
        for n in (1001, 2001):
            eig = solve_eigensystem(harmonic(), SYS1, GridSpec(-8, 8, n), 1)
            errs.append(abs(eig.energies[0] - 0.5))
        assert errs[0] / errs[1] >= 3.5

    def test_golden_eigensystem(self, golden):
        # h = 1e-3 grid: own discretization error ~6e-6 on the 8th state
        eig = solve_eigensystem(
            double_well(), SYS1, GridSpec(-8.0, 8.0, 16001), 8
        )
        assert np.max(np.abs(eig.energies - np.array(golden["energies"]))) < 1e-5
        assert (
            np.max(np.abs(np.abs(eig.q_elements) - np.array(golden["abs_q_elements"])))
            < 1e-6
        )
        # the frozen dual-stencil disagreement stayed within target
        assert golden["stencil_energy_disagreement"] < 1.5e-6
        assert golden["stencil_element_disagreement"] < 1e-6

    def test_independent_stencils_agree(self):
        fine3 = solve_eigensystem(double_well(), SYS1, GridSpec(-8, 8, 40001), 6)
        coarse5 = solve_eigensystem(
            double_well(), SYS1, GridSpec(-8, 8, 4001), 6, stencil=5
        )
        assert np.max(np.abs(fine3.energies - coarse5.energies)) < 1e-5


class TestExactCorrelation:
    def test_harmonic_t0_closed_form(self):
        ref = harmonic_reference(32)
        c0 = exact_correlation(ref, 1.0, [0.0]).values[0]
        assert c0.real == pytest.approx(0.5 / math.tanh(0.5), abs=1e-8)
        assert abs(c0.imag) < 1e-12

    def test_harmonic_full_series_closed_form(self):
        # eigensum against the analytic single-mode expression
        ref = harmonic_reference(32)
        t = np.linspace(0.0, 10.0, 101)
        series = exact_correlation(ref, 1.0, t)
        expected = 0.5 / math.tanh(0.5) * np.cos(t) - 0.5j * np.sin(t)
        assert np.max(np.abs(series.values - expected)) < 1e-8

    def test_t0_imaginary_part_zero(self, dw_eigensystem):
        series = exact_correlation(dw_eigensystem(1.0), 1.0, [0.0])
        assert abs(series.values[0].imag) < 1e-12

    def test_truncation_guard(self):
        ref = harmonic_reference(4)
        with pytest.raises(TruncationError):
            exact_correlation(ref, 0.5, [0.0])

    def test_golden_series(self, golden, dw_eigensystem):
        # tolerance set by the working grid's own h^2 phase drift at t=10
        ref = golden["series"]["exact_beta1"]
        series = exact_correlation(dw_eigensystem(1.0), 1.0, ref["times"])
        assert np.max(np.abs(series.values.real - np.array(ref["re"]))) < 2e-4
        assert np.max(np.abs(series.values.imag - np.array(ref["im"]))) < 2e-4


class TestCanonicalCorrelation:
    def test_diagonal_weight_is_unity(self):
        # the x -> 0 limit of (1 - e^-x)/x enters diagonal terms as 1
        from epac.exact import _canonical_weights

        e = np.array([0.3, 0.3 + 1e-12, 1.7])
        w = _canonical_weights(e, 2.0)
        boltz = np.exp(-2.0 * (e - e[0]))
        boltz /= boltz.sum()
        assert w[0, 0] == pytest.approx(boltz[0], rel=1e-12)
        assert w[0, 1] == pytest.approx(boltz[0], rel=1e-6)

    def test_harmonic_value(self):
        # Kubo-transformed harmonic correlation at t=0 is 1/(beta m w^2)
        ref = harmonic_reference(32)
        t = np.linspace(0.0, 8.0, 81)
        series = exact_canonical_correlation(ref, 1.0, t)
        assert np.max(np.abs(series.values - np.cos(t))) < 1e-8

    def test_real_for_symmetric(self, dw_eigensystem):
        t = np.linspace(0.0, 15.0, 61)
        series = exact_canonical_correlation(dw_eigensystem(10.0), 10.0, t)
        assert np.max(np.abs(series.values.imag)) < 1e-10

    def test_golden_series_beta10(self, golden, dw_eigensystem):
        ref = golden["series"]["canonical_beta10"]
        series = exact_canonical_correlation(dw_eigensystem(10.0), 10.0, ref["times"])
        assert np.max(np.abs(series.values.real - np.array(ref["re"]))) < 5e-5


class TestSpectrum:
    def test_harmonic_selection_rule(self):
        lines = exact_spectrum(harmonic_reference(32), 1.0)
        assert np.allclose(np.abs(lines.frequencies), 1.0)

    def test_detailed_balance(self, dw_eigensystem):
        lines = exact_spectrum(dw_eigensystem(10.0), 10.0)
        checked = 0
        for f, w in zip(lines.frequencies, lines.weights):
            # skip pairs whose mirror sits below the line-weight floor
            if f <= 0 or w * math.exp(-10.0 * f) < 1e-11:
                continue
            mirror = lines.weight_at(-f, tol=1e-9)
            assert mirror / w == pytest.approx(math.exp(-10.0 * f), abs=1e-10)
            checked += 1
        assert checked >= 2

    def test_dominant_line_at_first_gap_beta10(self, dw_eigensystem):
        eig = dw_eigensystem(10.0)
        lines = exact_spectrum(eig, 10.0)
        gap = eig.energies[1] - eig.energies[0]
        dominant = lines.frequencies[np.argmax(lines.weights)]
        assert dominant == pytest.approx(gap, abs=1e-9)

    def test_parseval_t0(self, dw_eigensystem):
        eig = dw_eigensystem(1.0)
        lines = exact_spectrum(eig, 1.0)
        c0 = exact_correlation(eig, 1.0, [0.0]).values[0].real
        assert lines.weights.sum() / (2 * math.pi) == pytest.approx(c0, abs=1e-8)

    def test_standard_equals_kubo_factor_times_canonical(self, dw_eigensystem):
        # line-by-line spectral identity between the two spectrum kinds
        eig = dw_eigensystem(1.0)
        std = exact_spectrum(eig, 1.0)
        can = exact_spectrum(eig, 1.0, kind="canonical")
        for f, w in zip(can.frequencies, can.weights):
            target = std.weight_at(f, tol=1e-9)
            if abs(target) < 1e-10:
                continue
            assert kubo_factor(f, 1.0) * w == pytest.approx(target, abs=1e-8)


class TestZeroTemperature:
    def test_harmonic_single_mode(self):
        ref = harmonic_reference(8)
        t = np.linspace(0.0, 5.0, 26)
        series = zero_temperature_correlation(ref, t)
        assert np.max(np.abs(series.values - 0.5 * np.exp(-1j * t))) < 1e-12

    def test_t0_is_ground_state_q2(self, dw_eigensystem):
        eig = dw_eigensystem(1.0)
        series = zero_temperature_correlation(eig, [0.0])
        q = eig.grid.points()
        direct = np.sum(eig.wavefunctions[0] ** 2 * q**2) * eig.grid.spacing
        assert series.values[0].real == pytest.approx(direct, abs=1e-8)

    def test_golden(self, golden, dw_eigensystem):
        ref = golden["series"]["zero_temperature"]
        series = zero_temperature_correlation(dw_eigensystem(1.0), ref["times"])
        assert np.max(np.abs(series.values.real - np.array(ref["re"]))) < 2e-4
        assert np.max(np.abs(series.values.imag - np.array(ref["im"]))) < 2e-4


class TestTiltedGeneratingFunction:
    GRID = GridSpec(-12.0, 12.0, 3001)

    def test_parity(self):
        w_plus = tilted_generating_function(double_well(), SYS1, self.GRID, 0.8)
        w_minus = tilted_generating_function(double_well(), SYS1, self.GRID, -0.8)
        assert w_plus == pytest.approx(w_minus, abs=1e-10)

    def test_harmonic_shift(self):
        # a linear tilt shifts every level by -J^2/2 m w^2
        w1 = tilted_generating_function(harmonic(), SYS1, self.GRID, 1.0)
        w0 = tilted_generating_function(harmonic(), SYS1, self.GRID, 0.0)
        assert w1 - w0 == pytest.approx(0.5, abs=1e-8)

    def test_slope_vanishes_at_zero_source(self):
        h = 1e-3
        wp = tilted_generating_function(double_well(), SYS1, self.GRID, h)
        wm = tilted_generating_function(double_well(), SYS1, self.GRID, -h)
        assert abs(wp - wm) / (2 * h) < 1e-9

    def test_tilt_outside_grid(self):
        small = GridSpec(-3.0, 3.0, 301)
        with pytest.raises(BoundaryLeak):
            tilted_generating_function(harmonic(), SYS1, small, 4.0)
