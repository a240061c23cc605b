"""Real-time quantum correlation functions for 1D systems.

Three routes to the position autocorrelation of a particle in a
polynomial potential at finite temperature:

* an exact eigensolver reference (`epac.exact`),
* centroid molecular dynamics on the effective classical potential
  sampled by path-integral molecular dynamics (`epac.pimd`,
  `epac.centroid_dynamics`),
* effective potential analytic continuation: the standard effective
  potential from a Legendre transform of the generating function, and a
  closed-form correlation from its curvature
  (`epac.effective_potential`, `epac.analytic_continuation`).

Fourier-space tools live in `epac.spectra`; the CLI in `epac.cli`.
"""

from .analytic_continuation import (
    EpacParameters,
    epac2_correlation,
    epac_correlation,
    epac_spectral_function,
    epac_spectrum,
    epac_zero_temperature,
)
from .centroid_dynamics import (
    CentroidEnsemble,
    centroid_correlation,
    propagate_centroid,
    sample_initial_centroids,
)
from .effective_potential import (
    EffectivePotentialCurve,
    EffectiveFrequency,
    ForceFit,
    GeneratingFunction,
    convex_conjugate,
    effective_frequency,
    fit_force_polynomial,
    generating_function_from_ecp,
    integrate_to_ecp,
    legendre_transform,
    standard_potential_pipeline,
)
from .exact import (
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
from .pimd import (
    ForceTable,
    PathState,
    SamplerConfig,
    ThermostatChain,
    centroid_force_grid,
    centroid_variance_estimate,
    inverse_normal_mode_transform,
    normal_mode_transform,
    quasiparticle_potential,
    sample_constrained,
)
from .potentials import (
    PotentialSpec,
    SystemParams,
    classical_minima,
    double_well,
    eval_force,
    eval_potential,
    harmonic,
)
from .series import CorrelationSeries, SpectralLines, SpectrumEstimate
from .spectra import (
    canonical_to_standard,
    extract_peaks,
    fourier_transform_series,
    kubo_factor,
)

__version__ = "0.1.0"
