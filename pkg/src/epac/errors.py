"""Exception types shared across the package."""


class EpacError(Exception):
    """Base class for numerical and configuration failures."""


class ConfigError(EpacError):
    """Invalid or missing configuration."""


class DegreeTooHigh(EpacError):
    """Polynomial degree outside the supported root-finding range."""


class BoundaryLeak(EpacError):
    """Wavefunction amplitude reaches the grid boundary; widen the grid."""


class NotConverged(EpacError):
    """Requested eigenstates exceed what the grid can resolve."""


class TruncationError(EpacError):
    """Thermal sum truncated before the Boltzmann tail is negligible."""


class ThermostatDivergence(EpacError):
    """Extended-system conserved quantity drifted beyond tolerance."""


class IllConditioned(EpacError):
    """Least-squares system too ill-conditioned to trust."""


class BoundaryDominated(EpacError):
    """Integrand maximum sits too close to the integration edge."""


class SupremumAtEdge(EpacError):
    """Legendre supremum attained at the end of the source grid."""


class FlatCurvature(EpacError):
    """Potential curvature too small to define an oscillation frequency."""


class MinimumAtEdge(EpacError):
    """Curve minimum sits at the edge of the tabulated grid."""


class EnergyDrift(EpacError):
    """Microcanonical propagation violated energy conservation."""


class NonuniformGrid(EpacError):
    """Operation requires a uniformly spaced grid."""
