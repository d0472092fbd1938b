"""Exception hierarchy shared by all modules.

Numerical failures are always raised as subclasses of FanningLabError so
callers (and the CLI) can distinguish bad input, degenerate geometry and
genuine arithmetic blow-ups.
"""


class FanningLabError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteValue(FanningLabError):
    """A computation produced NaN or infinity."""


class DimensionMismatch(FanningLabError):
    """Array shapes are inconsistent with the declared dimensions."""


class NotFanning(FanningLabError):
    """The block matrix [A | Adot] of a frame triple is numerically singular."""


class NotLagrangian(FanningLabError):
    """A plane that must be Lagrangian fails A^T Omega A = 0."""


class SingularTransform(FanningLabError):
    """A linear map required to be invertible is singular."""


class NotPositiveDefinite(FanningLabError):
    """A fundamental tensor (or Randers validity condition) is not positive."""


class NewtonDivergence(FanningLabError):
    """A Newton solve exhausted its iteration budget."""


class OutOfChart(FanningLabError):
    """A geodesic left the coordinate box of its metric."""


class DegenerateFlag(FanningLabError):
    """The two flag vectors are parallel."""


class NotUnitSpeed(FanningLabError):
    """An operation requiring F(v) = 1 received a non-unit vector."""


class InternalInconsistency(FanningLabError):
    """Two computation paths that must agree disagreed beyond tolerance."""


class RankDeficient(FanningLabError):
    """A basis matrix does not have full column rank."""


class TransversalityFailure(FanningLabError):
    """The curve meets the annihilator of the coisotropic subspace."""


class DegenerateRestriction(FanningLabError):
    """The Wronskian is degenerate on the intersection with the coisotropic subspace."""


class HorizontalityViolation(FanningLabError):
    """A vector fails the horizontal-cone condition of a submersion."""


class SmallnessViolation(FanningLabError):
    """A deformation datum (one-form or vector field) is not small enough."""


class ConfigError(FanningLabError):
    """A scenario configuration does not validate."""
