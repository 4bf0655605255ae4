"""Exception types shared across the package."""


class SphereBotError(Exception):
    """Base class for all package errors."""


class NotSkew(SphereBotError):
    """Matrix passed to vee() is not skew-symmetric within tolerance."""


class Degenerate(SphereBotError):
    """Matrix cannot be projected onto SO(3) (reflection or near-singular)."""


class SingularInertia(SphereBotError):
    """A composite inertia operator is numerically singular."""


class AxisViolation(SphereBotError):
    """Reaction-wheel relative velocity has drifted off its spin axis."""


class AxesDegenerate(SphereBotError):
    """Reaction-wheel axes do not span R^3 well enough for torque decomposition."""


class NoEquilibrium(SphereBotError):
    """No relative equilibrium found for the requested incline/forcing."""


class Infeasible(SphereBotError):
    """Gain synthesis target unreachable below the configured gain cap."""


class ConfigError(SphereBotError):
    """Scenario configuration is invalid; message names the offending field."""
