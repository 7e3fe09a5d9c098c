"""Exception types shared across the package."""


class DomainError(ValueError):
    """A geometric precondition was violated (zero vector, point inside the
    obstacle, non-unit direction, ...)."""


class DegeneratePlaneError(DomainError):
    """The three points handed to a plane constructor are collinear."""


class ScenarioError(ValueError):
    """Scenario parameters are inconsistent (target inside the obstacle,
    hat offset too large, ...)."""


class ConfigError(ValueError):
    """A scenario file could not be parsed into a valid configuration."""


class SimulationError(RuntimeError):
    """An internal simulator invariant failed (empty jump map, jump cascade
    that does not settle).  Indicates a bug, not a bad input."""
