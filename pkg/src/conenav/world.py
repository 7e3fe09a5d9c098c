"""Scenario data and the free-space set machinery.

The free space is everything outside the open obstacle ball; it is unbounded
(no workspace box is imposed).  The shadow region of a destination ``d`` is
the part of the cone that encloses the obstacle as seen from ``d`` lying at or
behind the obstacle; its lateral surface is the exit set and its complement in
the free space is the visible set.  The destination itself is excluded from
its own shadow and exit set (a point always sees itself; the defining dot
condition degenerates to 0 there).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, ScenarioError
from .geometry import as_vector


@dataclass(frozen=True)
class Obstacle:
    """Spherical obstacle: closed ball of the given center and radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, "obstacle center"))
        object.__setattr__(self, "radius", float(self.radius))
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ScenarioError(f"obstacle radius must be positive, got {self.radius!r}")


def clearance(q, obstacle: Obstacle) -> float:
    """Distance to the obstacle boundary; negative inside the ball."""
    q = as_vector(q, "q")
    return float(np.linalg.norm(q - obstacle.center)) - obstacle.radius


def half_aperture(q, obstacle: Obstacle) -> float:
    """Half aperture of the cone enclosing the obstacle seen from ``q``,
    arcsin(r / ||q - c||) in (0, pi/2]; exactly pi/2 on the boundary."""
    q = as_vector(q, "q")
    dist = float(np.linalg.norm(q - obstacle.center))
    if dist < obstacle.radius:
        raise DomainError(
            f"point at distance {dist!r} is strictly inside the obstacle "
            f"(radius {obstacle.radius!r})")
    return math.asin(min(obstacle.radius / dist, 1.0))


def _check_free(q: np.ndarray, obstacle: Obstacle, name: str) -> np.ndarray:
    if float(np.linalg.norm(q - obstacle.center)) < obstacle.radius:
        raise DomainError(f"{name} is strictly inside the obstacle")
    return q


def in_shadow(q, dest, obstacle: Obstacle, tol: float) -> bool:
    """True iff ``q`` has no clear line of sight to ``dest``: it lies in the
    enclosing cone of ``dest`` and at or behind the obstacle, with additive
    slack ``tol`` on both defining inequalities."""
    q = as_vector(q, "q")
    dest = _check_free(as_vector(dest, "dest"), obstacle, "dest")
    return bool(_kernels.in_shadow(q, dest, obstacle.center, obstacle.radius, tol))


def on_exit_set(q, dest, obstacle: Obstacle, tol: float) -> bool:
    """True iff ``q`` lies on the lateral surface of the shadow region of
    ``dest`` within ``tol``; the cone vertex ``dest`` itself is excluded."""
    q = as_vector(q, "q")
    dest = _check_free(as_vector(dest, "dest"), obstacle, "dest")
    if np.array_equal(q, dest):
        return False
    g_cone, g_front = _kernels.shadow_margins(q, dest, obstacle.center, obstacle.radius)
    return abs(g_cone) <= tol and g_front >= -tol


def in_visible(q, dest, obstacle: Obstacle, tol: float) -> bool:
    """Complement of :func:`in_shadow` relative to the free space."""
    return not in_shadow(q, dest, obstacle, tol)


@dataclass(frozen=True)
class Scenario:
    """Workspace, target and controller parameters.

    ``hat_offset`` is the distance from the target to each virtual
    destination on the enclosing-cone hat; ``cone_fraction`` scales the
    hysteresis-cone half aperture inside its admissible open interval.
    Construction fails loudly when the target is not strictly outside the
    obstacle or when ``hat_offset`` is too large to keep both virtual
    destinations on the hat (and hence in the free space).
    """

    dimension: int
    obstacle: Obstacle
    target: np.ndarray
    gamma: float = 1.0
    hat_offset: float = 0.1
    cone_fraction: float = 0.5
    fallback_dir: np.ndarray | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "dimension", int(self.dimension))
        if self.dimension < 2:
            raise ScenarioError(f"dimension must be >= 2, got {self.dimension}")
        object.__setattr__(self, "target", as_vector(self.target, "target"))
        if self.target.shape[0] != self.dimension:
            raise ScenarioError(
                f"target has length {self.target.shape[0]}, expected {self.dimension}")
        if self.obstacle.center.shape[0] != self.dimension:
            raise ScenarioError(
                f"obstacle center has length {self.obstacle.center.shape[0]}, "
                f"expected {self.dimension}")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "hat_offset", float(self.hat_offset))
        object.__setattr__(self, "cone_fraction", float(self.cone_fraction))
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ScenarioError(f"gamma must be positive, got {self.gamma!r}")
        if not (0.0 < self.cone_fraction < 1.0):
            raise ScenarioError(
                f"cone_fraction must lie in (0, 1), got {self.cone_fraction!r}")
        dist = float(np.linalg.norm(self.target - self.obstacle.center))
        if dist <= self.obstacle.radius:
            raise ScenarioError(
                f"target must be strictly outside the obstacle "
                f"(distance {dist!r}, radius {self.obstacle.radius!r})")
        # hat_offset < distance from target to either tangency point keeps the
        # virtual destinations on the hat, off the exit set and in free space
        hat_limit = math.sqrt(dist * dist - self.obstacle.radius ** 2)
        if not (0.0 < self.hat_offset < hat_limit):
            raise ScenarioError(
                f"hat_offset must lie in (0, {hat_limit!r}) for this scenario, "
                f"got {self.hat_offset!r}")
        if self.fallback_dir is not None:
            fb = as_vector(self.fallback_dir, "fallback_dir")
            if fb.shape[0] != self.dimension:
                raise ScenarioError(
                    f"fallback_dir has length {fb.shape[0]}, expected {self.dimension}")
            object.__setattr__(self, "fallback_dir", fb)

    @property
    def target_half_aperture(self) -> float:
        return half_aperture(self.target, self.obstacle)

    def clearance(self, q) -> float:
        return clearance(q, self.obstacle)

    def require_free(self, q, name: str = "point", tol: float = 0.0) -> np.ndarray:
        """Validate that ``q`` lies in the free space, allowing penetration up
        to ``tol`` (states recorded while skimming the boundary sit within the
        simulator's safety band)."""
        q = as_vector(q, name)
        if q.shape[0] != self.dimension:
            raise DomainError(f"{name} has length {q.shape[0]}, expected {self.dimension}")
        if self.clearance(q) < -tol:
            raise DomainError(f"{name} violates free space: clearance {self.clearance(q)!r}")
        return q
