"""Dimension-generic vector algebra and set-membership predicates.

Vectors are plain 1-D float64 numpy arrays of length n >= 2.  All operations
are pure and the container types are frozen dataclasses, so everything here is
safe to share across workers.

Conventions baked in (and relied on elsewhere):

* every arccos/arcsin argument is clamped to [-1, 1] before evaluation;
* the vertex of a cone belongs to it for the senses ``<=``, ``==``, ``>=``;
* membership tolerances are additive slack on the compared quantities and are
  always supplied by the caller (flow/jump detection and unit tests need
  different bands).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePlaneError, DomainError

SENSES = ("<=", "<", "==", ">", ">=")

UNIT_TOL = 1e-9
ORTHO_TOL = 1e-12
GRAM_MIN = 1e-18


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array of length >= 2 with finite entries."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 2:
        raise DomainError(f"{name} must be a 1-D vector of length >= 2, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite coordinates: {v}")
    return v


def _require_nonzero(v: np.ndarray, name: str) -> float:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise DomainError(f"{name} must be non-zero")
    return n


def _require_unit(v: np.ndarray, name: str) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > UNIT_TOL:
        raise DomainError(f"{name} must be a unit vector, got norm {n!r}")
    return v


def normalize(v, name: str = "vector") -> np.ndarray:
    v = as_vector(v, name)
    return v / _require_nonzero(v, name)


def angle_between(x, y) -> float:
    """Angle in [0, pi] between two non-zero vectors."""
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    nx = _require_nonzero(x, "x")
    ny = _require_nonzero(y, "y")
    c = float(np.dot(x, y)) / (nx * ny)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def reflect(v, x) -> np.ndarray:
    """Reflection of ``x`` about the hyperplane orthogonal to the unit vector
    ``v``: x - 2 v (v.x)."""
    v = _require_unit(as_vector(v, "v"), "v")
    x = as_vector(x, "x")
    return x - 2.0 * v * float(np.dot(v, x))


def project_parallel(v, x) -> np.ndarray:
    """Projection of ``x`` onto the line spanned by the unit vector ``v``."""
    v = _require_unit(as_vector(v, "v"), "v")
    x = as_vector(x, "x")
    return v * float(np.dot(v, x))


def project_orthogonal(v, x) -> np.ndarray:
    """Projection of ``x`` onto the hyperplane orthogonal to the unit vector
    ``v``; complements :func:`project_parallel` (their sum is ``x``)."""
    v = _require_unit(as_vector(v, "v"), "v")
    x = as_vector(x, "x")
    return x - v * float(np.dot(v, x))


def _compare(lhs: float, rhs: float, sense: str, tol: float) -> bool:
    # slack `tol` always relaxes membership; pass a negative tol to tighten
    if sense == "<=":
        return lhs <= rhs + tol
    if sense == "<":
        return lhs < rhs + tol
    if sense == "==":
        return abs(lhs - rhs) <= tol
    if sense == ">":
        return lhs > rhs - tol
    if sense == ">=":
        return lhs >= rhs - tol
    raise DomainError(f"unknown sense {sense!r}, expected one of {SENSES}")


@dataclass(frozen=True)
class Cone:
    """Conic subset with a vertex, an axis and half aperture in (0, pi].

    A point ``q`` belongs when ``||axis|| ||q - vertex|| cos(half_aperture)
    <sense> axis.(q - vertex)``; the sense ``==`` names the lateral surface,
    ``<=``/``<`` the inside, ``>=``/``>`` the outside.
    """

    vertex: np.ndarray
    axis: np.ndarray
    half_aperture: float
    sense: str = "<="

    def __post_init__(self):
        object.__setattr__(self, "vertex", as_vector(self.vertex, "vertex"))
        object.__setattr__(self, "axis", as_vector(self.axis, "axis"))
        _require_nonzero(self.axis, "axis")
        if not (0.0 < self.half_aperture <= np.pi):
            raise DomainError(f"half_aperture must be in (0, pi], got {self.half_aperture!r}")
        if self.sense not in SENSES:
            raise DomainError(f"unknown sense {self.sense!r}, expected one of {SENSES}")


def cone_contains(cone: Cone, q, tol: float) -> bool:
    """Membership test for ``q`` with additive slack ``tol``.

    At the vertex both compared quantities vanish, so the vertex belongs for
    the senses ``<=``, ``==`` and ``>=`` (and, at tol 0, for no strict sense).
    """
    q = as_vector(q, "q")
    d = q - cone.vertex
    lhs = float(np.linalg.norm(cone.axis)) * float(np.linalg.norm(d)) * float(np.cos(cone.half_aperture))
    rhs = float(np.dot(cone.axis, d))
    return _compare(lhs, rhs, cone.sense, tol)


@dataclass(frozen=True)
class HalfSpace:
    """Half space / hyperplane through ``anchor`` with the given ``normal``:
    points ``q`` with ``normal.(q - anchor) <sense> 0``."""

    anchor: np.ndarray
    normal: np.ndarray
    sense: str = "<="

    def __post_init__(self):
        object.__setattr__(self, "anchor", as_vector(self.anchor, "anchor"))
        object.__setattr__(self, "normal", as_vector(self.normal, "normal"))
        _require_nonzero(self.normal, "normal")
        if self.sense not in SENSES:
            raise DomainError(f"unknown sense {self.sense!r}, expected one of {SENSES}")


def halfspace_contains(h: HalfSpace, q, tol: float) -> bool:
    q = as_vector(q, "q")
    return _compare(float(np.dot(h.normal, q - h.anchor)), 0.0, h.sense, tol)


def cones_meet_only_at_vertex(vertex, a1, a2, phi1: float, phi2: float) -> bool:
    """True iff two closed cones sharing ``vertex`` intersect only there,
    certified by ``phi1 + phi2 < angle(a1, a2) < pi - (phi1 + phi2)``."""
    psi = angle_between(a1, a2)
    s = phi1 + phi2
    return s < psi < np.pi - s


@dataclass(frozen=True)
class PlaneBasis:
    """Two-dimensional affine plane given by an origin and an orthonormal
    in-plane basis (b1, b2)."""

    origin: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", as_vector(self.origin, "origin"))
        object.__setattr__(self, "b1", as_vector(self.b1, "b1"))
        object.__setattr__(self, "b2", as_vector(self.b2, "b2"))
        if abs(float(np.linalg.norm(self.b1)) - 1.0) > ORTHO_TOL:
            raise DomainError("b1 must be a unit vector")
        if abs(float(np.linalg.norm(self.b2)) - 1.0) > ORTHO_TOL:
            raise DomainError("b2 must be a unit vector")
        if abs(float(np.dot(self.b1, self.b2))) > ORTHO_TOL:
            raise DomainError("b1 and b2 must be orthogonal")

    def distance(self, q) -> float:
        """Euclidean distance from ``q`` to the plane."""
        d = as_vector(q, "q") - self.origin
        rem = d - self.b1 * float(np.dot(self.b1, d)) - self.b2 * float(np.dot(self.b2, d))
        return float(np.linalg.norm(rem))


def plane_through(p0, p1, p2) -> PlaneBasis:
    """Plane through three points; ``b1`` points from ``p0`` to ``p1``, ``b2``
    is the Gram-Schmidt remainder of ``p2 - p0``.

    Raises :class:`DegeneratePlaneError` when the spanning directions are
    (numerically) collinear, i.e. their Gram determinant is <= 1e-18.
    """
    p0 = as_vector(p0, "p0")
    a = as_vector(p1, "p1") - p0
    b = as_vector(p2, "p2") - p0
    gram = float(np.dot(a, a)) * float(np.dot(b, b)) - float(np.dot(a, b)) ** 2
    if gram <= GRAM_MIN:
        raise DegeneratePlaneError(
            f"points are collinear (Gram determinant {gram!r} <= {GRAM_MIN!r})")
    b1 = a / float(np.linalg.norm(a))
    rem = b - b1 * float(np.dot(b1, b))
    b2 = rem / float(np.linalg.norm(rem))
    return PlaneBasis(origin=p0, b1=b1, b2=b2)
