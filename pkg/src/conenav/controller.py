"""Feedback laws and the mode-switching machinery.

The continuous baseline steers straight at the target in the visible set and
applies an obstacle-projection correction in the shadow region; it stalls on
the half line behind the obstacle.  The hybrid law removes those equilibria by
steering, in modes +-1, at one of two virtual destinations placed on the hat
of the cone enclosing the obstacle, and switching modes on hysteresis
flow/jump sets.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, SimulationError
from .geometry import (PlaneBasis, as_vector, cones_meet_only_at_vertex,
                       plane_through)
from .world import Scenario, half_aperture, on_exit_set

MODES = (-1, 0, 1)

_INVARIANT_TOL = 1e-9

# control evaluation accepts states within the default safety band of the
# boundary: switches localized on a boundary-hugging arc sit marginally inside
_BOUNDARY_BAND = 1e-6


def check_mode(m: int) -> int:
    m = int(m)
    if m not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {m}")
    return m


@dataclass(frozen=True)
class HybridState:
    """Robot position paired with the discrete controller mode."""

    x: np.ndarray
    m: int

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x, "x"))
        object.__setattr__(self, "m", check_mode(self.m))


@dataclass(frozen=True)
class VirtualDestinations:
    """The pair of virtual destinations with their motion plane and the
    hysteresis-cone data.

    ``xd_plus``/``xd_minus`` sit on the enclosing-cone hat at distance
    ``hat_offset`` from the target, mirror images of each other across the
    target-obstacle axis within ``plane``; ``v_plus``/``v_minus`` are the axes
    ``c - xd_plus`` / ``c - xd_minus`` of the excluded cones with common half
    aperture ``phi``; ``w = xd_minus - xd_plus`` orients the tie-breaking
    hyperplane.
    """

    xd_plus: np.ndarray
    xd_minus: np.ndarray
    plane: PlaneBasis
    v_plus: np.ndarray
    v_minus: np.ndarray
    w: np.ndarray
    phi: float


def _validate_virtual_destinations(vd: VirtualDestinations, scenario: Scenario) -> None:
    xd = scenario.target
    c = scenario.obstacle.center
    e = scenario.hat_offset
    for name, p in (("xd_plus", vd.xd_plus), ("xd_minus", vd.xd_minus)):
        if abs(float(np.linalg.norm(p - xd)) - e) > _INVARIANT_TOL:
            raise SimulationError(f"{name} is not at distance {e} from the target")
        g_cone, _ = _kernels.shadow_margins(p, xd, c, scenario.obstacle.radius)
        if abs(g_cone) > _INVARIANT_TOL:
            raise SimulationError(f"{name} is not on the enclosing-cone surface")
        if on_exit_set(p, xd, scenario.obstacle, _INVARIANT_TOL):
            raise SimulationError(f"{name} lies on the exit set")
        if vd.plane.distance(p) > _INVARIANT_TOL:
            raise SimulationError(f"{name} is off the motion plane")
    axis = (c - xd) / float(np.linalg.norm(c - xd))
    mirrored = xd - (vd.xd_plus - xd - 2.0 * axis * float(np.dot(axis, vd.xd_plus - xd)))
    if float(np.linalg.norm(mirrored - vd.xd_minus)) > _INVARIANT_TOL:
        raise SimulationError("virtual destinations are not mirror images across the axis")
    psi = _kernels.angle_between(vd.v_plus, vd.v_minus)
    if not (vd.phi < min(psi, math.pi - psi) / 2.0):
        raise SimulationError("hysteresis half aperture violates its strict upper bound")
    if not cones_meet_only_at_vertex(c, vd.v_plus, vd.v_minus, vd.phi, vd.phi):
        raise SimulationError("excluded cones are not vertex-disjoint")


def _fallback_direction(scenario: Scenario) -> np.ndarray:
    """Deterministic substitute for the plane-selecting point when the start
    is collinear with target and obstacle center: the lowest-index coordinate
    basis vector with the largest component orthogonal to that line."""
    axis = scenario.obstacle.center - scenario.target
    axis = axis / float(np.linalg.norm(axis))
    ortho = 1.0 - axis * axis  # squared orthogonal component of each basis vector
    return np.eye(scenario.dimension)[int(np.argmax(ortho > np.max(ortho) - 1e-15))]


def hysteresis_half_aperture(v_plus, v_minus, kappa: float) -> float:
    """Half aperture of the excluded cones: ``kappa`` times the strict upper
    bound ``min(psi, pi - psi) / 2`` where ``psi`` is the angle between the
    two cone axes.  Degenerate axes (psi in {0, pi}) are rejected."""
    if not (0.0 < kappa < 1.0):
        raise DomainError(f"kappa must lie in (0, 1), got {kappa!r}")
    psi = _kernels.angle_between(as_vector(v_plus, "v_plus"), as_vector(v_minus, "v_minus"))
    if psi <= 0.0 or psi >= math.pi:
        raise DomainError(f"virtual-destination axes are degenerate (angle {psi!r})")
    return kappa * min(psi / 2.0, (math.pi - psi) / 2.0)


def design_phi(vd: VirtualDestinations, kappa: float) -> float:
    """Recompute the hysteresis half aperture for the given destinations."""
    return hysteresis_half_aperture(vd.v_plus, vd.v_minus, kappa)


def select_virtual_destinations(scenario: Scenario, x0,
                                fallback_dir=None) -> VirtualDestinations:
    """Place the virtual destinations for a run starting at ``x0``.

    Both lie in the plane through target, obstacle center and ``x0`` so the
    whole trajectory stays planar; when ``x0`` is collinear with target and
    center the plane is spanned with ``fallback_dir`` (or a deterministic
    default) instead.  The in-plane transverse direction points toward
    ``x0``, which makes ``xd_plus`` the virtual destination on the start's
    side of the axis.
    """
    x0 = scenario.require_free(x0, "x0")
    xd = scenario.target
    c = scenario.obstacle.center
    e = scenario.hat_offset
    try:
        plane = plane_through(xd, c, x0)
    except DomainError:
        y = fallback_dir if fallback_dir is not None else scenario.fallback_dir
        if y is None:
            y = _fallback_direction(scenario)
        plane = plane_through(xd, c, xd + as_vector(y, "fallback_dir"))
    theta_d = half_aperture(xd, scenario.obstacle)
    a_hat = plane.b1          # unit vector from target toward obstacle center
    b_hat = plane.b2          # in-plane, orthogonal, oriented toward x0
    xd_plus = xd + e * (math.cos(theta_d) * a_hat + math.sin(theta_d) * b_hat)
    xd_minus = xd + e * (math.cos(theta_d) * a_hat - math.sin(theta_d) * b_hat)
    v_plus = c - xd_plus
    v_minus = c - xd_minus
    phi = hysteresis_half_aperture(v_plus, v_minus, scenario.cone_fraction)
    vd = VirtualDestinations(xd_plus=xd_plus, xd_minus=xd_minus, plane=plane,
                             v_plus=v_plus, v_minus=v_minus,
                             w=xd_minus - xd_plus, phi=phi)
    _validate_virtual_destinations(vd, scenario)
    return vd


def baseline_control(x, scenario: Scenario) -> np.ndarray:
    """Continuous law: gamma (target - x) in the visible set, with the
    obstacle-projection correction in the shadow region.  Continuous across
    the exit set; zero on the half line of undesired equilibria."""
    x = scenario.require_free(x, "x", tol=_BOUNDARY_BAND)
    return _kernels.baseline_control(x, scenario.target, scenario.obstacle.center,
                                     scenario.obstacle.radius, scenario.gamma)


def hybrid_control(state: HybridState, vd: VirtualDestinations,
                   scenario: Scenario) -> np.ndarray:
    """Mode-dependent velocity of the hybrid law.

    Mode 0 is the straight pull at the target; modes +-1 steer at the
    matching virtual destination, scaled by the continuity factor
    mu = 1 + (e / ||x - xd_m||)(beta_m / theta) >= 1.
    """
    x = scenario.require_free(state.x, "x", tol=_BOUNDARY_BAND)
    if state.m != 0:
        d = vd.xd_plus if state.m == 1 else vd.xd_minus
        if float(np.linalg.norm(x - d)) == 0.0:
            raise DomainError(
                "projection-mode control is undefined at its virtual destination "
                "(excluded by the flow-set geometry)")
    return _kernels.control(x, state.m, scenario.target, vd.xd_plus, vd.xd_minus,
                            scenario.obstacle.center, scenario.obstacle.radius,
                            scenario.gamma, scenario.hat_offset)


def in_flow_set(state: HybridState, vd: VirtualDestinations,
                scenario: Scenario, tol: float) -> bool:
    """Flow-set membership: mode 0 flows on the closure of the visible set,
    modes +-1 on the virtual shadow region minus the open excluded cone."""
    x = as_vector(state.x, "x")
    return bool(_kernels.in_flow(x, state.m, scenario.target, vd.xd_plus, vd.xd_minus,
                                 scenario.obstacle.center, scenario.obstacle.radius,
                                 vd.phi, tol))


def in_jump_set(state: HybridState, vd: VirtualDestinations,
                scenario: Scenario, tol: float) -> bool:
    """Jump-set membership: mode 0 jumps on the shadow region of the target,
    modes +-1 on the closed complement of their flow set."""
    x = as_vector(state.x, "x")
    return bool(_kernels.in_jump(x, state.m, scenario.target, vd.xd_plus, vd.xd_minus,
                                 scenario.obstacle.center, scenario.obstacle.radius,
                                 vd.phi, tol))


def _outside_excluded_cone(x: np.ndarray, v: np.ndarray, c: np.ndarray,
                           phi: float) -> bool:
    # closed exterior: angle(x - c, v) >= phi
    lhs = float(np.dot(v, x - c))
    rhs = float(np.linalg.norm(v)) * float(np.linalg.norm(x - c)) * math.cos(phi)
    return lhs <= rhs


def jump_map(state: HybridState, vd: VirtualDestinations,
             scenario: Scenario) -> tuple[int, ...]:
    """Admissible modes after a jump, ascending.

    Modes +-1 always hand back to 0.  Mode 0 selects the side whose excluded
    cone does not contain the position; in the common exterior of both cones
    either side is admissible.  Never empty: by the vertex-disjointness of the
    excluded cones the two exteriors cover everything.
    """
    x = as_vector(state.x, "x")
    if state.m != 0:
        return (0,)
    out_plus = _outside_excluded_cone(x, vd.v_plus, scenario.obstacle.center, vd.phi)
    out_minus = _outside_excluded_cone(x, vd.v_minus, scenario.obstacle.center, vd.phi)
    if out_plus and out_minus:
        return (-1, 1)
    if out_plus:
        return (1,)
    if out_minus:
        return (-1,)
    raise SimulationError("empty jump map: excluded cones are not vertex-disjoint")


def initialize_mode(x0, vd: VirtualDestinations, scenario: Scenario,
                    tie_break: int = 1) -> int:
    """Initial mode selection.

    Anywhere on the closure of the visible set start straight (mode 0).
    Inside the hysteresis overlap of both projection flow sets the side is
    chosen by the hyperplane through the obstacle center orthogonal to
    ``w = xd_minus - xd_plus`` (ties break to ``tie_break``); a start covered
    by exactly one projection flow set takes that side.
    """
    x0 = scenario.require_free(x0, "x0")
    if tie_break not in (-1, 1):
        raise DomainError(f"tie_break must be -1 or 1, got {tie_break!r}")
    if in_flow_set(HybridState(x0, 0), vd, scenario, 0.0):
        return 0
    in_plus = in_flow_set(HybridState(x0, 1), vd, scenario, 0.0)
    in_minus = in_flow_set(HybridState(x0, -1), vd, scenario, 0.0)
    if in_plus and in_minus:
        side = float(np.dot(vd.w, x0 - scenario.obstacle.center))
        if side < 0.0:
            return 1
        if side > 0.0:
            return -1
        return tie_break
    if in_plus:
        return 1
    if in_minus:
        return -1
    # not reachable for consistent scenarios (flow sets cover the free space);
    # mode 0 hands straight to the jump map
    return 0
