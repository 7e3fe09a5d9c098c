"""conenav: hybrid feedback navigation around a spherical obstacle.

A dimension-generic library and CLI simulator for a mode-switching feedback
law that steers a point-mass robot to a target with global convergence and
shortest-path avoidance maneuvers inside the cone enclosing the obstacle,
plus an analysis suite that machine-checks safety, Lyapunov decrease,
planarity, control continuity and path optimality.
"""

from ._kernels import NUMBA_ENABLED
from .analysis import (AnalysisReport, ComparisonRow, LyapunovCheck,
                       compare_baseline, comparison_to_csv, path_length,
                       shortest_path_oracle, simulate_baseline, verify)
from .controller import (HybridState, VirtualDestinations, baseline_control,
                         design_phi, hybrid_control, hysteresis_half_aperture,
                         in_flow_set, in_jump_set, initialize_mode, jump_map,
                         select_virtual_destinations)
from .errors import (ConfigError, DegeneratePlaneError, DomainError,
                     ScenarioError, SimulationError)
from .geometry import (Cone, HalfSpace, PlaneBasis, angle_between,
                       cone_contains, cones_meet_only_at_vertex,
                       halfspace_contains, plane_through, project_orthogonal,
                       project_parallel, reflect)
from .simulate import (JumpEvent, SimConfig, Trajectory, flow_step,
                       resolve_jump, simulate)
from .world import (Obstacle, Scenario, clearance, half_aperture, in_shadow,
                    in_visible, on_exit_set)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "ComparisonRow", "Cone", "ConfigError",
    "DegeneratePlaneError", "DomainError", "HalfSpace", "HybridState",
    "JumpEvent", "LyapunovCheck", "NUMBA_ENABLED", "Obstacle", "PlaneBasis",
    "Scenario", "ScenarioError", "SimConfig", "SimulationError", "Trajectory",
    "VirtualDestinations", "angle_between", "baseline_control", "clearance",
    "compare_baseline", "comparison_to_csv", "cone_contains",
    "cones_meet_only_at_vertex", "design_phi", "flow_step", "half_aperture",
    "halfspace_contains", "hybrid_control", "hysteresis_half_aperture",
    "in_flow_set", "in_jump_set", "in_shadow", "in_visible",
    "initialize_mode", "jump_map", "on_exit_set", "path_length",
    "plane_through", "project_orthogonal", "project_parallel", "reflect",
    "resolve_jump", "select_virtual_destinations", "shortest_path_oracle",
    "simulate", "simulate_baseline", "verify",
]
