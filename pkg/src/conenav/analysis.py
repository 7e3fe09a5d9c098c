"""Machine-checkable verdicts for the closed loop's claimed properties.

``verify`` condenses a trajectory into safety (minimum clearance), path
optimality against an independent geometric oracle, per-interval Lyapunov
monotonicity, control gaps at mode switches, planarity and the jump count.
``compare_baseline`` races the continuous law against the hybrid one start by
start, flagging stalls of the former on the half line behind the obstacle.
"""

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .controller import HybridState, VirtualDestinations, hybrid_control
from .errors import DomainError
from .simulate import (INTEGRATORS, STATUS_CONVERGED, STATUS_STALLED,
                       SimConfig, Trajectory, simulate, _REASON_STATUS)
from .world import Obstacle, Scenario
from .geometry import as_vector

# per-step slack for the Lyapunov monotonicity check: explicit integrators may
# overshoot the continuous decrease by O(h^2) per step
LYAPUNOV_SLACK = 10.0


def _segment_ball_clear(p: np.ndarray, q: np.ndarray, c: np.ndarray, r: float) -> bool:
    """True iff the segment [p, q] does not meet the open ball B(c, r)."""
    d = q - p
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return float(np.linalg.norm(p - c)) >= r
    s = float(np.dot(c - p, d)) / dd
    s = min(max(s, 0.0), 1.0)
    return float(np.linalg.norm(p + s * d - c)) >= r


def shortest_path_oracle(x0, x_d, obstacle: Obstacle) -> float:
    """Length of the shortest path from ``x0`` to ``x_d`` avoiding the open
    obstacle ball: the straight distance under clear line of sight, otherwise
    tangent segment + boundary arc + tangent segment in the plane through
    both endpoints and the center."""
    x0 = as_vector(x0, "x0")
    x_d = as_vector(x_d, "x_d")
    c = obstacle.center
    r = obstacle.radius
    d0 = float(np.linalg.norm(x0 - c))
    dd = float(np.linalg.norm(x_d - c))
    if d0 < r or dd < r:
        raise DomainError("oracle endpoints must lie in the free space")
    if _segment_ball_clear(x0, x_d, c, r):
        return float(np.linalg.norm(x0 - x_d))
    psi = _kernels.angle_between(x0 - c, x_d - c)
    alpha = psi - math.acos(min(r / d0, 1.0)) - math.acos(min(r / dd, 1.0))
    if alpha < 0.0:
        alpha = 0.0
    return math.sqrt(d0 * d0 - r * r) + math.sqrt(dd * dd - r * r) + r * alpha


def path_length(traj: Trajectory) -> float:
    """Polyline length of the recorded samples; jumps contribute nothing
    since the position is unchanged across them."""
    if len(traj) < 2:
        return 0.0
    steps = np.linalg.norm(np.diff(traj.x, axis=0), axis=1)
    same_j = traj.j[1:] == traj.j[:-1]
    return float(np.sum(steps[same_j]))


@dataclass(frozen=True)
class LyapunovCheck:
    """Count and worst overshoot of per-step Lyapunov increases beyond the
    integrator slack, across all flow intervals."""

    count: int
    worst: float


@dataclass(frozen=True)
class AnalysisReport:
    status: str
    min_clearance: float
    path_length: float
    oracle_length: float
    optimality_ratio: float
    lyapunov_violations: LyapunovCheck
    max_control_gap_at_jumps: float
    max_plane_deviation: float
    jumps: int

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "min_clearance": self.min_clearance,
            "path_length": self.path_length,
            "oracle_length": self.oracle_length,
            "optimality_ratio": self.optimality_ratio,
            "lyapunov_violations": {
                "count": self.lyapunov_violations.count,
                "worst": self.lyapunov_violations.worst,
            },
            "max_control_gap_at_jumps": self.max_control_gap_at_jumps,
            "max_plane_deviation": self.max_plane_deviation,
            "jumps": self.jumps,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _lyapunov_violations(traj: Trajectory, scenario: Scenario,
                         vd: VirtualDestinations) -> LyapunovCheck:
    count = 0
    worst = 0.0
    gamma2 = scenario.gamma ** 2
    targets = {0: scenario.target, 1: vd.xd_plus, -1: vd.xd_minus}
    for k in range(len(traj) - 1):
        if traj.j[k + 1] != traj.j[k]:
            continue
        d = targets[int(traj.m[k])]
        v0 = 0.5 * float(np.dot(traj.x[k] - d, traj.x[k] - d))
        v1 = 0.5 * float(np.dot(traj.x[k + 1] - d, traj.x[k + 1] - d))
        dt = float(traj.t[k + 1] - traj.t[k])
        slack = LYAPUNOV_SLACK * dt * dt * gamma2 * v0
        if v1 > v0 + slack:
            count += 1
            worst = max(worst, v1 - v0 - slack)
    return LyapunovCheck(count=count, worst=worst)


def verify(traj: Trajectory, scenario: Scenario, vd: VirtualDestinations,
           convergence_tol: float = 1e-3) -> AnalysisReport:
    """Fill an :class:`AnalysisReport` for a completed trajectory.

    The optimality ratio completes the recorded path with the remaining
    straight gap to the target, so a run stopped at the convergence tolerance
    cannot beat the oracle by that stopping margin.  ``convergence_tol`` is
    only consulted to classify trajectories that carry no status (e.g. read
    back from CSV).
    """
    clear = np.linalg.norm(traj.x - scenario.obstacle.center, axis=1) - scenario.obstacle.radius
    length = path_length(traj)
    oracle = shortest_path_oracle(traj.x0, scenario.target, scenario.obstacle)
    terminal_gap = float(np.linalg.norm(traj.final_x - scenario.target))
    ratio = (length + terminal_gap) / oracle if oracle > 0.0 else 1.0
    gap = 0.0
    for ev in traj.jump_log:
        u_before = hybrid_control(HybridState(ev.x, ev.m_before), vd, scenario)
        u_after = hybrid_control(HybridState(ev.x, ev.m_after), vd, scenario)
        gap = max(gap, float(np.linalg.norm(u_before - u_after)))
    deviation = max((vd.plane.distance(traj.x[k]) for k in range(len(traj))), default=0.0)
    status = traj.status
    if status is None:
        status = (STATUS_CONVERGED
                  if terminal_gap <= convergence_tol
                  else "unknown")
    return AnalysisReport(
        status=status,
        min_clearance=float(np.min(clear)),
        path_length=length,
        oracle_length=oracle,
        optimality_ratio=float(ratio),
        lyapunov_violations=_lyapunov_violations(traj, scenario, vd),
        max_control_gap_at_jumps=gap,
        max_plane_deviation=float(deviation),
        jumps=traj.jumps,
    )


def simulate_baseline(scenario: Scenario, x0, cfg: SimConfig | None = None,
                      stall_speed: float = 1e-9,
                      stall_steps: int = 1000) -> Trajectory:
    """Integrate the continuous law with no hybrid machinery.

    Adds a stall stop: ``stall_steps`` consecutive samples slower than
    ``stall_speed`` while away from the target (the undesired equilibria of
    the continuous law are exactly such points).
    """
    cfg = cfg or SimConfig()
    x0 = scenario.require_free(x0, "x0")
    cap = int(math.ceil(cfg.max_t / cfg.h)) + 8
    ts = np.empty(cap)
    xs = np.empty((cap, scenario.dimension))
    us = np.empty((cap, scenario.dimension))
    count, reason, _ = _kernels.integrate_baseline(
        x0, scenario.target, scenario.obstacle.center, scenario.obstacle.radius,
        scenario.gamma, cfg.h, cfg.max_t, cfg.convergence_tol, cfg.safety_tol,
        INTEGRATORS[cfg.integrator], stall_speed, stall_steps, ts, xs, us)
    return Trajectory(
        t=ts[:count].copy(),
        j=np.zeros(count, dtype=np.int64),
        m=np.zeros(count, dtype=np.int64),
        x=xs[:count].copy(),
        u=us[:count].copy(),
        jump_log=[],
        status=_REASON_STATUS[int(reason)],
    )


@dataclass(frozen=True)
class ComparisonRow:
    start_id: int
    law: str
    status: str
    jumps: int
    path_length: float
    oracle_length: float
    ratio: float
    stalled: bool


def compare_baseline(scenario: Scenario, x0_set, cfg: SimConfig | None = None,
                     stall_speed: float = 1e-9, stall_steps: int = 1000,
                     tie_break: int = 1) -> list[ComparisonRow]:
    """Run the continuous and the hybrid law from every start and tabulate
    convergence status, path length against the oracle and stall detection."""
    cfg = cfg or SimConfig()
    rows: list[ComparisonRow] = []
    for i, x0 in enumerate(x0_set):
        oracle = shortest_path_oracle(x0, scenario.target, scenario.obstacle)
        for law, traj in (
            ("baseline", simulate_baseline(scenario, x0, cfg, stall_speed, stall_steps)),
            ("hybrid", simulate(scenario, x0, None, cfg, tie_break=tie_break)),
        ):
            length = path_length(traj)
            gap = float(np.linalg.norm(traj.final_x - scenario.target))
            rows.append(ComparisonRow(
                start_id=i,
                law=law,
                status=traj.status,
                jumps=traj.jumps,
                path_length=length,
                oracle_length=oracle,
                ratio=(length + gap) / oracle if oracle > 0.0 else 1.0,
                stalled=traj.status == STATUS_STALLED,
            ))
    return rows


def comparison_to_csv(rows: list[ComparisonRow], path_or_file=None) -> str:
    """Serialize comparison rows; returns the CSV text and optionally writes
    it to ``path_or_file``."""
    buf = io.StringIO()
    buf.write("start_id,law,status,jumps,path_length,oracle_length,ratio,stalled\n")
    for row in rows:
        buf.write(f"{row.start_id},{row.law},{row.status},{row.jumps},"
                  f"{row.path_length:.17g},{row.oracle_length:.17g},"
                  f"{row.ratio:.17g},{str(row.stalled).lower()}\n")
    text = buf.getvalue()
    if path_or_file is not None:
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", encoding="utf-8") if own else path_or_file
        try:
            fh.write(text)
        finally:
            if own:
                fh.close()
    return text
