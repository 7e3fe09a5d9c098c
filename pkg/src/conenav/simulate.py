"""Hybrid-time simulator for the closed loop.

Flows are integrated with a fixed-step explicit integrator while the state
stays in the current mode's flow set; leaving it triggers a jump (position
unchanged, mode from the jump map).  When flow and jump sets overlap the
simulator flows: hysteresis provides the switching logic, flow priority keeps
runs deterministic.  Trajectories are recorded over a hybrid time domain
(t, j) with jump rows duplicated at equal t and incremented j.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .controller import (HybridState, VirtualDestinations, check_mode,
                         initialize_mode, in_flow_set, in_jump_set, jump_map,
                         select_virtual_destinations)
from .errors import DomainError, ScenarioError, SimulationError
from .world import Scenario

INTEGRATORS = {"euler": _kernels.EULER, "rk4": _kernels.RK4}

STATUS_CONVERGED = "converged"
STATUS_TIMEOUT = "timeout"
STATUS_JUMP_BUDGET = "jump_budget"
STATUS_SAFETY = "safety_violation"
STATUS_NUMERIC = "numeric_failure"
STATUS_STALLED = "stalled"

_REASON_STATUS = {
    _kernels.CONVERGED: STATUS_CONVERGED,
    _kernels.TIME_EXHAUSTED: STATUS_TIMEOUT,
    _kernels.SAFETY: STATUS_SAFETY,
    _kernels.NONFINITE: STATUS_NUMERIC,
    _kernels.STALLED: STATUS_STALLED,
}

# jumps fire on the first crossing out of the (closed) flow set; the jump-set
# check at the landed state uses this absolute band
JUMP_TOL = 1e-9

_CASCADE_LIMIT = 3


@dataclass(frozen=True)
class SimConfig:
    """Integration parameters for one run."""

    h: float = 1e-3
    max_t: float = 50.0
    max_jumps: int = 10
    convergence_tol: float = 1e-3
    integrator: str = "rk4"
    safety_tol: float = 1e-6

    def __post_init__(self):
        if not (0.0 < self.h <= self.max_t):
            raise ScenarioError(f"need 0 < h <= max_t, got h={self.h!r}, max_t={self.max_t!r}")
        if self.convergence_tol <= 0.0:
            raise ScenarioError(f"convergence_tol must be positive, got {self.convergence_tol!r}")
        if self.safety_tol <= 0.0:
            raise ScenarioError(f"safety_tol must be positive, got {self.safety_tol!r}")
        if self.max_jumps < 0:
            raise ScenarioError(f"max_jumps must be >= 0, got {self.max_jumps!r}")
        if self.integrator not in INTEGRATORS:
            raise ScenarioError(
                f"integrator must be one of {sorted(INTEGRATORS)}, got {self.integrator!r}")


@dataclass(frozen=True)
class JumpEvent:
    """One mode switch: hybrid time (t, j) after the jump, modes before and
    after, and the (unchanged) position."""

    t: float
    j: int
    m_before: int
    m_after: int
    x: np.ndarray


@dataclass
class Trajectory:
    """Sampled hybrid trajectory in column form.

    ``t``/``j``/``m`` are per-sample hybrid time and mode, ``x``/``u`` are
    (N, n) position and velocity samples.  Within one j the times are strictly
    increasing with gaps bounded by the step; across a jump the position is
    unchanged.
    """

    t: np.ndarray
    j: np.ndarray
    m: np.ndarray
    x: np.ndarray
    u: np.ndarray
    jump_log: list[JumpEvent] = field(default_factory=list)
    status: str | None = None

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def dimension(self) -> int:
        return self.x.shape[1]

    @property
    def x0(self) -> np.ndarray:
        return self.x[0]

    @property
    def final_x(self) -> np.ndarray:
        return self.x[-1]

    @property
    def jumps(self) -> int:
        return len(self.jump_log)

    def to_csv(self, path_or_file) -> None:
        """Write ``t,j,m,x0..x{n-1},u0..u{n-1}`` rows, one per sample."""
        n = self.dimension
        header = "t,j,m," + ",".join(f"x{i}" for i in range(n)) \
            + "," + ",".join(f"u{i}" for i in range(n))
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", encoding="utf-8") if own else path_or_file
        try:
            fh.write(header + "\n")
            for k in range(len(self)):
                cols = [f"{self.t[k]:.17g}", str(int(self.j[k])), str(int(self.m[k]))]
                cols += [f"{v:.17g}" for v in self.x[k]]
                cols += [f"{v:.17g}" for v in self.u[k]]
                fh.write(",".join(cols) + "\n")
        finally:
            if own:
                fh.close()

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path_or_file) -> "Trajectory":
        """Rebuild a trajectory (including the jump log) from its CSV form.
        The run status is not stored in the CSV and comes back as None."""
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "r", encoding="utf-8") if own else path_or_file
        try:
            header = fh.readline().strip().split(",")
            if len(header) < 5 or header[:3] != ["t", "j", "m"]:
                raise DomainError(f"not a trajectory CSV (header {header!r})")
            n = (len(header) - 3) // 2
            if header[3:] != [f"x{i}" for i in range(n)] + [f"u{i}" for i in range(n)]:
                raise DomainError(f"not a trajectory CSV (header {header!r})")
            rows = [line.strip().split(",") for line in fh if line.strip()]
        finally:
            if own:
                fh.close()
        N = len(rows)
        t = np.empty(N)
        j = np.empty(N, dtype=np.int64)
        m = np.empty(N, dtype=np.int64)
        x = np.empty((N, n))
        u = np.empty((N, n))
        for k, row in enumerate(rows):
            t[k] = float(row[0])
            j[k] = int(row[1])
            m[k] = int(row[2])
            x[k] = [float(v) for v in row[3:3 + n]]
            u[k] = [float(v) for v in row[3 + n:3 + 2 * n]]
        jump_log = []
        for k in range(1, N):
            if j[k] == j[k - 1] + 1:
                jump_log.append(JumpEvent(t=float(t[k]), j=int(j[k]),
                                          m_before=int(m[k - 1]), m_after=int(m[k]),
                                          x=x[k].copy()))
        return cls(t=t, j=j, m=m, x=x, u=u, jump_log=jump_log, status=None)


def flow_step(state: HybridState, vd: VirtualDestinations, scenario: Scenario,
              h: float, integrator: str = "rk4") -> HybridState:
    """One integrator step of the mode-``state.m`` flow (mode held constant).

    A step landing deep inside the obstacle is halved (up to 40 times); a
    shallow landing, which is integration error of the boundary-sliding flow,
    is snapped back onto the boundary.  The result never violates the free
    space."""
    if integrator not in INTEGRATORS:
        raise ScenarioError(f"integrator must be one of {sorted(INTEGRATORS)}")
    xn, _ = _kernels.guarded_step(
        np.ascontiguousarray(state.x, dtype=np.float64), state.m,
        scenario.target, vd.xd_plus, vd.xd_minus,
        scenario.obstacle.center, scenario.obstacle.radius,
        scenario.gamma, scenario.hat_offset, float(h),
        INTEGRATORS[integrator])
    return HybridState(xn, state.m)


def _pick_mode(modes: tuple[int, ...], tie_break: int) -> int:
    if len(modes) == 1:
        return modes[0]
    return tie_break


def resolve_jump(state: HybridState, vd: VirtualDestinations, scenario: Scenario,
                 tie_break: int = 1) -> HybridState:
    """Apply one jump: position unchanged, mode replaced by the tie-break
    selection from the jump map."""
    if tie_break not in (-1, 1):
        raise DomainError(f"tie_break must be -1 or 1, got {tie_break!r}")
    if not in_jump_set(state, vd, scenario, JUMP_TOL):
        raise DomainError("state is not in the jump set")
    modes = jump_map(state, vd, scenario)
    return HybridState(state.x, _pick_mode(modes, tie_break))


def simulate(scenario: Scenario, x0, m0: int | None = None,
             cfg: SimConfig | None = None, *,
             vd: VirtualDestinations | None = None,
             tie_break: int = 1) -> Trajectory:
    """Run the hybrid closed loop from ``x0``.

    The mode starts at ``m0`` when given, otherwise from the initialization
    rule (straight on the closure of the visible set, else the side picked by
    the tie-breaking hyperplane).  Terminates on convergence to the target,
    the time budget, the jump budget, a safety violation (which indicates a
    bug) or a non-finite state.
    """
    cfg = cfg or SimConfig()
    if tie_break not in (-1, 1):
        raise DomainError(f"tie_break must be -1 or 1, got {tie_break!r}")
    x0 = scenario.require_free(x0, "x0")
    if vd is None:
        vd = select_virtual_destinations(scenario, x0)
    m = check_mode(m0) if m0 is not None else initialize_mode(x0, vd, scenario, tie_break)

    xd = scenario.target
    c = scenario.obstacle.center
    r = scenario.obstacle.radius
    integrator = INTEGRATORS[cfg.integrator]

    seg_t: list[np.ndarray] = []
    seg_j: list[np.ndarray] = []
    seg_m: list[np.ndarray] = []
    seg_x: list[np.ndarray] = []
    seg_u: list[np.ndarray] = []
    jump_log: list[JumpEvent] = []

    def emit_row(t: float, j: int, mode: int, x: np.ndarray) -> None:
        u = _kernels.control(x, mode, xd, vd.xd_plus, vd.xd_minus, c, r,
                             scenario.gamma, scenario.hat_offset)
        seg_t.append(np.array([t]))
        seg_j.append(np.array([j], dtype=np.int64))
        seg_m.append(np.array([mode], dtype=np.int64))
        seg_x.append(np.asarray(x, dtype=np.float64).reshape(1, -1))
        seg_u.append(np.asarray(u, dtype=np.float64).reshape(1, -1))

    x = x0.copy()
    t = 0.0
    j = 0
    status: str | None = None

    def apply_jumps(x: np.ndarray, t: float) -> str | None:
        """Jump (possibly repeatedly at equal t) until the state is back in a
        flow set; returns a terminal status or None."""
        nonlocal m, j
        cascade = 0
        while not in_flow_set(HybridState(x, m), vd, scenario, 0.0):
            if not in_jump_set(HybridState(x, m), vd, scenario, JUMP_TOL):
                raise SimulationError(
                    f"state in neither flow nor jump set at t={t!r}, m={m}")
            m_new = _pick_mode(jump_map(HybridState(x, m), vd, scenario), tie_break)
            j += 1
            jump_log.append(JumpEvent(t=t, j=j, m_before=m, m_after=m_new, x=x.copy()))
            emit_row(t, j, m_new, x)
            m = m_new
            if j > cfg.max_jumps:
                return STATUS_JUMP_BUDGET
            cascade += 1
            if cascade > _CASCADE_LIMIT:
                raise SimulationError(f"jump cascade did not settle at t={t!r}")
        return None

    # initial sample, then any immediate jumps for starts outside the flow set
    emit_row(t, j, m, x)
    if float(np.linalg.norm(x - xd)) <= cfg.convergence_tol:
        status = STATUS_CONVERGED
    else:
        status = apply_jumps(x, t)

    while status is None:
        cap = int(math.ceil((cfg.max_t - t) / cfg.h)) + 8
        ts = np.empty(cap)
        xs = np.empty((cap, scenario.dimension))
        us = np.empty((cap, scenario.dimension))
        count, reason, t = _kernels.integrate_flow(
            x, m, xd, vd.xd_plus, vd.xd_minus, c, r,
            scenario.gamma, scenario.hat_offset, vd.phi,
            cfg.h, t, cfg.max_t, cfg.convergence_tol, cfg.safety_tol,
            integrator, ts, xs, us)
        # the interval's entry sample repeats the row already emitted (the
        # initial sample or the preceding jump row); keep it only once
        lo = 1
        if count > lo:
            seg_t.append(ts[lo:count].copy())
            seg_j.append(np.full(count - lo, j, dtype=np.int64))
            seg_m.append(np.full(count - lo, m, dtype=np.int64))
            seg_x.append(xs[lo:count].copy())
            seg_u.append(us[lo:count].copy())
        x = xs[count - 1].copy()
        if reason == _kernels.FLOW_LEFT:
            status = apply_jumps(x, t)
        else:
            status = _REASON_STATUS[int(reason)]

    return Trajectory(
        t=np.concatenate(seg_t),
        j=np.concatenate(seg_j),
        m=np.concatenate(seg_m),
        x=np.concatenate(seg_x, axis=0),
        u=np.concatenate(seg_u, axis=0),
        jump_log=jump_log,
        status=status,
    )
