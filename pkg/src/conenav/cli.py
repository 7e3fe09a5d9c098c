"""Command-line front end.

One JSON scenario file drives every command; the starts live in the file so
the committed grids are reproducible fixtures.  Exit codes are the only
channel for run status (0 converged, 1 configuration error, 2 not converged
within the budgets, 3 safety violation or numeric failure); stdout carries
human-readable progress and all data goes to files under ``--out``.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import compare_baseline, comparison_to_csv, verify
from .controller import select_virtual_destinations
from .errors import ConfigError, DomainError, ScenarioError, SimulationError
from .simulate import (STATUS_CONVERGED, STATUS_JUMP_BUDGET, STATUS_NUMERIC,
                       STATUS_SAFETY, STATUS_TIMEOUT, SimConfig, Trajectory,
                       simulate)
from .world import Obstacle, Scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_SAFETY = 3

_STATUS_EXIT = {
    STATUS_CONVERGED: EXIT_OK,
    STATUS_TIMEOUT: EXIT_NOT_CONVERGED,
    STATUS_JUMP_BUDGET: EXIT_NOT_CONVERGED,
    STATUS_SAFETY: EXIT_SAFETY,
    STATUS_NUMERIC: EXIT_SAFETY,
}

_TOP_KEYS = {"dimension", "obstacle", "target", "gamma", "e", "kappa", "sim",
             "starts", "mode_init", "tie_break", "fallback_dir"}
_OBSTACLE_KEYS = {"center", "radius"}
_SIM_KEYS = {"h", "max_t", "max_jumps", "convergence_tol", "integrator", "safety_tol"}


@dataclass(frozen=True)
class RunSpec:
    """Parsed scenario file: workspace, integration config and run options."""

    scenario: Scenario
    sim: SimConfig
    starts: list
    mode_init: int | None   # None means the automatic initialization rule
    tie_break: int

    def to_dict(self) -> dict:
        scn = self.scenario
        return {
            "dimension": scn.dimension,
            "obstacle": {"center": list(map(float, scn.obstacle.center)),
                         "radius": float(scn.obstacle.radius)},
            "target": list(map(float, scn.target)),
            "gamma": float(scn.gamma),
            "e": float(scn.hat_offset),
            "kappa": float(scn.cone_fraction),
            "sim": {"h": self.sim.h, "max_t": self.sim.max_t,
                    "max_jumps": self.sim.max_jumps,
                    "convergence_tol": self.sim.convergence_tol,
                    "integrator": self.sim.integrator,
                    "safety_tol": self.sim.safety_tol},
            "starts": [list(map(float, s)) for s in self.starts],
            "mode_init": "auto" if self.mode_init is None else self.mode_init,
            "tie_break": self.tie_break,
            "fallback_dir": (None if scn.fallback_dir is None
                             else list(map(float, scn.fallback_dir))),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def _number(raw: dict, key: str, where: str, default=None) -> float:
    if key not in raw:
        if default is None:
            raise ConfigError(f"missing key `{where}{key}`")
        return default
    v = raw[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ConfigError(f"key `{where}{key}` must be a finite number, got {v!r}")
    return float(v)


def _vector(raw: dict, key: str, where: str, dim: int | None):
    if key not in raw:
        raise ConfigError(f"missing key `{where}{key}`")
    v = raw[key]
    if (not isinstance(v, list) or len(v) < 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)):
        raise ConfigError(f"key `{where}{key}` must be an array of numbers")
    if dim is not None and len(v) != dim:
        raise ConfigError(f"key `{where}{key}` must have length {dim}, got {len(v)}")
    return [float(x) for x in v]


def parse_run_spec(raw: dict) -> RunSpec:
    """Validate a decoded scenario mapping; unknown keys are rejected."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must contain a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "the scenario file")
    if "dimension" not in raw:
        raise ConfigError("missing key `dimension`")
    dim = raw["dimension"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 2:
        raise ConfigError(f"key `dimension` must be an integer >= 2, got {dim!r}")
    if "obstacle" not in raw or not isinstance(raw["obstacle"], dict):
        raise ConfigError("missing or malformed key `obstacle`")
    _reject_unknown(raw["obstacle"], _OBSTACLE_KEYS, "`obstacle`")
    center = _vector(raw["obstacle"], "center", "obstacle.", dim)
    radius = _number(raw["obstacle"], "radius", "obstacle.")
    if radius <= 0.0:
        raise ConfigError(f"key `obstacle.radius` must be positive, got {radius!r}")
    target = _vector(raw, "target", "", dim)
    gamma = _number(raw, "gamma", "", default=1.0)
    e = _number(raw, "e", "", default=0.1)
    kappa = _number(raw, "kappa", "", default=0.5)
    sim_raw = raw.get("sim", {})
    if not isinstance(sim_raw, dict):
        raise ConfigError("key `sim` must be an object")
    _reject_unknown(sim_raw, _SIM_KEYS, "`sim`")
    integrator = sim_raw.get("integrator", "rk4")
    if not isinstance(integrator, str):
        raise ConfigError(f"key `sim.integrator` must be a string, got {integrator!r}")
    max_jumps = sim_raw.get("max_jumps", 10)
    if isinstance(max_jumps, bool) or not isinstance(max_jumps, int):
        raise ConfigError(f"key `sim.max_jumps` must be an integer, got {max_jumps!r}")
    starts_raw = raw.get("starts", [])
    if not isinstance(starts_raw, list):
        raise ConfigError("key `starts` must be an array of arrays")
    starts = [_vector({"s": s}, "s", f"starts[{i}].", dim)
              for i, s in enumerate(starts_raw)]
    mode_init = raw.get("mode_init", "auto")
    if mode_init == "auto":
        mode_init = None
    elif isinstance(mode_init, bool) or mode_init not in (-1, 0, 1):
        raise ConfigError(f'key `mode_init` must be "auto", -1, 0 or 1, got {mode_init!r}')
    tie_break = raw.get("tie_break", 1)
    if isinstance(tie_break, bool) or tie_break not in (-1, 1):
        raise ConfigError(f"key `tie_break` must be -1 or 1, got {tie_break!r}")
    fallback = None
    if raw.get("fallback_dir") is not None:
        fallback = _vector(raw, "fallback_dir", "", dim)
    try:
        scenario = Scenario(dimension=dim, obstacle=Obstacle(center, radius),
                            target=target, gamma=gamma, hat_offset=e,
                            cone_fraction=kappa, fallback_dir=fallback)
        sim = SimConfig(
            h=_number(sim_raw, "h", "sim.", default=1e-3),
            max_t=_number(sim_raw, "max_t", "sim.", default=50.0),
            max_jumps=max_jumps,
            convergence_tol=_number(sim_raw, "convergence_tol", "sim.", default=1e-3),
            integrator=integrator,
            safety_tol=_number(sim_raw, "safety_tol", "sim.", default=1e-6),
        )
    except ScenarioError as exc:
        raise ConfigError(str(exc)) from exc
    for i, s in enumerate(starts):
        if float(np.linalg.norm(np.asarray(s) - scenario.obstacle.center)) < radius:
            raise ConfigError(f"start violates free space: `starts[{i}]` = {s}")
    return RunSpec(scenario=scenario, sim=sim, starts=starts,
                   mode_init=mode_init, tie_break=tie_break)


def load_run_spec(path) -> RunSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_run_spec(raw)


def _run_one(spec: RunSpec, i: int):
    x0 = spec.starts[i]
    scn = spec.scenario
    vd = select_virtual_destinations(scn, x0)
    traj = simulate(scn, x0, spec.mode_init, spec.sim, vd=vd,
                    tie_break=spec.tie_break)
    report = verify(traj, scn, vd, convergence_tol=spec.sim.convergence_tol)
    return traj, report, vd


def cmd_simulate(spec: RunSpec, out: Path, start_index: int) -> int:
    if not spec.starts:
        raise ConfigError("key `starts` is empty")
    if not (0 <= start_index < len(spec.starts)):
        raise ConfigError(f"--start {start_index} out of range (have {len(spec.starts)} starts)")
    out.mkdir(parents=True, exist_ok=True)
    traj, report, _ = _run_one(spec, start_index)
    traj.to_csv(out / f"traj_{start_index}.csv")
    (out / f"report_{start_index}.json").write_text(report.to_json() + "\n", encoding="utf-8")
    print(f"start {start_index}: {traj.status} after {traj.jumps} jump(s), "
          f"t_end={traj.t[-1]:.6g}; wrote {out / f'traj_{start_index}.csv'}")
    return _STATUS_EXIT[traj.status]


# one AnalysisReport row per start, plus the per-start virtual-destination
# pair (their plane depends on the start)
_SUMMARY_HEADER = ("start_id,status,min_clearance,path_length,oracle_length,"
                   "optimality_ratio,lyapunov_violations,lyapunov_worst,"
                   "max_control_gap_at_jumps,max_plane_deviation,jumps,"
                   "xd_plus,xd_minus")


def _cell(vec) -> str:
    return " ".join(f"{v:.17g}" for v in vec)


def cmd_grid(spec: RunSpec, out: Path) -> int:
    if not spec.starts:
        raise ConfigError("key `starts` is empty")
    out.mkdir(parents=True, exist_ok=True)
    worst = EXIT_OK
    lines = [_SUMMARY_HEADER]
    for i in range(len(spec.starts)):
        traj, report, vd = _run_one(spec, i)
        traj.to_csv(out / f"traj_{i}.csv")
        (out / f"report_{i}.json").write_text(report.to_json() + "\n", encoding="utf-8")
        lines.append(
            f"{i},{report.status},{report.min_clearance:.17g},"
            f"{report.path_length:.17g},{report.oracle_length:.17g},"
            f"{report.optimality_ratio:.17g},{report.lyapunov_violations.count},"
            f"{report.lyapunov_violations.worst:.17g},"
            f"{report.max_control_gap_at_jumps:.17g},"
            f"{report.max_plane_deviation:.17g},{report.jumps},"
            f"{_cell(vd.xd_plus)},{_cell(vd.xd_minus)}")
        print(f"start {i}: {traj.status}, jumps={traj.jumps}, "
              f"ratio={report.optimality_ratio:.4f}")
        worst = max(worst, _STATUS_EXIT[traj.status])
    (out / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out / 'summary.csv'}")
    return worst


def cmd_compare(spec: RunSpec, out: Path) -> int:
    if not spec.starts:
        raise ConfigError("key `starts` is empty")
    out.mkdir(parents=True, exist_ok=True)
    rows = compare_baseline(spec.scenario, spec.starts, spec.sim,
                            tie_break=spec.tie_break)
    comparison_to_csv(rows, out / "comparison.csv")
    for row in rows:
        print(f"start {row.start_id} [{row.law}]: {row.status}, "
              f"ratio={row.ratio:.4f}, stalled={row.stalled}")
    print(f"wrote {out / 'comparison.csv'}")
    return EXIT_OK


def _circle_points(center, radius, n_points=360):
    ts = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    return np.stack([center[0] + radius * np.cos(ts),
                     center[1] + radius * np.sin(ts)], axis=1)


def cmd_plotdata(spec: RunSpec, traj_path: Path, out: Path) -> int:
    traj = Trajectory.from_csv(traj_path)
    out.mkdir(parents=True, exist_ok=True)
    n = traj.dimension
    keep = min(n, 3)
    if n > 3:
        print(f"warning: trajectory is {n}-dimensional; "
              "emitting the first three coordinates")
    path_file = out / "path.dat"
    with open(path_file, "w", encoding="utf-8") as fh:
        for k in range(len(traj)):
            fh.write(" ".join(f"{v:.17g}" for v in traj.x[k, :keep]) + "\n")
    c = spec.scenario.obstacle.center[:keep]
    r = spec.scenario.obstacle.radius
    obstacle_file = out / "obstacle.dat"
    with open(obstacle_file, "w", encoding="utf-8") as fh:
        if keep == 2:
            for p in _circle_points(c, r):
                fh.write(f"{p[0]:.17g} {p[1]:.17g}\n")
        else:
            # latitude circles and meridians, blank-line separated blocks
            for lat_deg in range(-80, 81, 20):
                lat = math.radians(lat_deg)
                rho = r * math.cos(lat)
                z = c[2] + r * math.sin(lat)
                for p in _circle_points(c[:2], rho):
                    fh.write(f"{p[0]:.17g} {p[1]:.17g} {z:.17g}\n")
                fh.write("\n")
            for lon_deg in range(0, 180, 30):
                lon = math.radians(lon_deg)
                ts = np.linspace(0.0, 2.0 * np.pi, 360, endpoint=False)
                for t in ts:
                    fh.write(f"{c[0] + r * math.cos(t) * math.cos(lon):.17g} "
                             f"{c[1] + r * math.cos(t) * math.sin(lon):.17g} "
                             f"{c[2] + r * math.sin(t):.17g}\n")
                fh.write("\n")
    print(f"wrote {path_file} and {obstacle_file}")
    return EXIT_OK


def cmd_verify(spec: RunSpec, traj_path: Path, out: Path) -> int:
    traj = Trajectory.from_csv(traj_path)
    if traj.dimension != spec.scenario.dimension:
        raise ConfigError(
            f"trajectory dimension {traj.dimension} does not match scenario "
            f"dimension {spec.scenario.dimension}")
    vd = select_virtual_destinations(spec.scenario, traj.x0)
    report = verify(traj, spec.scenario, vd,
                    convergence_tol=spec.sim.convergence_tol)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / f"{Path(traj_path).stem}_report.json"
    report_path.write_text(report.to_json() + "\n", encoding="utf-8")
    print(f"{report.status}: ratio={report.optimality_ratio:.4f}, "
          f"min_clearance={report.min_clearance:.3g}; wrote {report_path}")
    return EXIT_OK if report.status == STATUS_CONVERGED else EXIT_NOT_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conenav",
        description="Hybrid feedback navigation around a spherical obstacle.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_traj=False):
        p.add_argument("scenario", help="scenario JSON file")
        if with_traj:
            p.add_argument("trajectory", help="trajectory CSV produced by `simulate`")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--h", type=float, default=None, help="override sim.h")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved, unused (the pipeline is deterministic)")

    p = sub.add_parser("simulate", help="run one start and write its trajectory and report")
    add_common(p)
    p.add_argument("--start", type=int, default=0, help="index into the starts array")

    add_common(sub.add_parser("grid", help="run every start and write a summary table"))
    add_common(sub.add_parser("compare",
                              help="race the continuous law against the hybrid one"))
    add_common(sub.add_parser("plotdata",
                              help="emit gnuplot-ready path and obstacle columns",
                              ), with_traj=True)
    add_common(sub.add_parser("verify",
                              help="recompute the analysis report for a trajectory CSV"),
               with_traj=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_run_spec(args.scenario)
        if args.h is not None:
            spec = replace(spec, sim=replace(spec.sim, h=args.h))
        out = Path(args.out)
        if args.command == "simulate":
            return cmd_simulate(spec, out, args.start)
        if args.command == "grid":
            return cmd_grid(spec, out)
        if args.command == "compare":
            return cmd_compare(spec, out)
        if args.command == "plotdata":
            return cmd_plotdata(spec, Path(args.trajectory), out)
        if args.command == "verify":
            return cmd_verify(spec, Path(args.trajectory), out)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ScenarioError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_SAFETY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
