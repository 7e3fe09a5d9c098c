"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
import time

import numpy as np
import pytest

from conenav import HybridState, Obstacle
from conenav.analysis import (shortest_path_oracle, simulate_baseline, verify)
from conenav.cli import load_run_spec
from conenav.controller import (in_flow_set, in_jump_set, jump_map,
                                select_virtual_destinations)
from conenav.geometry import (Cone, cone_contains, cones_meet_only_at_vertex,
                              project_orthogonal, project_parallel, reflect)
from conenav.simulate import SimConfig, simulate
from conenav.world import clearance, in_visible
from conftest import SCENARIO_2D, SCENARIO_3D
from oracles import segment_point_distance, visibility_graph_length


def announce(criterion: int, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def spec2d():
    return load_run_spec(SCENARIO_2D)


@pytest.fixture(scope="module")
def spec3d():
    return load_run_spec(SCENARIO_3D)


@pytest.fixture(scope="module")
def grid2d(spec2d):
    """All nine 2D runs with their reports, plus the timed wall clock."""
    scn = spec2d.scenario
    # warm-up outside the timed region (loads the compiled kernels)
    simulate(scn, spec2d.starts[0], None, spec2d.sim, tie_break=spec2d.tie_break)
    t0 = time.perf_counter()
    runs = []
    for x0 in spec2d.starts:
        vd = select_virtual_destinations(scn, x0)
        traj = simulate(scn, x0, spec2d.mode_init, spec2d.sim, vd=vd,
                        tie_break=spec2d.tie_break)
        runs.append((x0, vd, traj, verify(traj, scn, vd, spec2d.sim.convergence_tol)))
    wall = time.perf_counter() - t0
    return runs, wall


@pytest.fixture(scope="module")
def grid3d(spec3d):
    scn = spec3d.scenario
    runs = []
    for x0 in spec3d.starts:
        vd = select_virtual_destinations(scn, x0)
        traj = simulate(scn, x0, spec3d.mode_init, spec3d.sim, vd=vd,
                        tie_break=spec3d.tie_break)
        runs.append((x0, vd, traj, verify(traj, scn, vd, spec3d.sim.convergence_tol)))
    return runs


def test_criterion_1_2d_grid_convergence_safety_jumps(spec2d, grid2d):
    runs, wall = grid2d
    scn = spec2d.scenario
    assert [0.0, -10.0] in spec2d.starts
    worst_gap = max(float(np.linalg.norm(tr.final_x - scn.target)) for _, _, tr, _ in runs)
    worst_clear = min(rep.min_clearance for _, _, _, rep in runs)
    worst_jumps = max(rep.jumps for _, _, _, rep in runs)
    ok = (all(tr.status == "converged" for _, _, tr, _ in runs)
          and worst_gap <= 1e-3
          and worst_clear >= -1e-6
          and worst_jumps <= 2
          and wall < 10.0)
    announce(1, ok, f"9/9 converged, final gap <= {worst_gap:.2e}, "
                    f"min clearance {worst_clear:+.2e}, max jumps {worst_jumps}, "
                    f"runtime {wall:.2f} s")


def test_criterion_2_path_optimality(spec2d, grid2d):
    runs, _ = grid2d
    scn = spec2d.scenario
    worst_all = 0.0
    worst_visible = 0.0
    for x0, _, _, rep in runs:
        worst_all = max(worst_all, rep.optimality_ratio)
        blocked = segment_point_distance(x0, scn.target, scn.obstacle.center) \
            < scn.obstacle.radius
        if not blocked:
            worst_visible = max(worst_visible, rep.optimality_ratio)
    ok = worst_all <= 1.02 and worst_visible <= 1.001
    announce(2, ok, f"oracle ratio <= {worst_all:.6f} overall, "
                    f"<= {worst_visible:.6f} on visible starts")


def test_criterion_3_gas_vs_agas_separation(spec2d):
    scn = spec2d.scenario
    x0 = [0.0, -10.0]
    base = simulate_baseline(scn, x0, spec2d.sim, stall_speed=1e-9, stall_steps=1000)
    hybrid = simulate(scn, x0, spec2d.mode_init, spec2d.sim, tie_break=spec2d.tie_break)
    speeds = np.linalg.norm(base.u[-1000:], axis=1)
    ok = (base.status == "stalled"
          and bool(np.all(speeds < 1e-9))
          and float(np.linalg.norm(base.final_x - scn.target)) > spec2d.sim.convergence_tol
          and hybrid.status == "converged")
    announce(3, ok, f"continuous law {base.status} at distance "
                    f"{np.linalg.norm(base.final_x - scn.target):.3f}, "
                    f"hybrid law {hybrid.status} with {hybrid.jumps} jump(s)")


def test_criterion_4_3d_grid_planarity_and_optimality(spec3d, grid3d):
    runs = grid3d
    worst_clear = min(rep.min_clearance for _, _, _, rep in runs)
    worst_plane = max(rep.max_plane_deviation for _, _, _, rep in runs)
    worst_ratio = max(rep.optimality_ratio for _, _, _, rep in runs)
    ok = (all(tr.status == "converged" for _, _, tr, _ in runs)
          and worst_clear >= -1e-6
          and worst_plane <= 1e-6
          and worst_ratio <= 1.02)
    announce(4, ok, f"9/9 converged, min clearance {worst_clear:+.2e}, "
                    f"plane deviation <= {worst_plane:.2e}, ratio <= {worst_ratio:.6f}")


def test_criterion_5_switch_continuity_gap_decay(spec2d):
    scn = spec2d.scenario
    shadow_starts = [[0.0, -10.0], [3.0, -9.0], [2.0, -12.0], [1.0, -7.0],
                     [4.0, -11.0], [-2.5, -9.5], [-1.5, -8.0]]
    hs = [1e-2, 1e-3, 1e-4]
    gaps = []
    for h in hs:
        cfg = SimConfig(h=h, max_t=spec2d.sim.max_t,
                        convergence_tol=spec2d.sim.convergence_tol)
        worst = 0.0
        for x0 in shadow_starts:
            vd = select_virtual_destinations(scn, x0)
            traj = simulate(scn, x0, None, cfg, vd=vd)
            assert traj.status == "converged"
            assert traj.jumps >= 1    # projection -> straight switch happened
            rep = verify(traj, scn, vd, cfg.convergence_tol)
            worst = max(worst, rep.max_control_gap_at_jumps)
        gaps.append(worst)
    order = float(np.polyfit(np.log(hs), np.log(gaps), 1)[0])
    ok = order >= 0.8
    announce(5, ok, "control gap at the projection->straight switch: "
                    + ", ".join(f"h={h:g}: {g:.2e}" for h, g in zip(hs, gaps))
                    + f"; fitted order {order:.2f}")


def test_criterion_6_lyapunov_monotonicity(grid2d, grid3d):
    runs2, _ = grid2d
    total = 0
    worst = 0.0
    for _, _, _, rep in list(runs2) + list(grid3d):
        total += rep.lyapunov_violations.count
        worst = max(worst, rep.lyapunov_violations.worst)
    ok = total == 0
    announce(6, ok, f"{total} per-step Lyapunov violations across both "
                    f"scenario suites (worst overshoot {worst:.2e})")


def test_criterion_7_property_suites(spec2d):
    rng = np.random.default_rng(20240812)
    scn = spec2d.scenario
    failures = []

    # reflector involution and projection decomposition
    for _ in range(1000):
        n = int(rng.integers(2, 6))
        v = rng.normal(size=n)
        v = v / np.linalg.norm(v)
        x = rng.normal(size=n) * rng.uniform(0.1, 10)
        if np.linalg.norm(reflect(v, reflect(v, x)) - x) > 1e-9:
            failures.append("reflector involution")
            break
        par, orth = project_parallel(v, x), project_orthogonal(v, x)
        if np.linalg.norm(par + orth - x) > 1e-12 or abs(float(np.dot(orth, v))) > 1e-12:
            failures.append("projection decomposition")
            break

    # vertex-disjointness sampling check: no point off the vertex in both cones
    checked = 0
    while checked < 10_000:
        n = int(rng.integers(2, 5))
        vertex = rng.normal(size=n)
        a1, a2 = rng.normal(size=n), rng.normal(size=n)
        if np.linalg.norm(a1) < 1e-9 or np.linalg.norm(a2) < 1e-9:
            continue
        phi1, phi2 = rng.uniform(0.01, 0.6, size=2)
        if not cones_meet_only_at_vertex(vertex, a1, a2, phi1, phi2):
            continue
        checked += 1
        a = a1 if checked % 2 else a2
        phi = phi1 if checked % 2 else phi2
        a = a / np.linalg.norm(a)
        w = rng.normal(size=n)
        w -= a * np.dot(a, w)
        w = w / np.linalg.norm(w) if np.linalg.norm(w) > 1e-12 else np.zeros(n)
        alpha = rng.uniform(0.0, phi)
        q = vertex + rng.uniform(0.05, 10.0) * (math.cos(alpha) * a + math.sin(alpha) * w)
        c1 = Cone(vertex=vertex, axis=a1, half_aperture=phi1, sense="<=")
        c2 = Cone(vertex=vertex, axis=a2, half_aperture=phi2, sense="<=")
        if cone_contains(c1, q, 0.0) and cone_contains(c2, q, 0.0):
            failures.append("cone disjointness sampling")
            break

    # flow/jump cover over random augmented states
    vd = select_virtual_destinations(scn, [3.0, -9.0])
    for _ in range(10_000):
        q = rng.uniform(-12, 12, size=2)
        if clearance(q, scn.obstacle) < 0:
            continue
        s = HybridState(q, int(rng.integers(-1, 2)))
        if not (in_flow_set(s, vd, scn, 0.0) or in_jump_set(s, vd, scn, 0.0)):
            failures.append("flow/jump cover")
            break

    # nonempty jump map on a 100 x 100 grid
    for x in np.linspace(-12, 12, 100):
        for y in np.linspace(-14, 10, 100):
            q = np.array([x, y])
            if clearance(q, scn.obstacle) < 0:
                continue
            if len(jump_map(HybridState(q, 0), vd, scn)) == 0:
                failures.append("jump map empty")
                break

    # visibility predicate vs the exact segment-ball oracle
    mismatches = 0
    checked = 0
    while checked < 10_000:
        q = rng.uniform(-12, 12, size=2)
        if clearance(q, scn.obstacle) < 0:
            continue
        margin = segment_point_distance(q, scn.target, scn.obstacle.center) \
            - scn.obstacle.radius
        if abs(margin) < 1e-9:
            continue
        checked += 1
        if in_visible(q, scn.target, scn.obstacle, 0.0) != (margin > 0):
            mismatches += 1
    if mismatches:
        failures.append(f"visibility oracle ({mismatches} mismatches)")

    # analytic shortest-path oracle vs the discretized visibility graph
    worst_rel = 0.0
    instances = 0
    while instances < 200:
        c = rng.uniform(-2, 2, size=2)
        r = rng.uniform(0.5, 2.0)
        p = rng.uniform(-8, 8, size=2)
        q = rng.uniform(-8, 8, size=2)
        if np.linalg.norm(p - c) < 1.05 * r or np.linalg.norm(q - c) < 1.05 * r:
            continue
        instances += 1
        obs = Obstacle(c, r)
        ours = shortest_path_oracle(p, q, obs)
        graph = visibility_graph_length(p, q, c, r)
        worst_rel = max(worst_rel, abs(ours - graph) / graph)
    if worst_rel > 1e-3:
        failures.append(f"oracle vs visibility graph (rel err {worst_rel:.2e})")

    ok = not failures
    announce(7, ok, "all property suites green "
                    f"(oracle-vs-graph worst rel err {worst_rel:.2e})"
             if ok else "failed: " + "; ".join(failures))
