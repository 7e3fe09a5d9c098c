import io
import math

import numpy as np
import pytest

from conenav import DomainError, HybridState, Obstacle, Scenario
from conenav.controller import select_virtual_destinations
from conenav.simulate import (SimConfig, Trajectory, flow_step, resolve_jump,
                              simulate)
from conenav.world import clearance


@pytest.fixture(scope="module")
def vd2d(scn2d):
    return select_virtual_destinations(scn2d, [3.0, -9.0])


# -------------------------------------------------------------- flow_step

def test_flow_step_rk4_matches_exponential(scn2d, vd2d):
    # straight mode is x' = -gamma (x - target): one RK4 step from (2, 0)
    # lands at 2 exp(-h) up to O(h^5)
    s = flow_step(HybridState([2.0, 0.0], 0), vd2d, scn2d, h=0.1, integrator="rk4")
    assert s.x[0] == pytest.approx(2.0 * math.exp(-0.1), abs=1e-6)
    assert s.x[1] == 0.0


def test_flow_step_euler_rk4_second_order_agreement(scn2d, vd2d):
    x0 = HybridState([3.0, 1.0], 0)
    for h in (1e-2, 1e-3):
        xe = flow_step(x0, vd2d, scn2d, h=h, integrator="euler").x
        xr = flow_step(x0, vd2d, scn2d, h=h, integrator="rk4").x
        bound = 5.0 * h * h * scn2d.gamma ** 2 * np.linalg.norm(x0.x - scn2d.target)
        assert np.linalg.norm(xe - xr) <= bound


def test_flow_step_never_lands_inside(scn2d):
    # starts adjacent to the boundary, aimed around the obstacle
    rng = np.random.default_rng(5)
    for _ in range(50):
        ang = rng.uniform(0, 2 * math.pi)
        x = scn2d.obstacle.center + (scn2d.obstacle.radius + 1e-6) * np.array(
            [math.cos(ang), math.sin(ang)])
        vd = select_virtual_destinations(scn2d, x)
        for m in (-1, 0, 1):
            s = flow_step(HybridState(x, m), vd, scn2d, h=1e-2)
            assert clearance(s.x, scn2d.obstacle) >= -1e-12


# ------------------------------------------------------------ resolve_jump

def test_resolve_jump_shadow_to_projection(scn2d, vd2d):
    s = resolve_jump(HybridState([1.5, -9.0], 0), vd2d, scn2d)
    assert s.m == 1
    assert s.x == pytest.approx([1.5, -9.0])
    s = resolve_jump(HybridState([1.5, -9.0], 0), vd2d, scn2d, tie_break=-1)
    assert s.m == -1


def test_resolve_jump_projection_to_straight(scn2d, vd2d):
    s = resolve_jump(HybridState([5.0, 0.0], 1), vd2d, scn2d)
    assert s.m == 0


def test_resolve_jump_requires_jump_set(scn2d, vd2d):
    with pytest.raises(DomainError):
        resolve_jump(HybridState([5.0, 0.0], 0), vd2d, scn2d)


# ---------------------------------------------------------------- simulate

def test_simulate_already_at_target(scn2d, cfg):
    tr = simulate(scn2d, [0.0, 0.0], None, cfg, vd=select_virtual_destinations(scn2d, [3.0, -9.0]))
    assert tr.status == "converged"
    assert tr.jumps == 0
    assert len(tr) == 1
    assert tr.t[0] == 0.0


def test_simulate_visible_start_goes_straight(scn2d, cfg):
    x0 = np.array([7.0, 3.0])
    tr = simulate(scn2d, x0, None, cfg)
    assert tr.status == "converged"
    assert tr.jumps == 0
    # path is collinear with (x0, target): cross-track deviation below 1e-6
    d = x0 / np.linalg.norm(x0)
    cross = tr.x - np.outer(tr.x @ d, d)
    assert np.max(np.linalg.norm(cross, axis=1)) <= 1e-6
    assert np.linalg.norm(tr.final_x) <= cfg.convergence_tol


def test_simulate_stall_line_manual_straight_start_two_jumps(scn2d, cfg):
    tr = simulate(scn2d, [0.0, -10.0], 0, cfg)
    assert tr.status == "converged"
    assert [(e.m_before, e.m_after) for e in tr.jump_log] == [(0, 1), (1, 0)]
    assert tr.jump_log[0].t == 0.0
    # tie-break is configurable
    tr = simulate(scn2d, [0.0, -10.0], 0, cfg, tie_break=-1)
    assert tr.status == "converged"
    assert [(e.m_before, e.m_after) for e in tr.jump_log] == [(0, -1), (-1, 0)]


def test_simulate_stall_line_auto_init_single_jump(scn2d, cfg):
    tr = simulate(scn2d, [0.0, -10.0], None, cfg)
    assert tr.status == "converged"
    assert [(e.m_before, e.m_after) for e in tr.jump_log] == [(1, 0)]


def test_simulate_jump_rows_keep_position(scn2d, cfg):
    tr = simulate(scn2d, [0.0, -10.0], 0, cfg)
    for ev in tr.jump_log:
        rows = np.where(tr.t == ev.t)[0]
        assert rows.size >= 2
        for k in rows[1:]:
            assert np.array_equal(tr.x[k], tr.x[rows[0]])


def test_simulate_hybrid_time_domain_invariants(scn2d, cfg):
    tr = simulate(scn2d, [0.0, -10.0], 0, cfg)
    assert np.all(np.diff(tr.j) >= 0)
    same_j = tr.j[1:] == tr.j[:-1]
    dt = np.diff(tr.t)
    assert np.all(dt[same_j] > 0)
    assert np.max(dt) <= cfg.h + 1e-12


def test_simulate_timeout_status(scn2d):
    cfg = SimConfig(h=1e-3, max_t=0.5)
    tr = simulate(scn2d, [9.0, 9.0], None, cfg)
    assert tr.status == "timeout"
    assert tr.t[-1] == pytest.approx(0.5)


def test_simulate_numeric_failure_status():
    scn = Scenario(dimension=2, obstacle=Obstacle([0.0, -5.0], 2.0),
                   target=[0.0, 0.0], gamma=1e8)
    cfg = SimConfig(h=1.0, max_t=60.0, integrator="euler", convergence_tol=1e-3)
    tr = simulate(scn, [5.0, 0.0], 0, cfg)
    assert tr.status == "numeric_failure"


def test_simulate_rejects_start_inside_obstacle(scn2d, cfg):
    with pytest.raises(DomainError):
        simulate(scn2d, [0.0, -5.0], None, cfg)


def test_simconfig_validation():
    with pytest.raises(Exception):
        SimConfig(h=0.0)
    with pytest.raises(Exception):
        SimConfig(h=2.0, max_t=1.0)
    with pytest.raises(Exception):
        SimConfig(integrator="rk45")
    with pytest.raises(Exception):
        SimConfig(convergence_tol=0.0)


# ------------------------------------------------------------- CSV export

def test_csv_header_and_round_trip(scn2d, cfg):
    tr = simulate(scn2d, [0.0, -10.0], 0, cfg)
    text = tr.to_csv_string()
    assert text.splitlines()[0] == "t,j,m,x0,x1,u0,u1"
    back = Trajectory.from_csv(io.StringIO(text))
    assert np.array_equal(back.t, tr.t)
    assert np.array_equal(back.j, tr.j)
    assert np.array_equal(back.m, tr.m)
    assert np.array_equal(back.x, tr.x)
    assert np.array_equal(back.u, tr.u)
    assert [(e.m_before, e.m_after) for e in back.jump_log] == \
        [(e.m_before, e.m_after) for e in tr.jump_log]
    assert back.status is None
    # re-export is byte-identical
    assert back.to_csv_string() == text


def test_csv_rejects_foreign_header():
    with pytest.raises(DomainError):
        Trajectory.from_csv(io.StringIO("a,b,c\n1,2,3\n"))


def test_simulate_euler_end_to_end(scn2d):
    cfg = SimConfig(h=1e-3, integrator="euler")
    tr = simulate(scn2d, [0.0, -10.0], None, cfg)
    assert tr.status == "converged"
    assert tr.jumps <= 2


def test_mode_zero_terminal_phase_monotone(scn2d, cfg):
    tr = simulate(scn2d, [0.0, -10.0], None, cfg)
    final_interval = tr.j == tr.j[-1]
    assert np.all(tr.m[final_interval] == 0)
    dist = np.linalg.norm(tr.x[final_interval] - scn2d.target, axis=1)
    assert np.all(np.diff(dist) < 0)


def test_resolve_jump_lands_in_flow_set(scn2d, vd2d):
    from conenav.controller import in_flow_set
    for state in (HybridState([1.5, -9.0], 0), HybridState([5.0, 0.0], 1)):
        landed = resolve_jump(state, vd2d, scn2d)
        assert in_flow_set(landed, vd2d, scn2d, 1e-9)
