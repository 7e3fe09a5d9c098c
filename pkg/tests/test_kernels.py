"""The compiled kernels and the pure-Python path compute identical results."""

import os
import subprocess
import sys

import numpy as np
import pytest

from conenav import _kernels as K

RNG = np.random.default_rng(77)

XD = np.array([0.0, 0.0])
XDP = np.array([0.04, -0.09165151389911681])
XDM = np.array([-0.04, -0.09165151389911681])
C = np.array([0.0, -5.0])
R = 2.0


def random_free_point():
    while True:
        q = RNG.uniform(-12, 12, size=2)
        if np.linalg.norm(q - C) > R:
            return q


@pytest.mark.skipif(not K.NUMBA_ENABLED, reason="numba disabled or missing")
def test_dispatcher_matches_py_func():
    for _ in range(300):
        x = random_free_point()
        m = int(RNG.integers(-1, 2))
        u_jit = K.control(x, m, XD, XDP, XDM, C, R, 1.0, 0.1)
        u_py = K.control.py_func(x, m, XD, XDP, XDM, C, R, 1.0, 0.1)
        assert np.array_equal(u_jit, u_py)
        ub_jit = K.baseline_control(x, XD, C, R, 1.0)
        ub_py = K.baseline_control.py_func(x, XD, C, R, 1.0)
        assert np.array_equal(ub_jit, ub_py)
        phi = 0.004
        for tol in (0.0, 1e-9):
            assert K.in_flow(x, m, XD, XDP, XDM, C, R, phi, tol) == \
                K.in_flow.py_func(x, m, XD, XDP, XDM, C, R, phi, tol)
            assert K.in_jump(x, m, XD, XDP, XDM, C, R, phi, tol) == \
                K.in_jump.py_func(x, m, XD, XDP, XDM, C, R, phi, tol)
        g_jit = K.shadow_margins(x, XD, C, R)
        g_py = K.shadow_margins.py_func(x, XD, C, R)
        assert g_jit == g_py


@pytest.mark.skipif(not K.NUMBA_ENABLED, reason="numba disabled or missing")
def test_env_flag_selects_fallback_with_identical_trajectory(tmp_path):
    code = """
import numpy as np
import conenav as cn
scn = cn.Scenario(dimension=2, obstacle=cn.Obstacle([0.0, -5.0], 2.0), target=[0.0, 0.0])
cfg = cn.SimConfig(h=1e-2, max_t=40.0)
tr = cn.simulate(scn, [0.0, -10.0], None, cfg)
print(repr(cn.NUMBA_ENABLED))
import sys
tr.to_csv(sys.argv[1])
"""
    outputs = {}
    for flag in ("0", "1"):
        env = dict(os.environ)
        env["CONENAV_NO_NUMBA"] = flag
        csv = tmp_path / f"traj_{flag}.csv"
        res = subprocess.run([sys.executable, "-c", code, str(csv)],
                             env=env, capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        outputs[flag] = (res.stdout.strip(), csv.read_bytes())
    assert outputs["0"][0] == "True"
    assert outputs["1"][0] == "False"
    assert outputs["0"][1] == outputs["1"][1]
