"""Hot numeric kernels for the closed-loop simulation.

Everything in this module is written against plain float64 scalars and 1-D
arrays so the same source compiles under numba's nopython mode and also runs
unchanged as ordinary NumPy/Python.  Set the environment variable
``CONENAV_NO_NUMBA=1`` before import to force the pure-NumPy path (it is also
taken automatically when numba is not installed).  ``benchmarks/bench_jit.py``
compares the two.

Kernels are total functions: they clamp trig arguments and never raise, so a
Runge-Kutta midpoint that pokes marginally outside the free space or across a
set boundary still evaluates.  Input validation lives in the public modules.
"""

import math
import os

import numpy as np


def _numba_requested() -> bool:
    if os.environ.get("CONENAV_NO_NUMBA", "").strip().lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested()

if NUMBA_ENABLED:
    from numba import njit

    def _jit(fn):
        return njit(cache=True)(fn)
else:
    def _jit(fn):
        return fn

# exit reasons returned by the integrators
FLOW_LEFT = 0
CONVERGED = 1
TIME_EXHAUSTED = 2
SAFETY = 3
NONFINITE = 4
STALLED = 5

# integrator ids
EULER = 0
RK4 = 1


@_jit
def norm(v):
    s = 0.0
    for i in range(v.shape[0]):
        s += v[i] * v[i]
    return math.sqrt(s)


@_jit
def dot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@_jit
def clamp(x, lo, hi):
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


@_jit
def angle_between(a, b):
    """Angle in [0, pi] between two vectors, cosine clamped to [-1, 1].

    Returns 0.0 on a zero vector; public wrappers reject that case instead.
    """
    na = norm(a)
    nb = norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return math.acos(clamp(dot(a, b) / (na * nb), -1.0, 1.0))


@_jit
def enclosing_half_aperture(dist, radius):
    """Half aperture of the cone enclosing the obstacle seen from distance
    ``dist``; the arcsine argument is clamped so the boundary gives pi/2."""
    if dist <= radius:
        return 0.5 * math.pi
    return math.asin(clamp(radius / dist, -1.0, 1.0))


@_jit
def shadow_margins(q, dest, c, radius):
    """Signed margins of the shadow region of ``dest``.

    Returns ``(g_cone, g_front)`` where the shadow region is
    ``g_cone >= 0 and g_front >= 0``:

    * ``g_cone  = a.(q-dest) - ||q-dest|| sqrt(||a||^2 - r^2)`` with
      ``a = c - dest``; the second term equals ``||a|| ||q-dest|| cos(theta_d)``
      written without trig round-trips.
    * ``g_front = (c-q).(dest-q)``.
    """
    n = q.shape[0]
    a_dot_qd = 0.0
    qd2 = 0.0
    a2 = 0.0
    g_front = 0.0
    for i in range(n):
        ai = c[i] - dest[i]
        qdi = q[i] - dest[i]
        a_dot_qd += ai * qdi
        qd2 += qdi * qdi
        a2 += ai * ai
        g_front += (c[i] - q[i]) * (dest[i] - q[i])
    lateral = a2 - radius * radius
    if lateral < 0.0:
        lateral = 0.0
    g_cone = a_dot_qd - math.sqrt(qd2) * math.sqrt(lateral)
    return g_cone, g_front


@_jit
def in_shadow(q, dest, c, radius, tol):
    """Shadow membership with additive slack ``tol``; the vertex itself is
    excluded (the destination always sees itself)."""
    same = True
    for i in range(q.shape[0]):
        if q[i] != dest[i]:
            same = False
            break
    if same:
        return False
    g_cone, g_front = shadow_margins(q, dest, c, radius)
    return g_cone >= -tol and g_front >= -tol


@_jit
def control(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e):
    """Closed-loop velocity for the mode-switching law.

    Mode 0 steers straight at the target; modes +-1 steer at the matching
    virtual destination with the obstacle-projection correction and the
    speed-up factor that restores continuity at the switch surface.
    """
    n = x.shape[0]
    u = np.empty(n)
    if m == 0:
        for i in range(n):
            u[i] = gamma * (xd[i] - x[i])
        return u
    if m == 1:
        d = xd_plus
    else:
        d = xd_minus
    dist_d = 0.0
    dist_c = 0.0
    for i in range(n):
        dd = d[i] - x[i]
        cc = c[i] - x[i]
        dist_d += dd * dd
        dist_c += cc * cc
    dist_d = math.sqrt(dist_d)
    dist_c = math.sqrt(dist_c)
    if dist_d < 1e-300:
        dist_d = 1e-300
    if dist_c < 1e-300:
        dist_c = 1e-300
    theta = enclosing_half_aperture(dist_c, radius)
    cosb = 0.0
    for i in range(n):
        cosb += (c[i] - x[i]) * (d[i] - x[i])
    beta = math.acos(clamp(cosb / (dist_c * dist_d), -1.0, 1.0))
    speed = gamma * dist_d
    tau = speed * math.sin(theta - beta) / math.sin(theta)
    mu = 1.0 + (e / dist_d) * (beta / theta)
    for i in range(n):
        u[i] = mu * (gamma * (d[i] - x[i]) - tau * (c[i] - x[i]) / dist_c)
    return u


@_jit
def baseline_control(x, xd, c, radius, gamma):
    """Continuous law: straight pull in the visible set, projection
    correction inside the shadow region of the target."""
    n = x.shape[0]
    u = np.empty(n)
    for i in range(n):
        u[i] = gamma * (xd[i] - x[i])
    if not in_shadow(x, xd, c, radius, 0.0):
        return u
    dist_c = 0.0
    speed2 = 0.0
    for i in range(n):
        cc = c[i] - x[i]
        dist_c += cc * cc
        speed2 += u[i] * u[i]
    dist_c = math.sqrt(dist_c)
    if dist_c < 1e-300:
        dist_c = 1e-300
    theta = enclosing_half_aperture(dist_c, radius)
    cu = 0.0
    for i in range(n):
        cu += (c[i] - x[i]) * u[i]
    speed = math.sqrt(speed2)
    beta = math.acos(clamp(cu / (dist_c * speed), -1.0, 1.0)) if speed > 0.0 else 0.0
    tau = speed * math.sin(theta - beta) / math.sin(theta)
    for i in range(n):
        u[i] -= tau * (c[i] - x[i]) / dist_c
    return u


@_jit
def in_flow(x, m, xd, xd_plus, xd_minus, c, radius, phi, tol):
    """Flow-set membership with additive slack ``tol``.

    Mode 0 flows on the closure of the visible set; modes +-1 flow on the
    virtual shadow region minus the open hysteresis cone around the line of
    undesired equilibria.
    """
    if m == 0:
        g_cone, g_front = shadow_margins(x, xd, c, radius)
        return g_cone <= tol or g_front <= tol
    if m == 1:
        d = xd_plus
    else:
        d = xd_minus
    g_cone, g_front = shadow_margins(x, d, c, radius)
    if g_cone < -tol or g_front < -tol:
        return False
    # outside (or on) the excluded cone with vertex c and axis c - d
    lhs = 0.0
    v2 = 0.0
    xc2 = 0.0
    for i in range(x.shape[0]):
        vi = c[i] - d[i]
        xci = x[i] - c[i]
        lhs += vi * xci
        v2 += vi * vi
        xc2 += xci * xci
    return lhs <= math.sqrt(v2) * math.sqrt(xc2) * math.cos(phi) + tol


@_jit
def in_jump(x, m, xd, xd_plus, xd_minus, c, radius, phi, tol):
    """Jump-set membership with additive slack ``tol`` (closed complements of
    the flow sets; mode 0 jumps on the shadow region of the target)."""
    if m == 0:
        g_cone, g_front = shadow_margins(x, xd, c, radius)
        return g_cone >= -tol and g_front >= -tol
    if m == 1:
        d = xd_plus
    else:
        d = xd_minus
    g_cone, g_front = shadow_margins(x, d, c, radius)
    if g_cone <= tol or g_front <= tol:
        return True
    lhs = 0.0
    v2 = 0.0
    xc2 = 0.0
    for i in range(x.shape[0]):
        vi = c[i] - d[i]
        xci = x[i] - c[i]
        lhs += vi * xci
        v2 += vi * vi
        xc2 += xci * xci
    return lhs >= math.sqrt(v2) * math.sqrt(xc2) * math.cos(phi) - tol


@_jit
def step(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e, h, integrator):
    """One explicit integrator step of the mode-``m`` flow."""
    if integrator == RK4:
        k1 = control(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e)
        k2 = control(x + (0.5 * h) * k1, m, xd, xd_plus, xd_minus, c, radius, gamma, e)
        k3 = control(x + (0.5 * h) * k2, m, xd, xd_plus, xd_minus, c, radius, gamma, e)
        k4 = control(x + h * k3, m, xd, xd_plus, xd_minus, c, radius, gamma, e)
        return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x + h * control(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e)


# landings deeper than this fraction of the radius are treated as oversized
# steps and bisected; shallower ones are integration error of the
# boundary-sliding flow (O(h^2) from the tangency kink) and get snapped back
DEEP_LANDING_FRACTION = 0.01


@_jit
def snap_to_boundary(xn, c, radius):
    """Radially project a point inside the obstacle onto its boundary.

    The continuous flow slides tangentially along the boundary, so an inward
    landing is pure integration error; left alone it would persist (the
    clamped law is radially neutral inside) and pollute the switching
    states."""
    d = norm(xn - c)
    if 0.0 < d < radius:
        s = radius / d
        for i in range(xn.shape[0]):
            xn[i] = c[i] + s * (xn[i] - c[i])
    return xn


@_jit
def guarded_step(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e, h,
                 integrator):
    """Integrator step that halves ``h`` (up to 40 times) while the candidate
    lands deeper than 1% of the radius inside the obstacle, then snaps any
    residual shallow penetration onto the boundary.

    Returns ``(x_new, h_effective)``; the result never lies inside the
    obstacle.
    """
    hs = h
    deep = DEEP_LANDING_FRACTION * radius
    xn = step(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e, hs, integrator)
    for _ in range(40):
        if norm(xn - c) - radius >= -deep:
            break
        hs *= 0.5
        xn = step(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e, hs, integrator)
    return snap_to_boundary(xn, c, radius), hs


@_jit
def _all_finite(x):
    for i in range(x.shape[0]):
        if not math.isfinite(x[i]):
            return False
    return True


@_jit
def integrate_flow(x0, m, xd, xd_plus, xd_minus, c, radius, gamma, e, phi,
                   h, t0, t_max, conv_tol, safety_tol, integrator,
                   ts, xs, us):
    """Integrate one flow interval of the mode-``m`` dynamics.

    Starts from ``x0`` at hybrid time ``t0`` (assumed inside the flow set),
    records a sample per accepted step into the preallocated buffers and stops
    at the first of: flow-set exit (the crossing is localized by 10 bisection
    steps, i.e. within ``h/1024``), convergence to the target, the time
    budget, a safety violation, or a non-finite state.

    Returns ``(count, reason, t_end)``; the final state is ``xs[count - 1]``.
    """
    n = x0.shape[0]
    cap = ts.shape[0]
    x = x0.copy()
    t = t0
    i = 0
    ts[i] = t
    for k in range(n):
        xs[i, k] = x[k]
    u = control(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e)
    for k in range(n):
        us[i, k] = u[k]
    i += 1
    if norm(x - xd) <= conv_tol:
        return i, CONVERGED, t
    while t < t_max:
        hs = h
        if t + hs > t_max:
            hs = t_max - t
        if hs <= 0.0 or t + hs == t:
            return i, TIME_EXHAUSTED, t
        xn, hs = guarded_step(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e,
                              hs, integrator)
        if not _all_finite(xn):
            return i, NONFINITE, t
        if not in_flow(xn, m, xd, xd_plus, xd_minus, c, radius, phi, 0.0):
            # bisect the step fraction to localize the crossing; lo stays
            # inside the flow set, hi outside
            lo = 0.0
            hi = 1.0
            for _ in range(10):
                mid = 0.5 * (lo + hi)
                xm = snap_to_boundary(
                    step(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e,
                         mid * hs, integrator), c, radius)
                if in_flow(xm, m, xd, xd_plus, xd_minus, c, radius, phi, 0.0):
                    lo = mid
                else:
                    hi = mid
            xn = snap_to_boundary(
                step(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e,
                     hi * hs, integrator), c, radius)
            t = t + hi * hs
            ts[i] = t
            u = control(xn, m, xd, xd_plus, xd_minus, c, radius, gamma, e)
            for k in range(n):
                xs[i, k] = xn[k]
                us[i, k] = u[k]
            i += 1
            return i, FLOW_LEFT, t
        x = xn
        t = t + hs
        ts[i] = t
        u = control(x, m, xd, xd_plus, xd_minus, c, radius, gamma, e)
        for k in range(n):
            xs[i, k] = x[k]
            us[i, k] = u[k]
        i += 1
        if norm(x - xd) <= conv_tol:
            return i, CONVERGED, t
        if norm(x - c) - radius < -safety_tol:
            return i, SAFETY, t
        if i >= cap:
            return i, TIME_EXHAUSTED, t
    return i, TIME_EXHAUSTED, t


@_jit
def baseline_step(x, xd, c, radius, gamma, h, integrator):
    """One explicit integrator step of the continuous law."""
    if integrator == RK4:
        k1 = baseline_control(x, xd, c, radius, gamma)
        k2 = baseline_control(x + (0.5 * h) * k1, xd, c, radius, gamma)
        k3 = baseline_control(x + (0.5 * h) * k2, xd, c, radius, gamma)
        k4 = baseline_control(x + h * k3, xd, c, radius, gamma)
        return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x + h * baseline_control(x, xd, c, radius, gamma)


@_jit
def integrate_baseline(x0, xd, c, radius, gamma, h, t_max, conv_tol,
                       safety_tol, integrator, stall_speed, stall_steps,
                       ts, xs, us):
    """Integrate the continuous (non-hybrid) law from ``x0``.

    Same contract as :func:`integrate_flow` but with no mode machinery and an
    extra stop condition: ``stall_steps`` consecutive samples slower than
    ``stall_speed`` while still away from the target report ``STALLED``.
    """
    n = x0.shape[0]
    cap = ts.shape[0]
    x = x0.copy()
    t = 0.0
    i = 0
    stalled_run = 0
    ts[i] = t
    u = baseline_control(x, xd, c, radius, gamma)
    for k in range(n):
        xs[i, k] = x[k]
        us[i, k] = u[k]
    i += 1
    if norm(x - xd) <= conv_tol:
        return i, CONVERGED, t
    while t < t_max:
        hs = h
        if t + hs > t_max:
            hs = t_max - t
        if hs <= 0.0 or t + hs == t:
            return i, TIME_EXHAUSTED, t
        xn = baseline_step(x, xd, c, radius, gamma, hs, integrator)
        deep = DEEP_LANDING_FRACTION * radius
        for _ in range(40):
            if norm(xn - c) - radius >= -deep:
                break
            hs *= 0.5
            xn = baseline_step(x, xd, c, radius, gamma, hs, integrator)
        xn = snap_to_boundary(xn, c, radius)
        if not _all_finite(xn):
            return i, NONFINITE, t
        x = xn
        t = t + hs
        u = baseline_control(x, xd, c, radius, gamma)
        ts[i] = t
        for k in range(n):
            xs[i, k] = x[k]
            us[i, k] = u[k]
        i += 1
        if norm(x - xd) <= conv_tol:
            return i, CONVERGED, t
        if norm(x - c) - radius < -safety_tol:
            return i, SAFETY, t
        if norm(u) < stall_speed and norm(x - xd) > conv_tol:
            stalled_run += 1
            if stalled_run >= stall_steps:
                return i, STALLED, t
        else:
            stalled_run = 0
        if i >= cap:
            return i, TIME_EXHAUSTED, t
    return i, TIME_EXHAUSTED, t
