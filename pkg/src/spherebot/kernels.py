"""Numba kernels: dynamics right-hand sides and the Lie-group RK4 loop.

Everything here works on plain float64 arrays so the same code backs the
public dynamics/controller API and the batch simulator. Conventions:

* frames: surface frame e with e3 the outward normal; gravity force -g e_g
* no-slip: odot = r (omega x e3); the third position component is never
  integrated, so contact holds exactly
* rotations advance through exponential charts per step (Munthe-Kaas RK4
  with closed-form dexpinv, keeping the scheme fourth order)

The barycentric kernels cover the inner cart; a balanced gyroscopic
mechanism is the offset-zero special case of the same equations. Reaction
wheel pairs have their own kernels (scalar spin coordinates).
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_NAN = 1
STATUS_SINGULAR = 2
STATUS_AXES = 3

_DET_TOL = 1e-12
_ORTHO_TOL = 1e-9


@njit(cache=True, inline="always")
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True, inline="always")
def _e3():
    v = np.zeros(3)
    v[2] = 1.0
    return v


@njit(cache=True, inline="always")
def _e3cross(v):
    # e3 x v
    out = np.empty(3)
    out[0] = -v[1]
    out[1] = v[0]
    out[2] = 0.0
    return out


@njit(cache=True, inline="always")
def _hat(v):
    M = np.zeros((3, 3))
    M[0, 1] = -v[2]
    M[0, 2] = v[1]
    M[1, 0] = v[2]
    M[1, 2] = -v[0]
    M[2, 0] = -v[1]
    M[2, 1] = v[0]
    return M


@njit(cache=True)
def _exp_so3(v):
    theta2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    K = _hat(v)
    K2 = K @ K
    out = np.eye(3)
    if theta2 < 1e-16:
        out += K + 0.5 * K2
        return out
    theta = np.sqrt(theta2)
    out += (np.sin(theta) / theta) * K + ((1.0 - np.cos(theta)) / theta2) * K2
    return out


@njit(cache=True)
def _dexpinv(u, v):
    theta2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2]
    uxv = _cross(u, v)
    uxuxv = _cross(u, uxv)
    if theta2 < 1e-16:
        c2 = 1.0 / 12.0 + theta2 / 720.0
    else:
        theta = np.sqrt(theta2)
        half = 0.5 * theta
        c2 = (1.0 - half * np.cos(half) / np.sin(half)) / theta2
    return v - 0.5 * uxv + c2 * uxuxv


@njit(cache=True, inline="always")
def _solve3(A, b):
    return np.linalg.solve(np.ascontiguousarray(A), np.ascontiguousarray(b))


@njit(cache=True)
def _ortho_drift(R):
    s = 0.0
    G = R.T @ R
    for i in range(3):
        for j in range(3):
            d = G[i, j] - (1.0 if i == j else 0.0)
            s += d * d
    return np.sqrt(s)


@njit(cache=True)
def _project_rotation(M):
    U, s, Vt = np.linalg.svd(M)
    R = np.ascontiguousarray(U) @ np.ascontiguousarray(Vt)
    if np.linalg.det(R) < 0.0:
        W = np.eye(3)
        W[2, 2] = -1.0
        R = np.ascontiguousarray(U) @ W @ np.ascontiguousarray(Vt)
    return R


# ---------------------------------------------------------------------------
# reference trajectories
#   kind 0: fixed point, pars = (x, y)
#   kind 1: circle, pars = (cx, cy, rho, period, phase)
#   kind 2: sampled cubic spline, piecewise coefficients in ts / cxs / cys


@njit(cache=True)
def ref_eval(kind, pars, ts, cxs, cys, t, r):
    o = np.zeros(3)
    d = np.zeros(3)
    dd = np.zeros(3)
    o[2] = r
    if kind == 0:
        o[0] = pars[0]
        o[1] = pars[1]
    elif kind == 1:
        rho = pars[2]
        wf = 2.0 * np.pi / pars[3]
        th = wf * t + pars[4]
        c = np.cos(th)
        s = np.sin(th)
        o[0] = pars[0] + rho * c
        o[1] = pars[1] + rho * s
        d[0] = -rho * wf * s
        d[1] = rho * wf * c
        dd[0] = -rho * wf * wf * c
        dd[1] = -rho * wf * wf * s
    else:
        npts = ts.shape[0]
        tt = t
        if tt <= ts[0]:
            tt = ts[0]
        if tt >= ts[npts - 1]:
            tt = ts[npts - 1]
        k = int(np.searchsorted(ts, tt)) - 1
        if k < 0:
            k = 0
        if k > npts - 2:
            k = npts - 2
        s = tt - ts[k]
        for j in range(2):
            c = cxs if j == 0 else cys
            o[j] = ((c[0, k] * s + c[1, k]) * s + c[2, k]) * s + c[3, k]
            d[j] = (3.0 * c[0, k] * s + 2.0 * c[1, k]) * s + c[2, k]
            dd[j] = 6.0 * c[0, k] * s + 2.0 * c[1, k]
    return o, d, dd


@njit(cache=True, inline="always")
def omega_ref_kernel(dref, r):
    """No-twist admissible reference angular velocity (1/r) e3 x odot_ref."""
    return _e3cross(dref) / r


# ---------------------------------------------------------------------------
# barycentric family: sphere + offset actuators (cart), offset 0 = gyro


@njit(cache=True)
def bary_parts(R, Ri, m_b, I_b, r, m, I_act, l):
    """Composite operator and per-actuator coupling pieces.

    Returns (op, IbR, Is, IaiR, Iat, B, a):
      op   = I_b^R + I_s + E3hat (sum Iat_i) E3hat, multiplies omega_dot
      IaiR = actuator inertia about the sphere center, spatial frame
      Iat  = constraint-reflected actuator inertia, spatial frame
      B    = control coupling matrix per actuator
      a    = R_i e3, unit line from actuator mass center to sphere center
    """
    n = m.shape[0]
    mtot = m_b
    for i in range(n):
        mtot += m[i]
    IbR = R @ I_b @ R.T
    Is = np.zeros((3, 3))
    c = mtot * r * r
    Is[0, 0] = c
    Is[1, 1] = c
    e3 = _e3()
    E3h = _hat(e3)
    IaiR = np.zeros((n, 3, 3))
    Iat = np.zeros((n, 3, 3))
    B = np.zeros((n, 3, 3))
    a = np.zeros((n, 3))
    op = IbR + Is
    for i in range(n):
        Iai = I_act[i].copy()
        ml2 = m[i] * l[i] * l[i]
        Iai[0, 0] += ml2
        Iai[1, 1] += ml2
        Rot = np.ascontiguousarray(Ri[i])
        IaiR[i] = Rot @ Iai @ Rot.T
        for j in range(3):
            a[i, j] = Rot[j, 2]
            B[i, j, j] = 1.0
        if l[i] > 0.0:
            ah = _hat(a[i])
            Minv = np.linalg.inv(np.ascontiguousarray(IaiR[i]))
            G = ah @ Minv  # equals R_i e3hat Iai^-1 R_i^T
            coef = r * m[i] * l[i]
            Iat[i] = -(coef * coef) * (G @ ah)
            op = op + E3h @ Iat[i] @ E3h
            B[i] = B[i] + coef * (E3h @ G)
    return op, IbR, Is, IaiR, Iat, B, a


@njit(cache=True)
def bary_accels(R, Ri, w, wi, m_b, I_b, r, g, e_g, m, I_act, l, tau_u, dist):
    """Sphere and actuator angular accelerations, barycentric family.

    tau_u is (n, 3): moment each actuator applies about the sphere center.
    Returns (status, wdot, wdot_i).
    """
    n = m.shape[0]
    op, IbR, Is, IaiR, Iat, B, a = bary_parts(R, Ri, m_b, I_b, r, m, I_act, l)
    mtot = m_b
    for i in range(n):
        mtot += m[i]
    e3 = _e3()
    rhs = _cross(IbR @ w, w) + dist
    rhs -= (r * mtot * g) * _cross(e3, e_g)
    for i in range(n):
        if l[i] > 0.0:
            # gravity moment routed through the actuator constraint
            rhs += (g / r) * _cross(e3, Iat[i] @ e_g)
            ah = _hat(a[i])
            Minv = np.linalg.inv(np.ascontiguousarray(IaiR[i]))
            G = ah @ Minv
            coef = m[i] * l[i] * r
            gyro = G @ _cross(wi[i], IaiR[i] @ wi[i])
            cent = _cross(wi[i], _cross(wi[i], a[i]))
            rhs += coef * (_cross(e3, gyro) + _cross(e3, cent))
        rhs += B[i] @ tau_u[i]
    if np.abs(np.linalg.det(op)) < _DET_TOL:
        return STATUS_SINGULAR, np.zeros(3), np.zeros((n, 3))
    wdot = _solve3(op, rhs)
    odd = r * _cross(wdot, e3)  # second derivative of the center position
    wdot_i = np.zeros((n, 3))
    for i in range(n):
        rhs_i = _cross(IaiR[i] @ wi[i], wi[i]) - tau_u[i]
        if l[i] > 0.0:
            rhs_i += (m[i] * l[i]) * _cross(a[i], odd)
            rhs_i += (m[i] * l[i] * g) * _cross(a[i], e_g)
        if np.abs(np.linalg.det(IaiR[i])) < _DET_TOL:
            return STATUS_SINGULAR, wdot, wdot_i
        wdot_i[i] = _solve3(IaiR[i], rhs_i)
    return STATUS_OK, wdot, wdot_i


@njit(cache=True)
def bary_normal_force(wdot, wdot_i, w, wi, a, m_b, r, g, e_g, m, l):
    """Contact force along e3 (support check)."""
    n = m.shape[0]
    mtot = m_b
    for i in range(n):
        mtot += m[i]
    e3 = _e3()
    odd = r * _cross(wdot, e3)
    f = mtot * (odd + g * e_g)
    for i in range(n):
        if l[i] > 0.0:
            f -= (m[i] * l[i]) * (_cross(wdot_i[i], a[i]) + _cross(wi[i], _cross(wi[i], a[i])))
    return f[2]


# ---------------------------------------------------------------------------
# reaction-wheel pairs


@njit(cache=True)
def wheels_locked_inertia(I_b, m, I_act, l, axes):
    """Body-frame inertia of shell plus wheels with the spin DOFs removed."""
    n = m.shape[0]
    Ir = I_b.copy()
    for i in range(n):
        c = I_act[i, 0, 0] + m[i] * l[i] * l[i]
        for p in range(3):
            for q in range(3):
                proj = (1.0 if p == q else 0.0) - axes[i, p] * axes[i, q]
                Ir[p, q] += c * proj
    return Ir


@njit(cache=True)
def wheels_accels(R, w, psidot, m_b, I_b, r, g, e_g, m, I_act, l, axes, u, dist):
    """Sphere angular acceleration and wheel spin accelerations.

    u is (n,): scalar motor moment of each pair about its axis (the sphere
    receives +u_i along R Gamma_i, the wheel the reaction).
    Returns (status, wdot, psiddot).
    """
    n = m.shape[0]
    mtot = m_b
    for i in range(n):
        mtot += m[i]
    Ir = wheels_locked_inertia(I_b, m, I_act, l, axes)
    IrR = R @ Ir @ R.T
    op = IrR.copy()
    c = mtot * r * r
    op[0, 0] += c
    op[1, 1] += c
    e3 = _e3()
    rhs = _cross(IrR @ w, w) + dist
    rhs -= (r * mtot * g) * _cross(e3, e_g)
    for i in range(n):
        a = R @ np.ascontiguousarray(axes[i])
        spin = a[0] * w[0] + a[1] * w[1] + a[2] * w[2] + psidot[i]
        Iz = I_act[i, 2, 2]
        # wheel axial momenta precess with the shell and react to the motors
        rhs += u[i] * a - (Iz * spin) * _cross(w, a)
    if np.abs(np.linalg.det(op)) < _DET_TOL:
        return STATUS_SINGULAR, np.zeros(3), np.zeros(n)
    wdot = _solve3(op, rhs)
    psiddot = np.zeros(n)
    for i in range(n):
        a = R @ np.ascontiguousarray(axes[i])
        Iz = I_act[i, 2, 2]
        psiddot[i] = -u[i] / Iz - (a[0] * wdot[0] + a[1] * wdot[1] + a[2] * wdot[2])
    return STATUS_OK, wdot, psiddot


@njit(cache=True)
def wheel_gyro_moment(R, w, psidot, I_act, axes):
    """Gyroscopic coupling moment of the spinning wheels on the shell."""
    n = psidot.shape[0]
    out = np.zeros(3)
    for i in range(n):
        a = R @ np.ascontiguousarray(axes[i])
        spin = a[0] * w[0] + a[1] * w[1] + a[2] * w[2] + psidot[i]
        out -= (I_act[i, 2, 2] * spin) * _cross(w, a)
    return out


@njit(cache=True)
def wheels_normal_force(m_b, g, e_g, m):
    mtot = m_b
    for i in range(m.shape[0]):
        mtot += m[i]
    return mtot * g * e_g[2]


# ---------------------------------------------------------------------------
# controller pieces (always evaluated with the controller's parameter set)


@njit(cache=True)
def pid_bary(R, Ri, o_e, w_e, oI, m_b, I_b, r, g, m, I_act, l, e_g0, kp, kd, ki):
    """Split PID aggregate moment and its single-actuator decomposition."""
    n = m.shape[0]
    op, IbR, Is, IaiR, Iat, B, a = bary_parts(R, Ri, m_b, I_b, r, m, I_act, l)
    e3 = _e3()
    eta = _cross(e3, o_e)
    shaping = np.zeros(3)
    for i in range(n):
        if l[i] > 0.0:
            shaping += (g / r) * _cross(e3, Iat[i] @ e_g0)
    agg = -(shaping + op @ (kp * eta + kd * w_e + ki * oI))
    tau = np.zeros((n, 3))
    if np.abs(np.linalg.det(B[0])) < _DET_TOL:
        return STATUS_SINGULAR, agg, tau
    tau[0] = _solve3(B[0], agg)
    return STATUS_OK, agg, tau


@njit(cache=True)
def pid_wheels(R, o_e, w_e, oI, m_b, I_b, r, m, I_act, l, axes, kp, kd, ki):
    """Split PID aggregate and axis decomposition for three wheel pairs."""
    n = m.shape[0]
    Ir = wheels_locked_inertia(I_b, m, I_act, l, axes)
    IrR = R @ Ir @ R.T
    op = IrR.copy()
    mtot = m_b
    for i in range(n):
        mtot += m[i]
    c = mtot * r * r
    op[0, 0] += c
    op[1, 1] += c
    e3 = _e3()
    eta = _cross(e3, o_e)
    agg = -(op @ (kp * eta + kd * w_e + ki * oI))
    A = np.zeros((3, 3))
    for i in range(n):
        ai = R @ np.ascontiguousarray(axes[i])
        for j in range(3):
            A[j, i] = ai[j]
    u = np.zeros(n)
    if np.abs(np.linalg.det(A)) < 1e-9:
        return STATUS_AXES, agg, u
    u = _solve3(A, agg)
    return STATUS_OK, agg, u


@njit(cache=True)
def integrator_rate_bary(R, Ri, w_e, wi, oI, eta, m_b, I_b, r, m, I_act, l):
    """Rate of the geometric integrator state o_I (barycentric family).

    Solves the defining covariant-derivative equation for the ordinary
    derivative: A odot_I = I_e eta - (velocity terms), with A = I_e.
    """
    n = m.shape[0]
    op, IbR, Is, IaiR, Iat, B, a = bary_parts(R, Ri, m_b, I_b, r, m, I_act, l)
    e3 = _e3()
    v = np.zeros(3)
    # right-invariant piece (I_s)
    v += 0.5 * (-(Is @ _cross(w_e, oI)) + _cross(Is @ oI, w_e) + _cross(Is @ w_e, oI))
    # left-invariant piece (I_b^R)
    v += 0.5 * (-(IbR @ _cross(w_e, oI)) - _cross(IbR @ oI, w_e) - _cross(IbR @ w_e, oI))
    # reflected-actuator pieces, field e3 x o_I transported along omega_i
    q = _e3cross(oI)
    for i in range(n):
        if l[i] > 0.0:
            inner = 0.5 * (-(Iat[i] @ _cross(wi[i], q))
                           - _cross(Iat[i] @ q, wi[i])
                           - _cross(Iat[i] @ wi[i], q))
            v += _cross(e3, inner)
    if np.abs(np.linalg.det(op)) < _DET_TOL:
        return STATUS_SINGULAR, np.zeros(3)
    return STATUS_OK, _solve3(op, op @ eta - v)


@njit(cache=True)
def integrator_rate_wheels(R, w_e, oI, eta, m_b, I_b, r, m, I_act, l, axes):
    Ir = wheels_locked_inertia(I_b, m, I_act, l, axes)
    IrR = R @ Ir @ R.T
    op = IrR.copy()
    mtot = m_b
    for i in range(m.shape[0]):
        mtot += m[i]
    c = mtot * r * r
    op[0, 0] += c
    op[1, 1] += c
    Is = np.zeros((3, 3))
    Is[0, 0] = c
    Is[1, 1] = c
    v = np.zeros(3)
    v += 0.5 * (-(Is @ _cross(w_e, oI)) + _cross(Is @ oI, w_e) + _cross(Is @ w_e, oI))
    v += 0.5 * (-(IrR @ _cross(w_e, oI)) - _cross(IrR @ oI, w_e) - _cross(IrR @ w_e, oI))
    if np.abs(np.linalg.det(op)) < _DET_TOL:
        return STATUS_SINGULAR, np.zeros(3)
    return STATUS_OK, _solve3(op, op @ eta - v)


# ---------------------------------------------------------------------------
# closed-loop stage derivatives
#
# Barycentric flat layout (size 11 + 6n):
#   z[0:2] o_xy | z[2:5] sphere chart | z[5:8] omega |
#   per i: z[8+6i:11+6i] actuator chart, z[11+6i:14+6i] omega_i | tail o_I
# Wheels flat layout (size 11 + 2n):
#   z[0:2] o_xy | z[2:5] chart | z[5:8] omega | per i: psi, psidot | tail o_I


@njit(cache=True)
def bary_stage(t, z, R0, Ri0,
               mb_t, Ib_t, r, g, e_g, m_t, I_t, l_t,
               mb_n, Ib_n, m_n, I_n, l_n, e_g0,
               kp, kd, ki, dist,
               ref_kind, ref_pars, ref_ts, ref_cx, ref_cy,
               control_on):
    n = m_t.shape[0]
    dz = np.zeros(z.shape[0])
    uS = z[2:5]
    w = z[5:8]
    oI = z[11 + 6 * n - 3: 11 + 6 * n]
    R = _exp_so3(uS) @ R0
    Ri = np.zeros((n, 3, 3))
    wi = np.zeros((n, 3))
    for i in range(n):
        Ri[i] = _exp_so3(z[8 + 6 * i: 11 + 6 * i]) @ np.ascontiguousarray(Ri0[i])
        wi[i] = z[11 + 6 * i: 14 + 6 * i]
    oref, dref, ddref = ref_eval(ref_kind, ref_pars, ref_ts, ref_cx, ref_cy, t, r)
    o3 = np.empty(3)
    o3[0] = z[0]
    o3[1] = z[1]
    o3[2] = r
    w_ref = omega_ref_kernel(dref, r)
    o_e = o3 - oref
    w_e = w - w_ref
    e3 = _e3()
    eta = _cross(e3, o_e)
    tau = np.zeros((n, 3))
    doI = np.zeros(3)
    if control_on:
        st, agg, tau = pid_bary(R, Ri, o_e, w_e, oI, mb_n, Ib_n, r, g,
                                m_n, I_n, l_n, e_g0, kp, kd, ki)
        if st != STATUS_OK:
            return st, dz, tau
        st, doI = integrator_rate_bary(R, Ri, w_e, wi, oI, eta,
                                       mb_n, Ib_n, r, m_n, I_n, l_n)
        if st != STATUS_OK:
            return st, dz, tau
    st, wdot, wdot_i = bary_accels(R, Ri, w, wi, mb_t, Ib_t, r, g, e_g,
                                   m_t, I_t, l_t, tau, dist)
    if st != STATUS_OK:
        return st, dz, tau
    odot = r * _cross(w, e3)
    dz[0] = odot[0]
    dz[1] = odot[1]
    dz[2:5] = _dexpinv(uS, w)
    dz[5:8] = wdot
    for i in range(n):
        dz[8 + 6 * i: 11 + 6 * i] = _dexpinv(z[8 + 6 * i: 11 + 6 * i], wi[i])
        dz[11 + 6 * i: 14 + 6 * i] = wdot_i[i]
    dz[11 + 6 * n - 3: 11 + 6 * n] = doI
    return STATUS_OK, dz, tau


@njit(cache=True)
def wheels_stage(t, z, R0,
                 mb_t, Ib_t, r, g, e_g, m_t, I_t, l_t, axes,
                 mb_n, Ib_n, m_n, I_n, l_n,
                 kp, kd, ki, dist,
                 ref_kind, ref_pars, ref_ts, ref_cx, ref_cy,
                 control_on):
    n = m_t.shape[0]
    dz = np.zeros(z.shape[0])
    uS = z[2:5]
    w = z[5:8]
    oI = z[11 + 2 * n - 3: 11 + 2 * n]
    R = _exp_so3(uS) @ R0
    psidot = np.zeros(n)
    for i in range(n):
        psidot[i] = z[9 + 2 * i]
    oref, dref, ddref = ref_eval(ref_kind, ref_pars, ref_ts, ref_cx, ref_cy, t, r)
    o3 = np.empty(3)
    o3[0] = z[0]
    o3[1] = z[1]
    o3[2] = r
    w_ref = omega_ref_kernel(dref, r)
    o_e = o3 - oref
    w_e = w - w_ref
    e3 = _e3()
    eta = _cross(e3, o_e)
    u = np.zeros(n)
    doI = np.zeros(3)
    if control_on:
        st, agg, u = pid_wheels(R, o_e, w_e, oI, mb_n, Ib_n, r,
                                m_n, I_n, l_n, axes, kp, kd, ki)
        if st != STATUS_OK:
            return st, dz, u
        st, doI = integrator_rate_wheels(R, w_e, oI, eta,
                                         mb_n, Ib_n, r, m_n, I_n, l_n, axes)
        if st != STATUS_OK:
            return st, dz, u
    st, wdot, psiddot = wheels_accels(R, w, psidot, mb_t, Ib_t, r, g, e_g,
                                      m_t, I_t, l_t, axes, u, dist)
    if st != STATUS_OK:
        return st, dz, u
    odot = r * _cross(w, e3)
    dz[0] = odot[0]
    dz[1] = odot[1]
    dz[2:5] = _dexpinv(uS, w)
    dz[5:8] = wdot
    for i in range(n):
        dz[8 + 2 * i] = psidot[i]
        dz[9 + 2 * i] = psiddot[i]
    dz[11 + 2 * n - 3: 11 + 2 * n] = doI
    return STATUS_OK, dz, u


# ---------------------------------------------------------------------------
# fixed-step closed-loop integration loops
#
# Log row (barycentric, width 11 + 6n):
#   t, ox, oy, orefx, orefy, oex, oey, wex, wey, wez,
#   [wi_x wi_y wi_z] * n, [tau_x tau_y tau_z] * n, oIx, oIy, fN
# Log row (wheels, width 11 + 2n):
#   t, ox, oy, orefx, orefy, oex, oey, wex, wey, wez,
#   [psidot_i] * n, [u_i] * n, oIx, oIy, fN
# Full state row (barycentric, width 18 + 12n):
#   R(9), w(3), o(3), oI(3), [Ri(9), wi(3)] * n
# Full state row (wheels, width 18 + 2n):
#   R(9), w(3), o(3), oI(3), [psi, psidot] * n


@njit(cache=True)
def run_bary(o0, R0in, w0, Ri0in, wi0, oI0,
             mb_t, Ib_t, r, g, e_g, m_t, I_t, l_t,
             mb_n, Ib_n, m_n, I_n, l_n, e_g0,
             kp, kd, ki, dist,
             ref_kind, ref_pars, ref_ts, ref_cx, ref_cy,
             h, nsteps, decim, control_on,
             log_out, state_out):
    n = m_t.shape[0]
    nz = 11 + 6 * n
    z = np.zeros(nz)
    z[0] = o0[0]
    z[1] = o0[1]
    z[5:8] = w0
    for i in range(n):
        z[11 + 6 * i: 14 + 6 * i] = wi0[i]
    z[nz - 3: nz] = oI0
    R0 = R0in.copy()
    Ri0 = Ri0in.copy()
    row = 0
    for step in range(nsteps + 1):
        t = step * h
        if step % decim == 0 or step == nsteps:
            st, dz, tau = bary_stage(t, z, R0, Ri0,
                                     mb_t, Ib_t, r, g, e_g, m_t, I_t, l_t,
                                     mb_n, Ib_n, m_n, I_n, l_n, e_g0,
                                     kp, kd, ki, dist,
                                     ref_kind, ref_pars, ref_ts, ref_cx, ref_cy,
                                     control_on)
            if st != STATUS_OK:
                return st, step, row
            oref, dref, ddref = ref_eval(ref_kind, ref_pars, ref_ts, ref_cx, ref_cy, t, r)
            w_ref = omega_ref_kernel(dref, r)
            wdot = dz[5:8]
            wdot_i = np.zeros((n, 3))
            wi = np.zeros((n, 3))
            a = np.zeros((n, 3))
            for i in range(n):
                wdot_i[i] = dz[11 + 6 * i: 14 + 6 * i]
                wi[i] = z[11 + 6 * i: 14 + 6 * i]
                for j in range(3):
                    a[i, j] = Ri0[i][j, 2]
            fN = bary_normal_force(wdot, wdot_i, z[5:8], wi, a,
                                   mb_t, r, g, e_g, m_t, l_t)
            log_out[row, 0] = t
            log_out[row, 1] = z[0]
            log_out[row, 2] = z[1]
            log_out[row, 3] = oref[0]
            log_out[row, 4] = oref[1]
            log_out[row, 5] = z[0] - oref[0]
            log_out[row, 6] = z[1] - oref[1]
            for j in range(3):
                log_out[row, 7 + j] = z[5 + j] - w_ref[j]
            for i in range(n):
                for j in range(3):
                    log_out[row, 10 + 3 * i + j] = wi[i, j]
                    log_out[row, 10 + 3 * n + 3 * i + j] = tau[i, j]
            log_out[row, 10 + 6 * n] = z[nz - 3]
            log_out[row, 11 + 6 * n] = z[nz - 2]
            log_out[row, 12 + 6 * n] = fN
            for p in range(3):
                for q in range(3):
                    state_out[row, 3 * p + q] = R0[p, q]
            state_out[row, 9:12] = z[5:8]
            state_out[row, 12] = z[0]
            state_out[row, 13] = z[1]
            state_out[row, 14] = r
            state_out[row, 15:18] = z[nz - 3: nz]
            for i in range(n):
                base = 18 + 12 * i
                for p in range(3):
                    for q in range(3):
                        state_out[row, base + 3 * p + q] = Ri0[i][p, q]
                state_out[row, base + 9: base + 12] = wi[i]
            row += 1
            if step == nsteps:
                break
        st1, k1, _ = bary_stage(t, z, R0, Ri0, mb_t, Ib_t, r, g, e_g, m_t, I_t, l_t,
                                mb_n, Ib_n, m_n, I_n, l_n, e_g0, kp, kd, ki, dist,
                                ref_kind, ref_pars, ref_ts, ref_cx, ref_cy, control_on)
        st2, k2, _ = bary_stage(t + 0.5 * h, z + 0.5 * h * k1, R0, Ri0, mb_t, Ib_t, r, g,
                                e_g, m_t, I_t, l_t, mb_n, Ib_n, m_n, I_n, l_n, e_g0,
                                kp, kd, ki, dist, ref_kind, ref_pars, ref_ts, ref_cx,
                                ref_cy, control_on)
        st3, k3, _ = bary_stage(t + 0.5 * h, z + 0.5 * h * k2, R0, Ri0, mb_t, Ib_t, r, g,
                                e_g, m_t, I_t, l_t, mb_n, Ib_n, m_n, I_n, l_n, e_g0,
                                kp, kd, ki, dist, ref_kind, ref_pars, ref_ts, ref_cx,
                                ref_cy, control_on)
        st4, k4, _ = bary_stage(t + h, z + h * k3, R0, Ri0, mb_t, Ib_t, r, g, e_g,
                                m_t, I_t, l_t, mb_n, Ib_n, m_n, I_n, l_n, e_g0,
                                kp, kd, ki, dist, ref_kind, ref_pars, ref_ts, ref_cx,
                                ref_cy, control_on)
        if st1 != STATUS_OK or st2 != STATUS_OK or st3 != STATUS_OK or st4 != STATUS_OK:
            return STATUS_SINGULAR, step, row
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        bad = False
        for j in range(nz):
            if not np.isfinite(z[j]):
                bad = True
        if bad:
            return STATUS_NAN, step, row
        R0 = _exp_so3(z[2:5]) @ R0
        z[2:5] = 0.0
        if _ortho_drift(R0) > _ORTHO_TOL:
            R0 = _project_rotation(R0)
        for i in range(n):
            Ri0[i] = _exp_so3(z[8 + 6 * i: 11 + 6 * i]) @ np.ascontiguousarray(Ri0[i])
            z[8 + 6 * i: 11 + 6 * i] = 0.0
            if _ortho_drift(Ri0[i]) > _ORTHO_TOL:
                Ri0[i] = _project_rotation(np.ascontiguousarray(Ri0[i]))
    return STATUS_OK, nsteps, row


@njit(cache=True)
def run_wheels(o0, R0in, w0, psi0, psidot0, oI0,
               mb_t, Ib_t, r, g, e_g, m_t, I_t, l_t, axes,
               mb_n, Ib_n, m_n, I_n, l_n,
               kp, kd, ki, dist,
               ref_kind, ref_pars, ref_ts, ref_cx, ref_cy,
               h, nsteps, decim, control_on,
               log_out, state_out):
    n = m_t.shape[0]
    nz = 11 + 2 * n
    z = np.zeros(nz)
    z[0] = o0[0]
    z[1] = o0[1]
    z[5:8] = w0
    for i in range(n):
        z[8 + 2 * i] = psi0[i]
        z[9 + 2 * i] = psidot0[i]
    z[nz - 3: nz] = oI0
    R0 = R0in.copy()
    row = 0
    for step in range(nsteps + 1):
        t = step * h
        if step % decim == 0 or step == nsteps:
            st, dz, u = wheels_stage(t, z, R0, mb_t, Ib_t, r, g, e_g, m_t, I_t, l_t,
                                     axes, mb_n, Ib_n, m_n, I_n, l_n, kp, kd, ki,
                                     dist, ref_kind, ref_pars, ref_ts, ref_cx, ref_cy,
                                     control_on)
            if st != STATUS_OK:
                return st, step, row
            oref, dref, ddref = ref_eval(ref_kind, ref_pars, ref_ts, ref_cx, ref_cy, t, r)
            w_ref = omega_ref_kernel(dref, r)
            fN = wheels_normal_force(mb_t, g, e_g, m_t)
            log_out[row, 0] = t
            log_out[row, 1] = z[0]
            log_out[row, 2] = z[1]
            log_out[row, 3] = oref[0]
            log_out[row, 4] = oref[1]
            log_out[row, 5] = z[0] - oref[0]
            log_out[row, 6] = z[1] - oref[1]
            for j in range(3):
                log_out[row, 7 + j] = z[5 + j] - w_ref[j]
            for i in range(n):
                log_out[row, 10 + i] = z[9 + 2 * i]
                log_out[row, 10 + n + i] = u[i]
            log_out[row, 10 + 2 * n] = z[nz - 3]
            log_out[row, 11 + 2 * n] = z[nz - 2]
            log_out[row, 12 + 2 * n] = fN
            for p in range(3):
                for q in range(3):
                    state_out[row, 3 * p + q] = R0[p, q]
            state_out[row, 9:12] = z[5:8]
            state_out[row, 12] = z[0]
            state_out[row, 13] = z[1]
            state_out[row, 14] = r
            state_out[row, 15:18] = z[nz - 3: nz]
            for i in range(n):
                state_out[row, 18 + 2 * i] = z[8 + 2 * i]
                state_out[row, 19 + 2 * i] = z[9 + 2 * i]
            row += 1
            if step == nsteps:
                break
        st1, k1, _ = wheels_stage(t, z, R0, mb_t, Ib_t, r, g, e_g, m_t, I_t, l_t,
                                  axes, mb_n, Ib_n, m_n, I_n, l_n, kp, kd, ki, dist,
                                  ref_kind, ref_pars, ref_ts, ref_cx, ref_cy, control_on)
        st2, k2, _ = wheels_stage(t + 0.5 * h, z + 0.5 * h * k1, R0, mb_t, Ib_t, r, g,
                                  e_g, m_t, I_t, l_t, axes, mb_n, Ib_n, m_n, I_n, l_n,
                                  kp, kd, ki, dist, ref_kind, ref_pars, ref_ts, ref_cx,
                                  ref_cy, control_on)
        st3, k3, _ = wheels_stage(t + 0.5 * h, z + 0.5 * h * k2, R0, mb_t, Ib_t, r, g,
                                  e_g, m_t, I_t, l_t, axes, mb_n, Ib_n, m_n, I_n, l_n,
                                  kp, kd, ki, dist, ref_kind, ref_pars, ref_ts, ref_cx,
                                  ref_cy, control_on)
        st4, k4, _ = wheels_stage(t + h, z + h * k3, R0, mb_t, Ib_t, r, g, e_g,
                                  m_t, I_t, l_t, axes, mb_n, Ib_n, m_n, I_n, l_n,
                                  kp, kd, ki, dist, ref_kind, ref_pars, ref_ts, ref_cx,
                                  ref_cy, control_on)
        if st1 != STATUS_OK or st2 != STATUS_OK or st3 != STATUS_OK or st4 != STATUS_OK:
            return STATUS_SINGULAR, step, row
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        bad = False
        for j in range(nz):
            if not np.isfinite(z[j]):
                bad = True
        if bad:
            return STATUS_NAN, step, row
        R0 = _exp_so3(z[2:5]) @ R0
        z[2:5] = 0.0
        if _ortho_drift(R0) > _ORTHO_TOL:
            R0 = _project_rotation(R0)
    return STATUS_OK, nsteps, row


@njit(cache=True)
def run_free_rigid(R0in, w0, I_b, h, nsteps, decim, out_R, out_w):
    """Free rigid body (no contact, no gravity), spatial Euler equation.

    Validates the Euler core: the spatial momentum R I_b Omega is conserved.
    """
    R0 = R0in.copy()
    w = w0.copy()
    row = 0
    z = np.zeros(6)
    z[3:6] = w
    for step in range(nsteps + 1):
        if step % decim == 0 or step == nsteps:
            for p in range(3):
                for q in range(3):
                    out_R[row, 3 * p + q] = R0[p, q]
            out_w[row] = z[3:6]
            row += 1
            if step == nsteps:
                break
        # RK4 on (chart, omega)
        k = np.zeros((4, 6))
        for s in range(4):
            if s == 0:
                zz = z.copy()
            elif s == 1:
                zz = z + 0.5 * h * k[0]
            elif s == 2:
                zz = z + 0.5 * h * k[1]
            else:
                zz = z + h * k[2]
            R = _exp_so3(zz[0:3]) @ R0
            IbR = R @ I_b @ R.T
            wdot = _solve3(IbR, _cross(IbR @ zz[3:6], zz[3:6]))
            k[s, 0:3] = _dexpinv(zz[0:3], zz[3:6])
            k[s, 3:6] = wdot
        z = z + (h / 6.0) * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3])
        R0 = _exp_so3(z[0:3]) @ R0
        z[0:3] = 0.0
        if _ortho_drift(R0) > _ORTHO_TOL:
            R0 = _project_rotation(R0)
    return row
