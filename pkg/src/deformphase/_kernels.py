"""Compiled inner loops for the fixed-step integrators.

The model is sampled beforehand at every node ``t_n`` and every midpoint
``t_n + h_n/2`` (the only stage times classical RK4 needs), so the loop
itself touches nothing but arrays.  All arithmetic is written out for 3x3
operands; no fastmath, so results are reproducible bit for bit.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _omega(inv, L0, p0, p1, p2):
    a0 = p0 - L0[0]
    a1 = p1 - L0[1]
    a2 = p2 - L0[2]
    w0 = inv[0, 0] * a0 + inv[0, 1] * a1 + inv[0, 2] * a2
    w1 = inv[1, 0] * a0 + inv[1, 1] * a1 + inv[1, 2] * a2
    w2 = inv[2, 0] * a0 + inv[2, 1] * a1 + inv[2, 2] * a2
    return w0, w1, w2


@njit(cache=True)
def _cross(a0, a1, a2, b0, b1, b2):
    return a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0


@njit(cache=True)
def _dexpinv(u0, u1, u2, w0, w1, w2):
    # inverse right-trivialized differential of exp, truncated after the
    # double commutator (enough for 4th order)
    c0, c1, c2 = _cross(u0, u1, u2, w0, w1, w2)
    d0, d1, d2 = _cross(u0, u1, u2, c0, c1, c2)
    return (w0 + 0.5 * c0 + d0 / 12.0,
            w1 + 0.5 * c1 + d1 / 12.0,
            w2 + 0.5 * c2 + d2 / 12.0)


@njit(cache=True)
def _exp_so3(u0, u1, u2, E):
    t2 = u0 * u0 + u1 * u1 + u2 * u2
    t = np.sqrt(t2)
    if t < 1e-8:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        a = np.sin(t) / t
        b = (1.0 - np.cos(t)) / t2
    E[0, 0] = 1.0 - b * (u1 * u1 + u2 * u2)
    E[1, 1] = 1.0 - b * (u0 * u0 + u2 * u2)
    E[2, 2] = 1.0 - b * (u0 * u0 + u1 * u1)
    E[0, 1] = -a * u2 + b * u0 * u1
    E[1, 0] = a * u2 + b * u0 * u1
    E[0, 2] = a * u1 + b * u0 * u2
    E[2, 0] = -a * u1 + b * u0 * u2
    E[1, 2] = -a * u0 + b * u1 * u2
    E[2, 1] = a * u0 + b * u1 * u2


@njit(cache=True)
def _matmul(A, B, out):
    for i in range(3):
        for j in range(3):
            out[i, j] = A[i, 0] * B[0, j] + A[i, 1] * B[1, j] + A[i, 2] * B[2, j]


@njit(cache=True)
def _orth_residual(X):
    s = 0.0
    for i in range(3):
        for j in range(3):
            g = X[0, i] * X[0, j] + X[1, i] * X[1, j] + X[2, i] * X[2, j]
            if i == j:
                g -= 1.0
            s += g * g
    return np.sqrt(s)


@njit(cache=True)
def polar_newton(X, out):
    """Orthogonal polar factor of a near-orthogonal ``X`` (Newton-Schulz).

    Converges quadratically; one sweep already reaches rounding level when
    ``X`` is orthogonal to ~1e-8.
    """
    G = np.empty((3, 3))
    Y = X.copy()
    for _ in range(8):
        r = _orth_residual(Y)
        if r < 1e-15:
            break
        for i in range(3):
            for j in range(3):
                g = Y[0, i] * Y[0, j] + Y[1, i] * Y[1, j] + Y[2, i] * Y[2, j]
                G[i, j] = (3.0 if i == j else 0.0) - g
        _matmul(Y, G, out)
        for i in range(3):
            for j in range(3):
                Y[i, j] = 0.5 * out[i, j]
    for i in range(3):
        for j in range(3):
            out[i, j] = Y[i, j]


@njit(cache=True)
def integrate_coupled(hs, inv_node, L0_node, inv_mid, L0_mid, pi0, R0, with_rotation):
    """RK4 on the body momentum, optionally RKMK4 on the attitude.

    Returns (points, rotations, step_drift, spatial_residual, orthogonality).
    ``step_drift[n]`` is | |Pi_{n+1}| - l | before rescaling to the sphere.
    """
    n_steps = hs.size
    P = np.empty((n_steps + 1, 3))
    drift = np.empty(n_steps)
    nR = n_steps + 1 if with_rotation else 1
    Rs = np.empty((nR, 3, 3))
    spatial = np.zeros(nR)
    orth = np.zeros(nR)
    E = np.empty((3, 3))
    M = np.empty((3, 3))
    Rn = np.empty((3, 3))

    p0, p1, p2 = pi0[0], pi0[1], pi0[2]
    l = np.sqrt(p0 * p0 + p1 * p1 + p2 * p2)
    P[0, 0], P[0, 1], P[0, 2] = p0, p1, p2
    L_0 = 0.0
    L_1 = 0.0
    L_2 = 0.0
    if with_rotation:
        for i in range(3):
            for j in range(3):
                Rn[i, j] = R0[i, j]
                Rs[0, i, j] = R0[i, j]
        L_0 = Rn[0, 0] * p0 + Rn[0, 1] * p1 + Rn[0, 2] * p2
        L_1 = Rn[1, 0] * p0 + Rn[1, 1] * p1 + Rn[1, 2] * p2
        L_2 = Rn[2, 0] * p0 + Rn[2, 1] * p1 + Rn[2, 2] * p2
        orth[0] = _orth_residual(Rn)

    for n in range(n_steps):
        h = hs[n]
        hh = 0.5 * h
        w10, w11, w12 = _omega(inv_node[n], L0_node[n], p0, p1, p2)
        k10, k11, k12 = _cross(p0, p1, p2, w10, w11, w12)
        q0, q1, q2 = p0 + hh * k10, p1 + hh * k11, p2 + hh * k12
        w20, w21, w22 = _omega(inv_mid[n], L0_mid[n], q0, q1, q2)
        k20, k21, k22 = _cross(q0, q1, q2, w20, w21, w22)
        q0, q1, q2 = p0 + hh * k20, p1 + hh * k21, p2 + hh * k22
        w30, w31, w32 = _omega(inv_mid[n], L0_mid[n], q0, q1, q2)
        k30, k31, k32 = _cross(q0, q1, q2, w30, w31, w32)
        q0, q1, q2 = p0 + h * k30, p1 + h * k31, p2 + h * k32
        w40, w41, w42 = _omega(inv_node[n + 1], L0_node[n + 1], q0, q1, q2)
        k40, k41, k42 = _cross(q0, q1, q2, w40, w41, w42)

        s = h / 6.0
        n0 = p0 + s * (k10 + 2.0 * k20 + 2.0 * k30 + k40)
        n1 = p1 + s * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        n2 = p2 + s * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        norm = np.sqrt(n0 * n0 + n1 * n1 + n2 * n2)
        drift[n] = abs(norm - l)
        f = l / norm
        p0, p1, p2 = n0 * f, n1 * f, n2 * f
        P[n + 1, 0], P[n + 1, 1], P[n + 1, 2] = p0, p1, p2

        if with_rotation:
            # RKMK4 in so(3) = R^3 with the same stage angular velocities
            K10, K11, K12 = w10, w11, w12
            K20, K21, K22 = _dexpinv(hh * K10, hh * K11, hh * K12, w20, w21, w22)
            K30, K31, K32 = _dexpinv(hh * K20, hh * K21, hh * K22, w30, w31, w32)
            K40, K41, K42 = _dexpinv(h * K30, h * K31, h * K32, w40, w41, w42)
            u0 = s * (K10 + 2.0 * K20 + 2.0 * K30 + K40)
            u1 = s * (K11 + 2.0 * K21 + 2.0 * K31 + K41)
            u2 = s * (K12 + 2.0 * K22 + 2.0 * K32 + K42)
            _exp_so3(u0, u1, u2, E)
            _matmul(Rn, E, M)
            polar_newton(M, Rn)
            for i in range(3):
                for j in range(3):
                    Rs[n + 1, i, j] = Rn[i, j]
            d0 = Rn[0, 0] * p0 + Rn[0, 1] * p1 + Rn[0, 2] * p2 - L_0
            d1 = Rn[1, 0] * p0 + Rn[1, 1] * p1 + Rn[1, 2] * p2 - L_1
            d2 = Rn[2, 0] * p0 + Rn[2, 1] * p1 + Rn[2, 2] * p2 - L_2
            spatial[n + 1] = np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            orth[n + 1] = _orth_residual(Rn)

    return P, Rs, drift, spatial, orth
