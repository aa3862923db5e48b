"""Compiled kernels: coefficient program VM and the Dormand-Prince 5(4) stepper.

The integrator works on the first-order system in quasi-derivative form

    u' = v / p,        v' = (q - lam * |r|) u

for ``m`` independent columns (each with its own ``lam``), and additionally
accumulates the Gram matrix ``G[j, k] = int |r| u_j u_k |dx|`` over the
traversed interval. Columns are renormalised independently; the true
solution is ``exp(logscale[j]) * Y[:, j]``.
"""
import math

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_MAXSTEPS = 3

# |delta theta| per accepted step must stay below this (< pi/2)
PRUFER_GUARD = 1.2


@njit(cache=True)
def eval_prog(ops, args, x, stack):
    n = ops.shape[0]
    if n == 1 and ops[0] == 0:
        return args[0]
    sp = 0
    for i in range(n):
        op = ops[i]
        if op == 0:
            stack[sp] = args[i]
            sp += 1
        elif op == 1:
            stack[sp] = x
            sp += 1
        elif op <= 6:
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            if op == 2:
                r = a + b
            elif op == 3:
                r = a - b
            elif op == 4:
                r = a * b
            elif op == 5:
                r = a / b
            elif b == 2.0:
                r = a * a
            else:
                r = a**b
            stack[sp - 1] = r
        else:
            a = stack[sp - 1]
            if op == 7:
                r = -a
            elif op == 8:
                r = math.cosh(a)
            elif op == 9:
                r = math.cos(a)
            elif op == 10:
                r = math.sin(a)
            elif op == 11:
                r = math.exp(a)
            elif op == 12:
                r = abs(a)
            elif op == 13:
                if a > 0.0:
                    r = 1.0
                elif a < 0.0:
                    r = -1.0
                else:
                    r = 0.0
            elif op == 14:
                r = math.sqrt(a)
            elif op == 15:
                r = math.tanh(a)
            elif op == 16:
                r = math.sinh(a)
            else:
                r = math.log(a)
            stack[sp - 1] = r
    return stack[0]


@njit(cache=True)
def _rhs(p_ops, p_args, q_ops, q_args, r_ops, r_args, stack, x, lams, Y, K, W):
    invp = 1.0 / eval_prog(p_ops, p_args, x, stack)
    q = eval_prog(q_ops, q_args, x, stack)
    w = abs(eval_prog(r_ops, r_args, x, stack))
    for j in range(lams.shape[0]):
        K[0, j] = Y[1, j] * invp
        K[1, j] = (q - lams[j] * w) * Y[0, j]
    W[0] = w


@njit(cache=True)
def _clamp(x, lo, hi):
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


@njit(cache=True)
def integrate_kernel(
    p_ops, p_args, q_ops, q_args, r_ops, r_args,
    lams, x0, x1, Y0, breaks, rtol, atol, h_init, max_steps, trace_cap,
):
    m = lams.shape[0]
    stack = np.empty(64)
    Y = Y0.copy()
    logscale = np.zeros(m)
    theta = np.empty(m)
    for j in range(m):
        theta[j] = math.atan2(Y[0, j], Y[1, j])
    gram = np.zeros((m, m))

    tr_x = np.empty(trace_cap)
    tr_u = np.empty(trace_cap)
    tr_v = np.empty(trace_cap)
    tr_l = np.empty(trace_cap)
    tr_t = np.empty(trace_cap)
    ntr = 0
    if trace_cap > 0:
        tr_x[0] = x0
        tr_u[0] = Y[0, 0]
        tr_v[0] = Y[1, 0]
        tr_l[0] = 0.0
        tr_t[0] = theta[0]
        ntr = 1

    direction = 1.0 if x1 >= x0 else -1.0
    if x1 == x0:
        return Y, logscale, theta, gram, 0, STATUS_OK, tr_x, tr_u, tr_v, tr_l, tr_t, ntr

    # segment end points strictly inside (x0, x1), ordered along the direction
    lo = min(x0, x1)
    hi = max(x0, x1)
    inner = np.empty(breaks.shape[0])
    ni = 0
    for b in breaks:
        if lo < b < hi:
            inner[ni] = b
            ni += 1
    inner = np.sort(inner[:ni])
    if direction < 0:
        inner = inner[::-1]
    ends = np.empty(ni + 1)
    for i in range(ni):
        ends[i] = inner[i]
    ends[ni] = x1

    K1 = np.empty((2, m))
    K2 = np.empty((2, m))
    K3 = np.empty((2, m))
    K4 = np.empty((2, m))
    K5 = np.empty((2, m))
    K6 = np.empty((2, m))
    K7 = np.empty((2, m))
    S = np.empty((2, m))
    Ynew = np.empty((2, m))
    U2 = np.empty((6, m))
    Wst = np.empty(6)
    Wtmp = np.empty(1)

    h = abs(h_init) if h_init != 0.0 else 1e-2 * (hi - lo)
    nsteps = 0
    x = x0
    for seg in range(ni + 1):
        xs = x
        xe = ends[seg]
        slo = min(xs, xe)
        shi = max(xs, xe)
        slo_in = np.nextafter(slo, shi)
        shi_in = np.nextafter(shi, slo)
        _rhs(p_ops, p_args, q_ops, q_args, r_ops, r_args, stack,
             _clamp(x, slo_in, shi_in), lams, Y, K1, Wtmp)
        w1 = Wtmp[0]
        while (xe - x) * direction > 0.0:
            if nsteps >= max_steps:
                return Y, logscale, theta, gram, nsteps, STATUS_MAXSTEPS, tr_x, tr_u, tr_v, tr_l, tr_t, ntr
            remaining = abs(xe - x)
            last = False
            if h >= remaining:
                h = remaining
                last = True
            if not last and h < 1e-13 * max(1.0, abs(x)):
                return Y, logscale, theta, gram, nsteps, STATUS_UNDERFLOW, tr_x, tr_u, tr_v, tr_l, tr_t, ntr
            hs = h * direction

            for j in range(m):
                for i in range(2):
                    S[i, j] = Y[i, j] + hs * (A21 * K1[i, j])
            _rhs(p_ops, p_args, q_ops, q_args, r_ops, r_args, stack,
                 _clamp(x + C2 * hs, slo_in, shi_in), lams, S, K2, Wtmp)
            Wst[1] = Wtmp[0]
            for j in range(m):
                U2[1, j] = S[0, j]
                for i in range(2):
                    S[i, j] = Y[i, j] + hs * (A31 * K1[i, j] + A32 * K2[i, j])
            _rhs(p_ops, p_args, q_ops, q_args, r_ops, r_args, stack,
                 _clamp(x + C3 * hs, slo_in, shi_in), lams, S, K3, Wtmp)
            Wst[2] = Wtmp[0]
            for j in range(m):
                U2[2, j] = S[0, j]
                for i in range(2):
                    S[i, j] = Y[i, j] + hs * (A41 * K1[i, j] + A42 * K2[i, j] + A43 * K3[i, j])
            _rhs(p_ops, p_args, q_ops, q_args, r_ops, r_args, stack,
                 _clamp(x + C4 * hs, slo_in, shi_in), lams, S, K4, Wtmp)
            Wst[3] = Wtmp[0]
            for j in range(m):
                U2[3, j] = S[0, j]
                for i in range(2):
                    S[i, j] = Y[i, j] + hs * (
                        A51 * K1[i, j] + A52 * K2[i, j] + A53 * K3[i, j] + A54 * K4[i, j]
                    )
            _rhs(p_ops, p_args, q_ops, q_args, r_ops, r_args, stack,
                 _clamp(x + C5 * hs, slo_in, shi_in), lams, S, K5, Wtmp)
            Wst[4] = Wtmp[0]
            for j in range(m):
                U2[4, j] = S[0, j]
                for i in range(2):
                    S[i, j] = Y[i, j] + hs * (
                        A61 * K1[i, j] + A62 * K2[i, j] + A63 * K3[i, j]
                        + A64 * K4[i, j] + A65 * K5[i, j]
                    )
            xn = xe if last else x + hs
            _rhs(p_ops, p_args, q_ops, q_args, r_ops, r_args, stack,
                 _clamp(xn, slo_in, shi_in), lams, S, K6, Wtmp)
            Wst[5] = Wtmp[0]
            for j in range(m):
                U2[5, j] = S[0, j]
                for i in range(2):
                    Ynew[i, j] = Y[i, j] + hs * (
                        B1 * K1[i, j] + B3 * K3[i, j] + B4 * K4[i, j]
                        + B5 * K5[i, j] + B6 * K6[i, j]
                    )
            _rhs(p_ops, p_args, q_ops, q_args, r_ops, r_args, stack,
                 _clamp(xn, slo_in, shi_in), lams, Ynew, K7, Wtmp)
            w7 = Wtmp[0]

            err = 0.0
            finite = True
            for j in range(m):
                for i in range(2):
                    e = hs * (
                        E1 * K1[i, j] + E3 * K3[i, j] + E4 * K4[i, j]
                        + E5 * K5[i, j] + E6 * K6[i, j] + E7 * K7[i, j]
                    )
                    sc = atol + rtol * max(abs(Y[i, j]), abs(Ynew[i, j]))
                    err += (e / sc) ** 2
                    if not math.isfinite(Ynew[i, j]):
                        finite = False
            if not finite:
                if h < 1e-10:
                    return Y, logscale, theta, gram, nsteps, STATUS_NONFINITE, tr_x, tr_u, tr_v, tr_l, tr_t, ntr
                h *= 0.25
                continue
            err = math.sqrt(err / (2 * m))

            guard_ok = True
            if err <= 1.0:
                for j in range(m):
                    d = math.atan2(Ynew[0, j], Ynew[1, j]) - math.atan2(Y[0, j], Y[1, j])
                    if d > math.pi:
                        d -= 2.0 * math.pi
                    elif d <= -math.pi:
                        d += 2.0 * math.pi
                    if abs(d) > PRUFER_GUARD:
                        guard_ok = False
                        break

            if err > 1.0 or not guard_ok:
                if not guard_ok and err <= 1.0:
                    h *= 0.5
                else:
                    h *= max(0.2, 0.9 * err ** (-0.2))
                continue

            # accepted
            nsteps += 1
            for j in range(m):
                d = math.atan2(Ynew[0, j], Ynew[1, j]) - math.atan2(Y[0, j], Y[1, j])
                if d > math.pi:
                    d -= 2.0 * math.pi
                elif d <= -math.pi:
                    d += 2.0 * math.pi
                theta[j] += d
            # Gram increment with the 5th-order weights on stage values
            for j in range(m):
                U2[0, j] = Y[0, j]
            Wst[0] = w1
            for j in range(m):
                for k in range(j, m):
                    g = (
                        B1 * Wst[0] * U2[0, j] * U2[0, k]
                        + B3 * Wst[2] * U2[2, j] * U2[2, k]
                        + B4 * Wst[3] * U2[3, j] * U2[3, k]
                        + B5 * Wst[4] * U2[4, j] * U2[4, k]
                        + B6 * Wst[5] * U2[5, j] * U2[5, k]
                    ) * h
                    gram[j, k] += g
                    if k != j:
                        gram[k, j] += g
            x = xn
            for j in range(m):
                for i in range(2):
                    Y[i, j] = Ynew[i, j]
                    K1[i, j] = K7[i, j]
            w1 = w7
            for j in range(m):
                nrm = math.sqrt(Y[0, j] ** 2 + Y[1, j] ** 2)
                if nrm > 1e8 or nrm < 1e-8:
                    Y[0, j] /= nrm
                    Y[1, j] /= nrm
                    K1[0, j] /= nrm
                    K1[1, j] /= nrm
                    logscale[j] += math.log(nrm)
                    for k in range(m):
                        gram[j, k] /= nrm
                        gram[k, j] /= nrm
            if ntr < trace_cap:
                tr_x[ntr] = x
                tr_u[ntr] = Y[0, 0]
                tr_v[ntr] = Y[1, 0]
                tr_l[ntr] = logscale[0]
                tr_t[ntr] = theta[0]
                ntr += 1
            if err < 1e-30:
                h *= 5.0
            else:
                h *= min(5.0, max(0.2, 0.9 * err ** (-0.2)))
    return Y, logscale, theta, gram, nsteps, STATUS_OK, tr_x, tr_u, tr_v, tr_l, tr_t, ntr
