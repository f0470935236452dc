"""Numba hot loop for the adaptive-Euler solver.

The arithmetic here mirrors dynamics._flow_arrays and the python stepping
loop expression-for-expression (same evaluation order), so the fused
kernel and the reference path produce bit-identical trajectories; tests
assert this equivalence.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# status codes returned by the kernel
RUNNING = 0
SOLVED = 1
NONFINITE = 2


@njit(cache=True)
def euler_chunk(
    lit_net, lit_sign, lit_len,          # (K, L) int64, (K, L) f64, (K,) int64
    v, xs, xl,                           # state, mutated in place
    alpha, beta, gamma, delta, epsilon, zeta, l_cap,
    dt, dt_min, dt_max, dv_max,
    threshold, hold_steps,
    noise,                               # (steps, M) standard normals, or (0, 0)
    noise_amp,
    max_chunk_steps,
    consec,
):
    K, L = lit_net.shape
    M = v.shape[0]
    dv = np.zeros(M)
    t_elapsed = 0.0
    status = RUNNING
    steps = 0
    for step in range(max_chunk_steps):
        # flow evaluation
        for n in range(M):
            dv[n] = 0.0
        for m in range(K):
            ln = lit_len[m]
            # smallest / second-smallest slack, multiplicity, tie position
            m1 = np.inf
            for j in range(ln):
                s = 1.0 - lit_sign[m, j] * v[lit_net[m, j]]
                if s < m1:
                    m1 = s
            count_min = 0
            m2 = np.inf
            min_pos = 0
            min_net = np.int64(2**62)
            for j in range(ln):
                s = 1.0 - lit_sign[m, j] * v[lit_net[m, j]]
                if s == m1:
                    count_min += 1
                    if lit_net[m, j] < min_net:
                        min_net = lit_net[m, j]
                        min_pos = j
                elif s < m2:
                    m2 = s
            C = 0.5 * m1
            w_g = xl[m] * xs[m]
            w_r = (1.0 + zeta * xl[m]) * (1.0 - xs[m])
            for j in range(ln):
                s = 1.0 - lit_sign[m, j] * v[lit_net[m, j]]
                if s > m1:
                    min_excl = m1
                elif count_min > 1:
                    min_excl = m1
                else:
                    min_excl = m2
                if min_excl == np.inf:
                    min_excl = 1.0
                g = 0.5 * lit_sign[m, j] * min_excl
                if j == min_pos:
                    r = 0.5 * (lit_sign[m, j] - v[lit_net[m, j]])
                else:
                    r = 0.0
                dv[lit_net[m, j]] += w_g * g + w_r * r
            dxs_m = beta * (xs[m] + epsilon) * (C - gamma)
            dxl_m = alpha * (C - delta)
            xs[m] = min(1.0, max(0.0, xs[m] + dt * dxs_m))
            xl[m] = min(l_cap, max(1.0, xl[m] + dt * dxl_m))

        maxabs = 0.0
        for n in range(M):
            a = abs(dv[n])
            if a > maxabs:
                maxabs = a
        if not np.isfinite(maxabs):
            status = NONFINITE
            break

        if noise.shape[0] > 0:
            sd = noise_amp * np.sqrt(dt)
            for n in range(M):
                v[n] = min(1.0, max(-1.0, v[n] + dt * dv[n] + sd * noise[step, n]))
        else:
            for n in range(M):
                v[n] = min(1.0, max(-1.0, v[n] + dt * dv[n]))
        t_elapsed += dt
        steps += 1

        # next step size from the flow just used
        if maxabs == 0.0:
            dt = dt_max
        else:
            dt = min(dt_max, max(dt_min, 0.9 * dv_max / maxabs))

        # logical equilibrium check: every clause holds a decided,
        # satisfying literal (nets in no violated clause are don't-cares)
        ok = True
        for m in range(K):
            sat = False
            for j in range(lit_len[m]):
                if lit_sign[m, j] * v[lit_net[m, j]] >= threshold:
                    sat = True
                    break
            if not sat:
                ok = False
                break
        if ok:
            consec += 1
            if consec >= hold_steps:
                status = SOLVED
                break
        else:
            consec = 0

    return steps, dt, t_elapsed, consec, status
