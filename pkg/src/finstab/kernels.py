"""Hot numerical kernels: control evaluation and the adaptive RK45 loop.

Single-source kernels compiled with numba when the backend allows it and run
as plain numpy otherwise (see backend.py).  All branching is on integer codes
so the same code object serves both paths.

Variant codes: 0 ZeroControl, 1 BilinearPhi, 2 BilinearGrad, 3 LinearPhi,
4 RankOne.  Phi codes: 0 zero, 1 constant, 2 capped coordinate-ratio.
Status codes: 0 completed, 3 stalled at dt_min.
"""
from __future__ import annotations

import numpy as np

from .backend import maybe_njit

VARIANT_ZERO = 0
VARIANT_BILINEAR_PHI = 1
VARIANT_BILINEAR_GRAD = 2
VARIANT_LINEAR_PHI = 3
VARIANT_RANK_ONE = 4

PHI_ZERO = 0
PHI_CONSTANT = 1
PHI_WAVE_RATIO = 2

STATUS_OK = 0
STATUS_STALLED = 3

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


@maybe_njit
def phi_value(py, phi_kind, phi_const, phi_cap, phi_q, phi_half, eps_dz):
    """Compensation value phi(Py); code 2 is min(cap, max |pos_i|/max(|vel_i|, eps))."""
    if phi_kind == PHI_ZERO:
        return 0.0
    if phi_kind == PHI_CONSTANT:
        return phi_const
    worst = 0.0
    for i in range(phi_q):
        den = abs(py[phi_half + i])
        if den < eps_dz:
            den = eps_dz
        r = abs(py[i]) / den
        if r > worst:
            worst = r
    if worst > phi_cap:
        worst = phi_cap
    return worst


@maybe_njit
def closed_loop_rhs(y, A, Beff, L, LtM, M, P, variant, mu, phi_kind, phi_const, phi_cap,
                    phi_q, phi_half, eps_dz, u_max, m_zeta, az_pair, zeta_normsq, varpi,
                    latched):
    """Field Ay + control contribution; returns (dy, control, trigger, V, saturated).

    trigger is the dead-zone variable (V, ||w||^2, or |s| by variant); latched
    forces the singular control terms to zero permanently.
    """
    n = y.shape[0]
    m = varpi.shape[0]
    dy = A @ y
    control = np.zeros(m)
    saturated = False
    py = P @ y
    mpy = M @ py
    if variant == VARIANT_BILINEAR_PHI or variant == VARIANT_BILINEAR_GRAD:
        bpy = Beff @ py
        V = 0.0
        bnormsq = 0.0
        for i in range(n):
            V += bpy[i] * mpy[i]
        trigger = V
        u = 0.0
        if variant == VARIANT_BILINEAR_GRAD:
            mbpy = M @ bpy
            for i in range(n):
                bnormsq += bpy[i] * mbpy[i]
            trigger = bnormsq
        if (not latched) and trigger > eps_dz:
            if variant == VARIANT_BILINEAR_PHI:
                u = -(V ** (-mu) + phi_value(py, phi_kind, phi_const, phi_cap,
                                             phi_q, phi_half, eps_dz))
            else:
                apy = A @ py
                mbpy = M @ bpy
                pairing = 0.0
                for i in range(n):
                    pairing += apy[i] * mbpy[i]
                u = -(V ** (-mu) + pairing / bnormsq)
                if u > u_max:
                    u = u_max
                    saturated = True
                elif u < -u_max:
                    u = -u_max
                    saturated = True
        control[0] = u
        if u != 0.0:
            by = Beff @ y
            for i in range(n):
                dy[i] += u * by[i]
        return dy, control, trigger, V, saturated
    if variant == VARIANT_LINEAR_PHI:
        w = LtM @ py
        wnormsq = 0.0
        for j in range(m):
            wnormsq += w[j] * w[j]
        V = wnormsq
        if (not latched) and wnormsq > eps_dz:
            scale = wnormsq ** (-mu) + phi_value(py, phi_kind, phi_const, phi_cap,
                                                 phi_q, phi_half, eps_dz)
            for j in range(m):
                control[j] = -scale * w[j]
            lv = L @ control
            for i in range(n):
                dy[i] += lv[i]
        return dy, control, wnormsq, V, saturated
    if variant == VARIANT_RANK_ONE:
        s = 0.0
        comp = 0.0
        for i in range(n):
            s += py[i] * m_zeta[i]
            comp += py[i] * az_pair[i]
        V = s * s / zeta_normsq
        first = 0.0
        if (not latched) and abs(s) > eps_dz:
            first = -s * abs(s) ** (-2.0 * mu)
        second = -comp / zeta_normsq
        coeff = first + second
        for j in range(m):
            control[j] = coeff * varpi[j]
        lv = L @ control
        for i in range(n):
            dy[i] += lv[i]
        return dy, control, abs(s), V, saturated
    # ZeroControl: record V for the trajectory but leave the field free
    bpy = Beff @ py
    V = 0.0
    for i in range(n):
        V += bpy[i] * mpy[i]
    return dy, control, V, V, saturated


@maybe_njit
def integrate_adaptive(y0, sample_ts, A, Beff, L, LtM, M, P, C, variant, mu,
                       phi_kind, phi_const, phi_cap, phi_q, phi_half,
                       eps_dz, u_max, m_zeta, az_pair, zeta_normsq, varpi,
                       gamma_eff, trig_exp, rtol, atol, dt_init, dt_min, dt_max):
    """Adaptive Dormand-Prince 5(4) over a fixed sample grid.

    Steps never cross a sample time, so recorded states are step endpoints
    (no dense interpolation).  The dead zone latches at the first accepted
    step whose trigger falls below eps_dz; if the decay envelope then
    predicts settling within one step, the observed component is clamped
    to zero via the projector C.

    Returns (states, controls, lyapunov, status, n_steps, n_rejected,
    n_saturated, n_v_increase, latch_time, clamp_time, regrow_flag,
    reached_index).
    """
    n = y0.shape[0]
    m = varpi.shape[0]
    ns = sample_ts.shape[0]
    ys = np.zeros((ns, n))
    us = np.zeros((ns, m))
    Vs = np.zeros(ns)
    y = y0.copy()
    t = sample_ts[0]
    latched = False
    clamped = False
    regrow = False
    latch_time = np.nan
    clamp_time = np.nan
    n_steps = 0
    n_rejected = 0
    n_saturated = 0
    n_v_increase = 0
    status = STATUS_OK

    dy, ctrl, trigger, V, sat = closed_loop_rhs(
        y, A, Beff, L, LtM, M, P, variant, mu, phi_kind, phi_const, phi_cap,
        phi_q, phi_half, eps_dz, u_max, m_zeta, az_pair, zeta_normsq, varpi, latched)
    ys[0] = y
    us[0] = ctrl
    Vs[0] = V
    if variant != VARIANT_ZERO and trigger <= eps_dz:
        latched = True
        latch_time = t
    k1 = dy
    have_k1 = True
    dt = dt_init
    reached = 0
    for isamp in range(1, ns):
        target = sample_ts[isamp]
        bail = False
        while t < target - 1e-14 * max(abs(target), 1.0):
            h = dt
            if h > dt_max:
                h = dt_max
            truncated = False
            if h > target - t:
                h = target - t
                truncated = True
            if h < dt_min:
                h = dt_min
            if not have_k1:
                k1, c1, tr1, V1, s1 = closed_loop_rhs(
                    y, A, Beff, L, LtM, M, P, variant, mu, phi_kind, phi_const, phi_cap,
                    phi_q, phi_half, eps_dz, u_max, m_zeta, az_pair, zeta_normsq, varpi, latched)
                have_k1 = True
            k2 = closed_loop_rhs(
                y + h * _A21 * k1, A, Beff, L, LtM, M, P, variant, mu, phi_kind, phi_const,
                phi_cap, phi_q, phi_half, eps_dz, u_max, m_zeta, az_pair, zeta_normsq,
                varpi, latched)[0]
            k3 = closed_loop_rhs(
                y + h * (_A31 * k1 + _A32 * k2), A, Beff, L, LtM, M, P, variant, mu,
                phi_kind, phi_const, phi_cap, phi_q, phi_half, eps_dz, u_max, m_zeta,
                az_pair, zeta_normsq, varpi, latched)[0]
            k4 = closed_loop_rhs(
                y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), A, Beff, L, LtM, M, P,
                variant, mu, phi_kind, phi_const, phi_cap, phi_q, phi_half, eps_dz,
                u_max, m_zeta, az_pair, zeta_normsq, varpi, latched)[0]
            k5 = closed_loop_rhs(
                y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), A, Beff, L, LtM,
                M, P, variant, mu, phi_kind, phi_const, phi_cap, phi_q, phi_half, eps_dz,
                u_max, m_zeta, az_pair, zeta_normsq, varpi, latched)[0]
            k6 = closed_loop_rhs(
                y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
                A, Beff, L, LtM, M, P, variant, mu, phi_kind, phi_const, phi_cap,
                phi_q, phi_half, eps_dz, u_max, m_zeta, az_pair, zeta_normsq, varpi,
                latched)[0]
            ynew = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            k7, ctrl_new, trig_new, V_new, sat_new = closed_loop_rhs(
                ynew, A, Beff, L, LtM, M, P, variant, mu, phi_kind, phi_const, phi_cap,
                phi_q, phi_half, eps_dz, u_max, m_zeta, az_pair, zeta_normsq, varpi, latched)
            errnorm = 0.0
            for i in range(n):
                e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                         + _E6 * k6[i] + _E7 * k7[i])
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                q = e / sc
                errnorm += q * q
            errnorm = np.sqrt(errnorm / n)
            if errnorm <= 1.0:
                n_steps += 1
                if sat_new:
                    n_saturated += 1
                if V_new > V * (1.0 + 1e-9) + atol * atol:
                    n_v_increase += 1
                t = t + h
                y = ynew
                V = V_new
                k1 = k7
                have_k1 = True
                fac = 5.0
                if errnorm > 1e-12:
                    fac = 0.9 * errnorm ** -0.2
                    if fac > 5.0:
                        fac = 5.0
                    if fac < 0.2:
                        fac = 0.2
                if (not latched) and trig_new < 10.0 * eps_dz and fac > 1.0:
                    fac = 1.0  # no step growth while resolving the dead-zone approach
                # a step truncated to land on a sample boundary must not shrink
                # the controller step, or dt never recovers between samples
                if truncated:
                    if h * fac > dt:
                        dt = h * fac
                else:
                    dt = h * fac
                if variant != VARIANT_ZERO and trig_new <= eps_dz:
                    if not latched:
                        latched = True
                        latch_time = t
                        have_k1 = False  # slope changes once the control is latched off
                    if not clamped:
                        remaining = trig_new ** trig_exp / (2.0 * gamma_eff * mu)
                        if remaining <= dt:
                            y = y - C @ y
                            clamped = True
                            clamp_time = t
                            have_k1 = False
                if latched and trig_new > 2.0 * eps_dz:
                    regrow = True
            else:
                n_rejected += 1
                fac = 0.9 * errnorm ** -0.2
                if fac < 0.1:
                    fac = 0.1
                new_dt = h * fac
                if h <= dt_min * (1.0 + 1e-12):
                    status = STATUS_STALLED
                    bail = True
                    break
                dt = new_dt if new_dt > dt_min else dt_min
                have_k1 = True  # k1 is still the slope at (t, y)
        if bail:
            reached = isamp - 1
            break
        dy, ctrl, trigger, V, sat = closed_loop_rhs(
            y, A, Beff, L, LtM, M, P, variant, mu, phi_kind, phi_const, phi_cap,
            phi_q, phi_half, eps_dz, u_max, m_zeta, az_pair, zeta_normsq, varpi, latched)
        ys[isamp] = y
        us[isamp] = ctrl
        Vs[isamp] = V
        reached = isamp
    return (ys, us, Vs, status, n_steps, n_rejected, n_saturated, n_v_increase,
            latch_time, clamp_time, regrow, reached)
