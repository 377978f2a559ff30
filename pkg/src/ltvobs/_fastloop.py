"""Numba-compiled inner loop for the closed-loop simulation.

This mirrors sim.composite_rhs exactly (same state layout, same arithmetic);
tests pin the two against each other.  Only the parameterized scenario family
this package defines is supported, which is every Scenario constructible here.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["run_loop"]


@njit(cache=True)
def _kernel(v0, h, n_steps, stride, t_final, noise,
            u_const, u_amp, u_om, u_ph,
            ath_a, ath_b, ath_om, ath_ph,
            ab_a, ab_b, ab_om, ab_ph,
            h_theta, h_B, S, h_delta, A_K, A_f, K, f, CgT,
            f0, alpha, gamma, theta_g0,
            n, n_th, n_b, n_w, q, p,
            rec_t, rec_states, rec_y, rec_u):
    m = n_th + n_b
    # segment offsets, in the layout order of sim.make_layout
    o_x = 0
    o_xth = o_x + n
    o_xb = o_xth + n_th
    o_w = o_xb + n_b
    o_pth = o_w + n_w
    o_pb = o_pth + n_th * n_th
    o_z = o_pb + n_b * n_b
    o_om = o_z + n
    o_p = o_om + n * n_th
    o_l = o_p + n * n_b
    o_q = o_l + n_w
    o_tg = o_q + n_w * m
    o_f = o_tg + p
    o_th = o_f + p * p
    size = o_th + q

    Ip = np.eye(p)

    def u_of(t):
        u = u_const
        for i in range(u_amp.shape[0]):
            u += u_amp[i] * np.sin(u_om[i] * t + u_ph[i])
        return u

    def rhs(t, v, nu, dv):
        x = v[o_x:o_xth]
        x_theta = v[o_xth:o_xb]
        x_b = v[o_xb:o_w]
        w = v[o_w:o_pth]
        phi_th = v[o_pth:o_pb].reshape(n_th, n_th)
        phi_b = v[o_pb:o_z].reshape(n_b, n_b)
        z = v[o_z:o_om]
        om = v[o_om:o_p].reshape(n, n_th)
        pmat = v[o_p:o_l].reshape(n, n_b)
        lvec = v[o_l:o_q]
        qmat = v[o_q:o_tg].reshape(n_w, m)
        theta_g = v[o_tg:o_f]
        fmat = v[o_f:o_th].reshape(p, p)
        theta_hat = v[o_th:size]

        u = u_of(t)
        y = x[0] + nu
        a_th_t = ath_a + ath_b * np.sin(ath_om * t + ath_ph)
        a_b_t = ab_a + ab_b * np.sin(ab_om * t + ab_ph)
        theta_t = h_theta @ x_theta
        b_t = h_B @ x_b

        # truth
        dx = dv[o_x:o_xth]
        for i in range(n - 1):
            dx[i] = x[i + 1]
        dx[n - 1] = h_delta @ w
        for i in range(n):
            dx[i] += theta_t[i] * x[0] + b_t[i] * u
        dv[o_xth:o_xb] = a_th_t @ x_theta
        dv[o_xb:o_w] = a_b_t @ x_b
        dv[o_w:o_pth] = S @ w
        # filter bank
        dv[o_pth:o_pb] = (a_th_t @ phi_th).ravel()
        dv[o_pb:o_z] = (a_b_t @ phi_b).ravel()
        dv[o_z:o_om] = A_K @ z + K * y
        dv[o_om:o_p] = (A_K @ om + (h_theta @ phi_th) * y).ravel()
        dv[o_p:o_l] = (A_K @ pmat + (h_B @ phi_b) * u).ravel()
        zeta = y - z[0]
        phi = np.empty(m)
        phi[:n_th] = om[0, :]
        phi[n_th:] = pmat[0, :]
        dl = A_f @ lvec
        dl[n_w - 1] += zeta
        dv[o_l:o_q] = dl
        dq = A_f @ qmat
        dq[n_w - 1, :] += phi
        dv[o_q:o_tg] = dq.ravel()
        # regressor row
        n_gam = CgT.shape[0]
        omega = np.empty(p)
        omega[:m] = qmat.T @ f + phi
        omega[m:q] = CgT @ lvec
        omega[q:] = -(CgT @ qmat).ravel()
        Y = zeta + lvec @ f
        # LS search
        fw = fmat @ omega
        err = Y - omega @ theta_g
        dv[o_tg:o_f] = alpha * err * fw
        dfm = dv[o_f:o_th].reshape(p, p)
        for i in range(p):
            for j in range(p):
                dfm[i, j] = -alpha * fw[i] * fw[j]
        # DREM mixing: Faddeev-LeVerrier on I - f0*F
        mmat = Ip - f0 * fmat
        nmat = np.eye(p)
        mk = mmat.copy()
        nprev = nmat
        c = 0.0
        for kk in range(1, p + 1):
            if kk > 1:
                mk = mmat @ nmat
            c = -np.trace(mk) / kk
            nprev = nmat
            nmat = mk + c * Ip
        det = (-1.0) ** p * c
        adj = (-1.0) ** (p - 1) * nprev
        y_mix = adj @ (theta_g - f0 * (fmat @ theta_g0))
        dv[o_th:size] = gamma * det * (y_mix[:q] - det * theta_hat)
        return 0

    v = v0.copy()
    k1 = np.empty(size)
    k2 = np.empty(size)
    k3 = np.empty(size)
    k4 = np.empty(size)
    vtmp = np.empty(size)

    rec_i = 0
    rec_t[rec_i] = 0.0
    rec_states[rec_i, :] = v
    rec_y[rec_i] = v[0] + (noise[0] if n_steps > 0 else 0.0)
    rec_u[rec_i] = u_of(0.0)
    rec_i += 1

    t = 0.0
    for k in range(n_steps):
        nu = noise[k]
        hk = h if k + 1 < n_steps else t_final - k * h
        rhs(t, v, nu, k1)
        vtmp[:] = v + 0.5 * hk * k1
        rhs(t + 0.5 * hk, vtmp, nu, k2)
        vtmp[:] = v + 0.5 * hk * k2
        rhs(t + 0.5 * hk, vtmp, nu, k3)
        vtmp[:] = v + hk * k3
        rhs(t + hk, vtmp, nu, k4)
        v = v + (hk / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = (k + 1) * h if k + 1 < n_steps else t_final
        bad = False
        for i in range(size):
            if not np.isfinite(v[i]) or abs(v[i]) > 1e12:
                bad = True
        if bad:
            return k, rec_i
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            rec_t[rec_i] = t
            rec_states[rec_i, :] = v
            nu_rec = noise[k + 1] if k + 1 < n_steps else noise[n_steps - 1]
            rec_y[rec_i] = v[0] + nu_rec
            rec_u[rec_i] = u_of(t)
            rec_i += 1
    return -1, rec_i


def run_loop(sc, layout, v0, cfg, noise):
    """Run the jitted loop; returns (t, states, y, u) or raises on blow-up.

    noise is the per-step held measurement-noise array (length n_steps).
    """
    from .ode import BlowUpError

    n_steps = int(np.ceil(cfg.t_final / cfg.h - 1e-12)) if cfg.t_final > 0 else 0
    n_rec = 1 + (n_steps // cfg.record_stride)
    if n_steps > 0 and n_steps % cfg.record_stride != 0:
        n_rec += 1
    rec_t = np.empty(n_rec)
    rec_states = np.empty((n_rec, layout.size))
    rec_y = np.empty(n_rec)
    rec_u = np.empty(n_rec)
    if n_steps == 0:
        noise = np.zeros(1)
    theta_g0 = np.zeros(sc.p) if sc.theta_g0 is None else np.asarray(sc.theta_g0, float)
    status, rec_i = _kernel(
        v0, cfg.h, n_steps, cfg.record_stride, cfg.t_final, noise,
        float(sc.u.constant), np.asarray(sc.u.amplitudes, float),
        np.asarray(sc.u.omegas, float), np.asarray(sc.u.phases, float),
        sc.A_theta.a, sc.A_theta.b, sc.A_theta.omega, sc.A_theta.phase,
        sc.A_B.a, sc.A_B.b, sc.A_B.omega, sc.A_B.phase,
        sc.h_theta, sc.h_B, sc.S, sc.h_delta,
        sc.A_K(), sc.A_f(), sc.K, sc.f, np.ascontiguousarray(sc.C_gamma.T),
        sc.f0, sc.alpha, sc.gamma, theta_g0,
        sc.n, sc.n_theta, sc.n_B, sc.n_w, sc.q, sc.p,
        rec_t, rec_states, rec_y, rec_u)
    if status >= 0:
        raise BlowUpError((status + 1) * cfg.h)
    return rec_t[:rec_i], rec_states[:rec_i], rec_y[:rec_i], rec_u[:rec_i]
