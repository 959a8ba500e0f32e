"""Closed-form spectral-efficiency expressions (MRC detection).

Distributed scheme: the optimal-LSFD SE and the SE under an arbitrary
weighting vector, both driven by the LsfdIngredients. Centralized scheme: the
hardening-style approximation built from the estimate-moment kernels f^g, f^e.
Also the four-case expectation kernel E[hhat_k^H h_i h_i^H hhat_k] the
distributed expressions rest on, kept standalone for oracle validation.
"""

import numpy as np

from .detectors import centralized_error_noise
from .numerics import solve_hermitian


def theorem1_kernel(k, i, l1, l2, ctx):
    """E[hhat_{k,l1}^H h_{i,l1} h_{i,l2}^H hhat_{k,l2}] in closed form.

    Case split on pilot sharing (i co-pilot with k or not) and on l1 == l2.
    """
    stats = ctx.stats
    copilot = i in ctx.plan.copilot_sets[k]
    one_ad2 = (1.0 - ctx.q.rho_ad) ** 2
    tau, p = ctx.tau, ctx.p_ddot

    h_k1, h_i1 = stats.h_bar[k, l1], stats.h_bar[i, l1]
    h_k2, h_i2 = stats.h_bar[k, l2], stats.h_bar[i, l2]
    los_cross = np.vdot(h_k1, h_i1) * np.vdot(h_i2, h_k2)

    if l1 == l2:
        s_k = ctx.s_mat[k, l1]
        common = (np.vdot(h_k1, stats.R[i, l1] @ h_k1)
                  + one_ad2 * tau * p[k] * (
                      np.trace(stats.R[i, l1] @ s_k)
                      + np.vdot(h_i1, s_k @ h_i1)))
        value = los_cross + common
        if copilot:
            tr1 = np.trace(stats.R[i, l1] @ ctx.t_mat[k, l1])
            value += one_ad2**2 * tau**2 * p[k] * p[i] * np.abs(tr1) ** 2
            value += 2.0 * one_ad2 * tau * np.sqrt(p[i] * p[k]) * np.real(
                tr1 * np.vdot(h_i1, h_k1))
        return complex(value)

    if not copilot:
        return complex(los_cross)
    tr1 = np.trace(stats.R[i, l1] @ ctx.t_mat[k, l1])
    tr2 = np.trace(stats.R[k, l2] @ np.linalg.solve(
        ctx.psi[ctx.plan.pilot_of[k], l2], stats.R[i, l2]))
    value = los_cross + one_ad2**2 * tau**2 * p[k] * p[i] * tr1 * tr2
    value += one_ad2 * tau * np.sqrt(p[k] * p[i]) * (
        np.vdot(h_i2, h_k2) * tr1 + np.vdot(h_k1, h_i1) * tr2)
    return complex(value)


def se_distributed_closed_max(ing, prelog):
    """Distributed SE with MRC and the optimal LSFD weights (closed form)."""
    one_ad2 = (1.0 - ing.rho_ad) ** 2
    sinr = one_ad2 * ing.p_ddot_k * np.real(
        np.vdot(ing.signal, solve_hermitian(ing.c_mat, ing.signal)))
    return prelog * np.log2(1.0 + sinr)


def se_distributed_closed(ing, weights, prelog):
    """Distributed SE with MRC and arbitrary LSFD weights.

    The denominator always uses the full interference matrix, also when the
    weights came from the partial one.
    """
    a = weights.a
    if not np.any(a):
        raise ValueError("all-zero weighting vector")
    one_ad2 = (1.0 - ing.rho_ad) ** 2
    num = one_ad2 * ing.p_ddot_k * np.abs(np.vdot(a, ing.signal)) ** 2
    den = np.real(np.vdot(a, ing.c_mat @ a))
    return prelog * np.log2(1.0 + num / den)


def _f_kernels(k, i, ctx, cluster):
    """Estimate-moment kernels (f^g, f^e) of UE pair (k, i) over k's cluster."""
    stats = ctx.stats
    serving = cluster.serving[k]
    one_ad2 = (1.0 - ctx.q.rho_ad) ** 2
    tau, p = ctx.tau, ctx.p_ddot
    h_bar_k = stats.h_bar[k, serving].reshape(-1)
    h_bar_i = stats.h_bar[i, serving].reshape(-1)
    los_cross = np.vdot(h_bar_k, h_bar_i)

    f_g = np.abs(los_cross) ** 2
    tr_mix = 0.0
    quad_ki = 0.0     # h_bar_k^H [R_i Psi_i^{-1} R_i] h_bar_k per serving AP
    quad_ik = 0.0     # h_bar_i^H [R_k Psi_k^{-1} R_k] h_bar_i
    tr_cross = 0.0    # tr(R_i Psi_k^{-1} R_k), co-pilot coupling
    for l in serving:
        s_k, s_i = ctx.s_mat[k, l], ctx.s_mat[i, l]
        tr_mix += np.trace(s_k @ s_i).real
        quad_ki += np.vdot(stats.h_bar[k, l], s_i @ stats.h_bar[k, l]).real
        quad_ik += np.vdot(stats.h_bar[i, l], s_k @ stats.h_bar[i, l]).real
        tr_cross += np.trace(stats.R[i, l] @ ctx.t_mat[k, l]).real
    f_g += one_ad2**2 * tau**2 * p[k] * p[i] * tr_mix
    f_g += one_ad2 * tau * p[i] * quad_ki
    f_g += one_ad2 * tau * p[k] * quad_ik

    if i in ctx.plan.copilot_sets[k]:
        f_e = one_ad2**2 * tau**2 * p[k] * p[i] * tr_cross**2
        f_e += 2.0 * one_ad2 * tau * np.sqrt(p[i] * p[k]) * np.real(
            tr_cross * np.vdot(h_bar_i, h_bar_k))
    else:
        f_e = 0.0
    return float(f_g), float(f_e)


def se_centralized_closed(k, ctx, cluster, prelog):
    """Centralized MRC SE, hardening-style closed-form approximation."""
    one_ad2 = (1.0 - ctx.q.rho_ad) ** 2
    p = ctx.p_ddot
    copilot = set(ctx.plan.copilot_sets[k])
    num_g, num_e = _f_kernels(k, k, ctx, cluster)
    num = one_ad2 * p[k] * (num_g + num_e)

    interference = 0.0
    for i in range(ctx.K):
        if i == k:
            continue
        f_g, f_e = _f_kernels(k, i, ctx, cluster)
        interference += p[i] * f_g
        if i in copilot:
            interference += p[i] * f_e
    w_full = centralized_error_noise(ctx)
    noise = 0.0
    for l in cluster.serving[k]:
        e_hh = (np.outer(ctx.stats.h_bar[k, l], np.conj(ctx.stats.h_bar[k, l]))
                + ctx.c_hhat[k, l])
        noise += np.trace(w_full[l] @ e_hh).real
    den = one_ad2 * interference + noise
    return prelog * np.log2(1.0 + num / den)
