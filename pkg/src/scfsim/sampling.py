"""Batched Monte Carlo sampling of the transceiver model.

Pilot phase: the effective receive noise on each pilot is Gaussian with the
ensemble covariance C_n,l, drawn independently of the realized channels (the
additive quantization model the closed forms are derived under); co-pilot UEs
share one observation, so pilot contamination is structural, not resampled.
Data phase: fully constructive — the scalar UE DAC noise rides through the
same trial's true channels and is shared across APs.
"""

import numpy as np

from .numerics import crandn


def sample_nlos(ctx, rng, n_trials):
    """(n, K, L, N) correlated NLOS channel realizations."""
    w = crandn(rng, (n_trials, ctx.K, ctx.L, ctx.N))
    return np.einsum("klnm,bklm->bkln", ctx.stats.r_sqrt(), w)


def sample_joint(ctx, rng, n_trials):
    """(true channels, MMSE estimates), both (n, K, L, N), jointly consistent."""
    h_w = sample_nlos(ctx, rng, n_trials)
    h = ctx.stats.h_bar[None] + h_w

    one_ad = 1.0 - ctx.q.rho_ad
    root_tau = np.sqrt(ctx.tau)
    # per-pilot effective noise, independent across pilots and APs
    w = crandn(rng, (n_trials, ctx.tau, ctx.L, ctx.N))
    z_w = np.einsum("lnm,btlm->btln", ctx.c_n_sqrt, w)
    for t in range(ctx.tau):
        for i in ctx.plan.users_on_pilot(t):
            z_w[:, t] += one_ad * np.sqrt(ctx.p_ddot[i]) * root_tau * h_w[:, i]

    hhat = np.empty_like(h)
    for k in range(ctx.K):
        t_k = ctx.plan.pilot_of[k]
        hhat[:, k] = ctx.stats.h_bar[k][None] + np.einsum(
            "lnm,blm->bln", ctx.est_gain[k], z_w[:, t_k])
    return h, hhat


def sample_data_noise(ctx, h, rng):
    """(n, L, N) effective data-phase receive noise per AP.

    The scalar UE DAC noise is shared across APs within a trial, so the
    cross-AP noise correlation the LSFD closed form accounts for is present.
    """
    n_trials = h.shape[0]
    q = ctx.q
    one_ad = 1.0 - q.rho_ad
    n_da = crandn(rng, (n_trials, ctx.K), q.rho_da * ctx.p_full)
    n_an = crandn(rng, (n_trials, ctx.L, ctx.N), ctx.sigma2)
    n_ad = crandn(rng, (n_trials, ctx.L, ctx.N), q.rho_ad * one_ad * ctx.adc_diag)
    return one_ad * (np.einsum("bkln,bk->bln", h, n_da) + n_an) + n_ad
