"""Pilot plan, pilot-domain covariances, and MMSE channel estimation.

The estimation context precomputes, per (pilot, AP) and per link, every matrix
the detectors, closed forms, and Monte Carlo samplers reuse: receive-noise
covariances, pilot-domain covariances Psi, estimator gains, and the estimate
covariances.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import hermitize
from .quantization import received_noise_covariance


def dft_pilot_matrix(tau):
    """tau x tau DFT matrix; columns are mutually orthogonal with norm² = tau."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    t = np.arange(tau)
    return np.exp(-2j * np.pi * np.outer(t, t) / tau)


@dataclass(frozen=True)
class PilotPlan:
    tau: int
    phi: np.ndarray            # (tau, tau) DFT pilot book
    pilot_of: np.ndarray       # (K,) pilot index per UE, 0-based
    copilot_sets: tuple        # per UE: tuple of UEs sharing its pilot (incl. itself)

    def __post_init__(self):
        if np.any(self.pilot_of < 0) or np.any(self.pilot_of >= self.tau):
            raise ValueError("pilot indices out of range")

    @property
    def K(self):
        return len(self.pilot_of)

    def users_on_pilot(self, t):
        return np.flatnonzero(self.pilot_of == t)


def _copilot_sets(pilot_of):
    pilot_of = np.asarray(pilot_of)
    return tuple(tuple(int(i) for i in np.flatnonzero(pilot_of == pilot_of[k]))
                 for k in range(len(pilot_of)))


def make_pilot_plan(pilot_of, tau):
    pilot_of = np.asarray(pilot_of, dtype=int)
    return PilotPlan(tau=tau, phi=dft_pilot_matrix(tau), pilot_of=pilot_of,
                     copilot_sets=_copilot_sets(pilot_of))


def round_robin_pilots(n_users, tau):
    return make_pilot_plan(np.arange(n_users) % tau, tau)


def random_pilots(n_users, tau, rng):
    return make_pilot_plan(rng.integers(0, tau, size=n_users), tau)


def psi_matrix(t, l, stats, plan, p_ddot, q, c_n_l):
    """Covariance of the LOS-stripped pilot observation on pilot t at AP l."""
    users = plan.users_on_pilot(t)
    psi = np.array(c_n_l, dtype=complex)
    scale = (1.0 - q.rho_ad) ** 2 * plan.tau
    for i in users:
        psi += scale * p_ddot[i] * stats.R[i, l]
    return hermitize(psi)


@dataclass(frozen=True)
class EstimationContext:
    """Immutable bundle of channel statistics plus estimation-phase matrices."""

    stats: object
    plan: PilotPlan
    p_ddot: np.ndarray         # (K,) effective transmit powers (DAC gain applied)
    q: object                  # QuantizerConfig
    sigma2: float
    c_n: np.ndarray            # (L, N, N) receive-noise covariance per AP
    c_n_sqrt: np.ndarray       # (L, N, N) factor F with F F^H = c_n
    psi: np.ndarray            # (tau, L, N, N)
    est_gain: np.ndarray       # (K, L, N, N): (1-rho_ad) sqrt(p̈ tau) R Psi^{-1}
    t_mat: np.ndarray          # (K, L, N, N): Psi^{-1} R  (for trace kernels)
    s_mat: np.ndarray          # (K, L, N, N): R Psi^{-1} R
    c_hhat: np.ndarray         # (K, L, N, N) estimate covariance
    adc_diag: np.ndarray       # (L, N): diag(E[x x^H]) at the ADC input
    nx_diag: np.ndarray        # (L, N): AP-local noise, channel-independent diagonal part
    nx_iso: np.ndarray         # (L,): AP-local noise, isotropic part
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def K(self):
        return self.stats.K

    @property
    def L(self):
        return self.stats.L

    @property
    def N(self):
        return self.stats.N

    @property
    def tau(self):
        return self.plan.tau

    @property
    def p_full(self):
        """Raw transmit powers before the DAC gain."""
        return self.p_ddot / (1.0 - self.q.rho_da)


def build_estimation_context(stats, plan, p_ddot, q, sigma2):
    k_count, l_count, n_ant = stats.K, stats.L, stats.N
    tau = plan.tau
    p_ddot = np.asarray(p_ddot, dtype=float)
    one_ad = 1.0 - q.rho_ad

    c_n = np.empty((l_count, n_ant, n_ant), dtype=complex)
    c_n_sqrt = np.empty_like(c_n)
    for l in range(l_count):
        c_n[l] = received_noise_covariance(l, stats, p_ddot, q, sigma2)
        c_n_sqrt[l] = np.linalg.cholesky(c_n[l])

    psi = np.empty((tau, l_count, n_ant, n_ant), dtype=complex)
    for t in range(tau):
        for l in range(l_count):
            psi[t, l] = psi_matrix(t, l, stats, plan, p_ddot, q, c_n[l])

    est_gain = np.empty((k_count, l_count, n_ant, n_ant), dtype=complex)
    t_mat = np.empty_like(est_gain)
    s_mat = np.empty_like(est_gain)
    c_hhat = np.empty_like(est_gain)
    for k in range(k_count):
        t_k = plan.pilot_of[k]
        for l in range(l_count):
            t_mat[k, l] = np.linalg.solve(psi[t_k, l], stats.R[k, l])
            s_mat[k, l] = hermitize(stats.R[k, l] @ t_mat[k, l])
            est_gain[k, l] = one_ad * np.sqrt(p_ddot[k] * tau) * np.conj(t_mat[k, l].T)
            c_hhat[k, l] = one_ad**2 * p_ddot[k] * tau * s_mat[k, l]

    # diag of E[x x^H] at the ADC input: full-power channel moments plus thermal
    p_raw = p_ddot / (1.0 - q.rho_da)
    los_diag = np.einsum("i,ilm->lm", p_raw, np.abs(stats.h_bar) ** 2)
    nlos_diag = np.einsum("i,ilmm->lm", p_raw, stats.R).real
    adc_diag = los_diag + nlos_diag + sigma2

    # E[n_x n_x^H] for the channel-independent AP noise (thermal + ADC + LOS-DAC)
    nx_diag = (q.rho_ad * one_ad / (1.0 - q.rho_da)) * np.einsum(
        "i,ilmm->lm", p_ddot, stats.R).real
    nx_iso = one_ad * (sigma2 + (q.rho_ad / (1.0 - q.rho_da))
                       * np.einsum("i,il->l", p_ddot, stats.beta_los))
    return EstimationContext(stats=stats, plan=plan, p_ddot=p_ddot, q=q,
                             sigma2=sigma2, c_n=c_n, c_n_sqrt=c_n_sqrt,
                             psi=psi, est_gain=est_gain, t_mat=t_mat,
                             s_mat=s_mat, c_hhat=c_hhat, adc_diag=adc_diag,
                             nx_diag=nx_diag, nx_iso=nx_iso)


def estimate_local(z_pilot_w, k, l, ctx):
    """MMSE estimate from the LOS-stripped correlated pilot observation."""
    return ctx.stats.h_bar[k, l] + ctx.est_gain[k, l] @ z_pilot_w


def stack_means(ctx):
    """(K, L*N) stacked LOS means for the centralized scheme."""
    return ctx.stats.h_bar.reshape(ctx.K, ctx.L * ctx.N)


def block_diag_cov(per_ap):
    """(K, L, N, N) per-AP covariances -> (K, LN, LN) exact block diagonals."""
    k_count, l_count, n_ant = per_ap.shape[0], per_ap.shape[1], per_ap.shape[2]
    out = np.zeros((k_count, l_count * n_ant, l_count * n_ant), dtype=complex)
    for l in range(l_count):
        sl = slice(l * n_ant, (l + 1) * n_ant)
        out[:, sl, sl] = per_ap[:, l]
    return out


def stack_centralized(ctx):
    """Stacked means and block-diagonal covariances for centralized processing."""
    return {
        "h_bar": stack_means(ctx),
        "c_hhat": block_diag_cov(ctx.c_hhat),
        "c_error": block_diag_cov(ctx.stats.R - ctx.c_hhat),
        "c_n": block_diag_cov(ctx.c_n[None])[0],
    }
