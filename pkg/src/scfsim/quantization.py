"""Additive finite-resolution DAC/ADC distortion model.

Quantization is modeled as a deterministic gain plus Gaussian noise whose
covariance is set by the ensemble second moment of the converter input:

    DAC:  f(x) = sqrt(1 - rho_da) x + n,  cov(n) = rho_da diag(E[x x^H])
    ADC:  f(x) = (1 - rho_ad) x + n,      cov(n) = rho_ad (1 - rho_ad) diag(E[x x^H])

The distortion factor rho comes from a fixed table for 1-5 bits and from the
exponential law sqrt(3) pi 2^(-2b-1) above that; "ideal" converters have rho=0.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import crandn, hermitize

DISTORTION_TABLE = {1: 0.3634, 2: 0.1175, 3: 0.03454, 4: 0.009497, 5: 0.002499}


def distortion_factor(bits):
    """Distortion factor for a b-bit converter; ``None`` or "ideal" gives 0."""
    if bits is None or bits == "ideal":
        return 0.0
    bits = int(bits)
    if bits < 1:
        raise ValueError(f"converter resolution must be >= 1 bit, got {bits}")
    if bits in DISTORTION_TABLE:
        return DISTORTION_TABLE[bits]
    return math.sqrt(3.0) * math.pi * 2.0 ** (-2 * bits - 1)


@dataclass(frozen=True)
class QuantizerConfig:
    b_da: int | None = None
    b_ad: int | None = None
    rho_da: float = field(init=False)
    rho_ad: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rho_da", distortion_factor(self.b_da))
        object.__setattr__(self, "rho_ad", distortion_factor(self.b_ad))

    @classmethod
    def ideal(cls):
        return cls(b_da=None, b_ad=None)


def dac_apply(x, rho_da, cov_diag_x, rng):
    """Pass ``x`` through the DAC model; ``cov_diag_x`` is diag(E[x x^H])."""
    cov_diag_x = np.asarray(cov_diag_x, dtype=float)
    if np.any(cov_diag_x < 0):
        raise ValueError("covariance diagonal must be non-negative")
    if rho_da == 0.0:
        return np.asarray(x, dtype=complex)
    noise = crandn(rng, np.shape(x), rho_da * cov_diag_x)
    return np.sqrt(1.0 - rho_da) * x + noise


def adc_apply(x, rho_ad, cov_diag_x, rng):
    """Pass ``x`` through the ADC model; ``cov_diag_x`` is diag(E[x x^H])."""
    cov_diag_x = np.asarray(cov_diag_x, dtype=float)
    if np.any(cov_diag_x < 0):
        raise ValueError("covariance diagonal must be non-negative")
    if rho_ad == 0.0:
        return np.asarray(x, dtype=complex)
    noise = crandn(rng, np.shape(x), rho_ad * (1.0 - rho_ad) * cov_diag_x)
    return (1.0 - rho_ad) * x + noise


def _moment_matrix(stats, l, p_ddot, subset=None):
    """Sum_i p̈_i (h_bar h_bar^H + R) at AP l, optionally over a UE subset."""
    idx = np.arange(stats.K) if subset is None else np.asarray(sorted(subset), dtype=int)
    h = stats.h_bar[idx, l]                       # (|S|, N)
    m = np.einsum("i,in,im->nm", p_ddot[idx], h, np.conj(h))
    m += np.einsum("i,inm->nm", p_ddot[idx], stats.R[idx, l])
    return hermitize(m)


def received_noise_covariance(l, stats, p_ddot, q, sigma2, subset=None):
    """Covariance of the effective receive noise at AP l.

    Collects the UE-side DAC distortion forwarded through the channel, the
    AP-side ADC distortion, and thermal noise. With ``subset`` the channel
    sums run over that UE set only (used by the partial MMSE detectors).
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    n_ant = stats.N
    m = _moment_matrix(stats, l, p_ddot, subset)
    one_ad = 1.0 - q.rho_ad
    cov = (one_ad**2 * q.rho_da / (1.0 - q.rho_da)) * m
    cov += np.diag((q.rho_ad * one_ad / (1.0 - q.rho_da)) * np.real(np.diag(m)))
    cov += one_ad * sigma2 * np.eye(n_ant)
    return hermitize(cov)
