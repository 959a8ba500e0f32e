"""Small numeric helpers shared across the simulator: dB conversion,
complex Gaussian sampling, and Hermitian linear algebra."""

import logging

import numpy as np

log = logging.getLogger(__name__)

# eigenvalues above -PSD_CLIP_FRACTION * trace are treated as quadrature noise
PSD_CLIP_FRACTION = 1e-10


class NotPositiveSemidefiniteError(ValueError):
    """Raised when a matrix required to be PSD has genuinely negative spectrum."""


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def crandn(rng, shape, var=1.0):
    """Circularly symmetric complex Gaussian samples, elementwise variance ``var``.

    ``var`` broadcasts against ``shape``; real and imaginary parts each carry
    half the variance.
    """
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def hermitize(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def hermitian_sqrt(r):
    """PSD square-root factor F with F @ F^H = R (eigh based, clip-tolerant)."""
    r = hermitize(r)
    w, v = np.linalg.eigh(r)
    floor = -PSD_CLIP_FRACTION * max(np.trace(r).real, np.finfo(float).tiny)
    if np.min(w) < floor:
        raise NotPositiveSemidefiniteError(
            f"min eigenvalue {np.min(w):.3e} below tolerance {floor:.3e}")
    return v * np.sqrt(np.clip(w, 0.0, None))


def solve_hermitian(a, b):
    """Solve a @ x = b for Hermitian ``a``.

    Cholesky first; if the matrix is numerically indefinite (rank-one
    subtractions at extreme SNR can do this), retry with a tiny trace-scaled
    ridge and log the event.
    """
    a = np.asarray(a)
    try:
        c = np.linalg.cholesky(a)
        y = np.linalg.solve(c, b)
        return np.linalg.solve(np.conj(c.T), y)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * np.trace(a).real / a.shape[-1]
        log.warning("hermitian solve fell back to ridge %.3e", jitter)
        return np.linalg.solve(a + jitter * np.eye(a.shape[-1]), b)
