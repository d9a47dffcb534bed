"""Hot inner loops, each in a numba flavour and a numpy flavour.

The public names (``leapfrog``, ``kde``, ``tridiag_solve``, ``hj_flux``)
dispatch on :data:`ensemblelab._accel.USE_NUMBA`. Both flavours are always
importable so tests and ``benchmarks/bench_kernels.py`` can compare them.
"""

import numpy as np
from scipy.linalg import solve_banded

from ._accel import USE_NUMBA, njit

KDE_CUTOFF = 8.0  # kernel truncated at this many bandwidths

CLASSICAL = 0
RELATIVISTIC = 1


# --------------------------------------------------------------------------
# polynomial potential  V(x) = sum_d sum_j coeffs[j] * x_d**j
# --------------------------------------------------------------------------

@njit
def _poly_dv_scalar(coeffs, x):
    k = coeffs.shape[0] - 1
    if k < 1:
        return 0.0
    acc = k * coeffs[k]
    for j in range(k - 1, 0, -1):
        acc = acc * x + j * coeffs[j]
    return acc


def poly_dv(coeffs, x):
    """dV/dx of the per-axis polynomial, Horner order matching the kernels."""
    k = len(coeffs) - 1
    x = np.asarray(x, dtype=float)
    if k < 1:
        return np.zeros_like(x)
    acc = np.full_like(x, k * coeffs[k])
    for j in range(k - 1, 0, -1):
        acc = acc * x + j * coeffs[j]
    return acc


def poly_v(coeffs, x):
    x = np.asarray(x, dtype=float)
    acc = np.full_like(x, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * x + c
    return acc


# --------------------------------------------------------------------------
# leapfrog (kick-drift-kick) for H = p^2/2m + V(x)
# --------------------------------------------------------------------------

@njit
def leapfrog_numba(x, p, mass, coeffs, dt, nsteps):
    x = x.copy()
    p = p.copy()
    n, dim = x.shape
    half = 0.5 * dt
    for i in range(n):
        for d in range(dim):
            xi = x[i, d]
            pi = p[i, d]
            for _ in range(nsteps):
                pi = pi - half * _poly_dv_scalar(coeffs, xi)
                xi = xi + dt * pi / mass
                pi = pi - half * _poly_dv_scalar(coeffs, xi)
            x[i, d] = xi
            p[i, d] = pi
    return x, p


def leapfrog_numpy(x, p, mass, coeffs, dt, nsteps):
    x = np.array(x, dtype=float)
    p = np.array(p, dtype=float)
    half = 0.5 * dt
    for _ in range(nsteps):
        p = p - half * poly_dv(coeffs, x)
        x = x + dt * p / mass
        p = p - half * poly_dv(coeffs, x)
    return x, p


# --------------------------------------------------------------------------
# Gaussian kernel density on a uniform 1D grid
# --------------------------------------------------------------------------

@njit
def kde_numba(samples, x0, h, m, bandwidth, period):
    out = np.zeros(m)
    reach = KDE_CUTOFF * bandwidth
    norm = 1.0 / (np.sqrt(2.0 * np.pi) * bandwidth * samples.shape[0])
    for s in samples:
        lo = int(np.ceil((s - reach - x0) / h))
        hi = int(np.floor((s + reach - x0) / h))
        if period <= 0.0:
            lo = max(lo, 0)
            hi = min(hi, m - 1)
        for j in range(lo, hi + 1):
            d = (x0 + j * h - s) / bandwidth
            jj = j % m if period > 0.0 else j
            out[jj] += np.exp(-0.5 * d * d) * norm
    return out


def kde_numpy(samples, x0, h, m, bandwidth, period, chunk=4096):
    samples = np.asarray(samples, dtype=float)
    nodes = x0 + h * np.arange(m)
    out = np.zeros(m)
    norm = 1.0 / (np.sqrt(2.0 * np.pi) * bandwidth * samples.shape[0])
    for start in range(0, samples.shape[0], chunk):
        s = samples[start:start + chunk, None]
        d = nodes[None, :] - s
        if period > 0.0:
            d = d - period * np.round(d / period)
        z = d / bandwidth
        w = np.where(np.abs(z) <= KDE_CUTOFF, np.exp(-0.5 * z * z), 0.0)
        out += w.sum(axis=0) * norm
    return out


# --------------------------------------------------------------------------
# complex tridiagonal solve  (sub a, diag b, super c); a[0], c[-1] unused
# --------------------------------------------------------------------------

@njit
def tridiag_numba(a, b, c, d):
    n = b.shape[0]
    cp = np.empty(n, dtype=np.complex128)
    dp = np.empty(n, dtype=np.complex128)
    cp[0] = c[0] / b[0]
    dp[0] = d[0] / b[0]
    for i in range(1, n):
        den = b[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / den
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den
    out = np.empty(n, dtype=np.complex128)
    out[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
    return out


def tridiag_numpy(a, b, c, d):
    ab = np.zeros((3, b.shape[0]), dtype=np.complex128)
    ab[0, 1:] = c[:-1]
    ab[1] = b
    ab[2, :-1] = a[1:]
    return solve_banded((1, 1), ab, d, check_finite=False)


# --------------------------------------------------------------------------
# local Lax-Friedrichs numerical Hamiltonian on a padded 1D array
# --------------------------------------------------------------------------

@njit
def _h_and_hp(kind, m, c, p):
    if kind == CLASSICAL:
        return 0.5 * p * p / m, p / m
    e = np.sqrt(m * m * c ** 4 + p * p * c * c)
    return e, p * c * c / e


@njit
def hj_flux_numba(padded, x, h, kind, m, c, coeffs):
    n = padded.shape[0] - 2
    out = np.empty(n)
    for i in range(n):
        pm = (padded[i + 1] - padded[i]) / h
        pp = (padded[i + 2] - padded[i + 1]) / h
        hc, _ = _h_and_hp(kind, m, c, 0.5 * (pm + pp))
        _, am = _h_and_hp(kind, m, c, pm)
        _, ap = _h_and_hp(kind, m, c, pp)
        alpha = max(abs(am), abs(ap))
        v = 0.0
        if kind == CLASSICAL:
            acc = coeffs[coeffs.shape[0] - 1]
            for j in range(coeffs.shape[0] - 2, -1, -1):
                acc = acc * x[i] + coeffs[j]
            v = acc
        out[i] = hc + v - 0.5 * alpha * (pp - pm)
    return out


def _h_and_hp_numpy(kind, m, c, p):
    if kind == CLASSICAL:
        return 0.5 * p * p / m, p / m
    e = np.sqrt(m * m * c ** 4 + p * p * c * c)
    return e, p * c * c / e


def hj_flux_numpy(padded, x, h, kind, m, c, coeffs):
    pm = (padded[1:-1] - padded[:-2]) / h
    pp = (padded[2:] - padded[1:-1]) / h
    hc, _ = _h_and_hp_numpy(kind, m, c, 0.5 * (pm + pp))
    _, am = _h_and_hp_numpy(kind, m, c, pm)
    _, ap = _h_and_hp_numpy(kind, m, c, pp)
    alpha = np.maximum(np.abs(am), np.abs(ap))
    v = poly_v(coeffs, x) if kind == CLASSICAL else 0.0
    return hc + v - 0.5 * alpha * (pp - pm)


if USE_NUMBA:
    leapfrog = leapfrog_numba
    kde = kde_numba
    tridiag_solve = tridiag_numba
    hj_flux = hj_flux_numba
else:
    leapfrog = leapfrog_numpy
    kde = kde_numpy
    tridiag_solve = tridiag_numpy
    hj_flux = hj_flux_numpy
