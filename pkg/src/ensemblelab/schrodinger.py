"""Crank-Nicolson steppers for the linear and the b0-nonlinear wave equations in 1D.

    i b0 psi_t = -(b0^2/2m) psi_xx + m c^2 psi + W[rho] psi
    W = ((b0^2 - 4 lam^2 hbar^2) / 2m) * lap(sqrt rho) / sqrt rho

With b0 = hbar and lam = 1/2, W vanishes and this is the linear equation.
The rest-mass term is applied as the exact phase exp(-i m c^2 dt / b0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DensityError, FieldError
from .numerics import DENSITY_FLOOR, Grid, ScalarField, integrate_array, sqrt_laplacian_ratio
from .psirep import WaveField, reconstruct_rho_p, stochastic_momentum


@dataclass(frozen=True)
class WaveSolverConfig:
    m: float = 1.0
    hbar: float = 1.0
    c: float = 1.0
    b0: float = 1.0
    lam: float = 0.5
    include_rest_mass: bool = False
    dt: float = 1e-3
    scheme: str = "crank-nicolson"

    def __post_init__(self):
        if not (self.m > 0 and self.hbar > 0 and self.c > 0 and self.dt > 0):
            raise ValueError("m, hbar, c and dt must be positive")
        if self.b0 == 0:
            raise ValueError("b0 must be nonzero")
        if self.scheme != "crank-nicolson":
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def stability_ratio(self, grid: Grid) -> float:
        return self.hbar * self.dt / (2.0 * self.m * grid.h ** 2)


def _check(psi: WaveField) -> None:
    if psi.k != 1:
        raise FieldError("wave solvers take single-component fields")
    if psi.grid.dim != 1:
        raise FieldError("wave solvers work on 1D grids")


def cyclic_tridiag_solve(sub: complex, diag: np.ndarray, sup: complex, rhs: np.ndarray) -> np.ndarray:
    """Periodic tridiagonal system with constant off-diagonals (Sherman-Morrison)."""
    n = diag.size
    gamma = -diag[0]
    b = diag.astype(complex).copy()
    b[0] -= gamma
    b[-1] -= sub * sup / gamma
    lo = np.full(n, sub, dtype=complex)
    up = np.full(n, sup, dtype=complex)
    x = kernels.tridiag_solve(lo, b, up, rhs.astype(complex))
    u = np.zeros(n, dtype=complex)
    u[0], u[-1] = gamma, sup
    z = kernels.tridiag_solve(lo, b, up, u)
    fac = (x[0] + sub * x[-1] / gamma) / (1.0 + z[0] + sub * z[-1] / gamma)
    return x - fac * z


def _cn_solve(v: np.ndarray, grid: Grid, a_coef: float, b0: float, dt: float, w: np.ndarray | None) -> np.ndarray:
    """(1 + i dt H / 2 b0) out = (1 - i dt H / 2 b0) v with H = -a_coef d_xx + w."""
    r = dt * a_coef / (2.0 * b0 * grid.h ** 2)
    wd = np.zeros(v.shape) if w is None else 0.5 * dt * w / b0
    if grid.periodic:
        lap = np.roll(v, -1) - 2.0 * v + np.roll(v, 1)
        rhs = v + 1j * r * lap - 1j * wd * v
        return cyclic_tridiag_solve(-1j * r, 1.0 + 2j * r + 1j * wd, -1j * r, rhs)
    out = np.zeros_like(v)
    inner = v[1:-1]
    lap = v[2:] - 2.0 * inner + v[:-2]
    rhs = inner + 1j * r * lap - 1j * wd[1:-1] * inner
    n = inner.size
    off = np.full(n, -1j * r, dtype=complex)
    out[1:-1] = kernels.tridiag_solve(off, 1.0 + 2j * r + 1j * wd[1:-1], off, rhs)
    return out


def _rest_phase(cfg: WaveSolverConfig, b0: float) -> complex:
    return np.exp(-1j * cfg.m * cfg.c ** 2 * cfg.dt / b0) if cfg.include_rest_mass else 1.0


def step_linear(psi: WaveField, cfg: WaveSolverConfig) -> WaveField:
    """One step of i hbar psi_t = -(hbar^2/2m) psi_xx (+ m c^2 psi)."""
    _check(psi)
    v = _cn_solve(psi.component, psi.grid, cfg.hbar ** 2 / (2 * cfg.m), cfg.hbar, cfg.dt, None)
    return WaveField(psi.grid, v * _rest_phase(cfg, cfg.hbar))


def nonlinear_potential(rho: np.ndarray, grid: Grid, cfg: WaveSolverConfig) -> np.ndarray:
    """W from varying (b0^2 - 4 lam^2 hbar^2)(grad rho)^2 / (8 rho m) with respect to rho."""
    coef = (cfg.b0 ** 2 - 4.0 * cfg.lam ** 2 * cfg.hbar ** 2) / (2.0 * cfg.m)
    if coef == 0.0:
        return np.zeros(rho.shape)
    return coef * sqrt_laplacian_ratio(rho, grid)


def _density(v: np.ndarray) -> np.ndarray:
    rho = v.real ** 2 + v.imag ** 2
    if rho.max() <= 0:
        raise DensityError("wave field vanished")
    return rho


def step_nonlinear(psi: WaveField, cfg: WaveSolverConfig) -> WaveField:
    """One predictor-corrector step; W is held at a midpoint estimate inside each implicit solve."""
    _check(psi)
    grid, b0 = psi.grid, cfg.b0
    a = b0 * b0 / (2 * cfg.m)
    v = psi.component
    w0 = nonlinear_potential(_density(v), grid, cfg)
    if not np.any(w0):
        out = _cn_solve(v, grid, a, b0, cfg.dt, None)
    else:
        pred = _cn_solve(v, grid, a, b0, cfg.dt, w0)
        w1 = nonlinear_potential(_density(pred), grid, cfg)
        out = _cn_solve(v, grid, a, b0, cfg.dt, 0.5 * (w0 + w1))
    return WaveField(grid, out * _rest_phase(cfg, b0))


# --------------------------------------------------------------------------
# runs and initial data
# --------------------------------------------------------------------------

def gaussian_packet(grid: Grid, sigma0: float = 1.0, x0: float = 0.0, k0: float = 0.0) -> WaveField:
    """Normalized packet whose density has standard deviation sigma0."""
    x = grid.x
    amp = (2 * np.pi * sigma0 ** 2) ** -0.25 * np.exp(-((x - x0) ** 2) / (4 * sigma0 ** 2))
    return WaveField(grid, amp * np.exp(1j * k0 * x))


@dataclass(frozen=True, eq=False)
class WaveRun:
    times: np.ndarray
    fields: list = field(default_factory=list)
    cfg: WaveSolverConfig | None = None
    nonlinear: bool = False

    @property
    def final(self) -> WaveField:
        return self.fields[-1]

    def norm_drift(self) -> float:
        n0 = self.fields[0].norm()
        return max(abs(f.norm() - n0) for f in self.fields)


def evolve(psi: WaveField, cfg: WaveSolverConfig, n_steps: int, save_every: int | None = None,
           nonlinear: bool = False) -> WaveRun:
    stepper = step_nonlinear if nonlinear else step_linear
    save_every = save_every or n_steps
    times, fields = [0.0], [psi]
    cur = psi
    for n in range(1, n_steps + 1):
        cur = stepper(cur, cfg)
        if n % save_every == 0 or n == n_steps:
            if times[-1] != n * cfg.dt:
                times.append(n * cfg.dt)
                fields.append(cur)
    return WaveRun(np.array(times), fields, cfg, nonlinear)


def rms_width(rho: np.ndarray, grid: Grid) -> float:
    x = grid.x
    mass = integrate_array(rho, grid)
    mean = integrate_array(rho * x, grid) / mass
    return float(np.sqrt(integrate_array(rho * (x - mean) ** 2, grid) / mass))


def free_width(t, sigma0: float = 1.0, hbar: float = 1.0, m: float = 1.0):
    return np.sqrt(sigma0 ** 2 + (hbar * np.asarray(t) / (2 * m * sigma0)) ** 2)


@dataclass(frozen=True)
class Indeterminacy:
    p_predicted: float
    p_measured: float

    @property
    def ratio(self) -> float:
        return self.p_measured / self.p_predicted


def uncertainty_estimate(rho0: ScalarField, run: WaveRun) -> Indeterminacy:
    """hbar / (2 dx) against the late-time r.m.s. of regular plus stochastic momentum."""
    cfg = run.cfg or WaveSolverConfig()
    grid = rho0.grid
    dx0 = rms_width(rho0.values, grid)
    last = run.final
    rho = last.rho()
    if rms_width(rho, grid) < 3.0 * dx0:
        raise ValueError("run too short: width has not reached three times its initial value")
    b0 = cfg.b0 if run.nonlinear else cfg.hbar
    rho_f, p = reconstruct_rho_p(last, b0)
    pst = stochastic_momentum(rho_f, cfg.lam, cfg.hbar)
    live = rho > DENSITY_FLOOR * rho.max()
    w = np.where(live, rho, 0.0)
    p2 = p.norm2() + pst.norm2()
    p_meas = np.sqrt(integrate_array(w * p2, grid) / integrate_array(w, grid))
    return Indeterminacy(cfg.hbar / (2.0 * dx0), float(p_meas))
