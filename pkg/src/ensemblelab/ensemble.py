"""Trajectory-ensemble representation of a pure state.

Samples carry position, momentum and an immutable Lagrangian label (their
initial position). Densities come back onto a grid by Gaussian kernels.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DensityError, VariantError
from .hamiltonian import Classical, Relativistic, force, velocity_from_momentum
from .numerics import Grid, RngStream, ScalarField, VectorField, integrate_array, sample


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """N samples with equal weight 1/N; arrays have shape (N, dim)."""

    x: np.ndarray
    p: np.ndarray
    labels: np.ndarray
    t: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        x, p = np.atleast_2d(self.x), np.atleast_2d(self.p)
        labels = np.atleast_2d(self.labels)
        if x.shape[0] < 1:
            raise ValueError("ensemble needs at least one sample")
        if not (x.shape == p.shape == labels.shape):
            raise ValueError("x, p and labels must share shape (N, dim)")
        for a in (x, p, labels):
            if not np.all(np.isfinite(a)):
                raise ValueError("sample coordinates must be finite")
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "p", _readonly(p))
        # labels are shared, never copied after init, so identity checks hold
        object.__setattr__(self, "labels", labels if not labels.flags.writeable else _readonly(labels))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n, 1.0 / self.n)

    def advanced(self, x, p, dt) -> ParticleEnsemble:
        return ParticleEnsemble(x, p, self.labels, self.t + dt, self.seed)


def _sample_piecewise_linear(x: np.ndarray, rho: np.ndarray, u: np.ndarray, period: float) -> np.ndarray:
    """Exact inverse CDF of the piecewise-linear interpolant of rho."""
    if period > 0:
        x = np.append(x, x[0] + period)
        rho = np.append(rho, rho[0])
    h = np.diff(x)
    r0, r1 = rho[:-1], rho[1:]
    mass = 0.5 * (r0 + r1) * h
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    target = u * cdf[-1]
    cell = np.clip(np.searchsorted(cdf, target, side="right") - 1, 0, len(mass) - 1)
    # skip empty cells that searchsorted may land on at their left edge
    empty = mass[cell] <= 0
    while np.any(empty):
        cell[empty] = np.minimum(cell[empty] + 1, len(mass) - 1)
        empty = (mass[cell] <= 0) & (cell < len(mass) - 1)
    a, b, hc = r0[cell], r1[cell], h[cell]
    q = np.clip(target - cdf[cell], 0.0, mass[cell])
    # a*s + (b-a)*s^2/(2h) = q on s in [0, h]
    slope = (b - a) / hc
    disc = np.sqrt(np.maximum(a * a + 2.0 * slope * q, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(np.abs(slope) * hc > 1e-12 * np.maximum(a + b, 1e-300),
                     2.0 * q / (a + disc), q / np.where(a > 0, a, 1.0))
    s = np.clip(np.nan_to_num(s), 0.0, hc)
    out = x[cell] + s
    if period > 0:
        out = x[0] + np.mod(out - x[0], period)
    return out


def init_pure(rho0: ScalarField, P0: VectorField, n: int, rng: RngStream) -> ParticleEnsemble:
    grid = rho0.grid
    if grid.dim != 1:
        raise ValueError("init_pure samples 1D densities")
    if P0.grid != grid:
        raise ValueError("rho0 and P0 live on different grids")
    rho = np.asarray(rho0.values)
    if np.any(rho < 0):
        raise DensityError("initial density has negative values")
    if not np.any(rho > 0):
        raise DensityError("initial density is zero everywhere")
    if n < 1:
        raise ValueError("need at least one sample")
    u = rng.generator().random(n)
    period = grid.lengths[0] if grid.periodic else 0.0
    x = _sample_piecewise_linear(grid.x, rho, u, period)
    p = sample(P0.components[0], grid, x)
    xs = x[:, None]
    return ParticleEnsemble(xs, p[:, None], xs.copy(), 0.0, rng.seed)


def _midpoint_general(model, x, p, dt, tol=1e-14, max_iter=100):
    xn, pn = x.copy(), p.copy()
    for _ in range(max_iter):
        xm, pm = 0.5 * (x + xn), 0.5 * (p + pn)
        x_new = x + dt * velocity_from_momentum(model, 0.0, xm, pm)
        p_new = p + dt * force(model, 0.0, xm, pm)
        delta = max(np.max(np.abs(x_new - xn)), np.max(np.abs(p_new - pn)))
        xn, pn = x_new, p_new
        if delta <= tol * (1.0 + np.max(np.abs(xn))):
            break
    return xn, pn


def step(ens: ParticleEnsemble, model, dt: float, nsteps: int = 1) -> ParticleEnsemble:
    """Advance ``nsteps`` steps of size ``dt``: leapfrog for Classical, implicit midpoint for Relativistic."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if isinstance(model, Classical):
        x, p = kernels.leapfrog(np.ascontiguousarray(ens.x), np.ascontiguousarray(ens.p),
                                float(model.mass), model.potential.array, float(dt), int(nsteps))
    elif isinstance(model, Relativistic):
        x, p = np.array(ens.x), np.array(ens.p)
        for _ in range(nsteps):
            x, p = _midpoint_general(model, x, p, dt)
    else:
        raise VariantError(f"ensemble stepping supports Classical and Relativistic, got {type(model).__name__}")
    return ParticleEnsemble(x, p, ens.labels, ens.t + nsteps * dt, ens.seed)


def energies(ens: ParticleEnsemble, model) -> np.ndarray:
    from .hamiltonian import eval_H
    return np.asarray(eval_H(model, ens.t, ens.x, ens.p))


def density_estimate(ens: ParticleEnsemble, grid: Grid, bandwidth: float) -> ScalarField:
    if ens.n == 0:
        raise ValueError("empty ensemble")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if grid.dim != 1 or ens.dim != 1:
        raise ValueError("density_estimate works on 1D grids")
    period = grid.lengths[0] if grid.periodic else 0.0
    raw = kernels.kde(np.ascontiguousarray(ens.x[:, 0]), grid.lower[0], grid.h, grid.shape[0],
                      float(bandwidth), float(period))
    total = integrate_array(raw, grid)
    if total <= 0:
        raise DensityError("no sample mass falls on the grid")
    return ScalarField(grid, raw / total)


def to_csv_rows(ens: ParticleEnsemble) -> list[list[float]]:
    rows = []
    for i in range(ens.n):
        rows.append([ens.t, i, *ens.x[i], *ens.p[i], *ens.labels[i]])
    return rows


def csv_header(dim: int) -> list[str]:
    names = ["t", "id"]
    for prefix in ("x", "p", "xi"):
        names += [prefix] if dim == 1 else [f"{prefix}{d + 1}" for d in range(dim)]
    return names


def dump_csv(snapshots: list[ParticleEnsemble]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(snapshots[0].dim))
    for ens in snapshots:
        for row in to_csv_rows(ens):
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in
                        [float(row[0]), int(row[1]), *map(float, row[2:])]])
    return buf.getvalue()
