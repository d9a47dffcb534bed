"""Uniform grids, fields and second-order discrete calculus."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import DensityError, FieldError, GridError, StencilError

PERIODIC = "periodic"
CLAMPED = "clamped"
MIN_POINTS = 8
DENSITY_FLOOR = 1e-12  # relative to max(rho)


@dataclass(frozen=True)
class Grid:
    """Tensor-product uniform grid in 1 to 3 dimensions.

    Periodic axes carry ``n_points`` nodes on ``[lower, upper)``; clamped
    axes include both end points.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    shape: tuple[int, ...]
    boundary: str = CLAMPED

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        shape = tuple(int(v) for v in np.atleast_1d(self.shape))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "shape", shape)
        if not (len(lower) == len(upper) == len(shape)):
            raise GridError("lower, upper and shape must have equal length")
        if not 1 <= len(shape) <= 3:
            raise GridError(f"grid dimension must be 1..3, got {len(shape)}")
        if self.boundary not in (PERIODIC, CLAMPED):
            raise GridError(f"unknown boundary {self.boundary!r}")
        for lo, hi, n in zip(lower, upper, shape):
            if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
                raise GridError(f"need x_max > x_min, got [{lo}, {hi}]")
            if n < MIN_POINTS:
                raise GridError(f"need at least {MIN_POINTS} points per axis, got {n}")

    @classmethod
    def line(cls, x_min: float, x_max: float, n_points: int, boundary: str = CLAMPED) -> Grid:
        return cls((x_min,), (x_max,), (n_points,), boundary)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def periodic(self) -> bool:
        return self.boundary == PERIODIC

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        div = (lambda n: n) if self.periodic else (lambda n: n - 1)
        return tuple((hi - lo) / div(n) for lo, hi, n in zip(self.lower, self.upper, self.shape))

    @property
    def h(self) -> float:
        """Spacing of a 1D grid."""
        return self.spacing[0]

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(lo + h * np.arange(n) for lo, h, n in zip(self.lower, self.spacing, self.shape))

    @property
    def x(self) -> np.ndarray:
        """Node coordinates of a 1D grid."""
        return self.axes[0]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise FieldError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise FieldError("field values must be finite")
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> ScalarField:
        vals = fn(*grid.mesh())
        return cls(grid, np.broadcast_to(vals, grid.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> ScalarField:
        return cls(grid, np.full(grid.shape, float(value)))

    def scaled(self, a: float) -> ScalarField:
        return ScalarField(self.grid, a * self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    components: tuple[np.ndarray, ...] = field()

    def __post_init__(self):
        comps = tuple(np.asarray(c, dtype=float) for c in self.components)
        if len(comps) != self.grid.dim:
            raise FieldError(f"need {self.grid.dim} components, got {len(comps)}")
        for c in comps:
            if c.shape != self.grid.shape:
                raise FieldError(f"component shape {c.shape} does not match grid {self.grid.shape}")
            if not np.all(np.isfinite(c)):
                raise FieldError("vector components must be finite")
        object.__setattr__(self, "components", tuple(_frozen(c) for c in comps))

    def as_array(self) -> np.ndarray:
        return np.stack(self.components)

    def norm2(self) -> np.ndarray:
        return sum(c * c for c in self.components)


@dataclass(frozen=True)
class RngStream:
    """Seeded generator description; :meth:`generator` always restarts the stream."""

    seed: int
    algorithm: str = "PCG64"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if not hasattr(np.random, self.algorithm):
            raise ValueError(f"unknown bit generator {self.algorithm!r}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(getattr(np.random, self.algorithm)(int(self.seed)))


# --------------------------------------------------------------------------
# raw array stencils
# --------------------------------------------------------------------------

def diff(values: np.ndarray, h: float, axis: int = 0, periodic: bool = False) -> np.ndarray:
    """Second-order first derivative along one axis."""
    values = np.asarray(values)
    if periodic:
        if values.shape[axis] < 3:
            raise StencilError("periodic central difference needs 3 nodes")
        return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2.0 * h)
    if values.shape[axis] < 3:
        raise StencilError("one-sided second-order difference needs 3 nodes")
    return np.gradient(values, h, axis=axis, edge_order=2)


def label_diff(values: np.ndarray, h: float, axis: int = 0, period: float = 0.0) -> np.ndarray:
    """``diff`` for label fields; with ``period`` > 0 labels live on a circle of that length.

    Neighbour differences are wrapped into [-period/2, period/2), so the
    standard labelling xi = x has unit slope across the periodic seam.
    """
    if not period > 0:
        return diff(values, h, axis, False)
    d = np.roll(values, -1, axis) - np.roll(values, 1, axis)
    d = d - period * np.round(d / period)
    return d / (2.0 * h)


def wrap_increment(d: np.ndarray, period: float) -> np.ndarray:
    return d - period * np.round(d / period) if period > 0 else d


def diff2(values: np.ndarray, h: float, axis: int = 0, periodic: bool = False) -> np.ndarray:
    """Second-order second derivative along one axis."""
    v = np.moveaxis(np.asarray(values), axis, 0)
    if periodic:
        if v.shape[0] < 3:
            raise StencilError("periodic second difference needs 3 nodes")
        out = np.roll(v, -1, 0) - 2.0 * v + np.roll(v, 1, 0)
    else:
        if v.shape[0] < 4:
            raise StencilError("one-sided second difference needs 4 nodes")
        out = np.empty_like(v)
        out[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
        # 2 f0 - 5 f1 + 4 f2 - f3 written in differences so constants give exact zeros
        out[0] = 2.0 * (v[0] - v[1]) - 3.0 * (v[1] - v[2]) + (v[2] - v[3])
        out[-1] = 2.0 * (v[-1] - v[-2]) - 3.0 * (v[-2] - v[-3]) + (v[-3] - v[-4])
    return np.moveaxis(out / (h * h), 0, axis)


def gradient(f: ScalarField) -> VectorField:
    g = f.grid
    return VectorField(g, tuple(diff(f.values, g.spacing[a], a, g.periodic) for a in range(g.dim)))


def laplacian(f: ScalarField) -> ScalarField:
    g = f.grid
    return ScalarField(g, sum(diff2(f.values, g.spacing[a], a, g.periodic) for a in range(g.dim)))


def integrate_array(values: np.ndarray, grid: Grid) -> float:
    out = np.asarray(values)
    if grid.periodic:
        return float(out.sum() * np.prod(grid.spacing))
    for h in grid.spacing:
        out = np.trapezoid(out, dx=h, axis=0)
    return float(out)


def integrate(f: ScalarField) -> float:
    return integrate_array(f.values, f.grid)


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    return ScalarField(g, sum(diff(c, g.spacing[a], a, g.periodic) for a, c in enumerate(v.components)))


# --------------------------------------------------------------------------
# density helpers built on ratios of neighbouring values, so that rho -> a*rho
# leaves them bit-identical whenever a*rho is itself exact in floating point
# --------------------------------------------------------------------------

def floored_density(rho: np.ndarray, floor: float = DENSITY_FLOOR) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)):
        raise DensityError("density must be finite")
    top = rho.max()
    if top <= 0.0:
        raise DensityError("density is non-positive everywhere")
    if rho.min() < -floor * top:
        raise DensityError(f"negative density {rho.min():.3e} below floor")
    return np.maximum(rho, floor * top)


def _log_ratio_diff(v: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return np.log(np.roll(v, -1, 0) / np.roll(v, 1, 0)) / (2.0 * h)
    out = np.empty_like(v)
    out[1:-1] = np.log(v[2:] / v[:-2]) / (2.0 * h)
    out[0] = (3.0 * np.log(v[1] / v[0]) - np.log(v[2] / v[1])) / (2.0 * h)
    out[-1] = (3.0 * np.log(v[-1] / v[-2]) - np.log(v[-2] / v[-3])) / (2.0 * h)
    return out


def grad_log(rho: np.ndarray, grid: Grid) -> tuple[np.ndarray, ...]:
    """Components of grad(ln rho) from log-ratios of neighbours (rho floored)."""
    r = floored_density(rho)
    return tuple(
        np.moveaxis(_log_ratio_diff(np.moveaxis(r, a, 0), grid.spacing[a], grid.periodic), 0, a)
        for a in range(grid.dim)
    )


def _sqrt_lap_axis(v: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.sqrt(np.roll(v, -1, 0) / v) + np.sqrt(np.roll(v, 1, 0) / v) - 2.0) / (h * h)
    out = np.empty_like(v)
    out[1:-1] = (np.sqrt(v[2:] / v[1:-1]) + np.sqrt(v[:-2] / v[1:-1]) - 2.0) / (h * h)
    # ghost node from quadratic extrapolation of ln(rho): rho_g / rho_0 = (rho_0/rho_1)^3 (rho_2/rho_0)
    for e, i1, i2 in ((0, 1, 2), (-1, -2, -3)):
        r1 = v[i1] / v[e]
        ghost = np.sqrt((1.0 / r1) ** 3 * (v[i2] / v[e]))
        out[e] = (ghost + np.sqrt(r1) - 2.0) / (h * h)
    return out


def sqrt_laplacian_ratio(rho: np.ndarray, grid: Grid) -> np.ndarray:
    """lap(sqrt(rho)) / sqrt(rho) on a floored density."""
    r = floored_density(rho)
    return sum(
        np.moveaxis(_sqrt_lap_axis(np.moveaxis(r, a, 0), grid.spacing[a], grid.periodic), 0, a)
        for a in range(grid.dim)
    )


def sample(values: np.ndarray, grid: Grid, points: Sequence[float] | np.ndarray) -> np.ndarray:
    """Linear interpolation of 1D nodal values at arbitrary points."""
    x = grid.x
    points = np.asarray(points, dtype=float)
    if grid.periodic:
        return np.interp(points, x, values, period=grid.lengths[0])
    return np.interp(points, x, values)
