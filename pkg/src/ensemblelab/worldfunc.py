"""Minkowski world function and its distorted version.

sigma_M = (c^2 dt^2 - |dx|^2) / 2;  sigma = sigma_M + D(sigma_M) with
D = d above sigma0, 0 for non-timelike pairs, and a ramp (or step) between.
Defaults are CGS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HBAR_CGS = 1.0546e-27   # erg s
B_CGS = 1e-17           # g / cm
C_CGS = 3e10            # cm / s

RAMP = "ramp"
STEP = "step"


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        x = (x + (0.0, 0.0, 0.0))[:3] if len(x) < 3 else x
        if len(x) != 3:
            raise ValueError("spatial part needs at most 3 components")
        if not (np.isfinite(self.t) and all(np.isfinite(x))):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class DistortionParams:
    hbar: float = HBAR_CGS
    b: float = B_CGS
    c: float = C_CGS
    sigma0: float | None = None   # defaults to d
    band: str = RAMP

    def __post_init__(self):
        if not (self.hbar > 0 and self.b > 0 and self.c > 0):
            raise ValueError("hbar, b and c must be positive")
        if self.sigma0 is not None and not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if self.band not in (RAMP, STEP):
            raise ValueError(f"band must be {RAMP!r} or {STEP!r}")

    @property
    def d(self) -> float:
        return self.hbar / (2.0 * self.b * self.c)

    @property
    def s0(self) -> float:
        return self.d if self.sigma0 is None else self.sigma0


def sigma_minkowski(a: SpacetimePoint, b: SpacetimePoint, c_light: float = C_CGS) -> float:
    dt = a.t - b.t
    dx = np.subtract(a.x, b.x)
    return 0.5 * (c_light * c_light * dt * dt - float(dx @ dx))


def distortion(sigma_m, params: DistortionParams):
    """D(sigma_M); the band 0 < sigma_M <= sigma0 is a linear ramp or a step at sigma0."""
    s = np.asarray(sigma_m, dtype=float)
    d, s0 = params.d, params.s0
    if params.band == RAMP:
        band = d * s / s0
    else:
        band = np.zeros_like(s)
    out = np.where(s > s0, d, np.where(s <= 0, 0.0, band))
    return float(out) if out.ndim == 0 else out


def sigma_distorted(a: SpacetimePoint, b: SpacetimePoint, params: DistortionParams = DistortionParams()) -> float:
    sm = sigma_minkowski(a, b, params.c)
    return sm + distortion(sm, params)


def boost(p: SpacetimePoint, beta: float, c_light: float = C_CGS) -> SpacetimePoint:
    """Lorentz boost along the first spatial axis."""
    gamma = 1.0 / np.sqrt(1.0 - beta * beta)
    ct = c_light * p.t
    x1 = p.x[0]
    return SpacetimePoint(gamma * (ct - beta * x1) / c_light, (gamma * (x1 - beta * ct), p.x[1], p.x[2]))
