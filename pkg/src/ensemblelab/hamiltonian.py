"""Hamiltonian models H(t, x, p) and the velocity/momentum Legendre pair.

Points and momenta are arrays whose last axis is the spatial dimension; a
bare scalar is read as a 1D point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import kernels
from .errors import VariantError
from .numerics import ScalarField, VectorField, grad_log


@dataclass(frozen=True)
class Polynomial:
    """V(x) = sum over axes d of sum_j coeffs[j] * x_d**j."""

    coeffs: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs) or (0.0,)
        if not all(np.isfinite(c)):
            raise ValueError("potential coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls) -> Polynomial:
        return cls((0.0,))

    @classmethod
    def harmonic(cls, k: float = 1.0) -> Polynomial:
        return cls((0.0, 0.0, 0.5 * k))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs)

    def __call__(self, x) -> np.ndarray:
        x = _vec(x)
        return kernels.poly_v(self.array, x).sum(axis=-1)

    def grad(self, x) -> np.ndarray:
        return kernels.poly_dv(self.array, _vec(x))

    def to_text(self) -> str:
        return ",".join(repr(c) for c in self.coeffs)


@dataclass(frozen=True)
class Classical:
    mass: float = 1.0
    potential: Polynomial = field(default_factory=Polynomial.zero)

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class Relativistic:
    mass: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.c > 0):
            raise ValueError("mass and light speed must be positive")


@dataclass(frozen=True)
class EffectiveStochastic:
    """Relativistic particle whose mass picks up the stochastic momentum.

    ``lam`` scales the stochastic momentum ``lam * hbar * grad(ln rho)``;
    0.5 is the value under which the non-relativistic ensemble reduces to
    the linear wave equation, 1.0 gives ``hbar * grad(ln rho)``.
    """

    mass: float = 1.0
    c: float = 1.0
    hbar: float = 1.0
    lam: float = 0.5

    def __post_init__(self):
        if not (self.mass > 0 and self.c > 0 and self.hbar > 0):
            raise ValueError("mass, light speed and hbar must be positive")
        if self.lam < 0:
            raise ValueError("stochastic coefficient must be non-negative")


HamiltonianModel = Union[Classical, Relativistic, EffectiveStochastic]


def _vec(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p[None] if p.ndim == 0 else p


def _scalar_out(out: np.ndarray):
    return float(out) if np.ndim(out) == 0 else out


def _point_model(model) -> None:
    if isinstance(model, EffectiveStochastic):
        raise VariantError("EffectiveStochastic needs a density field; use eval_effective")
    if not isinstance(model, (Classical, Relativistic)):
        raise VariantError(f"unsupported Hamiltonian variant {type(model).__name__}")


def eval_H(model: HamiltonianModel, t: float, x, p):
    _point_model(model)
    p = _vec(p)
    p2 = np.sum(p * p, axis=-1)
    if isinstance(model, Classical):
        out = 0.5 * p2 / model.mass + model.potential(np.broadcast_to(_vec(x), p.shape))
    else:
        out = np.sqrt(model.mass ** 2 * model.c ** 4 + p2 * model.c ** 2)
    return _scalar_out(out)


def velocity_from_momentum(model: HamiltonianModel, t: float, x, p):
    """dH/dp, analytic."""
    _point_model(model)
    scalar = np.ndim(p) == 0
    p = _vec(p)
    if isinstance(model, Classical):
        v = p / model.mass
    else:
        c = model.c
        e = np.sqrt(model.mass ** 2 * c ** 4 + np.sum(p * p, axis=-1, keepdims=True) * c ** 2)
        v = p * c ** 2 / e
    return float(v[0]) if scalar else v


def momentum_from_velocity(model: HamiltonianModel, t: float, x, v):
    """Inverse Legendre map p = dL/dv."""
    _point_model(model)
    scalar = np.ndim(v) == 0
    v = _vec(v)
    if isinstance(model, Classical):
        p = model.mass * v
    else:
        beta2 = np.sum(v * v, axis=-1, keepdims=True) / model.c ** 2
        if np.any(beta2 >= 1.0):
            raise ValueError("speed must stay below c")
        p = model.mass * v / np.sqrt(1.0 - beta2)
    return float(p[0]) if scalar else p


def force(model: HamiltonianModel, t: float, x, p) -> np.ndarray:
    """-dH/dx."""
    _point_model(model)
    x = _vec(x)
    if isinstance(model, Classical):
        return -model.potential.grad(x)
    return np.zeros_like(x)


def stochastic_momentum_components(rho: np.ndarray, grid, lam: float, hbar: float) -> tuple[np.ndarray, ...]:
    return tuple(lam * hbar * g for g in grad_log(rho, grid))


def eval_effective(model: EffectiveStochastic, p: VectorField, rho: ScalarField) -> ScalarField:
    """sqrt(m^2 c^4 + p^2 c^2 + c^2 |p_st|^2) with p_st = lam*hbar*grad(ln rho)."""
    if not isinstance(model, EffectiveStochastic):
        raise VariantError("eval_effective needs an EffectiveStochastic model")
    if p.grid != rho.grid:
        raise ValueError("momentum and density live on different grids")
    pst = stochastic_momentum_components(rho.values, rho.grid, model.lam, model.hbar)
    c = model.c
    pst2 = sum(q * q for q in pst)
    return ScalarField(rho.grid, np.sqrt(model.mass ** 2 * c ** 4 + p.norm2() * c ** 2 + pst2 * c ** 2))


def model_kind(model) -> int:
    _point_model(model)
    return kernels.CLASSICAL if isinstance(model, Classical) else kernels.RELATIVISTIC


def model_potential(model) -> np.ndarray:
    return model.potential.array if isinstance(model, Classical) else np.array([0.0])


def model_light_speed(model) -> float:
    return getattr(model, "c", 1.0)
