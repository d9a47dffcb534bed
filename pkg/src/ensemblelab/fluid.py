"""Grid solvers for the pure-ensemble fluid in Clebsch potentials, and the
Hamilton-Jacobi equation.

The fluid evolves (rho, phi, xi) on a 1D grid and derives P from them:

    xi_t  = -v xi_x
    phi_t = -(H + U_q) / b0 + g(xi) v xi_x
    rho_t = -(rho v)_x                     (staggered, conservative)

with v = dH/dp = P/m. The quantum term U_q comes from varying the
stochastic energy  lam^2 hbar^2 (grad rho)^2 / (2 m rho)  with respect to rho:

    U_q = -(4 lam^2 hbar^2 / 2m) lap(sqrt rho) / sqrt rho
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import kernels
from .clebsch import ClebschData, LabelMap, clebsch_components, fit_g_from_initial, label_period, vorticity
from .errors import CausticError, CFLError, FieldError, HistoryError, NegativeDensityError, VariantError
from .hamiltonian import Classical, Relativistic, model_kind, model_light_speed, model_potential
from .numerics import (Grid, ScalarField, VectorField, diff, integrate_array, label_diff, sqrt_laplacian_ratio,
                       wrap_increment)

CFL_LIMIT = 0.5
NEGATIVE_TOL = 1e-12   # relative to max(rho)


@dataclass(frozen=True, eq=False)
class FluidState:
    t: float
    rho: ScalarField
    phi: ScalarField
    xi: LabelMap
    clebsch: ClebschData

    def __post_init__(self):
        if not (self.rho.grid == self.phi.grid == self.xi.grid):
            raise FieldError("rho, phi and xi live on different grids")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    @cached_property
    def P(self) -> VectorField:
        return VectorField(self.grid, tuple(clebsch_components(self.phi.values, self.xi.arrays(),
                                                               self.clebsch, self.grid)))

    def mass(self) -> float:
        return integrate_array(self.rho.values, self.grid)

    def scaled(self, a: float) -> FluidState:
        return replace(self, rho=self.rho.scaled(a))


def initial_state(rho0: ScalarField, p0: VectorField | None = None, b0: float = 1.0,
                  clebsch: ClebschData | None = None) -> FluidState:
    """Standard labelling xi(0, x) = x, phi(0, x) = 0 and g fitted to p0."""
    grid = rho0.grid
    if clebsch is None:
        clebsch = ClebschData.zero(grid.dim, b0) if p0 is None else fit_g_from_initial(p0, b0)
    return FluidState(0.0, rho0, ScalarField.constant(grid, 0.0), LabelMap.standard(grid), clebsch)


@dataclass(frozen=True)
class HJState:
    t: float
    Phi: ScalarField


# --------------------------------------------------------------------------
# fluid right-hand side
# --------------------------------------------------------------------------

def _classical_1d(model, grid: Grid) -> Classical:
    if not isinstance(model, Classical):
        raise VariantError("the fluid solver is non-relativistic; pass a Classical model")
    if grid.dim != 1:
        raise FieldError("the fluid solver works on 1D grids")
    return model


def quantum_potential(rho: np.ndarray, grid: Grid, m: float, hbar: float, lam: float) -> np.ndarray:
    return -(4.0 * lam * lam * hbar * hbar / (2.0 * m)) * sqrt_laplacian_ratio(rho, grid)


def _half_momentum(phi, xi, data: ClebschData, grid: Grid):
    """b0 (phi_x + g(xi) xi_x) at the faces i+1/2 (periodic: n faces, clamped: n-1)."""
    h = grid.h
    if grid.periodic:
        dphi = np.roll(phi, -1) - phi
        dxi = wrap_increment(np.roll(xi, -1) - xi, grid.lengths[0])
        xi_mid = xi + 0.5 * dxi
    else:
        dphi = np.diff(phi)
        dxi = np.diff(xi)
        xi_mid = 0.5 * (xi[1:] + xi[:-1])
    g = data.eval_g([xi_mid])[0]
    return data.b0 * (dphi + g * dxi) / h


def mass_flux_divergence(rho, phi, xi, data: ClebschData, grid: Grid, m: float, p_node=None) -> np.ndarray:
    """(rho v)_x with face fluxes; clamped edges use half cells closed by rho v at the node."""
    h = grid.h
    ph = _half_momentum(phi, xi, data, grid)
    if grid.periodic:
        flux = 0.5 * (rho + np.roll(rho, -1)) * ph / m
        return (flux - np.roll(flux, 1)) / h
    flux = 0.5 * (rho[1:] + rho[:-1]) * ph / m
    out = np.empty_like(rho)
    out[1:-1] = (flux[1:] - flux[:-1]) / h
    p_node = clebsch_components(phi, [xi], data, grid)[0] if p_node is None else p_node
    out[0] = (flux[0] - rho[0] * p_node[0] / m) / (0.5 * h)
    out[-1] = (rho[-1] * p_node[-1] / m - flux[-1]) / (0.5 * h)
    return out


@dataclass(frozen=True)
class FluidParams:
    quantum: bool = False
    hbar: float = 1.0
    lam: float = 0.5


def fluid_rhs(t, rho, phi, xi, data: ClebschData, grid: Grid, model: Classical, prm: FluidParams):
    m = model.mass
    h = grid.h
    p = clebsch_components(phi, [xi], data, grid)[0]
    v = p / m
    xi_x = label_diff(xi, h, 0, label_period(grid, 0))
    ham = 0.5 * p * p / m + model.potential(grid.x[:, None])
    if prm.quantum:
        ham = ham + quantum_potential(rho, grid, m, prm.hbar, prm.lam)
    g = data.eval_g([xi])[0]
    xi_t = -v * xi_x
    phi_t = -ham / data.b0 - g * xi_t
    rho_t = -mass_flux_divergence(rho, phi, xi, data, grid, m, p)
    return rho_t, phi_t, xi_t


def step_fluid(state: FluidState, model, dt: float, quantum: bool = False, hbar: float = 1.0,
               lam: float = 0.5) -> FluidState:
    """One classical RK4 step of the potentials-first fluid system."""
    grid = state.grid
    model = _classical_1d(model, grid)
    if not dt > 0:
        raise ValueError("dt must be positive")
    prm = FluidParams(quantum, hbar, lam)
    data = state.clebsch
    rho, phi, xi = state.rho.values, state.phi.values, state.xi.xi[0].values
    p = state.P.components[0]
    h = grid.h
    cfl = dt * np.max(np.abs(p)) / model.mass / h
    if cfl >= CFL_LIMIT:
        raise CFLError(f"t={state.t:.6g}: CFL number {cfl:.3g} >= {CFL_LIMIT}")
    grad_p = np.max(np.abs(diff(p, h, 0, grid.periodic)))
    if grad_p > 1.0 / (10.0 * h):
        raise CausticError(f"t={state.t:.6g}: |dP/dx| = {grad_p:.3g} exceeds 1/(10h); caustic ahead")

    def f(tt, y):
        return np.stack(fluid_rhs(tt, y[0], y[1], y[2], data, grid, model, prm))

    y = np.stack([rho, phi, xi])
    t = state.t
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    top = np.max(y[0])
    if top <= 0 or np.min(y[0]) < -NEGATIVE_TOL * top:
        raise NegativeDensityError(f"t={t + dt:.6g}: density {np.min(y[0]):.3e} below -{NEGATIVE_TOL:g} * max")
    return FluidState(t + dt, ScalarField(grid, y[0]), ScalarField(grid, y[1]),
                      LabelMap((ScalarField(grid, y[2]),)), data)


def run_fluid(state: FluidState, model, dt: float, n_steps: int, quantum: bool = False,
              hbar: float = 1.0, lam: float = 0.5, save_every: int | None = None) -> list[FluidState]:
    save_every = save_every or n_steps
    out = [state]
    for n in range(1, n_steps + 1):
        state = step_fluid(state, model, dt, quantum, hbar, lam)
        if n % save_every == 0 or n == n_steps:
            out.append(state)
    return out


# --------------------------------------------------------------------------
# Hamilton-Jacobi
# --------------------------------------------------------------------------

def _pad(phi: np.ndarray, periodic: bool) -> np.ndarray:
    if periodic:
        return np.concatenate([phi[-1:], phi, phi[:1]])
    left = 3.0 * phi[0] - 3.0 * phi[1] + phi[2]
    right = 3.0 * phi[-1] - 3.0 * phi[-2] + phi[-3]
    return np.concatenate([[left], phi, [right]])


def _hj_speed(model, p: np.ndarray) -> np.ndarray:
    if isinstance(model, Classical):
        return np.abs(p) / model.mass
    c = model.c
    return np.abs(p) * c * c / np.sqrt(model.mass ** 2 * c ** 4 + p * p * c * c)


def step_hj(state: HJState, model, dt: float) -> HJState:
    """Forward Euler with the local Lax-Friedrichs numerical Hamiltonian."""
    if not isinstance(model, (Classical, Relativistic)):
        raise VariantError("step_hj supports Classical and Relativistic models")
    grid = state.Phi.grid
    if grid.dim != 1:
        raise FieldError("step_hj works on 1D grids")
    if not dt > 0:
        raise ValueError("dt must be positive")
    padded = _pad(np.asarray(state.Phi.values), grid.periodic)
    h = grid.h
    slopes = np.diff(padded) / h
    cfl = dt * np.max(_hj_speed(model, slopes)) / h
    if cfl >= CFL_LIMIT:
        raise CFLError(f"t={state.t:.6g}: CFL number {cfl:.3g} >= {CFL_LIMIT}")
    flux = kernels.hj_flux(padded, grid.x, h, model_kind(model), float(model.mass),
                           float(model_light_speed(model)), model_potential(model))
    return HJState(state.t + dt, ScalarField(grid, state.Phi.values - dt * flux))


def run_hj(state: HJState, model, dt: float, n_steps: int) -> HJState:
    for _ in range(n_steps):
        state = step_hj(state, model, dt)
    return state


def hj_gradient(state: HJState) -> np.ndarray:
    g = state.Phi.grid
    return diff(state.Phi.values, g.h, 0, g.periodic)


# --------------------------------------------------------------------------
# residuals
# --------------------------------------------------------------------------

RESIDUAL_FAMILIES = ("hamilton_jacobi", "continuity", "lin", "lin_vorticity", "euler")


@dataclass(frozen=True)
class ResidualNorms:
    max: float
    l2: float


@dataclass(frozen=True)
class ResidualTable:
    rows: dict[str, ResidualNorms] = field(default_factory=dict)

    def __getitem__(self, key: str) -> ResidualNorms:
        return self.rows[key]

    def to_text(self) -> str:
        lines = [f"{'family':<16} {'max':>12} {'l2':>12}"]
        for k, r in self.rows.items():
            lines.append(f"{k:<16} {r.max:12.4e} {r.l2:12.4e}")
        return "\n".join(lines)


def residual_report(history, model, quantum: bool = False, hbar: float = 1.0, lam: float = 0.5) -> ResidualTable:
    """All five residual families on interior levels and nodes of the slab.

    Spatial operators are the solver's own; time derivatives are central
    differences over the stored levels.
    """
    if len(history) < 3:
        raise HistoryError("need at least 3 time levels")
    grid = history[0].grid
    model = _classical_1d(model, grid)
    m = model.mass
    times = np.array([s.t for s in history])
    if np.any(np.diff(times) <= 0):
        raise HistoryError("history times must increase")
    data = history[0].clebsch
    rho = np.stack([s.rho.values for s in history])
    phi = np.stack([s.phi.values for s in history])
    xi = np.stack([s.xi.xi[0].values for s in history])
    p = np.stack([s.P.components[0] for s in history])

    def dt_central(a):
        return np.gradient(a, times, axis=0)[1:-1]

    rho_t, phi_t, xi_t, mom_t = dt_central(rho), dt_central(phi), dt_central(xi), dt_central(rho * p)
    h = grid.h
    inner = slice(None) if grid.periodic else slice(1, -1)
    res = {k: [] for k in RESIDUAL_FAMILIES}
    x = grid.x
    for n in range(1, len(history) - 1):
        r, ph, xn, pn = rho[n], phi[n], xi[n], p[n]
        v = pn / m
        g = data.eval_g([xn])[0]
        ham = 0.5 * pn * pn / m + model.potential(x[:, None])
        uq = quantum_potential(r, grid, m, hbar, lam) if quantum else 0.0
        xi_x = label_diff(xn, h, 0, label_period(grid, 0))
        j = n - 1
        res["hamilton_jacobi"].append((data.b0 * (phi_t[j] + g * xi_t[j]) + ham + uq)[inner])
        res["continuity"].append((rho_t[j] + mass_flux_divergence(r, ph, xn, data, grid, m, pn))[inner])
        lin = xi_t[j] + v * xi_x
        res["lin"].append(lin[inner])
        omega = vorticity(data, [float(xn[0])]).omega[0, 0]
        res["lin_vorticity"].append((omega * r * lin)[inner])
        force = model.potential.grad(x[:, None])[:, 0] + (diff(uq, h, 0, grid.periodic) if quantum else 0.0)
        euler = mom_t[j] + diff(r * pn * v, h, 0, grid.periodic) + r * force
        res["euler"].append(euler[inner])
    rows = {}
    for k, parts in res.items():
        a = np.stack(parts)
        rows[k] = ResidualNorms(float(np.max(np.abs(a))), float(np.sqrt(np.mean(a * a))))
    return ResidualTable(rows)


def fluid_csv_rows(state: FluidState) -> list[list[float]]:
    x = state.grid.x
    cols = [np.full(x.size, state.t), x, state.rho.values, state.phi.values,
            *[f.values for f in state.xi.xi], *state.P.components]
    return np.stack(cols, axis=1).tolist()


def fluid_csv_header(dim: int = 1) -> list[str]:
    return ["t", "x", "rho", "phi", "xi", "P"]
