"""Wave-function representation of a pure ensemble.

psi_a = sqrt(rho) exp(i phi) u_a(xi); (rho, p) are recovered from psi, and
every action of the ensemble is evaluated on discrete space-time slabs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .clebsch import ClebschData, LabelMap, _fd4
from .errors import FieldError, HistoryError, PhaseUnwrapError, VariantError
from .hamiltonian import Classical, eval_H
from .numerics import (DENSITY_FLOOR, Grid, ScalarField, VectorField, diff, floored_density, grad_log,
                       integrate_array)


@dataclass(frozen=True, eq=False)
class WaveField:
    """k complex components per node; ``values`` has shape (k, *grid.shape)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape == self.grid.shape:
            v = v[None]
        if v.shape[1:] != self.grid.shape or v.shape[0] < 1:
            raise FieldError(f"wave field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise FieldError("wave field must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def component(self) -> np.ndarray:
        """The single component of a k = 1 field."""
        if self.k != 1:
            raise FieldError("field has more than one component")
        return self.values[0]

    def rho(self) -> np.ndarray:
        return np.sum(self.values.real ** 2 + self.values.imag ** 2, axis=0)

    def norm(self) -> float:
        return integrate_array(self.rho(), self.grid)


@dataclass(frozen=True)
class UnitSpinorMap:
    """k complex functions u_a(*xi) with sum |u_a|^2 = 1."""

    u: tuple[Callable[..., np.ndarray], ...]

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(self.u))

    @property
    def k(self) -> int:
        return len(self.u)

    def __call__(self, *xi) -> np.ndarray:
        shape = np.broadcast(*[np.asarray(x) for x in xi]).shape
        return np.stack([np.broadcast_to(np.asarray(f(*xi), dtype=complex), shape) for f in self.u])

    @classmethod
    def trivial(cls) -> UnitSpinorMap:
        return cls((lambda *xi: np.ones(np.broadcast(*[np.asarray(x) for x in xi]).shape, complex),))

    @classmethod
    def phase(cls, phi_tilde: Callable[..., np.ndarray]) -> UnitSpinorMap:
        """k = 1, u = exp(i phi~(xi)); gives the potential case g = grad phi~."""
        return cls((lambda *xi: np.exp(1j * np.asarray(phi_tilde(*xi))),))

    @classmethod
    def rotational_example(cls) -> UnitSpinorMap:
        """u = (cos xi2 e^{i xi1}, sin xi2 e^{-i xi1}); g1 = cos 2 xi2, g2 = 0."""
        return cls((lambda x1, x2: np.cos(x2) * np.exp(1j * x1),
                    lambda x1, x2: np.sin(x2) * np.exp(-1j * x1)))


def rotational_example_g(b0: float = 1.0) -> ClebschData:
    return ClebschData(b0, (lambda x1, x2: np.cos(2 * x2), lambda x1, x2: 0.0 * x1))


def build_psi(rho: ScalarField, phi: ScalarField, labels: LabelMap, u: UnitSpinorMap) -> WaveField:
    if not (rho.grid == phi.grid == labels.grid):
        raise FieldError("rho, phi and labels live on different grids")
    if np.any(rho.values < 0):
        raise FieldError("density must be non-negative")
    uv = u(*labels.arrays())
    dev = np.max(np.abs(np.sum(np.abs(uv) ** 2, axis=0) - 1.0))
    if dev > 1e-8:
        raise FieldError(f"spinor map not normalized (deviation {dev:.2e})")
    amp = np.sqrt(rho.values) * np.exp(1j * phi.values)
    return WaveField(rho.grid, amp[None] * uv)


# --------------------------------------------------------------------------
# reconstruction
# --------------------------------------------------------------------------

def _phase_increment_diff(v: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    """d(arg v)/dx along axis 0 from phase increments of neighbours."""
    if periodic:
        return np.angle(np.roll(v, -1, 0) * np.conj(np.roll(v, 1, 0))) / (2.0 * h)
    out = np.empty(v.shape)
    out[1:-1] = np.angle(v[2:] * np.conj(v[:-2])) / (2.0 * h)
    a1 = np.angle(v[1] * np.conj(v[0]))
    a2 = np.angle(v[2] * np.conj(v[1]))
    out[0] = (3.0 * a1 - a2) / (2.0 * h)
    b1 = np.angle(v[-1] * np.conj(v[-2]))
    b2 = np.angle(v[-2] * np.conj(v[-3]))
    out[-1] = (3.0 * b1 - b2) / (2.0 * h)
    return out


def phase_gradient(values: np.ndarray, grid: Grid) -> list[np.ndarray]:
    return [np.moveaxis(_phase_increment_diff(np.moveaxis(values, a, 0), grid.spacing[a], grid.periodic), 0, a)
            for a in range(grid.dim)]


def vacuum_mask(rho: np.ndarray, floor: float = DENSITY_FLOOR) -> np.ndarray:
    top = np.max(rho)
    if top <= 0:
        return np.ones(rho.shape, dtype=bool)
    return rho < floor * top


def reconstruct_rho_p(psi: WaveField, b0: float) -> tuple[ScalarField, VectorField]:
    """rho = psi* psi and p = b0 Im(psi* grad psi) / rho; p = 0 on vacuum nodes.

    The phase derivative of each component is taken from phase increments
    between neighbours, so smooth phases are differenced exactly like
    ``diff`` differences the potential phi.
    """
    grid = psi.grid
    rho = psi.rho()
    vac = vacuum_mask(rho)
    safe = np.where(vac, 1.0, rho)
    p = [np.zeros(grid.shape) for _ in range(grid.dim)]
    for comp in psi.values:
        w = comp.real ** 2 + comp.imag ** 2
        for a, dth in enumerate(phase_gradient(comp, grid)):
            p[a] = p[a] + w * dth
    p = [np.where(vac, 0.0, b0 * c / safe) for c in p]
    return ScalarField(grid, rho), VectorField(grid, tuple(p))


# --------------------------------------------------------------------------
# spinor checks and the Q tensor
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpinorReport:
    g_residual: float
    norm_residual: float
    g_values: np.ndarray   # [probe, beta]

    def passed(self, tol: float = 1e-8) -> bool:
        return self.g_residual < tol and self.norm_residual < tol


def spinor_g(u: UnitSpinorMap, at: Sequence[float], step: float = 1e-3) -> np.ndarray:
    """g^b = -(i/2) sum_a (u*_a du_a/dxi_b - c.c.) = Im sum_a u*_a du_a/dxi_b."""
    at = np.asarray(at, dtype=float)
    u0 = u(*at)

    def uv(xi):
        return u(*xi)

    return np.array([np.sum(np.imag(np.conj(u0) * _fd4(uv, at, b, step))) for b in range(at.size)])


def verify_u_g(u: UnitSpinorMap, data: ClebschData, probes) -> SpinorReport:
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    gs, g_res, n_res = [], 0.0, 0.0
    for pt in probes:
        g = spinor_g(u, pt)
        target = np.array([float(v) for v in data.eval_g(list(pt))])
        gs.append(g)
        g_res = max(g_res, float(np.max(np.abs(g - target))))
        n_res = max(n_res, float(abs(np.sum(np.abs(u(*pt)) ** 2) - 1.0)))
    return SpinorReport(g_res, n_res, np.array(gs))


def q_tensor(psi: WaveField) -> np.ndarray:
    """Q[a, b, g] = (psi_a d_g psi_b - psi_b d_g psi_a) / rho; zero on vacuum nodes."""
    grid = psi.grid
    rho = psi.rho()
    vac = vacuum_mask(rho)
    safe = np.where(vac, 1.0, rho)
    dpsi = np.stack([np.stack([diff(c, grid.spacing[g], g, grid.periodic) for g in range(grid.dim)])
                     for c in psi.values])              # [a, g, ...]
    v = psi.values
    q = (v[:, None, None] * dpsi[None, :] - v[None, :, None] * dpsi[:, None]) / safe
    return np.where(vac, 0.0, q)


def q_norm2(q: np.ndarray) -> np.ndarray:
    return np.sum(q.real ** 2 + q.imag ** 2, axis=(0, 1, 2))


def k_spin(k_m: int) -> int:
    if int(k_m) != k_m or k_m < 1:
        raise ValueError("k_m must be an integer >= 1")
    return 2 * int(k_m) + 1


def stochastic_momentum(rho: ScalarField, lam: float = 0.5, hbar: float = 1.0) -> VectorField:
    """p_st = 2 lam (hbar/2) grad ln rho."""
    return VectorField(rho.grid, tuple(2.0 * lam * (0.5 * hbar) * g for g in grad_log(rho.values, rho.grid)))


# --------------------------------------------------------------------------
# gauge map
# --------------------------------------------------------------------------

def unwrap_phase(values: np.ndarray, mask: np.ndarray, max_jump: float = np.pi) -> np.ndarray:
    """Continuous phase from the largest-modulus node, grid line by grid line."""
    ref = np.unravel_index(np.argmax(np.abs(values)), values.shape)
    theta = np.zeros(values.shape)
    theta[ref] = np.angle(values[ref])
    for axis in range(values.ndim):
        v = np.moveaxis(values, axis, 0)
        m = np.moveaxis(mask, axis, 0)
        inc = np.angle(v[1:] * np.conj(v[:-1]))
        live = ~(m[1:] | m[:-1])
        if np.any(np.abs(inc[live]) >= max_jump - 1e-12):
            raise PhaseUnwrapError("phase jump of pi or more between neighbouring nodes")
        inc = np.where(live, inc, 0.0)
        r = ref[axis]
        rel = np.zeros(v.shape)
        rel[r + 1:] = np.cumsum(inc[r:], axis=0)
        rel[:r] = -np.cumsum(inc[:r][::-1], axis=0)[::-1]
        th = np.moveaxis(theta, axis, 0)
        base = th[r:r + 1]
        theta = np.moveaxis(base + rel, 0, axis)
    return theta


def gauge_map(psi: WaveField, b0: float, hbar: float, exponent: float | None = None) -> WaveField:
    """|psi| exp(i (b0/hbar) theta) with theta the unwrapped phase; vacuum nodes map to 0.

    ``exponent`` overrides b0/hbar (used by the discriminator check).
    """
    if b0 == 0:
        raise ValueError("b0 must be nonzero")
    r = b0 / hbar if exponent is None else exponent
    out = np.empty(psi.values.shape, dtype=complex)
    for a, comp in enumerate(psi.values):
        amp = np.abs(comp)
        vac = vacuum_mask(amp * amp)
        theta = unwrap_phase(comp, vac)
        out[a] = np.where(vac, 0.0, amp * np.exp(1j * r * theta))
    return WaveField(psi.grid, out)


# --------------------------------------------------------------------------
# actions
# --------------------------------------------------------------------------

ACTION_TAGS = ("EnsembleHamilton", "PsiGeneric", "RelStochastic", "NonRelStochastic",
               "PsiPolar", "PsiNonlinear", "PsiLinear")
_FLUID_TAGS = ("EnsembleHamilton", "RelStochastic", "NonRelStochastic")


@dataclass(frozen=True)
class ActionVariant:
    tag: str
    b0: float = 1.0
    m: float = 1.0
    c: float = 1.0
    hbar: float = 1.0
    lam: float = 0.5
    model: object | None = None   # Hamiltonian for EnsembleHamilton and PsiGeneric

    def __post_init__(self):
        if self.tag not in ACTION_TAGS:
            raise VariantError(f"unknown action {self.tag!r}; expected one of {ACTION_TAGS}")
        if not (self.m > 0 and self.c > 0 and self.hbar > 0):
            raise ValueError("m, c and hbar must be positive")
        if self.b0 == 0:
            raise ValueError("b0 must be nonzero")

    @property
    def hamiltonian(self):
        return self.model if self.model is not None else Classical(self.m)


def _time_weights(times: np.ndarray) -> np.ndarray:
    w = np.zeros(times.size)
    dt = np.diff(times)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def _grad_list(f: np.ndarray, grid: Grid) -> list[np.ndarray]:
    return [diff(f, grid.spacing[a], a, grid.periodic) for a in range(grid.dim)]


def _fluid_density(variant: ActionVariant, state, phi_t, xi_t, t) -> np.ndarray:
    from .clebsch import clebsch_components
    grid = state.rho.grid
    rho = state.rho.values
    xi = state.xi.arrays()
    p = clebsch_components(state.phi.values, xi, state.clebsch, grid)
    g = state.clebsch.eval_g(xi)
    b0 = state.clebsch.b0
    kinetic = b0 * (phi_t + sum(ga * xt for ga, xt in zip(g, xi_t)))
    p2 = sum(c * c for c in p)
    if variant.tag == "EnsembleHamilton":
        pts = np.stack(grid.mesh(), axis=-1)
        h = eval_H(variant.hamiltonian, t, pts, np.stack(p, axis=-1))
        return rho * (-h - kinetic)
    pst2 = sum(q * q for q in grad_log(rho, grid)) * (variant.lam * variant.hbar) ** 2
    m, c = variant.m, variant.c
    if variant.tag == "RelStochastic":
        return rho * (-np.sqrt(m * m * c ** 4 + p2 * c * c + pst2 * c * c) - kinetic)
    return rho * (-m * c * c - p2 / (2 * m) - pst2 / (2 * m) - kinetic)


def _wave_density(variant: ActionVariant, psi: WaveField, theta_t: np.ndarray, t) -> np.ndarray:
    """Action density in polar form: |d psi_a|^2 = (d r_a)^2 + r_a^2 (d theta_a)^2.

    Phase derivatives come from phase increments, so b0 * d(theta) is the
    same number for psi and for its gauge image; the psi forms then agree
    node for node under the b0 -> hbar map.
    """
    grid = psi.grid
    v = psi.values
    rho = psi.rho()
    vac = vacuum_mask(rho)
    safe = np.where(vac, 1.0, floored_density(rho))
    m, c, hbar, lam = variant.m, variant.c, variant.hbar, variant.lam
    b0 = hbar if variant.tag == "PsiLinear" else variant.b0
    r2 = v.real ** 2 + v.imag ** 2
    r = np.sqrt(r2)
    time_term = -b0 * np.sum(r2 * theta_t, axis=0)
    dth = [phase_gradient(comp, grid) for comp in v]                     # [a][axis]
    j = [sum(r2[a] * dth[a][ax] for a in range(len(v))) for ax in range(grid.dim)]   # Im(psi* d psi)
    grad_r2 = sum(np.sum(np.stack([d * d for d in _grad_list(ra, grid)]), axis=0) for ra in r)
    grad_th2 = sum(r2[a] * sum(d * d for d in dth[a]) for a in range(len(v)))
    grad_psi2 = grad_r2 + grad_th2
    # (grad rho)^2 / rho written as 4 (grad sqrt rho)^2 so it cancels against (d r)^2 when k = 1
    grad_rho2_rho = 4.0 * sum(g * g for g in _grad_list(np.sqrt(rho), grid))
    j2 = sum(q * q for q in j)
    if variant.tag == "PsiLinear":
        return time_term - hbar ** 2 / (2 * m) * grad_psi2 - m * c * c * rho
    if variant.tag == "PsiNonlinear":
        qterm = b0 * b0 / (4 * m) * rho * q_norm2(q_tensor(psi))
        stoch = (b0 * b0 - 4 * lam * lam * hbar * hbar) / (8 * m) * grad_rho2_rho
        return time_term - b0 * b0 / (2 * m) * grad_psi2 + qterm + stoch - m * c * c * rho
    if variant.tag == "PsiPolar":
        stoch = lam * lam * hbar * hbar / (2 * m) * grad_rho2_rho
        return time_term - m * c * c * rho - stoch - b0 * b0 / (2 * m) * np.where(vac, 0.0, j2 / safe)
    # PsiGeneric: -H(x, p(psi)) rho
    p = np.stack([np.where(vac, 0.0, b0 * q / safe) for q in j], axis=-1)
    pts = np.stack(grid.mesh(), axis=-1)
    h = eval_H(variant.hamiltonian, t, pts, p)
    return time_term - h * rho


def _phase_rates(vals: np.ndarray, times: np.ndarray) -> np.ndarray:
    """d(arg psi_a)/dt per level from the time-unwrapped phase; vals is [level, a, ...]."""
    theta = np.unwrap(np.angle(vals), axis=0)
    return np.gradient(theta, times, axis=0, edge_order=2)


def action_eval(variant: ActionVariant, history: Sequence, times) -> float:
    """Trapezoidal space-time quadrature of the action density over ``history``.

    ``history`` is a sequence of FluidState (for EnsembleHamilton,
    RelStochastic, NonRelStochastic) or WaveField (the psi forms) sampled at
    ``times``; time derivatives are second-order finite differences.
    """
    times = np.asarray(times, dtype=float)
    if len(history) < 3 or len(history) != times.size:
        raise HistoryError("need at least 3 time levels with matching times")
    if np.any(np.diff(times) <= 0):
        raise HistoryError("times must increase strictly")
    fluid = variant.tag in _FLUID_TAGS
    if fluid and isinstance(history[0], WaveField):
        raise VariantError(f"{variant.tag} is evaluated on fluid states")
    if not fluid and not isinstance(history[0], WaveField):
        raise VariantError(f"{variant.tag} is evaluated on wave fields")
    grid = (history[0].rho.grid if fluid else history[0].grid)
    w = _time_weights(times)
    total = 0.0
    if fluid:
        phis = np.stack([s.phi.values for s in history])
        phi_t = np.gradient(phis, times, axis=0, edge_order=2)
        xis = np.stack([np.stack(s.xi.arrays()) for s in history])
        xi_t = np.gradient(xis, times, axis=0, edge_order=2)
        for n, s in enumerate(history):
            total += w[n] * integrate_array(_fluid_density(variant, s, phi_t[n], xi_t[n], times[n]), grid)
    else:
        theta_t = _phase_rates(np.stack([p.values for p in history]), times)
        for n, p in enumerate(history):
            total += w[n] * integrate_array(_wave_density(variant, p, theta_t[n], times[n]), grid)
    return float(total)


@dataclass(frozen=True)
class VariationReport:
    eps: tuple[float, ...]
    deltas: tuple[float, ...]   # |A(psi + eps eta) - A(psi)|

    @property
    def orders(self) -> tuple[float, ...]:
        d, e = self.deltas, self.eps
        return tuple(float(np.log(d[i] / d[i + 1]) / np.log(e[i] / e[i + 1])) for i in range(len(d) - 1))


def action_variation(variant: ActionVariant, history: Sequence[WaveField], times, eta: np.ndarray,
                     eps: Sequence[float] = (1e-2, 5e-3, 2.5e-3)) -> VariationReport:
    """Change of the action under psi -> psi + eps * eta; ``eta`` has shape (levels, k, *grid)."""
    base = action_eval(variant, history, times)
    deltas = []
    for e in eps:
        pert = [WaveField(p.grid, p.values + e * eta[n]) for n, p in enumerate(history)]
        deltas.append(abs(action_eval(variant, pert, times) - base))
    return VariationReport(tuple(eps), tuple(deltas))
