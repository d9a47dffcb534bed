"""Clebsch-potential representation of the momentum field.

P_b = b0 * (d_b phi + sum_a g^a(xi) d_b xi_a)

plus numerical checks of the Jacobian identities that make this form solve
the xi-variation equations, vorticity of g, and fitting g from initial data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import FieldError, SingularJacobianError
from .numerics import Grid, ScalarField, VectorField, diff, label_diff

GFunc = Callable[..., np.ndarray]


@dataclass(frozen=True)
class ClebschData:
    """Constant ``b0`` and integration functions ``g[a](*xi)``, one per label."""

    b0: float
    g: tuple[GFunc, ...]

    def __post_init__(self):
        if self.b0 == 0 or not np.isfinite(self.b0):
            raise ValueError("b0 must be finite and nonzero")
        object.__setattr__(self, "g", tuple(self.g))
        if not self.g:
            raise ValueError("need at least one g component")

    @property
    def n(self) -> int:
        return len(self.g)

    @classmethod
    def zero(cls, n: int, b0: float = 1.0) -> ClebschData:
        return cls(b0, tuple(_const(0.0) for _ in range(n)))

    @classmethod
    def constant(cls, values: Sequence[float], b0: float = 1.0) -> ClebschData:
        return cls(b0, tuple(_const(float(v)) for v in values))

    def eval_g(self, xi: Sequence[np.ndarray]) -> list[np.ndarray]:
        out = []
        for ga in self.g:
            val = np.asarray(ga(*xi), dtype=float)
            out.append(np.broadcast_to(val, np.broadcast(*[np.asarray(x) for x in xi]).shape))
        return out


def _const(v: float) -> GFunc:
    def g(*xi):
        return np.full(np.broadcast(*[np.asarray(x) for x in xi]).shape, v)
    return g


@dataclass(frozen=True, eq=False)
class TabulatedG:
    """Linear interpolation of one g component sampled on a label grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise FieldError("table shape does not match grid")
        object.__setattr__(self, "values", vals)
        axes = list(self.grid.axes)
        table = vals
        if self.grid.periodic:
            for a, (ax, length) in enumerate(zip(self.grid.axes, self.grid.lengths)):
                axes[a] = np.append(ax, ax[0] + length)
                table = np.concatenate([table, np.take(table, [0], axis=a)], axis=a)
        object.__setattr__(self, "_interp", RegularGridInterpolator(
            tuple(axes), table, method="linear", bounds_error=False, fill_value=None))

    def __call__(self, *xi):
        pts = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in xi])
        if self.grid.periodic:
            pts = [lo + np.mod(p - lo, length)
                   for p, lo, length in zip(pts, self.grid.lower, self.grid.lengths)]
        if self.grid.dim == 1:
            return np.interp(pts[0], self._interp.grid[0], self._interp.values)
        flat = np.stack([p.ravel() for p in pts], axis=-1)
        return self._interp(flat).reshape(pts[0].shape)


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Values of the Lagrangian labels xi_a(x) on a grid."""

    xi: tuple[ScalarField, ...]
    closed_form: Callable | None = None

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(self.xi))
        grids = {id(f.grid) for f in self.xi}
        if len(self.xi) == 0:
            raise FieldError("label map needs at least one component")
        if len(grids) > 1 and any(f.grid != self.xi[0].grid for f in self.xi):
            raise FieldError("label components on different grids")

    @property
    def grid(self) -> Grid:
        return self.xi[0].grid

    @classmethod
    def standard(cls, grid: Grid) -> LabelMap:
        """xi(x) = x, the labelling by initial position."""
        return cls(tuple(ScalarField(grid, m) for m in grid.mesh()))

    def arrays(self) -> list[np.ndarray]:
        return [f.values for f in self.xi]


def clebsch_momentum(phi: ScalarField, labels: LabelMap, data: ClebschData) -> VectorField:
    grid = phi.grid
    if labels.grid != grid:
        raise FieldError("phi and labels live on different grids")
    if len(labels.xi) != grid.dim or data.n != grid.dim:
        raise FieldError(f"need {grid.dim} labels and g components, got "
                         f"{len(labels.xi)} and {data.n}")
    return VectorField(grid, tuple(clebsch_components(phi.values, labels.arrays(), data, grid)))


def label_period(grid: Grid, a: int) -> float:
    """Period of label a on a periodic grid (0 when labels are unbounded)."""
    return grid.lengths[a] if grid.periodic and a < grid.dim else 0.0


def clebsch_components(phi: np.ndarray, xi: Sequence[np.ndarray], data: ClebschData,
                       grid: Grid) -> list[np.ndarray]:
    g = data.eval_g(xi)
    out = []
    for b in range(grid.dim):
        h = grid.spacing[b]
        acc = diff(phi, h, b, grid.periodic)
        for a, (ga, xa) in enumerate(zip(g, xi)):
            acc = acc + ga * label_diff(xa, h, b, label_period(grid, a))
        out.append(data.b0 * acc)
    return out


# --------------------------------------------------------------------------
# vorticity of g
# --------------------------------------------------------------------------

def _fd4(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, axis: int, step: float) -> np.ndarray:
    e = np.zeros_like(x)
    e[axis] = step
    return (8.0 * (fn(x + e) - fn(x - e)) - (fn(x + 2 * e) - fn(x - 2 * e))) / (12.0 * step)


@dataclass(frozen=True)
class Vorticity:
    omega: np.ndarray
    irrotational: bool


def vorticity(data: ClebschData, at: Sequence[float], tol: float = 1e-8, step: float = 1e-3) -> Vorticity:
    """Omega[a, b] = dg^a/dxi_b - dg^b/dxi_a by fourth-order central differences."""
    at = np.asarray(at, dtype=float).reshape(-1)
    if at.size != data.n:
        raise FieldError(f"label point has {at.size} components, g has {data.n}")

    def gvec(xi):
        return np.array([float(v) for v in data.eval_g(list(xi))])

    dg = np.stack([_fd4(gvec, at, b, step) for b in range(data.n)], axis=1)
    omega = dg - dg.T
    return Vorticity(omega, bool(np.max(np.abs(omega)) < tol))


# --------------------------------------------------------------------------
# closed-form maps for the identity checks; x = (x^0 = t, x^1, ..., x^n)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothMap:
    """Map x -> xi in R^d with an analytic Jacobian ``jacobian(x)[i, k] = d xi_i / d x^k``."""

    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    dim: int

    @classmethod
    def identity(cls, dim: int) -> SmoothMap:
        return cls.linear(np.eye(dim))

    @classmethod
    def linear(cls, a, b=None) -> SmoothMap:
        a = np.array(a, dtype=float)
        b = np.zeros(a.shape[0]) if b is None else np.asarray(b, dtype=float)
        return cls(lambda x: a @ x + b, lambda x: a.copy(), a.shape[0])

    @classmethod
    def trig(cls, a, amp, freq, phase) -> SmoothMap:
        """xi_i = sum_k a[i,k] x^k + sum_m amp[i,m] sin(freq[i,m,:] . x + phase[i,m])."""
        a, amp, freq, phase = (np.asarray(v, dtype=float) for v in (a, amp, freq, phase))

        def value(x):
            return a @ x + np.sum(amp * np.sin(freq @ x + phase), axis=1)

        def jac(x):
            return a + np.einsum("im,imk->ik", amp * np.cos(freq @ x + phase), freq)

        return cls(value, jac, a.shape[0])

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, amplitude: float = 0.1, terms: int = 2) -> SmoothMap:
        a = np.eye(dim) + 0.2 * rng.standard_normal((dim, dim))
        amp = amplitude * rng.standard_normal((dim, terms))
        freq = rng.uniform(-1.5, 1.5, (dim, terms, dim))
        phase = rng.uniform(0, 2 * np.pi, (dim, terms))
        return cls.trig(a, amp, freq, phase)


@dataclass(frozen=True)
class SmoothScalar:
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def constant(cls, c: float, dim: int) -> SmoothScalar:
        return cls(lambda x: c, lambda x: np.zeros(dim))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, terms: int = 3) -> SmoothScalar:
        amp = rng.standard_normal(terms)
        freq = rng.uniform(-1.5, 1.5, (terms, dim))
        phase = rng.uniform(0, 2 * np.pi, terms)
        return cls(lambda x: float(amp @ np.sin(freq @ x + phase)),
                   lambda x: (amp * np.cos(freq @ x + phase)) @ freq)


def example_wavy_map() -> SmoothMap:
    """xi_0 = t, xi_1 = x + 0.1 sin(x + t), xi_2 = y."""
    return SmoothMap.trig(np.eye(3), [[0.0], [0.1], [0.0]],
                          [[[0, 0, 0]], [[1, 1, 0]], [[0, 0, 0]]], [[0.0], [0.0], [0.0]])


# --------------------------------------------------------------------------
# determinant derivatives from minors
# --------------------------------------------------------------------------

def _minor_det(m: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> float:
    sub = np.delete(np.delete(m, rows, axis=0), cols, axis=1)
    return 1.0 if sub.size == 0 else float(np.linalg.det(sub))


def cofactors(m: np.ndarray) -> np.ndarray:
    """dJ/dM[i,k] as signed first minors."""
    d = m.shape[0]
    out = np.empty((d, d))
    for i, k in product(range(d), repeat=2):
        out[i, k] = (-1) ** (i + k) * _minor_det(m, [i], [k])
    return out


def det_hessian(m: np.ndarray) -> np.ndarray:
    """d^2 J / dM[i,k] dM[s,l] as signed second minors."""
    d = m.shape[0]
    out = np.zeros((d, d, d, d))
    for i, k, s, l in product(range(d), repeat=4):
        if i == s or k == l:
            continue
        sign = (-1) ** (i + k + s + l) * (1 if (i < s) == (k < l) else -1)
        out[i, k, s, l] = sign * _minor_det(m, [i, s], [k, l])
    return out


@dataclass(frozen=True)
class FamilyResidual:
    residual: float       # relative residual at step h
    residual_half: float  # relative residual at step h/2
    finite_difference: bool

    @property
    def ratio(self) -> float:
        if not self.finite_difference or self.residual_half == 0.0:
            return float("nan")
        return self.residual / self.residual_half


@dataclass(frozen=True)
class IdentityReport:
    point: tuple[float, ...]
    h: float
    families: dict[str, FamilyResidual] = field(default_factory=dict)

    def max_residual(self) -> float:
        return max(f.residual for f in self.families.values())

    def passed(self, tol: float = 1e-6, ratio_band=(3.0, 5.0), noise: float = 1e-11) -> bool:
        for f in self.families.values():
            if f.residual >= tol:
                return False
            if f.finite_difference and f.residual > noise and not ratio_band[0] <= f.ratio <= ratio_band[1]:
                return False
        return True


def _check_jacobian(m: np.ndarray) -> float:
    det = float(np.linalg.det(m))
    if abs(det) < 1e-12 * max(1.0, np.abs(m).max() ** m.shape[0]):
        raise SingularJacobianError(f"Jacobian determinant {det:.3e} is singular")
    return det


def _rel(res: np.ndarray, scale: np.ndarray) -> float:
    top = float(np.max(np.abs(res))) if np.size(res) else 0.0
    s = float(np.max(scale)) if np.size(scale) else 0.0
    if top == 0.0:
        return 0.0
    return top / s if s > 0 else float("inf")


def _identity_residuals(xi_map: SmoothMap, x: np.ndarray, h: float) -> dict[str, float]:
    d = x.size
    m = xi_map.jacobian(x)
    jdet = _check_jacobian(m)
    cof = cofactors(m)
    d2 = det_hessian(m)
    eye = np.eye(d)
    shifted = [(xi_map.jacobian(x + h * eye[k]), xi_map.jacobian(x - h * eye[k])) for k in range(d)]

    # (divergence of second derivatives) sum_k d_k d2J/dM[i,k]dM[s,l]
    terms = np.stack([(det_hessian(mp)[:, k] - det_hessian(mm)[:, k]) / (2 * h)
                      for k, (mp, mm) in enumerate(shifted)])
    fam_div = _rel(terms.sum(axis=0), np.abs(terms).sum(axis=0))

    # cofactor product form of the second derivatives
    prod_form = (np.einsum("ik,sl->iksl", cof, cof) - np.einsum("il,sk->iksl", cof, cof)) / jdet
    fam_prod = _rel(d2 - prod_form, np.abs(d2) + np.abs(prod_form))

    # duality: M[l,k] C[s,k] = delta J and M[k,l] C[k,s] = delta J
    dual1 = np.einsum("lk,sk->ls", m, cof) - eye * jdet
    dual2 = np.einsum("kl,ks->ls", m, cof) - eye * jdet
    scale = np.abs(np.einsum("lk,sk->lsk", m, cof)).sum(axis=2) + abs(jdet)
    fam_dual = max(_rel(dual1, scale), _rel(dual2, scale))

    # Piola: sum_k d_k C[i,k] = 0 and d2J * d_k d_l xi_s = 0
    piola_terms = np.stack([(cofactors(mp)[:, k] - cofactors(mm)[:, k]) / (2 * h)
                            for k, (mp, mm) in enumerate(shifted)])
    second = np.stack([(mp - mm) / (2 * h) for mp, mm in shifted], axis=-1)  # [s, l, k]
    contr_terms = np.einsum("iksl,slk->iksl", d2, second)
    fam_piola = max(_rel(piola_terms.sum(axis=0), np.abs(piola_terms).sum(axis=0)),
                    _rel(contr_terms.sum(axis=(1, 2, 3)), np.abs(contr_terms).sum(axis=(1, 2, 3))))
    return {"divergence": fam_div, "cofactor_product": fam_prod,
            "duality": fam_dual, "piola": fam_piola}


_FD_FAMILIES = {"divergence": True, "cofactor_product": False, "duality": False, "piola": True}


def verify_jacobian_identities(xi_map: SmoothMap, point, h: float = 1e-3) -> IdentityReport:
    """Relative residuals of the determinant identities at ``point``, at h and h/2."""
    x = np.asarray(point, dtype=float).reshape(-1)
    full = _identity_residuals(xi_map, x, h)
    half = _identity_residuals(xi_map, x, h / 2)
    fams = {k: FamilyResidual(full[k], half[k], _FD_FAMILIES[k]) for k in full}
    return IdentityReport(tuple(x), h, fams)


def _integration_residual(xi_map: SmoothMap, phi: SmoothScalar, data: ClebschData,
                          x: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    d = x.size
    if data.n != d - 1:
        raise FieldError(f"map of dimension {d} needs {d - 1} g components, got {data.n}")
    _check_jacobian(xi_map.jacobian(x))

    def flux(y):
        m = xi_map.jacobian(y)
        xi = xi_map.value(y)
        g = np.array([float(v) for v in data.eval_g(list(xi[1:]))])
        p = data.b0 * (phi.gradient(y) + g @ m[1:])   # p_i, i = 0..n
        t = det_hessian(m)[0]                          # [i, k, l]
        return np.einsum("i,ikl->kl", p, t)

    eye = np.eye(d)
    terms = np.stack([-(flux(x + h * eye[l])[:, l] - flux(x - h * eye[l])[:, l]) / (2 * h)
                      for l in range(d)])               # [l, k]
    return terms.sum(axis=0), np.abs(terms).sum(axis=0)


@dataclass(frozen=True)
class IntegrationReport:
    point: tuple[float, ...]
    h: float
    residual: np.ndarray        # absolute, per k
    relative: float
    relative_half: float

    @property
    def ratio(self) -> float:
        return self.relative / self.relative_half if self.relative_half else float("nan")


def verify_integration(xi_map: SmoothMap, phi: SmoothScalar, data: ClebschData, point,
                       h: float = 1e-3) -> IntegrationReport:
    """Residual of -d_l(p_i d2J/dxi_{0,i} dxi_{k,l}) with p from the Clebsch form."""
    x = np.asarray(point, dtype=float).reshape(-1)
    res, scale = _integration_residual(xi_map, phi, data, x, h)
    res2, scale2 = _integration_residual(xi_map, phi, data, x, h / 2)
    return IntegrationReport(tuple(x), h, res, _rel(res, scale), _rel(res2, scale2))


# --------------------------------------------------------------------------
# initial-data fitting and relabelling
# --------------------------------------------------------------------------

def fit_g_from_initial(p0: VectorField, b0: float) -> ClebschData:
    """g^a(xi) = p0_a(xi) / b0 under the labelling xi(0, x) = x, phi(0, x) = 0."""
    if b0 == 0:
        raise ValueError("b0 must be nonzero")
    return ClebschData(b0, tuple(TabulatedG(p0.grid, c / b0) for c in p0.components))


def relabel(labels: LabelMap, data: ClebschData, forward: Callable, inverse: Callable,
            jacobian: Callable) -> tuple[LabelMap, ClebschData]:
    """Apply xi -> xi~ = forward(xi) and pull g back so g^a d xi_a is unchanged.

    ``jacobian(*xi)`` returns K[a][b] = d xi~_a / d xi_b; ``inverse`` maps xi~
    back to xi. Only volume-preserving maps keep the density interpretation.
    """
    new = forward(*labels.arrays())
    new_labels = LabelMap(tuple(ScalarField(labels.grid, v) for v in new))
    n = data.n

    def make(alpha):
        def g_new(*xt):
            xi = inverse(*xt)
            k = np.asarray(jacobian(*xi), dtype=float)
            g_old = np.stack(np.broadcast_arrays(*data.eval_g(xi)))
            k_inv_t = np.linalg.inv(np.moveaxis(k, (0, 1), (-2, -1))).swapaxes(-1, -2)
            return np.einsum("...ab,b...->a...", k_inv_t, g_old)[alpha]
        return g_new

    return new_labels, ClebschData(data.b0, tuple(make(a) for a in range(n)))
