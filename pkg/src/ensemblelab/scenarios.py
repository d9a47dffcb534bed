"""Named experiments driven by an ExperimentConfig.

Each scenario returns CSV texts, checks and run information; the cli module
writes them out with a manifest and a plotting script.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import clebsch, ensemble, fluid, psirep, schrodinger, worldfunc
from .config import ExperimentConfig
from .errors import EnsembleLabError
from .hamiltonian import Classical, Polynomial, Relativistic, eval_H
from .numerics import Grid, RngStream, ScalarField, VectorField, integrate_array


@dataclass(frozen=True)
class Check:
    value: float
    tolerance: float
    passed: bool
    relation: str = "<"

    def as_dict(self) -> dict:
        return {"value": self.value, "tolerance": self.tolerance, "relation": self.relation,
                "passed": self.passed}


def below(value: float, tol: float) -> Check:
    return Check(float(value), tol, bool(value < tol), "<")


def above(value: float, tol: float) -> Check:
    return Check(float(value), tol, bool(value >= tol), ">=")


@dataclass
class ScenarioResult:
    outputs: dict[str, str] = field(default_factory=dict)
    checks: dict[str, Check] = field(default_factory=dict)
    info: dict[str, object] = field(default_factory=dict)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, (str, int, np.integer)) else format(float(v), ".17g") for v in row])
    return buf.getvalue()


def read_csv(text: str) -> tuple[list[str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


# --------------------------------------------------------------------------
# config helpers
# --------------------------------------------------------------------------

def grid_from(cfg: ExperimentConfig) -> Grid:
    return Grid.line(cfg.get("grid", "x_min"), cfg.get("grid", "x_max"), cfg.get("grid", "n_points"),
                     cfg.get("grid", "boundary"))


def model_from(cfg: ExperimentConfig):
    mass = cfg.get("model", "mass")
    if cfg.get("model", "kind") == "relativistic":
        return Relativistic(mass, cfg.get("model", "c"))
    coeffs = tuple(float(v) for v in cfg.get("model", "potential").split(","))
    return Classical(mass, Polynomial(coeffs))


def _steps(cfg: ExperimentConfig) -> tuple[int, float, int]:
    t_end, dt = cfg.get("solver", "t_end"), cfg.get("solver", "dt")
    n = max(1, int(round(t_end / dt)))
    dt = t_end / n
    save = cfg.get("solver", "save_every") or max(1, n // 4)
    return n, dt, save


def _gaussian(grid: Grid, sigma0: float, x0: float) -> np.ndarray:
    return np.exp(-((grid.x - x0) ** 2) / (2 * sigma0 ** 2)) / np.sqrt(2 * np.pi * sigma0 ** 2)


def _initial_density(cfg: ExperimentConfig, grid: Grid) -> np.ndarray:
    if cfg.get("initial", "shape") == "uniform":
        return np.full(grid.shape, 1.0 / grid.lengths[0])
    return _gaussian(grid, cfg.get("initial", "sigma0"), cfg.get("initial", "x0"))


def _initial_momentum(cfg: ExperimentConfig, grid: Grid) -> np.ndarray:
    return cfg.get("initial", "p0") + cfg.get("initial", "p_slope") * (grid.x - cfg.get("initial", "x0"))


def _rho_rows(t, grid, rho):
    return [[t, x, r] for x, r in zip(grid.x, rho)]


RHO_HEADER = ["t", "x", "rho"]


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------

def run_schrodinger_free(cfg: ExperimentConfig, base: Path) -> ScenarioResult:
    grid = grid_from(cfg)
    hbar, m = cfg.get("model", "hbar"), cfg.get("model", "mass")
    n, dt, save = _steps(cfg)
    wcfg = schrodinger.WaveSolverConfig(m=m, hbar=hbar, c=cfg.get("model", "c"), b0=hbar, dt=dt,
                                        include_rest_mass=cfg.get("solver", "include_rest_mass"))
    sigma0 = cfg.get("initial", "sigma0")
    psi0 = schrodinger.gaussian_packet(grid, sigma0, cfg.get("initial", "x0"), cfg.get("initial", "k0"))
    run = schrodinger.evolve(psi0, wcfg, n, save)
    psi_rows, rho_rows, width_err = [], [], 0.0
    for t, f in zip(run.times, run.fields):
        v, rho = f.component, f.rho()
        psi_rows += [[t, x, a.real, a.imag, r] for x, a, r in zip(grid.x, v, rho)]
        rho_rows += _rho_rows(t, grid, rho)
        w2 = schrodinger.rms_width(rho, grid) ** 2
        width_err = max(width_err, abs(w2 / schrodinger.free_width(t, sigma0, hbar, m) ** 2 - 1.0))
    res = ScenarioResult()
    res.outputs["psi.csv"] = csv_text(["t", "x", "re_psi", "im_psi", "abs_psi2"], psi_rows)
    res.outputs["rho.csv"] = csv_text(RHO_HEADER, rho_rows)
    drift = run.norm_drift()
    res.checks["width_law"] = below(width_err, 1e-3)
    res.checks["norm_drift"] = below(drift, 1e-8)
    res.info.update(scheme=wcfg.scheme, dt=dt, stability_ratio=wcfg.stability_ratio(grid), norm_drift=drift)
    return res


def run_fluid_quantum(cfg: ExperimentConfig, base: Path) -> ScenarioResult:
    grid = grid_from(cfg)
    model = model_from(cfg)
    if not isinstance(model, Classical):
        raise EnsembleLabError("fluid scenarios need model.kind = classical")
    quantum = cfg.get("solver", "quantum")
    hbar, lam, b0 = cfg.get("model", "hbar"), cfg.get("model", "lam"), cfg.get("clebsch", "b0")
    n, dt, save = _steps(cfg)
    rho0 = ScalarField(grid, _initial_density(cfg, grid))
    p0 = VectorField(grid, (_initial_momentum(cfg, grid),))
    state = fluid.initial_state(rho0, p0 if np.any(p0.components[0]) else None, b0)
    m0 = state.mass()
    saved, tail = [state], [state]
    for k in range(1, n + 1):
        state = fluid.step_fluid(state, model, dt, quantum, hbar, lam)
        tail = (tail + [state])[-3:]
        if k % save == 0 or k == n:
            saved.append(state)
    rows, rho_rows = [], []
    for s in saved:
        rows += fluid.fluid_csv_rows(s)
        rho_rows += _rho_rows(s.t, grid, s.rho.values)
    res = ScenarioResult()
    res.outputs["fluid.csv"] = csv_text(fluid.fluid_csv_header(), rows)
    res.outputs["rho.csv"] = csv_text(RHO_HEADER, rho_rows)
    drift = abs(state.mass() - m0)
    res.checks["mass_conservation"] = below(drift, 1e-8 * max(1.0, cfg.get("solver", "t_end")))
    if len(tail) == 3:
        table = fluid.residual_report(tail, model, quantum, hbar, lam)
        res.outputs["residuals.txt"] = table.to_text() + "\n"
        for fam in ("hamilton_jacobi", "continuity", "lin"):
            res.checks[f"residual_{fam}"] = below(table[fam].max, 1e-4)
    res.info.update(dt=dt, quantum=quantum, mass_drift=drift)
    return res


def run_ensemble_classical(cfg: ExperimentConfig, base: Path) -> ScenarioResult:
    grid = grid_from(cfg)
    model = model_from(cfg)
    n, dt, save = _steps(cfg)
    rho0 = ScalarField(grid, _initial_density(cfg, grid))
    p0 = VectorField(grid, (_initial_momentum(cfg, grid),))
    ens = ensemble.init_pure(rho0, p0, cfg.get("solver", "n_samples"), RngStream(cfg.seed))
    labels0 = ens.labels.copy()
    e0 = ensemble.energies(ens, model)
    bw = cfg.get("solver", "bandwidth") or 2.0 * grid.h
    snaps = [ens]
    done = 0
    while done < n:
        k = min(save, n - done)
        ens = ensemble.step(ens, model, dt, k)
        done += k
        snaps.append(ens)
    rho_rows = []
    for s in snaps:
        rho_rows += _rho_rows(s.t, grid, ensemble.density_estimate(s, grid, bw).values)
    res = ScenarioResult()
    res.outputs["samples.csv"] = ensemble.dump_csv(snaps)
    res.outputs["rho.csv"] = csv_text(RHO_HEADER, rho_rows)
    e1 = ensemble.energies(ens, model)
    drift = float(np.max(np.abs(e1 - e0) / np.maximum(np.abs(e0), 1e-300)))
    res.checks["labels_constant"] = Check(float(np.max(np.abs(ens.labels - labels0))), 0.0,
                                          bool(np.array_equal(ens.labels, labels0)), "==")
    res.checks["energy_drift"] = below(drift, 1e-6)
    res.info.update(dt=dt, bandwidth=bw, n_samples=ens.n)
    return res


def run_hj(cfg: ExperimentConfig, base: Path) -> ScenarioResult:
    grid = grid_from(cfg)
    model = model_from(cfg)
    n, dt, save = _steps(cfg)
    shape = cfg.get("initial", "shape")
    x = grid.x
    if shape == "plane":
        p0 = cfg.get("initial", "p0")
        phi0 = p0 * x
        e = float(eval_H(model, 0.0, 0.0, p0)) if isinstance(model, Relativistic) else 0.5 * p0 * p0 / model.mass
        exact = (lambda t: p0 * x - e * t) if (isinstance(model, Relativistic)
                                               or not any(model.potential.coeffs[1:])) else None
    else:
        a = cfg.get("initial", "p_slope") or 1.0
        phi0 = 0.5 * a * x * x
        free = isinstance(model, Classical) and not any(model.potential.coeffs[1:])
        exact = (lambda t: a * x * x / (2 * (1 + a * t / model.mass))) if free else None
    state = fluid.HJState(0.0, ScalarField(grid, phi0))
    rows, err = [], 0.0
    for k in range(n + 1):
        if k % save == 0 or k == n:
            rows += [[state.t, xi, f, d] for xi, f, d in zip(x, state.Phi.values, fluid.hj_gradient(state))]
            if exact is not None:
                err = max(err, float(np.max(np.abs(state.Phi.values - exact(state.t)))))
        if k < n:
            state = fluid.step_hj(state, model, dt)
    res = ScenarioResult()
    res.outputs["hj.csv"] = csv_text(["t", "x", "Phi", "dPhi_dx"], rows)
    if exact is not None:
        res.checks["analytic_error"] = below(err, 1e-8 if shape == "plane" else 1e-3)
    res.info.update(dt=dt, cfl=dt * float(np.max(np.abs(fluid.hj_gradient(state)))) / grid.h)
    return res


def gauge_equivalence(grid: Grid, b0: float, hbar: float, m: float, dt: float, n: int,
                      sigma0: float = 1.0, x0: float = 0.0):
    """Nonlinear run mapped by b0/hbar and by hbar/b0 against the linear run of mapped data."""
    wn = schrodinger.WaveSolverConfig(m=m, hbar=hbar, b0=b0, dt=dt)
    wl = schrodinger.WaveSolverConfig(m=m, hbar=hbar, b0=hbar, dt=dt)
    psi0 = schrodinger.gaussian_packet(grid, sigma0, x0)
    nl = schrodinger.evolve(psi0, wn, n, nonlinear=True).final
    lin = schrodinger.evolve(psirep.gauge_map(psi0, b0, hbar), wl, n).final
    right = psirep.gauge_map(nl, b0, hbar)
    wrong = psirep.gauge_map(nl, b0, hbar, exponent=hbar / b0)

    def l2(a, b):
        return float(np.sqrt(integrate_array(np.abs(a.component - b.component) ** 2, grid)))

    return l2(right, lin), l2(wrong, lin), right, wrong, lin


def run_gauge_check(cfg: ExperimentConfig, base: Path) -> ScenarioResult:
    grid = grid_from(cfg)
    n, dt, _ = _steps(cfg)
    b0 = cfg.get("clebsch", "b0")
    hbar = cfg.get("model", "hbar")
    err, err_wrong, right, wrong, lin = gauge_equivalence(grid, b0, hbar, cfg.get("model", "mass"), dt, n,
                                                            cfg.get("initial", "sigma0"), cfg.get("initial", "x0"))
    t = n * dt
    rows = [[t, x, a.real, a.imag, w.real, w.imag, b.real, b.imag]
            for x, a, w, b in zip(grid.x, right.component, wrong.component, lin.component)]
    res = ScenarioResult()
    res.outputs["gauge.csv"] = csv_text(["t", "x", "re_mapped", "im_mapped", "re_printed", "im_printed",
                                         "re_linear", "im_linear"], rows)
    res.outputs["rho.csv"] = csv_text(RHO_HEADER, _rho_rows(t, grid, right.rho()))
    res.checks["gauge_l2"] = below(err, 1e-4)
    res.checks["printed_exponent_margin"] = above(err_wrong / max(err, 1e-300), 1e2)
    res.info.update(dt=dt, l2_derived=err, l2_printed=err_wrong)
    return res


def homogeneity_errors(grid: Grid, factors=(2.0, 10.0), lam: float = 0.5) -> dict[str, float]:
    """Relative error of A(a rho) - a A(rho) for the rho-linear fluid actions."""
    x = grid.x
    rho = np.exp(-x ** 2 / 2) * (1 + 0.3 * np.sin(x))
    # truncate mantissas so a * rho is exact for a = 10 as well
    rho = np.ldexp(np.round(np.ldexp(rho, 40)), -40)
    data = clebsch.ClebschData(1.0, (lambda s: 0.2 * np.sin(s),))
    times = np.array([0.0, 0.01, 0.02])
    hist = []
    for t in times:
        hist.append(fluid.FluidState(t, ScalarField(grid, rho), ScalarField(grid, 0.3 * np.cos(x) - 0.5 * t),
                                     clebsch.LabelMap((ScalarField(grid, x - 0.1 * t),)), data))
    out = {}
    for tag in ("EnsembleHamilton", "RelStochastic", "NonRelStochastic"):
        v = psirep.ActionVariant(tag, lam=lam)
        a0 = psirep.action_eval(v, hist, times)
        for a in factors:
            scaled = [s.scaled(a) for s in hist]
            out[f"{tag}_a{a:g}"] = abs(psirep.action_eval(v, scaled, times) - a * a0) / abs(a * a0)
    return out


def stationarity(grid: Grid, dt: float = 5e-4, duration: float = 0.2) -> psirep.VariationReport:
    """Epsilon-ratio test of the linear psi action around a converged Crank-Nicolson packet."""
    span = max(4, int(round(duration / dt)))
    wcfg = schrodinger.WaveSolverConfig(dt=dt, include_rest_mass=True)
    run = schrodinger.evolve(schrodinger.gaussian_packet(grid, 1.0, 0.0, 1.0), wcfg, 2 * span, save_every=1)
    hist, times = run.fields[span // 2: span // 2 + span + 1], run.times[span // 2: span // 2 + span + 1]
    s = np.sin(np.pi * (times - times[0]) / (times[-1] - times[0])) ** 2
    bump = np.exp(-(grid.x - 0.3) ** 2) * (1 + 0.5j)
    eta = (s[:, None] * bump[None])[:, None, :]
    return psirep.action_variation(psirep.ActionVariant("PsiLinear"), hist, times, eta)


def run_action_check(cfg: ExperimentConfig, base: Path) -> ScenarioResult:
    grid = grid_from(cfg)
    hom = homogeneity_errors(grid, lam=cfg.get("model", "lam"))
    rep = stationarity(grid, cfg.get("solver", "dt"))
    res = ScenarioResult()
    rows = [[k, v] for k, v in hom.items()]
    rows += [[f"delta_eps{e:g}", d] for e, d in zip(rep.eps, rep.deltas)]
    rows += [[f"order_{i}", o] for i, o in enumerate(rep.orders)]
    res.outputs["action.csv"] = csv_text(["quantity", "value"], rows)
    res.checks["homogeneity"] = below(max(hom.values()), 1e-12)
    res.checks["stationarity_order"] = above(min(rep.orders), 1.9)
    return res


def identity_trials(n: int, trials: int, h: float, seed: int):
    rng = RngStream(seed).generator()
    rows, worst, ratios_ok = [], 0.0, True
    for trial in range(trials):
        d = n + 1
        xmap = clebsch.SmoothMap.random(d, rng)
        point = 0.5 * rng.standard_normal(d)
        rep = clebsch.verify_jacobian_identities(xmap, point, h)
        for fam, r in rep.families.items():
            rows.append([trial, fam, r.residual, r.residual_half, r.ratio])
        ratios_ok &= rep.passed()
        worst = max(worst, rep.max_residual())
        phi = clebsch.SmoothScalar.random(d, rng)
        for label, data in (("integration_gradient", clebsch.ClebschData.zero(n)),
                            ("integration_rotational", clebsch.ClebschData(
                                1.0, (lambda *xi: xi[1],) + tuple(clebsch._const(0.0) for _ in range(n - 1))))):
            ir = clebsch.verify_integration(xmap, phi, data, point, h)
            rows.append([trial, label, ir.relative, ir.relative_half, ir.ratio])
            worst = max(worst, ir.relative)
            ratios_ok &= ir.relative < 1e-11 or 3.0 <= ir.ratio <= 5.0
    return rows, worst, ratios_ok


def run_verify_identities(cfg: ExperimentConfig, base: Path) -> ScenarioResult:
    n, trials, h = cfg.get("solver", "n"), cfg.get("solver", "trials"), cfg.get("solver", "h")
    rows, worst, ratios_ok = identity_trials(n, trials, h, cfg.seed)
    res = ScenarioResult()
    res.outputs["identities.csv"] = csv_text(["trial", "family", "residual", "residual_half", "ratio"], rows)
    res.checks["max_relative_residual"] = below(worst, 1e-6)
    res.checks["richardson_ratio"] = Check(float(ratios_ok), 1.0, bool(ratios_ok), "==")
    return res


def read_points(path: Path) -> list[tuple[worldfunc.SpacetimePoint, worldfunc.SpacetimePoint]]:
    pairs = []
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#")[0].strip()
        if not line:
            continue
        vals = [float(v) for v in line.replace(",", " ").split()]
        if len(vals) != 8:
            raise ValueError(f"{path}:{n}: expected 8 numbers (t1 x1 y1 z1 t2 x2 y2 z2)")
        pairs.append((worldfunc.SpacetimePoint(vals[0], vals[1:4]), worldfunc.SpacetimePoint(vals[4], vals[5:8])))
    return pairs


def sigma_rows(pairs, params: worldfunc.DistortionParams):
    rows = []
    for a, b in pairs:
        sm = worldfunc.sigma_minkowski(a, b, params.c)
        rows.append([a.t, *a.x, b.t, *b.x, sm, worldfunc.distortion(sm, params), sm + worldfunc.distortion(sm, params)])
    return rows


SIGMA_HEADER = ["t1", "x1", "y1", "z1", "t2", "x2", "y2", "z2", "sigma_M", "D", "sigma"]


def worldfunc_params(cfg: ExperimentConfig) -> worldfunc.DistortionParams:
    s0 = cfg.get("worldfunc", "sigma0")
    return worldfunc.DistortionParams(cfg.get("worldfunc", "hbar"), cfg.get("worldfunc", "b"),
                                      cfg.get("worldfunc", "c"), s0 or None, cfg.get("worldfunc", "band"))


def run_worldfunc(cfg: ExperimentConfig, base: Path) -> ScenarioResult:
    params = worldfunc_params(cfg)
    pts = cfg.get("worldfunc", "points")
    pairs = read_points(base / pts) if pts else []
    res = ScenarioResult()
    res.outputs["sigma.csv"] = csv_text(SIGMA_HEADER, sigma_rows(pairs, params))
    res.outputs["constants.csv"] = csv_text(["quantity", "value"], [["d", params.d], ["sqrt_d", np.sqrt(params.d)]])
    res.checks["d_order"] = Check(params.d, 1e-21, bool(1e-22 <= params.d < 1e-20), "order")
    res.checks["sqrt_d_order"] = Check(float(np.sqrt(params.d)), 1e-11, bool(1e-12 <= np.sqrt(params.d) < 1e-10),
                                       "order")
    return res


# --------------------------------------------------------------------------
# comparison of density series
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DensitySeries:
    name: str
    times: np.ndarray
    x: np.ndarray
    rho: np.ndarray   # [time, node]

    @classmethod
    def from_csv(cls, name: str, text: str) -> DensitySeries:
        header, data = read_csv(text)
        if header[:3] != RHO_HEADER:
            raise ValueError(f"{name}: expected header {RHO_HEADER}")
        times = np.unique(data[:, 0])
        x = data[data[:, 0] == times[0], 1]
        rho = np.stack([data[data[:, 0] == t, 2] for t in times])
        return cls(name, times, x, rho)

    def at(self, t: float, x: np.ndarray) -> np.ndarray:
        if t <= self.times[0]:
            row = self.rho[0]
        elif t >= self.times[-1]:
            row = self.rho[-1]
        else:
            j = np.searchsorted(self.times, t) - 1
            w = (t - self.times[j]) / (self.times[j + 1] - self.times[j])
            row = (1 - w) * self.rho[j] + w * self.rho[j + 1]
        return np.interp(x, self.x, row, left=0.0, right=0.0)


def compare(series: list[DensitySeries]) -> list[list]:
    """Per-time L1, L2 and max differences for every pair, on the first series' grid and times."""
    if len(series) < 2:
        raise ValueError("compare needs at least two density series")
    ref = series[0]
    lo = max(s.times[0] for s in series)
    hi = min(s.times[-1] for s in series)
    if lo > hi + 1e-12:
        raise ValueError("density series cover disjoint time ranges")
    times = ref.times[(ref.times >= lo - 1e-12) & (ref.times <= hi + 1e-12)]
    x = ref.x
    rows = []
    for i in range(len(series)):
        for j in range(i + 1, len(series)):
            a, b = series[i], series[j]
            for t in times:
                d = np.abs(a.at(t, x) - b.at(t, x))
                rows.append([t, a.name, b.name, float(np.trapezoid(d, x)),
                             float(np.sqrt(np.trapezoid(d * d, x))), float(d.max())])
    return rows


COMPARE_HEADER = ["t", "a", "b", "L1", "L2", "max"]

SCENARIO_FUNCS = {
    "schrodinger-free": run_schrodinger_free,
    "fluid-quantum": run_fluid_quantum,
    "ensemble-classical": run_ensemble_classical,
    "hj": run_hj,
    "gauge-check": run_gauge_check,
    "action-check": run_action_check,
    "verify-identities": run_verify_identities,
    "worldfunc": run_worldfunc,
}
