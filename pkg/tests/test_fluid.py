import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ensemblelab.clebsch import ClebschData, LabelMap
from ensemblelab.errors import CausticError, CFLError, HistoryError, VariantError
from ensemblelab.fluid import (FluidState, HJState, fluid_csv_header, fluid_csv_rows, initial_state,
                               quantum_potential, residual_report, run_fluid, run_hj, step_fluid, step_hj)
from ensemblelab.hamiltonian import Classical, Relativistic
from ensemblelab.numerics import Grid, ScalarField, VectorField


def gaussian_state(n=256, p_slope=0.0, L=7.0, periodic=False):
    g = Grid.line(-L, L, n, "periodic" if periodic else "clamped")
    rho = ScalarField(g, np.exp(-g.x ** 2 / 2) / np.sqrt(2 * np.pi))
    p0 = VectorField(g, (p_slope * g.x,)) if p_slope else None
    return initial_state(rho, p0)


def periodic_state(n=128):
    g = Grid.line(0, 2 * np.pi, n, "periodic")
    return initial_state(ScalarField(g, np.exp(np.cos(g.x))), VectorField(g, (0.2 * np.sin(g.x),)))


def test_uniform_rest_state_is_stationary():
    g = Grid.line(0, 1, 64)
    st0 = initial_state(ScalarField.constant(g, 1.0))
    st1 = run_fluid(st0, Classical(), 1e-3, 20, quantum=True)[-1]
    assert np.array_equal(st1.rho.values, st0.rho.values)
    assert np.array_equal(st1.phi.values, st0.phi.values)
    assert np.array_equal(st1.xi.xi[0].values, st0.xi.xi[0].values)


def test_uniform_periodic_flow():
    g = Grid.line(0, 2 * np.pi, 64, "periodic")
    pbar, b0, t = 0.7, 1.3, 1.0
    s0 = initial_state(ScalarField.constant(g, 0.5), VectorField(g, (np.full(64, pbar),)), b0)
    s1 = run_fluid(s0, Classical(), 1e-2, 100)[-1]
    assert np.ptp(s1.rho.values) < 1e-12
    assert np.allclose(s1.P.components[0], pbar, atol=1e-12)
    # b0 (phi_t + g xi_t) = -H(pbar): the label-invariant part of phi falls at rate H/b0
    gval = pbar / b0
    drift = s1.phi.values + gval * (s1.xi.xi[0].values - s0.xi.xi[0].values)
    assert np.allclose(drift, -0.5 * pbar ** 2 * t / b0, atol=1e-12)


def test_uniform_flow_gradient_gauge():
    g = Grid.line(-1, 1, 64)
    pbar, b0 = 0.4, 2.0
    s0 = FluidState(0.0, ScalarField.constant(g, 1.0), ScalarField(g, pbar * g.x / b0), LabelMap.standard(g),
                    ClebschData.zero(1, b0))
    s1 = run_fluid(s0, Classical(), 1e-2, 50)[-1]
    assert np.ptp(s1.rho.values) < 1e-12
    assert np.allclose(s1.phi.values - s0.phi.values, -0.5 * pbar ** 2 * 0.5 / b0, atol=1e-12)


def test_quantum_potential_gaussian():
    g = Grid.line(-6, 6, 1201)
    rho = np.exp(-g.x ** 2 / 2)
    uq = quantum_potential(rho, g, 1.0, 1.0, 0.5)
    err = np.abs(uq + 0.5 * (g.x ** 2 / 4 - 0.5))
    assert np.max(err[np.abs(g.x) < 2]) < 1e-5
    assert np.max(err) < 1e-3


def test_quantum_spreading_beats_classical():
    s0 = gaussian_state()
    q = run_fluid(s0, Classical(), 5e-4, 400, quantum=True)[-1]
    c = run_fluid(s0, Classical(), 5e-4, 400, quantum=False)[-1]
    assert np.array_equal(c.rho.values, s0.rho.values)
    assert q.rho.values.max() < s0.rho.values.max()


def test_fluid_rejects_relativistic_and_bad_dt():
    s0 = gaussian_state(64)
    with pytest.raises(VariantError):
        step_fluid(s0, Relativistic(), 1e-3)
    with pytest.raises(ValueError):
        step_fluid(s0, Classical(), 0.0)


def test_cfl_abort():
    g = Grid.line(0, 1, 64, "periodic")
    s0 = initial_state(ScalarField.constant(g, 1.0), VectorField(g, (np.full(64, 10.0),)))
    with pytest.raises(CFLError):
        step_fluid(s0, Classical(), 1e-2)


def test_caustic_abort():
    g = Grid.line(-1, 1, 128)
    s0 = initial_state(ScalarField.constant(g, 1.0), VectorField(g, (-50.0 * g.x,)))
    with pytest.raises(CausticError):
        step_fluid(s0, Classical(), 1e-5)


def test_mass_conserved_periodic():
    s0 = periodic_state()
    s1 = run_fluid(s0, Classical(), 1e-3, 200, quantum=True)[-1]
    assert abs(s1.mass() - s0.mass()) < 1e-13


def test_fluid_homogeneous_in_rho():
    s0 = periodic_state()
    a = run_fluid(s0, Classical(), 5e-4, 40, quantum=True)[-1]
    b = run_fluid(s0.scaled(4.0), Classical(), 5e-4, 40, quantum=True)[-1]
    assert np.array_equal(b.rho.values, 4.0 * a.rho.values)
    assert np.array_equal(b.phi.values, a.phi.values)


def test_hj_plane_waves():
    g = Grid.line(-1, 1, 512)
    p0, t = 0.7, 0.5
    s = run_hj(HJState(0.0, ScalarField(g, p0 * g.x)), Classical(), 1e-3, 500)
    assert np.max(np.abs(s.Phi.values - (p0 * g.x - 0.5 * p0 ** 2 * t))) < 1e-8
    s = run_hj(HJState(0.0, ScalarField(g, p0 * g.x)), Relativistic(1.0, 1.0), 1e-3, 500)
    assert np.max(np.abs(s.Phi.values - (p0 * g.x - np.sqrt(1 + p0 ** 2) * t))) < 1e-8


def test_hj_quadratic():
    g = Grid.line(-1, 1, 512)
    n = int(np.ceil(0.5 / (0.2 * g.h)))
    s = run_hj(HJState(0.0, ScalarField(g, g.x ** 2 / 2)), Classical(), 0.5 / n, n)
    assert np.max(np.abs(s.Phi.values - g.x ** 2 / 3)) < 1e-3


def test_hj_cfl_abort():
    g = Grid.line(-1, 1, 64)
    with pytest.raises(CFLError):
        step_hj(HJState(0.0, ScalarField(g, 5 * g.x)), Classical(), 1.0)


def test_residuals_zero_on_stationary_state():
    g = Grid.line(0, 1, 32)
    s0 = initial_state(ScalarField.constant(g, 1.0))
    hist = run_fluid(s0, Classical(), 1e-3, 3, save_every=1)
    table = residual_report(hist, Classical())
    assert all(r.max == 0.0 for r in table.rows.values())


def test_residuals_shrink_with_dt():
    s0 = gaussian_state(256, 0.3)
    coarse = residual_report(run_fluid(s0, Classical(), 2e-3, 4, save_every=1), Classical())
    fine = residual_report(run_fluid(s0, Classical(), 1e-3, 8, save_every=1), Classical())
    for fam in ("hamilton_jacobi", "continuity", "lin"):
        assert fine[fam].max < coarse[fam].max / 1.8, fam
        assert fine[fam].max < 1e-4


def test_corrupted_phi_detected():
    s0 = gaussian_state(256, 0.3)
    hist = run_fluid(s0, Classical(), 1e-3, 3, save_every=1)
    bad = [FluidState(s.t, s.rho, ScalarField(s.grid, s.phi.values + (0.1 * np.sin(s.grid.x) if k == 1 else 0)),
                      s.xi, s.clebsch) for k, s in enumerate(hist)]
    assert residual_report(bad, Classical())["hamilton_jacobi"].max > 1e-2
    assert residual_report(hist, Classical())["hamilton_jacobi"].max < 1e-4


def test_residual_history_checks():
    s0 = gaussian_state(64)
    with pytest.raises(HistoryError):
        residual_report([s0, s0], Classical())
    with pytest.raises(HistoryError):
        residual_report([s0, s0, s0], Classical())


def test_csv_rows():
    s0 = gaussian_state(16)
    rows = fluid_csv_rows(s0)
    assert len(rows) == 16 and len(rows[0]) == len(fluid_csv_header())


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), quantum=st.booleans())
def test_mass_conservation_property(seed, quantum):
    rng = np.random.default_rng(seed)
    g = Grid.line(0, 2 * np.pi, 64, "periodic")
    k = rng.integers(1, 3)
    rho = 1.0 + 0.3 * np.cos(k * g.x + rng.uniform(0, 6))
    p = 0.2 * np.sin(g.x + rng.uniform(0, 6))
    s0 = initial_state(ScalarField(g, rho), VectorField(g, (p,)))
    s1 = run_fluid(s0, Classical(), 5e-3, 10, quantum=quantum)[-1]
    assert abs(s1.mass() - s0.mass()) < 1e-12 * s0.mass()


@settings(max_examples=20, deadline=None)
@given(p0=st.floats(-2, 2), m=st.floats(0.5, 3))
def test_hj_plane_wave_property(p0, m):
    g = Grid.line(-1, 1, 64)
    dt = 0.2 * g.h * m / max(abs(p0), 1e-3)
    dt = min(dt, 0.01)
    s = run_hj(HJState(0.0, ScalarField(g, p0 * g.x)), Classical(m), dt, 10)
    assert np.max(np.abs(s.Phi.values - (p0 * g.x - p0 * p0 / (2 * m) * s.t))) < 1e-8
