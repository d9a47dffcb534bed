import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ensemblelab.ensemble import (ParticleEnsemble, csv_header, density_estimate, dump_csv, energies, init_pure,
                                  step)
from ensemblelab.errors import DensityError, VariantError
from ensemblelab.hamiltonian import Classical, EffectiveStochastic, Polynomial, Relativistic
from ensemblelab.numerics import Grid, RngStream, ScalarField, VectorField, integrate_array, sample


def one(x, p):
    a = np.array([[x]])
    return ParticleEnsemble(a, np.array([[p]]), a.copy())


def test_momenta_follow_field_exactly():
    g = Grid.line(-4, 4, 200)
    rho0 = ScalarField(g, np.exp(-g.x ** 2))
    P0 = VectorField(g, (np.sin(g.x) + 0.1 * g.x ** 2,))
    ens = init_pure(rho0, P0, 5000, RngStream(1))
    assert np.array_equal(ens.p[:, 0], sample(P0.components[0], g, ens.x[:, 0]))
    assert np.array_equal(ens.labels, ens.x)


def test_uniform_samples_pass_ks():
    g = Grid.line(0, 1, 64)
    ens = init_pure(ScalarField.constant(g, 1.0), VectorField(g, (np.zeros(64),)), 10_000, RngStream(2024))
    assert stats.kstest(ens.x[:, 0], "uniform").statistic < 0.02


def test_support_confinement():
    g = Grid.line(0, 1, 101)
    rho = np.maximum(0.0, 1.0 - ((g.x - 0.5) / 0.1) ** 2)
    ens = init_pure(ScalarField(g, rho), VectorField(g, (np.zeros(101),)), 20_000, RngStream(3))
    assert ens.x.min() >= 0.4 - 1e-12 and ens.x.max() <= 0.6 + 1e-12


def test_sampling_is_reproducible():
    g = Grid.line(-3, 3, 64)
    rho0, P0 = ScalarField(g, np.exp(-g.x ** 2)), VectorField(g, (g.x,))
    a = init_pure(rho0, P0, 100, RngStream(9))
    b = init_pure(rho0, P0, 100, RngStream(9))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.p, b.p)


def test_init_rejects_bad_density():
    g = Grid.line(0, 1, 16)
    P0 = VectorField(g, (np.zeros(16),))
    with pytest.raises(DensityError):
        init_pure(ScalarField.constant(g, 0.0), P0, 10, RngStream(0))
    with pytest.raises(DensityError):
        init_pure(ScalarField(g, np.linspace(-1, 1, 16)), P0, 10, RngStream(0))


def test_free_classical_step():
    e = step(one(0.0, 1.0), Classical(1.0), 0.1)
    assert e.x[0, 0] == pytest.approx(0.1, abs=1e-15)
    assert e.p[0, 0] == 1.0
    assert e.t == pytest.approx(0.1)


def test_harmonic_energy_drift():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((200, 1))
    p = rng.standard_normal((200, 1))
    ens = ParticleEnsemble(x, p, x.copy())
    model = Classical(1.0, Polynomial((0.0, 0.0, 0.5)))
    e0 = energies(ens, model)
    e1 = energies(step(ens, model, 1e-3, 10_000), model)
    assert np.max(np.abs(e1 - e0) / e0) < 1e-6


def test_free_relativistic_straight_line():
    ens = one(0.0, 0.75)   # v = 0.75 / sqrt(1 + 0.75^2) = 0.6
    model = Relativistic(1.0, 1.0)
    for k in range(1, 6):
        ens = step(ens, model, 0.2)
        assert ens.x[0, 0] == pytest.approx(0.6 * 0.2 * k, abs=1e-12)


def test_step_rejects_effective_model():
    with pytest.raises(VariantError):
        step(one(0.0, 0.0), EffectiveStochastic(), 0.1)


def test_labels_carried_unchanged():
    g = Grid.line(-3, 3, 64)
    ens = init_pure(ScalarField(g, np.exp(-g.x ** 2)), VectorField(g, (g.x,)), 500, RngStream(5))
    out = step(ens, Classical(1.0, Polynomial((0.0, 0.0, 0.5))), 1e-2, 50)
    assert out.labels is ens.labels


def test_point_mass_density():
    g = Grid.line(0, 1, 101)
    x = np.full((50, 1), 0.5)
    d = density_estimate(ParticleEnsemble(x, np.zeros_like(x), x.copy()), g, 0.02)
    assert g.x[np.argmax(d.values)] == pytest.approx(0.5)
    assert integrate_array(d.values, g) == pytest.approx(1.0, abs=1e-12)


def test_uniform_density_flat():
    g = Grid.line(0, 1, 101, "periodic")
    rng = np.random.default_rng(8)
    x = rng.random((100_000, 1))
    d = density_estimate(ParticleEnsemble(x, np.zeros_like(x), x.copy()), g, 2 * g.h)
    assert np.max(np.abs(d.values - 1.0)) < 0.05


def test_gaussian_density_l1():
    g = Grid.line(-6, 6, 481)
    rho0 = np.exp(-g.x ** 2 / 2) / np.sqrt(2 * np.pi)
    ens = init_pure(ScalarField(g, rho0), VectorField(g, (np.zeros(481),)), 100_000, RngStream(12))
    d = density_estimate(ens, g, 0.1)
    assert integrate_array(np.abs(d.values - rho0), g) < 0.05


def test_csv_dump_layout():
    e = one(0.25, -1.0)
    text = dump_csv([e, step(e, Classical(), 0.5)])
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(csv_header(1)) == "t,id,x,p,xi"
    assert lines[2].split(",")[2] == "-0.25"


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dt=st.floats(1e-3, 5e-2), n=st.integers(1, 40))
def test_leapfrog_time_reversible(seed, dt, n):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((20, 1))
    p = rng.standard_normal((20, 1))
    model = Classical(1.0, Polynomial((0.0, 0.0, 0.5, 0.0, 0.1)))
    fwd = step(ParticleEnsemble(x, p, x.copy()), model, dt, n)
    back = step(ParticleEnsemble(fwd.x, -fwd.p, x.copy()), model, dt, n)
    assert np.allclose(back.x, x, atol=1e-10) and np.allclose(-back.p, p, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 2000))
def test_samples_inside_grid(seed, n):
    g = Grid.line(-2, 3, 50)
    rng = np.random.default_rng(seed)
    rho = rng.random(50)
    ens = init_pure(ScalarField(g, rho), VectorField(g, (np.zeros(50),)), n, RngStream(seed))
    assert ens.x.min() >= -2 and ens.x.max() <= 3
