import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ensemblelab.errors import DensityError, FieldError, GridError
from ensemblelab.numerics import (Grid, RngStream, ScalarField, VectorField, divergence, floored_density,
                                  grad_log, gradient, integrate, laplacian, sample, sqrt_laplacian_ratio)


def order(errors, ns):
    return np.log(errors[0] / errors[1]) / np.log(ns[1] / ns[0])


def test_gradient_of_constant_is_zero():
    g = Grid.line(0, 1, 32)
    assert np.all(gradient(ScalarField.constant(g, 5.0)).components[0] == 0)


def test_gradient_exact_on_linear():
    g = Grid.line(-1, 2, 40)
    d = gradient(ScalarField(g, 3 * g.x)).components[0]
    assert np.max(np.abs(d[1:-1] - 3.0)) < 1e-10
    assert np.max(np.abs(d - 3.0)) < 1e-10


def test_gradient_periodic_sin_order():
    errs, ns = [], (256, 512)
    for n in ns:
        g = Grid.line(0, 2 * np.pi, n, "periodic")
        d = gradient(ScalarField(g, np.sin(g.x))).components[0]
        errs.append(np.max(np.abs(d - np.cos(g.x))))
    assert order(errs, ns) >= 1.9


def test_laplacian_constant_and_quadratic():
    g = Grid.line(-2, 2, 41)
    assert np.all(laplacian(ScalarField.constant(g, 1.7)).values == 0)
    lap = laplacian(ScalarField(g, g.x ** 2)).values
    assert np.max(np.abs(lap[1:-1] - 2.0)) < 1e-9


def test_laplacian_periodic_sin_order():
    errs, ns = [], (256, 512)
    for n in ns:
        g = Grid.line(0, 2 * np.pi, n, "periodic")
        lap = laplacian(ScalarField(g, np.sin(g.x))).values
        errs.append(np.max(np.abs(lap + np.sin(g.x))))
    assert order(errs, ns) >= 1.9


def test_integrate_examples():
    g = Grid.line(0, 1, 101)
    assert integrate(ScalarField.constant(g, 1.0)) == pytest.approx(1.0, abs=1e-14)
    gp = Grid.line(0, 2 * np.pi, 128, "periodic")
    assert abs(integrate(ScalarField(gp, np.sin(gp.x)))) < 1e-12
    s = 0.7
    gg = Grid.line(-8 * s, 8 * s, 801)
    rho = np.exp(-gg.x ** 2 / (2 * s * s)) / np.sqrt(2 * np.pi * s * s)
    assert abs(integrate(ScalarField(gg, rho)) - 1.0) < 1e-8


def test_two_dimensional_operators():
    g = Grid((0, 0), (2 * np.pi, 2 * np.pi), (64, 64), "periodic")
    x, y = g.mesh()
    f = ScalarField(g, np.sin(x) * np.cos(y))
    gx, gy = gradient(f).components
    assert np.max(np.abs(gx - np.cos(x) * np.cos(y))) < 1e-2
    assert np.max(np.abs(gy + np.sin(x) * np.sin(y))) < 1e-2
    div = divergence(gradient(f)).values
    assert np.max(np.abs(div + 2 * f.values)) < 5e-2


def test_grid_and_field_validation():
    with pytest.raises(GridError):
        Grid.line(1, 0, 16)
    with pytest.raises(GridError):
        Grid.line(0, 1, 4)
    with pytest.raises(GridError):
        Grid.line(0, 1, 16, "reflecting")
    g = Grid.line(0, 1, 16)
    with pytest.raises(FieldError):
        ScalarField(g, np.zeros(15))
    with pytest.raises(FieldError):
        ScalarField(g, np.full(16, np.nan))
    with pytest.raises(FieldError):
        VectorField(g, (np.zeros(16), np.zeros(16)))


def test_fields_are_read_only():
    g = Grid.line(0, 1, 16)
    f = ScalarField(g, np.zeros(16))
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_rng_stream_restarts():
    r = RngStream(42)
    assert np.array_equal(r.generator().random(5), r.generator().random(5))
    with pytest.raises(ValueError):
        RngStream(-1)


def test_floored_density_rejects_negative():
    with pytest.raises(DensityError):
        floored_density(np.array([1.0, -0.5, 1.0]))


def test_grad_log_gaussian():
    g = Grid.line(-5, 5, 401)
    rho = np.exp(-g.x ** 2 / 2)
    assert np.max(np.abs(grad_log(rho, g)[0] + g.x)) < 1e-3


def test_sqrt_laplacian_ratio_gaussian():
    # lap(sqrt rho)/sqrt rho = x^2/4 - 1/2 for rho = exp(-x^2/2)
    g = Grid.line(-5, 5, 801)
    rho = np.exp(-g.x ** 2 / 2)
    q = sqrt_laplacian_ratio(rho, g)
    assert np.max(np.abs(q - (g.x ** 2 / 4 - 0.5))) < 1e-3


def test_sample_linear_interpolation():
    g = Grid.line(0, 1, 11)
    vals = 2 * g.x + 1
    pts = np.array([0.05, 0.5, 0.97])
    assert np.allclose(sample(vals, g, pts), 2 * pts + 1, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(a=st.sampled_from([0.25, 0.5, 2.0, 4.0, 1024.0]), seed=st.integers(0, 2 ** 32 - 1))
def test_log_stencils_scale_free(a, seed):
    rng = np.random.default_rng(seed)
    g = Grid.line(0, 1, 32)
    rho = np.exp(0.3 * rng.standard_normal(32))
    assert np.array_equal(grad_log(a * rho, g)[0], grad_log(rho, g)[0])
    assert np.array_equal(sqrt_laplacian_ratio(a * rho, g), sqrt_laplacian_ratio(rho, g))


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-5, 5), seed=st.integers(0, 2 ** 32 - 1))
def test_gradient_linear_in_field(c, seed):
    rng = np.random.default_rng(seed)
    g = Grid.line(0, 1, 20, "periodic")
    f, h = rng.standard_normal(20), rng.standard_normal(20)
    lhs = gradient(ScalarField(g, f + c * h)).components[0]
    rhs = gradient(ScalarField(g, f)).components[0] + c * gradient(ScalarField(g, h)).components[0]
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + abs(c)) / g.h)
