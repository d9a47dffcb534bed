import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ensemblelab.clebsch import (ClebschData, LabelMap, SmoothMap, SmoothScalar, clebsch_momentum, cofactors,
                                 det_hessian, example_wavy_map, fit_g_from_initial, relabel,
                                 verify_integration, verify_jacobian_identities, vorticity)
from ensemblelab.errors import FieldError, SingularJacobianError
from ensemblelab.numerics import Grid, ScalarField, VectorField, gradient


@pytest.fixture
def line():
    return Grid.line(-3, 3, 121)


def test_pure_gradient_momentum(line):
    p = clebsch_momentum(ScalarField(line, line.x), LabelMap.standard(line), ClebschData.zero(1))
    assert np.allclose(p.components[0], 1.0, atol=1e-12)


def test_rotational_term_momentum(line):
    data = ClebschData(1.0, (lambda xi: xi,))
    p = clebsch_momentum(ScalarField.constant(line, 0.0), LabelMap.standard(line), data)
    assert np.allclose(p.components[0], line.x, atol=1e-14)


def test_potential_g_matches_gradient_exact_on_linear_labels():
    g = Grid((-1, -1), (1, 1), (21, 21))
    x, y = g.mesh()
    xi = (ScalarField(g, 2 * x + y), ScalarField(g, x - y))
    data = ClebschData(1.0, (lambda a, b: a, lambda a, b: b))
    p = clebsch_momentum(ScalarField.constant(g, 0.0), LabelMap(xi), data)
    a, b = xi[0].values, xi[1].values
    assert np.max(np.abs(p.components[0] - (2 * a + b))) < 1e-8
    assert np.max(np.abs(p.components[1] - (a - b))) < 1e-8


def test_vorticity_examples():
    assert vorticity(ClebschData.constant([1.0, 2.0]), [0.3, 0.4]).irrotational
    om = vorticity(ClebschData(1.0, (lambda a, b: b, lambda a, b: 0.0 * a)), [0.3, -0.2])
    assert not om.irrotational
    grad = vorticity(ClebschData(1.0, (lambda a, b: b, lambda a, b: a)), [0.7, 1.1])
    assert np.max(np.abs(grad.omega)) < 1e-10
    with pytest.raises(FieldError):
        vorticity(ClebschData.zero(2), [0.0])


def test_vorticity_index_convention():
    om = vorticity(ClebschData(1.0, (lambda a, b: b, lambda a, b: 0.0 * a)), [0.3, -0.2]).omega
    # Omega[a, b] = dg^a/dxi_b - dg^b/dxi_a
    assert om[0, 1] == pytest.approx(1.0, abs=1e-10)
    assert om[1, 0] == pytest.approx(-1.0, abs=1e-10)


def test_identities_identity_and_linear_maps():
    for m in (SmoothMap.identity(3), SmoothMap.linear([[2.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])):
        rep = verify_jacobian_identities(m, [0.1, 0.2, 0.3])
        assert rep.max_residual() < 1e-12
        assert rep.passed()


def test_identities_wavy_map():
    rep = verify_jacobian_identities(example_wavy_map(), [0.2, 0.5, -0.3], 1e-3)
    assert rep.max_residual() < 1e-6
    for name in ("divergence", "piola"):
        fam = rep.families[name]
        assert fam.residual < 1e-11 or 3.0 <= fam.ratio <= 5.0
    assert rep.passed()


def test_cofactors_and_second_minors():
    rng = np.random.default_rng(5)
    m = rng.standard_normal((4, 4))
    c = cofactors(m)
    assert np.allclose(m @ c.T, np.linalg.det(m) * np.eye(4), atol=1e-12)
    # d2J/dM[i,k] dM[s,l] from finite differences of cofactors
    d2 = det_hessian(m)
    e = 1e-6
    for s, l in ((0, 1), (2, 3)):
        mp, mm = m.copy(), m.copy()
        mp[s, l] += e
        mm[s, l] -= e
        fd = (cofactors(mp) - cofactors(mm)) / (2 * e)
        assert np.allclose(d2[:, :, s, l], fd, atol=1e-6)


def test_singular_jacobian_raises():
    with pytest.raises(SingularJacobianError):
        verify_jacobian_identities(SmoothMap.linear(np.zeros((3, 3))), [0.0, 0.0, 0.0])


def test_integration_zero_momentum():
    rep = verify_integration(example_wavy_map(), SmoothScalar.constant(1.0, 3), ClebschData.zero(2), [0.1, 0.2, 0.3])
    assert np.all(rep.residual == 0.0)
    assert rep.relative == 0.0


def test_integration_gradient_and_rotational():
    rng = np.random.default_rng(11)
    xmap = SmoothMap.random(3, rng)
    phi = SmoothScalar.random(3, rng)
    pt = [0.2, -0.1, 0.4]
    assert verify_integration(xmap, phi, ClebschData.zero(2), pt, 1e-3).relative < 1e-6
    rot = ClebschData(1.0, (lambda a, b: b, lambda a, b: 0.0 * a))
    rep = verify_integration(xmap, phi, rot, pt, 1e-3)
    assert rep.relative < 1e-6
    assert 3.0 <= rep.ratio <= 5.0


def test_fit_g_examples(line):
    zero = fit_g_from_initial(VectorField(line, (np.zeros(line.shape),)), 1.0)
    assert np.all(zero.eval_g([line.x])[0] == 0)
    const = fit_g_from_initial(VectorField(line, (np.full(line.shape, 0.7),)), 1.0)
    assert np.allclose(const.eval_g([np.array([0.0, 1.3])])[0], 0.7)
    s = fit_g_from_initial(VectorField(line, (np.sin(line.x),)), 2.0)
    pts = np.linspace(-2.5, 2.5, 7)
    assert np.allclose(s.eval_g([pts])[0], np.sin(pts) / 2, atol=2e-4)
    with pytest.raises(ValueError):
        fit_g_from_initial(VectorField(line, (np.zeros(line.shape),)), 0.0)


def test_fit_reproduces_initial_momentum(line):
    p0 = VectorField(line, (np.cos(line.x),))
    data = fit_g_from_initial(p0, 2.0)
    p = clebsch_momentum(ScalarField.constant(line, 0.0), LabelMap.standard(line), data)
    assert np.allclose(p.components[0], p0.components[0], atol=1e-12)


def test_relabel_preserves_momentum():
    g = Grid((-1, -1), (1, 1), (31, 31))
    labels = LabelMap.standard(g)
    data = ClebschData(1.0, (lambda a, b: b, lambda a, b: 0.0 * a))
    shear = 0.3
    new_labels, new_data = relabel(labels, data,
                                   lambda a, b: (a + shear * b, b),
                                   lambda a, b: (a - shear * b, b),
                                   lambda a, b: [[np.ones_like(a), shear * np.ones_like(a)],
                                                 [np.zeros_like(a), np.ones_like(a)]])
    phi = ScalarField.constant(g, 0.0)
    p1 = clebsch_momentum(phi, labels, data)
    p2 = clebsch_momentum(phi, new_labels, new_data)
    for a, b in zip(p1.components, p2.components):
        assert np.allclose(a, b, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), d=st.sampled_from([3, 4]))
def test_identities_on_random_maps(seed, d):
    rng = np.random.default_rng(seed)
    xmap = SmoothMap.random(d, rng)
    rep = verify_jacobian_identities(xmap, 0.5 * rng.standard_normal(d), 1e-3)
    assert rep.passed()


@settings(max_examples=30, deadline=None)
@given(c=st.lists(st.floats(-5, 5), min_size=2, max_size=3), pt=st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_constant_g_always_irrotational(c, pt):
    data = ClebschData.constant(c)
    assert vorticity(data, pt[:data.n]).irrotational
