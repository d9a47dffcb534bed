import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ensemblelab import kernels
from ensemblelab._accel import HAVE_NUMBA

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("coeffs", [[0.0], [0.0, 0.3, 0.5], [0.1, 0.0, 0.0, 0.0, 0.05]])
def test_leapfrog_backends_agree(coeffs):
    rng = np.random.default_rng(0)
    x, p = rng.standard_normal((500, 1)), rng.standard_normal((500, 1))
    c = np.array(coeffs, float)
    a = kernels.leapfrog_numba(x, p, 1.3, c, 1e-2, 50)
    b = kernels.leapfrog_numpy(x, p, 1.3, c, 1e-2, 50)
    assert np.allclose(a[0], b[0], rtol=1e-12, atol=1e-12)
    assert np.allclose(a[1], b[1], rtol=1e-12, atol=1e-12)


@needs_numba
@pytest.mark.parametrize("period", [0.0, 4.0])
def test_kde_backends_agree(period):
    rng = np.random.default_rng(1)
    s = rng.uniform(-2, 2, 3000)
    a = kernels.kde_numba(s, -2.0, 4.0 / 200, 200, 0.1, period)
    b = kernels.kde_numpy(s, -2.0, 4.0 / 200, 200, 0.1, period)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_numba
def test_tridiag_backends_agree():
    rng = np.random.default_rng(2)
    n = 300
    a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    b = 6 + rng.standard_normal(n) + 1j * rng.standard_normal(n)
    d = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x1 = kernels.tridiag_numba(a, b, c, d)
    x2 = kernels.tridiag_numpy(a, b, c, d)
    assert np.allclose(x1, x2, rtol=1e-12, atol=1e-12)
    full = np.diag(b) + np.diag(a[1:], -1) + np.diag(c[:-1], 1)
    assert np.allclose(full @ x1, d, atol=1e-11)


@needs_numba
@pytest.mark.parametrize("kind", [kernels.CLASSICAL, kernels.RELATIVISTIC])
def test_hj_flux_backends_agree(kind):
    x = np.linspace(-1, 1, 101)
    h = x[1] - x[0]
    xp = np.concatenate([[x[0] - h], x, [x[-1] + h]])
    padded = 0.5 * xp ** 2 + 0.1 * np.sin(3 * xp)
    coeffs = np.array([0.0, 0.2, 0.5])
    a = kernels.hj_flux_numba(padded, x, h, kind, 1.0, 2.0, coeffs)
    b = kernels.hj_flux_numpy(padded, x, h, kind, 1.0, 2.0, coeffs)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), bw=st.floats(0.05, 0.4))
def test_kde_mass_is_one(seed, bw):
    rng = np.random.default_rng(seed)
    s = rng.normal(0, 0.5, 500)
    m = 801
    h = 16.0 / (m - 1)
    out = kernels.kde(s, -8.0, h, m, bw, 0.0)
    assert abs(np.sum(out) * h - 1.0) < 1e-6


def test_flag_selects_numpy_backend():
    code = "from ensemblelab import kernels, _accel; print(_accel.USE_NUMBA, kernels.kde is kernels.kde_numpy)"
    env = dict(os.environ, ENSEMBLELAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]
