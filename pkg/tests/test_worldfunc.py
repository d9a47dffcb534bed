import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ensemblelab.worldfunc import (DistortionParams, SpacetimePoint, boost, distortion, sigma_distorted,
                                   sigma_minkowski)

finite = st.floats(-1e3, 1e3)


def test_sigma_minkowski_examples():
    a = SpacetimePoint(0.3, (1.0, 2.0, 3.0))
    assert sigma_minkowski(a, a, 1.0) == 0.0
    assert sigma_minkowski(SpacetimePoint(1.0), SpacetimePoint(0.0), 1.0) == pytest.approx(0.5)
    assert sigma_minkowski(SpacetimePoint(2.0, (2.0,)), SpacetimePoint(0.0), 1.0) == pytest.approx(0.0)


def test_distorted_branches():
    p = DistortionParams()
    spacelike = (SpacetimePoint(0.0), SpacetimePoint(0.0, (1.0,)))
    assert sigma_distorted(*spacelike, p) == sigma_minkowski(*spacelike, p.c)
    deep = (SpacetimePoint(0.0), SpacetimePoint(1e-9))
    assert sigma_distorted(*deep, p) == sigma_minkowski(*deep, p.c) + p.d


def test_cgs_elementary_length():
    p = DistortionParams()
    assert p.d == pytest.approx(1.7577e-21, rel=1e-3)
    assert np.sqrt(p.d) == pytest.approx(4.19e-11, rel=1e-2)
    assert 1e-22 <= p.d < 1e-20


def test_band_variants():
    p_ramp = DistortionParams(1.0, 0.5, 1.0)  # d = 1
    p_step = DistortionParams(1.0, 0.5, 1.0, band="step")
    assert distortion(0.5, p_ramp) == pytest.approx(0.5)
    assert distortion(0.5, p_step) == 0.0
    assert distortion(2.0, p_ramp) == distortion(2.0, p_step) == 1.0
    assert distortion(-1.0, p_ramp) == 0.0


def test_parameter_validation():
    with pytest.raises(ValueError):
        DistortionParams(hbar=-1.0)
    with pytest.raises(ValueError):
        DistortionParams(band="smooth")
    with pytest.raises(ValueError):
        SpacetimePoint(float("nan"))


@settings(max_examples=60, deadline=None)
@given(t1=finite, t2=finite, x1=finite, x2=finite, beta=st.floats(-0.9, 0.9))
def test_sigma_lorentz_invariant(t1, t2, x1, x2, beta):
    a, b = SpacetimePoint(t1, (x1, 0.3, 0.0)), SpacetimePoint(t2, (x2, -0.1, 0.2))
    s = sigma_minkowski(a, b, 1.0)
    sb = sigma_minkowski(boost(a, beta, 1.0), boost(b, beta, 1.0), 1.0)
    scale = max(1.0, t1 * t1 + t2 * t2 + x1 * x1 + x2 * x2)
    assert abs(s - sb) < 1e-9 * scale / (1 - beta * beta)


@settings(max_examples=60, deadline=None)
@given(t1=finite, t2=finite, x1=finite, x2=finite)
def test_sigma_symmetric_and_distortion_bounded(t1, t2, x1, x2):
    p = DistortionParams(1.0, 0.5, 1.0)
    a, b = SpacetimePoint(t1, (x1,)), SpacetimePoint(t2, (x2,))
    assert sigma_minkowski(a, b, 1.0) == sigma_minkowski(b, a, 1.0)
    d = sigma_distorted(a, b, p) - sigma_minkowski(a, b, 1.0)
    assert 0.0 <= d <= p.d + 1e-12
