import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from noonsim import hom as H

LP = 1549.6


def test_closed_form_limits():
    assert H.hom_probability_closed(0.0, 6.4, 0.8, LP, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert H.hom_probability_closed(1e9, 6.4, 0.8, LP, 1.0) == pytest.approx(0.5, abs=1e-6)


def test_first_beat_null():
    x = LP ** 2 / (4 * 6.4) / 1000
    assert x == pytest.approx(93.8, abs=0.05)
    assert H.hom_probability_closed(x, 6.4, 1e-9, LP, 1.0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("delta,period", [(6.4, 375.2), (9.6, 250.1), (3.2, 750.4)])
def test_beat_period(delta, period):
    assert H.beat_period(delta, LP) == pytest.approx(period, abs=0.05)


def test_beat_period_degenerate():
    assert H.beat_period(0.0, LP) == math.inf


@pytest.mark.parametrize("delta", [0.0, 3.2, 6.4, 9.6])
def test_numeric_oracle_matches_closed_form(delta):
    period = H.beat_period(delta, LP)
    span = 1200.0 if math.isinf(period) else 3 * period
    x = np.linspace(-span, span, 512)
    spec = H.BiphotonSpectrum.two_lobe(LP, delta, 0.8)
    num = H.hom_probability_numeric(spec, x)
    closed = H.hom_probability_closed(x, delta, 0.8, LP, 1.0)
    assert np.max(np.abs(num - closed)) < 1e-6
    # test-side midpoint integral, independent of the package spectrum builder
    assert np.max(np.abs(oracles.hom_numeric(x, delta, 0.8, LP) - closed)) < 1e-6
    assert np.max(np.abs(num - num[::-1])) < 1e-9


def test_overlapping_lobes_stay_normalized():
    spec = H.BiphotonSpectrum.two_lobe(LP, 0.4, 0.8, bins_per_lobe=64)
    assert np.sum(np.abs(spec.amplitude) ** 2) == pytest.approx(1.0)


def test_unbalanced_splitter_floor():
    spec = H.BiphotonSpectrum.two_lobe(LP, 6.4, 0.8)
    assert H.hom_probability_numeric(spec, 0.0, R=0.502) == pytest.approx((2 * 0.502 - 1) ** 2, rel=1e-9)
    assert H.hom_probability_numeric(spec, 0.0, R=0.5) == pytest.approx(0.0, abs=1e-15)


def test_unnormalized_spectrum_rejected():
    k = np.array([-1.0, 1.0])
    with pytest.raises(ValueError):
        H.BiphotonSpectrum(k, np.array([1.0, 1.0]), LP)
    with pytest.raises(ValueError):
        H.BiphotonSpectrum(np.array([-1.0, 2.0]), np.array([0.5, 0.5]) ** 0.5, LP)


@given(x=st.floats(-3000, 3000), delta=st.floats(0, 12), w=st.floats(0.05, 2), V=st.floats(0, 1))
def test_symmetry_and_envelope(x, delta, w, V):
    p = H.hom_probability_closed(x, delta, w, LP, V)
    assert p == H.hom_probability_closed(-x, delta, w, LP, V)
    assert abs(p - 0.5) <= V / 2 + 1e-15


def test_delta_continuity():
    x = np.linspace(-1200, 1200, 512)
    base = H.hom_probability_closed(x, 0.0, 0.8, LP)
    devs = [np.max(np.abs(H.hom_probability_closed(x, d, 0.8, LP) - base)) for d in (1.0, 0.1, 0.01)]
    assert devs[0] > devs[1] > devs[2] and devs[2] < 1e-4


def test_effective_visibility():
    assert H.effective_visibility(0.0, 0.5, 1.0) == pytest.approx(1.0)
    v = H.effective_visibility(0.025, 0.502, 1.0)
    assert 0.9 <= v < 0.98
    # mode overlap scales the dip depth directly
    assert H.effective_visibility(0.0, 0.5, 0.9) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        H.effective_visibility(1.5)


def test_hom_scan_shapes():
    x = np.linspace(-1200, 1200, 101)
    ideal = H.hom_scan(x, 9.6, 0.8, LP, V=1.0)
    assert ideal.P_hom.min() == pytest.approx(0.0, abs=1e-12)
    assert ideal.x_um[np.argmin(ideal.P_hom)] == pytest.approx(0.0)
    mixed = H.hom_scan(x, 0.0, 0.8, LP, R=0.502, bunch_fraction=0.02, mode_overlap=0.95)
    assert H.dip_visibility(mixed.P_hom, baseline=mixed.P_hom.max()) <= mixed.visibility + 1e-12
    with pytest.raises(ValueError):
        H.hom_scan([], 6.4, 0.8, LP, V=1.0)
