import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from noonsim import counts as K
from noonsim.pairgen import PairProcess

ND = PairProcess("nondegenerate", 6.4)
DEG = PairProcess.degenerate()


def test_db_conversion():
    assert K.db_to_fraction(-24.2) == pytest.approx(3.80e-3, rel=2e-3)
    assert K.db_to_fraction(-25.5) == pytest.approx(2.82e-3, rel=2e-3)
    assert K.fraction_to_db(K.db_to_fraction(-11.0)) == pytest.approx(-11.0)


def test_pair_rate_examples():
    assert K.pair_rate(K.BrightnessSpec(2.7, 0.8, (1.0,)), ND) == pytest.approx(2160.0)
    assert K.pair_rate(K.BrightnessSpec(2.5, 0.8, (1.0, 1.0)), DEG) == pytest.approx(2000.0)
    r1 = K.pair_rate(K.BrightnessSpec(2.7, 0.8, (3.0,)), ND)
    r2 = K.pair_rate(K.BrightnessSpec(2.7, 0.8, (6.0,)), ND)
    assert r2 == 4 * r1
    with pytest.raises(ValueError):
        K.BrightnessSpec(0.0, 0.8)


def test_paper_count_rates():
    rec = K.expected_counts(1e5, 1.0, K.DetectionChain())
    assert rec.raw - rec.accidentals == pytest.approx(1.07, rel=0.01)
    assert rec.singles_s == pytest.approx(1380, rel=1e-3)
    assert rec.singles_i == pytest.approx(1282, rel=1e-3)
    assert rec.accidentals == pytest.approx(1.15e-3, rel=5e-3)
    assert K.car(rec) == pytest.approx(931, rel=5e-3)


def test_efficiency_round_trip():
    chain = K.DetectionChain(dark_hz=0.0)
    rec = K.expected_counts(1e5, 1.0, chain)
    assert rec.net / rec.singles_i == pytest.approx(chain.eta_s, rel=1e-12)
    assert rec.net / rec.singles_s == pytest.approx(chain.eta_i, rel=1e-12)
    ideal = K.DetectionChain(eta_s_db=0.0, eta_i_db=0.0, dark_hz=0.0)
    assert K.expected_counts(500.0, 0.3, ideal).net == pytest.approx(150.0)


def test_accidentals():
    assert K.accidentals(1380, 1282, 650e-12) == pytest.approx(1.15e-3, rel=5e-3)
    assert K.accidentals(1380, 1282, 0.0) == 0
    assert K.accidentals(2760, 2564, 650e-12) == pytest.approx(4 * K.accidentals(1380, 1282, 650e-12))


def test_car_edge_cases():
    assert K.car(K.CountRecord(1, 1, 1.0, 1.0, 1)) == 0.0
    assert K.car(K.CountRecord(1, 1, 1.0, 0.0, 1)) == math.inf


def test_sampler_zero_and_determinism():
    rec = K.CountRecord(0.0, 0.0, 0.0, 0.0, 10.0)
    assert K.sample_counts(rec, 1).raw == 0
    rec = K.expected_counts(1e5, 1.0, K.DetectionChain(t_per_point_s=10))
    assert K.sample_counts(rec, 7) == K.sample_counts(rec, 7)
    with pytest.raises(ValueError):
        K.sample_counts(K.CountRecord(1, 1, 1, 0, 0.0), 1)


def test_poisson_moments():
    rng = K.make_rng(11)
    for lam in (100.0, 1e6):
        d = rng.poisson(lam, 10_000)
        assert abs(d.mean() - lam) / math.sqrt(lam / d.size) < 5
        assert 0.9 <= d.var() / d.mean() <= 1.1


def test_visibility():
    assert K.visibility(10, 0) == 1.0
    assert K.visibility(1000, 9) == pytest.approx(0.991)
    with pytest.raises(ValueError):
        K.visibility(5, 6)
    with pytest.raises(ValueError):
        K.visibility(0, 0)
    with pytest.warns(K.VisibilityWarning):
        assert K.visibility(10, -1) > 1


@given(nmax=st.floats(1, 1e6), frac=st.floats(0, 1), floor=st.floats(0, 1e4))
def test_subtraction_never_lowers_visibility(nmax, frac, floor):
    nmin = nmax * frac
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert K.visibility(nmax, nmin) >= K.visibility(nmax + floor, nmin + floor) - 1e-12


def test_chain_validation():
    with pytest.raises(ValueError):
        K.DetectionChain(eta_s_db=1.0)
    with pytest.raises(ValueError):
        K.DetectionChain(gate_ps=0)


def test_residual_loss_budget():
    # -24.2 dB total with an 8 % detector leaves about -13.2 dB before the detector
    assert K.residual_loss_db(-24.2, 0.08) == pytest.approx(-24.2 + 10.969, abs=1e-3)
