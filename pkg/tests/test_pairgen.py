import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from noonsim import circuit as C
from noonsim import pairgen as G
from noonsim.errors import ConfigError
from noonsim.fock import FockOccupation, QuantumState

SINGLE = C.PumpField.single(1549.6, 1.0)
DUAL = C.PumpField.dual(1549.6, 22.4, 2.0)
ND = G.PairProcess("nondegenerate", 6.4)
DEG = G.PairProcess.degenerate()
PHIS = np.linspace(0, 2 * np.pi, 64, endpoint=False)


def test_gamma_from_length():
    assert G.gamma_from_length(5.2, 5.2, 1.3) == 1.3
    assert G.gamma_from_length(10.4, 5.2, 1.0) ** 2 == pytest.approx(4.0)
    assert math.sqrt(0.02) * 5.2 == pytest.approx(0.735, abs=5e-4)
    with pytest.raises(ValueError):
        G.gamma_from_length(0.0, 5.2, 1.0)


def test_degenerate_bunch_and_split_states():
    a, _ = DEG.photon_modes(DUAL, "A")
    b, _ = DEG.photon_modes(DUAL, "B")
    s0 = G.generate_pair_state(C.two_source_mzi(phi=0.0), DUAL, DEG)
    noon = QuantumState.from_terms({FockOccupation.of({a: 2}): 1, FockOccupation.of({b: 2}): -1}, normalize=True)
    assert s0.overlap(noon) == pytest.approx(1.0, abs=1e-12)
    s1 = G.generate_pair_state(C.two_source_mzi(phi=math.pi / 2), DUAL, DEG)
    assert s1.overlap(QuantumState.fock([a, b])) == pytest.approx(1.0, abs=1e-12)


def test_nondegenerate_split_state():
    sa, ia = ND.photon_modes(SINGLE, "A")
    sb, ib = ND.photon_modes(SINGLE, "B")
    s = G.generate_pair_state(C.two_source_mzi(phi=math.pi / 2), SINGLE, ND)
    want = QuantumState.from_terms({FockOccupation.of([sa, ib]): 1, FockOccupation.of([ia, sb]): 1}, normalize=True)
    assert s.overlap(want) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("process,pump", [(ND, SINGLE), (DEG, DUAL)])
def test_matches_closed_form_state(process, pump):
    for phi in PHIS:
        sim = G.generate_pair_state(C.two_source_mzi(phi=phi), pump, process)
        assert sim.overlap(G.ideal_output_state(phi, process, pump)) >= 1 - 1e-9


def test_split_bunch_examples():
    a, _ = DEG.photon_modes(DUAL, "A")
    b, _ = DEG.photon_modes(DUAL, "B")
    assert G.split_bunch_probabilities(QuantumState.fock([a, b])) == pytest.approx((1, 0, 0))
    noon = QuantumState.from_terms({FockOccupation.of({a: 2}): 1, FockOccupation.of({b: 2}): -1}, normalize=True)
    assert G.split_bunch_probabilities(noon) == pytest.approx((0, 0.5, 0.5))
    eq1 = G.ideal_output_state(math.pi / 4, DEG, DUAL)
    assert G.split_bunch_probabilities(eq1) == pytest.approx((0.5, 0.25, 0.25))
    with pytest.raises(ValueError):
        G.split_bunch_probabilities(QuantumState.fock([a]))


def test_no_source_segments():
    c = C.CircuitSpec((C.Coupler(), C.PhaseShifter(), C.Coupler()))
    with pytest.raises(ConfigError, match="no SFWM region"):
        G.generate_pair_state(c, SINGLE, ND)


def test_process_pump_consistency():
    with pytest.raises(ConfigError):
        G.generate_pair_state(C.two_source_mzi(), DUAL, ND)
    with pytest.raises(ValueError):
        G.PairProcess("nondegenerate", 0.0)


def test_quantum_fringe_ideal_and_exchange_symmetry():
    nd = G.quantum_fringe(C.two_source_mzi(), SINGLE, ND, PHIS)
    dg = G.quantum_fringe(C.two_source_mzi(), DUAL, DEG, PHIS)
    assert np.allclose(nd.P_split, np.sin(PHIS) ** 2, atol=1e-10)
    assert np.allclose(nd.P_split, dg.P_split, atol=1e-12)
    q = G.quantum_fringe(C.two_source_mzi(), SINGLE, ND, [0, math.pi / 4, math.pi / 2])
    assert q.P_split == pytest.approx([0, 0.5, 1], abs=1e-12)
    with pytest.raises(ValueError):
        G.quantum_fringe(C.two_source_mzi(), SINGLE, ND, [])


@given(phi=st.floats(-7, 7), R=st.floats(0.05, 0.95))
def test_against_dense_oracle(phi, R):
    """Probabilities match an independent dense-tensor calculation, any R."""
    c = C.two_source_mzi(coupler_R=R, phi=phi)
    em = G.pair_emission(c, SINGLE, ND)
    got = np.array(G.split_bunch_probabilities(em.state))
    want = np.array(oracles.outcome_weights(oracles.two_photon_tensor(phi, R)))
    assert np.allclose(got, want, atol=1e-12)


def test_corrected_bunch_examples():
    g = math.sqrt(0.025)
    assert G.corrected_bunch_model(1, 0, 0.7) == pytest.approx((math.cos(0.7) ** 2,) * 2)
    pa, pb = G.corrected_bunch_model(1, g, math.pi / 2)
    assert pa == pytest.approx(0.025) and pb == pytest.approx(0.025)
    pa, pb = G.corrected_bunch_model(1, 0.1581, 0.0)
    assert pa == pytest.approx(1.0) and pb == pytest.approx(1.732, abs=1e-3)
    with pytest.raises(ValueError):
        G.corrected_bunch_model(0, 0.1, 0)


@pytest.mark.parametrize("process,pump", [(ND, SINGLE), (DEG, DUAL)])
def test_corrected_fringe_equivalence_with_output_sources(process, pump):
    ratios = (0.025, 0.021)
    lin, outs = G.io_lengths_from_ratio(ratios, 5.2, 0.0)
    c = C.two_source_mzi(output_length_mm=outs, io_sources=True)
    f = G.quantum_fringe(c, pump, process, PHIS)
    for arm, w, r in (("A", f.W_bunch_A, ratios[0]), ("B", f.W_bunch_B, ratios[1])):
        pa, pb = G.corrected_bunch_model(1.0, math.sqrt(r), PHIS)
        ref = pa if arm == "A" else pb
        assert np.allclose(w / w.max(), ref / ref.max(), atol=1e-8)


def test_corrected_fringe_against_dense_oracle():
    g = (math.sqrt(0.025), math.sqrt(0.021))
    _, outs = G.io_lengths_from_ratio((0.025, 0.021), 5.2, 0.0)
    c = C.two_source_mzi(output_length_mm=outs, io_sources=True)
    for phi in PHIS[::7]:
        em = G.pair_emission(c.with_phase(phi), SINGLE, ND)
        got = np.array(G.split_bunch_probabilities(em.state))
        want = np.array(oracles.outcome_weights(oracles.two_photon_tensor(phi, 0.5, g)))
        assert np.allclose(got, want, atol=1e-12)


def test_loss_compensated_lengths_reproduce_ratio():
    def build(lin, outs):
        return C.two_source_mzi(input_length_mm=lin, output_length_mm=outs, loss_db_per_cm=4.1, io_sources=True)

    for process, pump in ((ND, SINGLE), (DEG, DUAL)):
        c = G.match_spurious_lengths(build, (0.025, 0.021), 5.2, pump, process)
        assert G.spurious_ratio(c, pump, process) == pytest.approx((0.025, 0.021), abs=1e-12)
        f = G.quantum_fringe(c, pump, process, PHIS)
        pa, _ = G.corrected_bunch_model(1.0, math.sqrt(0.025), PHIS)
        assert np.ptp(f.W_bunch_A / pa) < 1e-10


def test_pump_power_scaling():
    c = C.two_source_mzi(phi=0.9)
    w1 = G.pair_emission(c, C.PumpField.single(1549.6, 1.0), ND).state.norm_sq
    w2 = G.pair_emission(c, C.PumpField.single(1549.6, 2.0), ND).state.norm_sq
    assert w2 / w1 == pytest.approx(4.0, rel=1e-12)
    l1, l2 = DUAL.wavelengths_nm
    d1 = G.pair_emission(c, C.PumpField((l1, l2), (1.0, 1.0)), DEG).state.norm_sq
    d2 = G.pair_emission(c, C.PumpField((l1, l2), (2.0, 1.0)), DEG).state.norm_sq
    assert d2 / d1 == pytest.approx(2.0, rel=1e-12)


def test_bunch_fraction_at_split_point():
    _, outs = G.io_lengths_from_ratio((0.025, 0.021), 5.2, 0.0)
    c = C.two_source_mzi(output_length_mm=outs, io_sources=True)
    f = G.bunch_fraction(c, SINGLE, ND)
    # split weight 1, bunched weights g^2/2 per arm
    assert f == pytest.approx((0.0125 + 0.0105) / (1 + 0.0125 + 0.0105), rel=1e-12)
