"""First-order SFWM pair generation inside a circuit.

Every pair-generating segment contributes a creation amplitude proportional to
its length and to the product of the local pump fields: the pump field squared
for a single-colour pump, or the product of the two colours for a dual pump.
The created pair is then carried through the rest of the circuit and all
contributions are summed coherently. Only the single-pair term is kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import fock
from .circuit import (CircuitSpec, Coupler, PhaseShifter, PumpField, Segment,
                      propagate_pump, symmetric_wavelengths)
from .errors import ConfigError
from .fock import ModeLabel, QuantumState

KINDS = ("degenerate", "nondegenerate")


@dataclass(frozen=True)
class PairProcess:
    """SFWM process. ``delta_nm`` is the signal-idler wavelength spacing."""

    kind: str = "nondegenerate"
    delta_nm: float = 6.4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"process kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "nondegenerate" and not self.delta_nm > 0:
            raise ValueError("non-degenerate process needs a positive detuning")
        if self.kind == "degenerate" and self.delta_nm != 0:
            raise ValueError("degenerate process has zero signal-idler detuning")

    @classmethod
    def degenerate(cls) -> "PairProcess":
        return cls("degenerate", 0.0)

    def check_pump(self, pump: PumpField):
        if self.kind == "nondegenerate" and pump.scheme != "single":
            raise ConfigError("non-degenerate pairs need a single-colour pump")
        if self.kind == "degenerate" and pump.scheme != "dual":
            raise ConfigError("degenerate pairs need a dual-colour pump")

    def photon_modes(self, pump: PumpField, path: str) -> tuple[ModeLabel, ModeLabel]:
        """The two photon modes of one pair created on ``path``."""
        self.check_pump(pump)
        if self.kind == "nondegenerate":
            ls, li = symmetric_wavelengths(pump.wavelengths_nm[0], self.delta_nm)
            return ModeLabel(path, "signal", ls), ModeLabel(path, "idler", li)
        l1, l2 = pump.wavelengths_nm
        ld = 2.0 / (1.0 / l1 + 1.0 / l2)
        d = ModeLabel(path, "degenerate", ld)
        return d, d


def gamma_from_length(L: float, L0: float, gamma0: float) -> float:
    """Pair amplitude of a waveguide of length ``L``; the rate goes as L**2."""
    if not (L > 0 and L0 > 0):
        raise ValueError("lengths must be positive")
    return gamma0 * L / L0


def io_lengths_from_ratio(ratio_sq: float | Sequence[float], source_length_mm: float,
                          input_fraction: float = 0.5) -> tuple[float, tuple[float, float]]:
    """Input and per-arm output waveguide lengths giving spurious ratios ``ratio_sq``.

    ``ratio_sq`` is (Gamma_io / Gamma_0)**2, either one value or a pair for
    output arms (A, B). The I/O amplitude seen by an arm is the sum of the input
    and that arm's output length; ``input_fraction`` of the smaller total is put
    on the shared input waveguide.
    """
    if isinstance(ratio_sq, (int, float)):
        ratio_sq = (float(ratio_sq), float(ratio_sq))
    ra, rb = ratio_sq
    if ra < 0 or rb < 0:
        raise ValueError("spurious ratios must be non-negative")
    if not 0 <= input_fraction <= 1:
        raise ValueError("input_fraction must lie in [0, 1]")
    ta, tb = math.sqrt(ra) * source_length_mm, math.sqrt(rb) * source_length_mm
    lin = input_fraction * min(ta, tb)
    return lin, (ta - lin, tb - lin)


def _propagate_from(state: QuantumState, circuit: CircuitSpec, start: int) -> QuantumState:
    """Carry photons through components after index ``start``. Loss is not applied here."""
    for i in range(start + 1, len(circuit.components)):
        comp = circuit.components[i]
        if isinstance(comp, Coupler):
            state = fock.apply_linear_map(state, fock.coupler_map(comp.R, state.modes))
        elif isinstance(comp, PhaseShifter):
            state = fock.phase_shift_path(state, comp.arm, circuit.resolved_phase(i))
    return state


class PairEmission(NamedTuple):
    """Unnormalized single-pair output state and the spiral-source reference weight.

    ``reference_weight`` is the summed emission probability of the source-tagged
    segments taken on their own, so ``state.norm_sq / reference_weight`` is the
    device output relative to the ideal two-source device.
    """

    state: QuantumState
    reference_weight: float


def pair_emission(circuit: CircuitSpec, pump: PumpField, process: PairProcess,
                  gamma0: float = 1.0, ref_length_mm: float | None = None) -> PairEmission:
    if not gamma0 > 0:
        raise ValueError("gamma0 must be positive")
    process.check_pump(pump)
    sources = circuit.source_segments
    if not sources:
        raise ConfigError("no SFWM region")
    if ref_length_mm is None:
        spirals = [circuit.components[i].length_mm for i in sources if circuit.components[i].tag == "source"]
        ref_length_mm = spirals[0] if spirals else circuit.components[sources[0]].length_mm
    fields = propagate_pump(circuit, pump).segment_fields
    total = QuantumState()
    ref = 0.0
    for i in sources:
        seg: Segment = circuit.components[i]
        f = fields[i]
        pump_product = f[0] * f[0] if process.kind == "nondegenerate" else f[0] * f[1]
        amp = gamma_from_length(seg.length_mm, ref_length_mm, gamma0) * pump_product
        m1, m2 = process.photon_modes(pump, seg.arm)
        # pair state normalized per segment: a_s^dag a_i^dag |0>, or (a^dag)^2/sqrt(2) |0>
        created = fock.creation_monomial((m1, m2), amp / (math.sqrt(2) if m1 == m2 else 1.0))
        if seg.tag == "source":
            ref += abs(amp) ** 2
        total = total + _propagate_from(created, circuit, i)
    return PairEmission(total, ref)


def generate_pair_state(circuit: CircuitSpec, pump: PumpField, process: PairProcess,
                        gamma0: float = 1.0) -> QuantumState:
    return pair_emission(circuit, pump, process, gamma0).state.normalized()


class SplitBunch(NamedTuple):
    P_split: float
    P_bunch_A: float
    P_bunch_B: float


def split_bunch_probabilities(state: QuantumState) -> SplitBunch:
    """Probabilities of one photon per output path, or both on A or both on B.

    Sums are not renormalized, so an unnormalized state yields relative weights.
    """
    split = a = b = 0.0
    for occ, amp in state.terms.items():
        if occ.total != 2:
            raise ValueError(f"expected a two-photon state, found a {occ.total}-photon term")
        p = abs(amp) ** 2
        na = occ.photons_on_path("A")
        if na == 1:
            split += p
        elif na == 2:
            a += p
        else:
            b += p
    return SplitBunch(split, a, b)


def corrected_bunch_model(gamma0: float, gamma_io: float, phi):
    """Closed-form bunching weights |(G0 + Gio) cos(phi) -/+ Gio|^2 for outputs (A, B)."""
    if not gamma0 > 0 or gamma_io < 0:
        raise ValueError("need gamma0 > 0 and gamma_io >= 0")
    c = np.cos(phi)
    pa = np.abs((gamma0 + gamma_io) * c - gamma_io) ** 2
    pb = np.abs((gamma0 + gamma_io) * c + gamma_io) ** 2
    return pa, pb


# -- closed-form reference states -----------------------------------------------

def bunch_state(process: PairProcess, pump: PumpField) -> QuantumState:
    """(|pair on A> - |pair on B>)/sqrt(2)."""
    a1, a2 = process.photon_modes(pump, "A")
    b1, b2 = process.photon_modes(pump, "B")
    s = 1 / math.sqrt(2)
    return QuantumState.from_terms({
        fock.FockOccupation.of([a1, a2]): s,
        fock.FockOccupation.of([b1, b2]): -s,
    })


def split_state(process: PairProcess, pump: PumpField) -> QuantumState:
    """|11> for degenerate pairs; (|s_A i_B> + |i_A s_B>)/sqrt(2) otherwise."""
    a1, a2 = process.photon_modes(pump, "A")
    b1, b2 = process.photon_modes(pump, "B")
    if process.kind == "degenerate":
        return QuantumState.fock([a1, b1])
    s = 1 / math.sqrt(2)
    return QuantumState.from_terms({
        fock.FockOccupation.of([a1, b2]): s,
        fock.FockOccupation.of([a2, b1]): s,
    })


def ideal_output_state(phi: float, process: PairProcess, pump: PumpField) -> QuantumState:
    """cos(phi) |bunch> + sin(phi) |split>."""
    return (bunch_state(process, pump).scaled(math.cos(phi))
            + split_state(process, pump).scaled(math.sin(phi)))


@dataclass(frozen=True)
class QuantumFringe:
    """Output statistics versus heater phase.

    ``P_*`` are normalized probabilities; ``W_*`` are the same outcomes weighted
    by the device emission relative to the ideal two-source device, i.e. they
    are proportional to measured coincidence rates.
    """

    phi: np.ndarray
    P_split: np.ndarray
    P_bunch_A: np.ndarray
    P_bunch_B: np.ndarray
    W_split: np.ndarray
    W_bunch_A: np.ndarray
    W_bunch_B: np.ndarray

    def __len__(self):
        return len(self.phi)


def quantum_fringe(circuit: CircuitSpec, pump: PumpField, process: PairProcess,
                   phis: Iterable[float], gamma0: float = 1.0) -> QuantumFringe:
    phis = np.asarray(list(phis), dtype=float)
    if phis.size == 0:
        raise ValueError("phase sweep is empty")
    rows = []
    for p in phis:
        em = pair_emission(circuit.with_phase(p), pump, process, gamma0)
        w = np.array(split_bunch_probabilities(em.state)) / em.reference_weight
        rows.append(np.concatenate([w / w.sum(), w]))
    t = np.array(rows)
    return QuantumFringe(phis, *(t[:, k] for k in range(6)))


def spurious_ratio(circuit: CircuitSpec, pump: PumpField, process: PairProcess) -> tuple[float, float]:
    """Effective (Gamma_io / Gamma_0)**2 seen by outputs (A, B).

    At phi = pi/2 the bunched weight of each output, relative to the spiral
    sources, is half the squared spurious ratio; this holds with pump loss too.
    """
    em = pair_emission(circuit.with_phase(math.pi / 2), pump, process)
    sb = split_bunch_probabilities(em.state)
    return 2 * sb.P_bunch_A / em.reference_weight, 2 * sb.P_bunch_B / em.reference_weight


def match_spurious_lengths(build, ratio_sq: float | Sequence[float], source_length_mm: float,
                           pump: PumpField, process: PairProcess, input_fraction: float = 0.0,
                           tol: float = 1e-13, max_iter: int = 50) -> CircuitSpec:
    """Circuit whose output waveguide lengths reproduce ``ratio_sq`` despite pump loss.

    ``build(input_length, (out_a, out_b))`` returns a circuit. Starting from the
    lossless lengths, each output length is adjusted by secant steps until the
    effective ratio of that arm matches.
    """
    lin, outs = io_lengths_from_ratio(ratio_sq, source_length_mm, input_fraction)
    if isinstance(ratio_sq, (int, float)):
        ratio_sq = (ratio_sq, ratio_sq)
    target = np.sqrt(np.asarray(ratio_sq, dtype=float))
    active = target > 0

    def measure(lengths):
        return np.sqrt(np.asarray(spurious_ratio(build(lin, tuple(lengths)), pump, process)))

    l_prev = np.asarray(outs, dtype=float)
    e_prev = measure(l_prev)
    l_cur = np.where(active, l_prev * np.where(e_prev > 0, target / np.maximum(e_prev, 1e-300), 1.0), 0.0)
    for _ in range(max_iter):
        if np.any(l_cur[active] <= 0):
            raise ConfigError("spurious ratio unreachable with this input fraction and loss")
        e_cur = measure(l_cur)
        err = e_cur - target
        if np.all(np.abs(err[active]) < tol):
            return build(lin, tuple(l_cur))
        slope = np.where(l_cur != l_prev, (e_cur - e_prev) / np.where(l_cur != l_prev, l_cur - l_prev, 1.0), 1.0)
        l_next = np.where(active & (slope != 0), l_cur - err / np.where(slope != 0, slope, 1.0), l_cur)
        l_prev, e_prev, l_cur = l_cur, e_cur, l_next
    raise ConfigError("could not match the spurious pair ratio")


def bunch_fraction(circuit: CircuitSpec, pump: PumpField, process: PairProcess,
                   phi: float = math.pi / 2) -> float:
    """Fraction of pairs leaving bunched when the heater is set to ``phi``."""
    sb = split_bunch_probabilities(generate_pair_state(circuit.with_phase(phi), pump, process))
    return sb.P_bunch_A + sb.P_bunch_B
