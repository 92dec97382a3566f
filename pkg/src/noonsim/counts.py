"""Detection chain: efficiencies, dark counts, accidentals and Poisson sampling.

Rates are in Hz throughout. Channel efficiencies are quoted in dB and are
taken to be all-inclusive (generation to detection click).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .pairgen import PairProcess


def db_to_fraction(db: float) -> float:
    return 10 ** (db / 10)


def fraction_to_db(f: float) -> float:
    return 10 * math.log10(f)


@dataclass(frozen=True)
class DetectionChain:
    eta_s_db: float = -24.2
    eta_i_db: float = -25.5
    det_eff: float = 0.08
    dark_hz: float = 1000.0
    gate_ps: float = 650.0
    t_per_point_s: float = 1.0

    def __post_init__(self):
        for name in ("eta_s_db", "eta_i_db"):
            if getattr(self, name) > 0:
                raise ValueError(f"{name} must be <= 0 dB")
        if not 0 < self.det_eff <= 1:
            raise ValueError("detector efficiency must lie in (0, 1]")
        if self.dark_hz < 0:
            raise ValueError("dark count rate must be non-negative")
        if not self.gate_ps > 0:
            raise ValueError("gate width must be positive")
        if not self.t_per_point_s > 0:
            raise ValueError("integration time must be positive")

    @property
    def eta_s(self) -> float:
        return db_to_fraction(self.eta_s_db)

    @property
    def eta_i(self) -> float:
        return db_to_fraction(self.eta_i_db)

    @property
    def gate_s(self) -> float:
        return self.gate_ps * 1e-12


@dataclass(frozen=True)
class CountRecord:
    """Expected rates for one detector pair. ``net`` may be negative."""

    singles_s: float
    singles_i: float
    raw: float
    accidentals: float
    integration_s: float

    @property
    def net(self) -> float:
        return self.raw - self.accidentals

    @property
    def true_coincidences(self) -> float:
        return self.net


@dataclass(frozen=True)
class BrightnessSpec:
    b_khz_per_nm_mw2: float = 2.7
    bandwidth_nm: float = 0.8
    powers_mw: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if not (self.b_khz_per_nm_mw2 > 0 and self.bandwidth_nm > 0):
            raise ValueError("brightness and bandwidth must be positive")
        object.__setattr__(self, "powers_mw", tuple(float(p) for p in self.powers_mw))


def pair_rate(spec: BrightnessSpec, process: PairProcess) -> float:
    """B * bandwidth * P^2 (single pump) or B * bandwidth * P1 * P2 (dual pump), in Hz."""
    p = spec.powers_mw
    if process.kind == "nondegenerate":
        if len(p) != 1:
            raise ValueError("non-degenerate rate takes one pump power")
        product = p[0] ** 2
    else:
        if len(p) != 2:
            raise ValueError("degenerate rate takes two pump powers")
        product = p[0] * p[1]
    return spec.b_khz_per_nm_mw2 * 1e3 * spec.bandwidth_nm * product


def accidentals(R_s, R_i, tau_s: float):
    """Uncorrelated coincidence rate R_s R_i tau."""
    if tau_s < 0:
        raise ValueError("coincidence window must be non-negative")
    return np.multiply(R_s, R_i) * tau_s


def expected_counts(rate_hz: float, probability: float, chain: DetectionChain,
                    marginal_s: float = 1.0, marginal_i: float = 1.0) -> CountRecord:
    """Coincidence and singles rates for one signal/idler detector pair.

    ``probability`` is the chance a generated pair lands on this detector pair;
    ``marginal_s``/``marginal_i`` the mean number of photons reaching each
    detector per generated pair (1 for a lone source).
    """
    r_cc = rate_hz * probability * chain.eta_s * chain.eta_i
    r_s = rate_hz * marginal_s * chain.eta_s + chain.dark_hz
    r_i = rate_hz * marginal_i * chain.eta_i + chain.dark_hz
    acc = accidentals(r_s, r_i, chain.gate_s)
    return CountRecord(r_s, r_i, r_cc + acc, acc, chain.t_per_point_s)


def car(record: CountRecord) -> float:
    """Net coincidences over accidentals; infinite when there are no accidentals."""
    if record.accidentals == 0:
        return math.inf
    return record.net / record.accidentals


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``seed`` and a sub-stream index, independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


@dataclass(frozen=True)
class SampledCounts:
    raw: int
    singles_s: int
    singles_i: int
    accidentals_est: float
    net: float
    sigma: float


def poisson_sigma(raw) -> np.ndarray:
    """sqrt(raw counts) with a floor of 1 for empty bins."""
    return np.sqrt(np.maximum(np.asarray(raw, dtype=float), 1.0))


def sample_counts(record: CountRecord, seed: int | np.random.Generator) -> SampledCounts:
    """Poisson draw of coincidences and singles over the integration time.

    Accidentals are re-estimated from the sampled singles, as in the lab.
    """
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    T = record.integration_s
    if not T > 0:
        raise ValueError("integration time must be positive")
    raw = int(rng.poisson(record.raw * T))
    ns = int(rng.poisson(record.singles_s * T))
    ni = int(rng.poisson(record.singles_i * T))
    tau = record.accidentals / (record.singles_s * record.singles_i) if record.singles_s * record.singles_i else 0.0
    acc = (ns / T) * (ni / T) * tau * T
    return SampledCounts(raw, ns, ni, acc, raw - acc, float(poisson_sigma(raw)))


class VisibilityWarning(UserWarning):
    pass


def visibility(n_max: float, n_min: float) -> float:
    """(N_max - N_min) / N_max.

    A negative ``n_min`` (over-subtracted accidentals) gives V > 1 and a warning.
    """
    if not n_max > 0:
        raise ValueError("N_max must be positive")
    if n_min > n_max:
        raise ValueError("N_min exceeds N_max")
    if n_min < 0:
        warnings.warn(f"negative minimum {n_min} gives visibility above 1", VisibilityWarning)
    return (n_max - n_min) / n_max


def residual_loss_db(eta_db: float, det_eff: float, propagation_db: float = 0.0,
                     mmi_facet_db: float = 0.0) -> float:
    """Part of a channel loss not explained by the detector, waveguide and MMI/facet terms."""
    return eta_db - fraction_to_db(det_eff) + propagation_db + mmi_facet_db
