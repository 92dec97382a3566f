"""Sweeps built from a configuration: phase fringes, HOM delay scans and brightness.

Each sweep produces a :class:`SweepResult` holding the CSV columns plus a
metadata/fit dictionary that goes into the JSON sidecar. Rates are in Hz and
counts are per sweep point (``detection.t_per_point_s``).
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import classical_fringe, power_to_phase
from .config import Config
from .counts import BrightnessSpec, accidentals, make_rng, pair_rate, poisson_sigma
from .errors import ConfigError, FitError
from .fit import ClassicalMZ, Eq4Asym, HOMDip, SinSq, fit_model
from .hom import beat_period, effective_visibility, hom_scan
from .pairgen import bunch_fraction, pair_emission, split_bunch_probabilities

SCHEMA_VERSION = 1
SWEEP_HEADER = ("control", "P_split", "P_bunch_A", "P_bunch_B", "R_cc_expected",
                "acc_expected", "counts_raw", "counts_net", "sigma")
PUMP_HEADER = ("control", "T_bar", "T_cross")
BRIGHTNESS_HEADER = ("power_mw", "pair_rate_hz", "singles_s_hz", "singles_i_hz",
                     "R_cc_expected", "acc_expected", "car")
SERIES_MODEL = {"split": "sinsq", "bunch_A": "eq4a", "bunch_B": "eq4b"}


@dataclass
class SweepResult:
    kind: str
    header: tuple[str, ...]
    columns: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [h for h in self.header if h not in self.columns]
        if missing:
            raise ValueError(f"missing columns {missing}")
        lengths = {len(np.atleast_1d(self.columns[h])) for h in self.header}
        if len(lengths) > 1:
            raise ValueError("columns differ in length")

    def __len__(self):
        return len(self.columns[self.header[0]])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def report(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": self.kind, "columns": list(self.header),
                "rows": len(self), "metadata": self.metadata, "fits": self.fits}


# -- helpers ----------------------------------------------------------------------

def timestamp() -> int | None:
    """SOURCE_DATE_EPOCH if set, else None: output bytes must not depend on the clock."""
    v = os.environ.get("SOURCE_DATE_EPOCH")
    return int(v) if v and v.isdigit() else None


def _metadata(cfg: Config, kind: str, noiseless: bool) -> dict:
    return {"kind": kind, "config_hash": cfg.config_hash, "config_source": cfg.source,
            "seed": None if noiseless else cfg.experiment.seed, "noiseless": noiseless,
            "timestamp": timestamp(), "noonsim_version": __version__,
            "process": cfg.process.kind, "delta_nm": cfg.process.delta_nm,
            "lambda_p_nm": cfg.lambda_p_nm, "t_per_point_s": cfg.detection.t_per_point_s}


def _need_seed(cfg: Config, noiseless: bool):
    if not noiseless and cfg.experiment.seed is None:
        raise ConfigError("experiment.seed is required for sampled runs")


def _generation_hz(cfg: Config) -> float:
    g = cfg.experiment.generation_rate_khz
    return pair_rate(cfg.brightness, cfg.process) if g is None else g * 1e3


def _channel_eta(cfg: Config, key: tuple[str, str]) -> float:
    path, fbin = key
    if fbin == "signal" or (fbin == "degenerate" and path == "A"):
        return cfg.detection.eta_s
    return cfg.detection.eta_i


def _detector_pairs(cfg: Config, series: str) -> list[tuple[tuple[str, str], tuple[str, str]]]:
    if cfg.process.kind == "degenerate":
        if series != "split":
            raise ConfigError("bunched series of degenerate pairs need photon-number resolution; "
                              "only 'split' is supported")
        return [(("A", "degenerate"), ("B", "degenerate"))]
    return {"split": [(("A", "signal"), ("B", "idler")), (("B", "signal"), ("A", "idler"))],
            "bunch_A": [(("A", "signal"), ("A", "idler"))],
            "bunch_B": [(("B", "signal"), ("B", "idler"))]}[series]


def _pattern_weights(state, reference: float) -> tuple[dict, dict]:
    """Relative weight of each detection pattern and mean photons per channel."""
    patterns: dict[tuple, float] = {}
    marginal: dict[tuple, float] = {}
    for occ, amp in state.terms.items():
        w = abs(amp) ** 2 / reference
        keys = []
        for mode, n in occ.counts:
            key = (mode.path, mode.freq_bin)
            keys += [key] * n
            marginal[key] = marginal.get(key, 0.0) + n * w
        k = tuple(sorted(keys))
        patterns[k] = patterns.get(k, 0.0) + w
    return patterns, marginal


def _sample(expected_cc, singles, pairs, tau, T, seed, noiseless):
    """Raw/net counts per point. ``singles`` maps channel -> rate array."""
    n = len(expected_cc)
    acc_exp = np.zeros(n)
    for c1, c2 in pairs:
        acc_exp += accidentals(singles[c1], singles[c2], tau)
    if noiseless:
        raw = (expected_cc + acc_exp) * T
        net = expected_cc * T
        return raw, net, acc_exp, poisson_sigma(raw)
    raw = np.empty(n)
    net = np.empty(n)
    channels = sorted(singles)
    for i in range(n):
        rng = make_rng(seed, i)
        raw[i] = rng.poisson((expected_cc[i] + acc_exp[i]) * T)
        counts = {c: rng.poisson(singles[c][i] * T) for c in channels}
        acc_est = sum((counts[a] / T) * (counts[b] / T) * tau * T for a, b in pairs)
        net[i] = raw[i] - acc_est
    return raw, net, acc_exp, poisson_sigma(raw)


def _fit_dict(result) -> dict:
    d = result.to_dict()
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


@lru_cache(maxsize=32)
def _emission_table(circuit, pump, process, gamma0: float, phis: tuple[float, ...]) -> tuple:
    """Per-phase (split/bunch weights, pattern weights, channel marginals).

    Cached because replicated sampled sweeps share the same expectation.
    """
    rows = []
    for phi in phis:
        em = pair_emission(circuit.with_phase(phi), pump, process, gamma0)
        patterns, marginal = _pattern_weights(em.state, em.reference_weight)
        rows.append((np.array(split_bunch_probabilities(em.state)), patterns, marginal))
    return tuple(rows)


# -- phase sweep --------------------------------------------------------------------

def phase_grid(cfg: Config, points: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(control values, heater phases). Heater control sweeps electrical power in mW."""
    e = cfg.experiment
    n = points or e.points
    if e.control == "heater":
        power = np.linspace(0.0, e.heater_power_max_mw, n, endpoint=False)
        return power, np.asarray(power_to_phase(power, cfg.circuit.heater), dtype=float)
    phi = np.linspace(e.phi_min_rad, e.phi_max_rad, n, endpoint=False)
    return phi, phi


def run_phase_sweep(cfg: Config, noiseless: bool = False, points: int | None = None,
                    series: str | None = None, fit: bool = True) -> tuple[SweepResult, SweepResult]:
    """Quantum fringe of one detected series, plus the classical pump fringe."""
    _need_seed(cfg, noiseless)
    series = series or cfg.experiment.series
    pairs = _detector_pairs(cfg, series)
    control, phis = phase_grid(cfg, points)
    rate = _generation_hz(cfg)
    det = cfg.detection

    probs = np.zeros((len(phis), 3))
    r_cc = np.zeros(len(phis))
    channels = sorted({c for p in pairs for c in p})
    singles = {c: np.zeros(len(phis)) for c in channels}
    table = _emission_table(cfg.circuit, cfg.pump, cfg.process, cfg.gamma0, tuple(float(p) for p in phis))
    for i, (sb, patterns, marginal) in enumerate(table):
        probs[i] = sb / sb.sum()
        for c1, c2 in pairs:
            r_cc[i] += rate * patterns.get(tuple(sorted((c1, c2))), 0.0) * _channel_eta(cfg, c1) * _channel_eta(cfg, c2)
        for c in channels:
            singles[c][i] = rate * marginal.get(c, 0.0) * _channel_eta(cfg, c) + det.dark_hz

    raw, net, acc_exp, sigma = _sample(r_cc, singles, pairs, det.gate_s, det.t_per_point_s,
                                       cfg.experiment.seed, noiseless)
    meta = _metadata(cfg, "phase-sweep", noiseless)
    meta.update(series=series, control=cfg.experiment.control, generation_rate_hz=rate)
    cols = dict(zip(SWEEP_HEADER, (control, probs[:, 0], probs[:, 1], probs[:, 2], r_cc, acc_exp,
                                   raw, net, sigma)))
    result = SweepResult("phase-sweep", SWEEP_HEADER, cols, meta)

    fringe = classical_fringe(cfg.circuit, phis, cfg.pump)
    pump = SweepResult("pump-fringe", PUMP_HEADER,
                       {"control": control, "T_bar": np.asarray(fringe.bar), "T_cross": np.asarray(fringe.cross)},
                       _metadata(cfg, "pump-fringe", True))
    if fit:
        result.fits = phase_fits(result, pump, series, cfg.experiment.control)
    return result, pump


def series_model(series: str, free_period: bool = False):
    if series == "split":
        return SinSq(free_period=free_period)
    return Eq4Asym("A" if series == "bunch_A" else "B")


def _try_fit(x, y, sigma, model) -> tuple:
    """(FitResult or None, report dict). Too few points or a degenerate fit is reported, not raised."""
    try:
        fr = fit_model(x, y, sigma, model)
    except (ValueError, FitError) as exc:
        return None, {"error": str(exc)}
    return fr, _fit_dict(fr)


def phase_fits(result: SweepResult, pump: SweepResult, series: str, control: str) -> dict:
    x = result["control"]
    out = {}
    heater = control == "heater"
    if heater and series != "split":
        return out
    model = SinSq(free_period=True) if heater else series_model(series)
    fr, out[model.name] = _try_fit(x, result["counts_net"], result["sigma"], model)
    if heater and fr is not None:
        out["heater_k_rad_per_mw"] = math.pi / fr.model.period(fr.params)
    if series == "split":
        ones = np.ones(len(x))
        q, _ = _try_fit(x, result["P_split"], ones, SinSq(free_period=True))
        c, _ = _try_fit(x, pump["T_cross"], ones, ClassicalMZ(free_period=True))
        if q is not None and c is not None:
            pq, pc = q.model.period(q.params), c.model.period(c.params)
            out["phase_doubling"] = {"quantum_period": pq, "classical_period": pc, "ratio": pc / pq}
    return out


# -- HOM scan -----------------------------------------------------------------------

def run_hom_scan(cfg: Config, noiseless: bool = False, points: int | None = None,
                 fit: bool = True) -> SweepResult:
    """Off-chip HOM dip between the two device outputs, heater at the split point."""
    _need_seed(cfg, noiseless)
    e = cfg.experiment
    det = cfg.detection
    x = np.linspace(e.delay_x_min_um, e.delay_x_max_um, points or e.delay_points)
    f = bunch_fraction(cfg.circuit, cfg.pump, cfg.process)
    lp = cfg.lambda_p_nm
    scan = hom_scan(x, cfg.process.delta_nm, e.wdm_width_nm, lp, R=e.splitter_R,
                    bunch_fraction=f, mode_overlap=e.mode_overlap)
    rate = _generation_hz(cfg)
    r_cc = rate * det.eta_s * det.eta_i * scan.P_hom
    singles = {("C",): np.full(len(x), rate * det.eta_s + det.dark_hz),
               ("D",): np.full(len(x), rate * det.eta_i + det.dark_hz)}
    pairs = [(("C",), ("D",))]
    raw, net, acc_exp, sigma = _sample(r_cc, singles, pairs, det.gate_s, det.t_per_point_s, e.seed, noiseless)
    rest = (1 - scan.P_hom) / 2
    cols = dict(zip(SWEEP_HEADER, (x, scan.P_hom, rest, rest, r_cc, acc_exp, raw, net, sigma)))
    meta = _metadata(cfg, "hom-scan", noiseless)
    meta.update(bunch_fraction=f, splitter_R=e.splitter_R, mode_overlap=e.mode_overlap,
                wdm_width_nm=e.wdm_width_nm, V_effective=scan.visibility,
                V_contamination_only=effective_visibility(f, e.splitter_R, 1.0),
                beat_period_um=_finite(beat_period(cfg.process.delta_nm, lp)), generation_rate_hz=rate)
    result = SweepResult("hom-scan", SWEEP_HEADER, cols, meta)
    if fit:
        result.fits = hom_fits(result, lp, cfg.process.delta_nm, e.wdm_width_nm)
    return result


def _finite(v: float):
    return v if math.isfinite(v) else None


def hom_fits(result: SweepResult, lambda_p_nm: float, delta_guess: float, w_guess: float) -> dict:
    model = HOMDip(lambda_p_nm, delta_guess, w_guess)
    fr, report = _try_fit(result["control"], result["counts_net"], result["sigma"], model)
    if fr is None:
        return {"hom": report}
    d = fr.params["delta"]
    return {"hom": report, "beat_period_um": _finite(beat_period(d, lambda_p_nm)) if d > 0 else None}


# -- brightness -----------------------------------------------------------------------

def run_brightness(cfg: Config, points: int | None = None) -> SweepResult:
    """Pair rate, singles, accidentals and CAR versus launched pump power."""
    e = cfg.experiment
    det = cfg.detection
    powers = np.linspace(e.power_min_mw, e.power_max_mw, points or e.power_points)
    deg = cfg.process.kind == "degenerate"
    rates = np.array([pair_rate(BrightnessSpec(cfg.brightness.b_khz_per_nm_mw2, cfg.brightness.bandwidth_nm,
                                               (p / 2, p / 2) if deg else (p,)), cfg.process) for p in powers])
    rs = rates * det.eta_s + det.dark_hz
    ri = rates * det.eta_i + det.dark_hz
    rcc = rates * det.eta_s * det.eta_i
    acc = accidentals(rs, ri, det.gate_s)
    car_col = np.where(acc > 0, rcc / np.where(acc > 0, acc, 1.0), np.inf)
    cols = dict(zip(BRIGHTNESS_HEADER, (powers, rates, rs, ri, rcc, acc, car_col)))
    meta = _metadata(cfg, "brightness", True)
    gen = _generation_hz(cfg)
    g_s, g_i = gen * det.eta_s + det.dark_hz, gen * det.eta_i + det.dark_hz
    g_cc = gen * det.eta_s * det.eta_i
    g_acc = float(accidentals(g_s, g_i, det.gate_s))
    meta.update(b_khz_per_nm_mw2=cfg.brightness.b_khz_per_nm_mw2, bandwidth_nm=cfg.brightness.bandwidth_nm,
                reference={"generation_rate_hz": gen, "R_cc": g_cc, "singles_s": g_s, "singles_i": g_i,
                           "accidentals": g_acc, "car": g_cc / g_acc if g_acc > 0 else None})
    result = SweepResult("brightness", BRIGHTNESS_HEADER, cols, meta)
    if len(powers) >= 2 and np.all(powers > 0):
        slope = float(np.polyfit(np.log(powers), np.log(rates), 1)[0])
        result.fits = {"loglog_slope": slope}
    return result


# -- files ------------------------------------------------------------------------------

def _fmt(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.header)
    for i in range(len(result)):
        w.writerow([_fmt(result.columns[h][i]) for h in result.header])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(result: SweepResult) -> str:
    return json.dumps(_clean(result.report()), sort_keys=True, indent=2) + "\n"


def emit_csv(result: SweepResult, path: str | Path) -> Path:
    if len(result) == 0:
        raise ValueError("empty result")
    p = Path(path)
    p.write_text(csv_text(result))
    return p


def emit_json(result: SweepResult, path: str | Path) -> Path:
    p = Path(path)
    p.write_text(json_text(result))
    return p


def read_csv(path: str | Path, kind: str = "external") -> SweepResult:
    """Read a sweep CSV; the header must match one of the known schemas."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = tuple(rows[0])
    if header not in (SWEEP_HEADER, PUMP_HEADER, BRIGHTNESS_HEADER):
        raise ValueError(f"{path}: unrecognised header {','.join(header)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(-1, len(header))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    return SweepResult(kind, header, {h: data[:, j] for j, h in enumerate(header)})
