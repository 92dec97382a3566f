"""Experiment configuration documents (TOML).

Sections: ``[device] [pump] [process] [detection] [brightness] [experiment]``.
Unknown sections or keys are rejected; errors name the key and, where it can be
found in the source text, its line.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .circuit import CircuitSpec, PumpField, circuit_from_table, load_toml
from .counts import BrightnessSpec, DetectionChain
from .errors import ConfigError
from .pairgen import PairProcess, match_spurious_lengths

SECTIONS = {"device", "pump", "process", "detection", "brightness", "experiment"}
PUMP_KEYS = {"scheme", "wavelength_nm", "power_mw", "dual_detuning_nm", "input_path"}
PROCESS_KEYS = {"process", "delta_nm", "gamma0", "gamma_io_ratio_sq", "io_input_fraction"}
DETECTION_KEYS = {"eta_s_db", "eta_i_db", "det_eff", "dark_hz", "gate_ps", "t_per_point_s"}
BRIGHTNESS_KEYS = {"b_khz_per_nm_mw2", "b_degenerate_khz_per_nm_mw2", "bandwidth_nm"}
EXPERIMENT_KEYS = {"name", "seed", "series", "points", "phi_min_rad", "phi_max_rad", "control",
                   "heater_power_max_mw", "generation_rate_khz", "splitter_R", "mode_overlap",
                   "wdm", "delay", "power_sweep"}
WDM_KEYS = {"delta_nm", "width_nm"}
DELAY_KEYS = {"x_min_um", "x_max_um", "points"}
POWER_KEYS = {"min_mw", "max_mw", "points"}
SERIES = ("split", "bunch_A", "bunch_B")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "run"
    seed: int | None = None
    series: str = "split"
    points: int = 64
    phi_min_rad: float = 0.0
    phi_max_rad: float = 2 * math.pi
    control: str = "phase"
    heater_power_max_mw: float = 82.8
    generation_rate_khz: float | None = None
    splitter_R: float = 0.5
    mode_overlap: float = 1.0
    wdm_width_nm: float = 0.8
    delay_x_min_um: float = -1200.0
    delay_x_max_um: float = 1200.0
    delay_points: int = 512
    power_min_mw: float = 1.0
    power_max_mw: float = 15.0
    power_points: int = 15

    def __post_init__(self):
        if self.series not in SERIES:
            raise ConfigError(f"experiment.series must be one of {SERIES}")
        if self.control not in ("phase", "heater"):
            raise ConfigError("experiment.control must be 'phase' or 'heater'")
        if self.points < 1 or self.delay_points < 1 or self.power_points < 1:
            raise ConfigError("sweep grids need at least one point")
        if not 0 <= self.splitter_R <= 1:
            raise ConfigError("experiment.splitter_R must lie in [0, 1]")
        if not 0 <= self.mode_overlap <= 1:
            raise ConfigError("experiment.mode_overlap must lie in [0, 1]")
        if not self.wdm_width_nm > 0:
            raise ConfigError("experiment.wdm.width_nm must be positive")


@dataclass(frozen=True)
class Config:
    circuit: CircuitSpec
    pump: PumpField
    process: PairProcess
    gamma0: float
    detection: DetectionChain
    brightness: BrightnessSpec
    experiment: ExperimentSpec
    raw: dict
    source: str = "<string>"

    @property
    def config_hash(self) -> str:
        """sha256 of the canonical JSON form; independent of key order in the file."""
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def lambda_p_nm(self) -> float:
        """Centre wavelength of the photon pairs (pump, or mean of a dual pump)."""
        w = self.pump.wavelengths_nm
        return w[0] if len(w) == 1 else 2.0 / (1.0 / w[0] + 1.0 / w[1])

    @property
    def brightness_b(self) -> float:
        return self.brightness.b_khz_per_nm_mw2


def _locate(text: str | None, key: str) -> str:
    if not text:
        return ""
    for n, line in enumerate(text.splitlines(), 1):
        m = re.match(rf"\s*{re.escape(key)}\s*=", line)
        if m:
            return f" (at line {n}, column {line.index(key) + 1})"
    return ""


def _check(table, allowed: set, where: str, text: str | None):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"unknown key {where}.{extra[0]}{_locate(text, extra[0])}")


def _pump_from(t: dict) -> PumpField:
    scheme = t.get("scheme", "single")
    lam = float(t.get("wavelength_nm", 1549.6))
    power = float(t.get("power_mw", 15.0))
    path = t.get("input_path", "A")
    if scheme == "single":
        return PumpField((lam,), (power,), path)
    if scheme == "dual":
        return PumpField.dual(lam, float(t.get("dual_detuning_nm", 22.4)), power) if path == "A" else \
            PumpField(PumpField.dual(lam, float(t.get("dual_detuning_nm", 22.4)), power).wavelengths_nm,
                      (power / 2, power / 2), path)
    raise ConfigError(f"pump.scheme must be 'single' or 'dual', got {scheme!r}")


def build_config(doc: dict, text: str | None = None, source: str = "<string>") -> Config:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a table")
    extra = sorted(set(doc) - SECTIONS)
    if extra:
        raise ConfigError(f"unknown section [{extra[0]}]{_locate(text, extra[0])}")
    sections = {s: doc.get(s, {}) for s in ("pump", "process", "detection", "brightness", "experiment")}
    for name, allowed in (("pump", PUMP_KEYS), ("process", PROCESS_KEYS), ("detection", DETECTION_KEYS),
                          ("brightness", BRIGHTNESS_KEYS), ("experiment", EXPERIMENT_KEYS)):
        _check(sections[name], allowed, name, text)
    exp_t = sections["experiment"]
    for sub, allowed in (("wdm", WDM_KEYS), ("delay", DELAY_KEYS), ("power_sweep", POWER_KEYS)):
        if sub in exp_t:
            _check(exp_t[sub], allowed, f"experiment.{sub}", text)

    try:
        pump = _pump_from(sections["pump"])
        proc_t = sections["process"]
        kind = proc_t.get("process", "nondegenerate")
        delta = float(proc_t.get("delta_nm", 0.0 if kind == "degenerate" else 6.4))
        process = PairProcess(kind, delta)
        process.check_pump(pump)
        gamma0 = float(proc_t.get("gamma0", 1.0))
        if not gamma0 > 0:
            raise ConfigError("process.gamma0 must be positive")

        device = doc.get("device")
        ratio = proc_t.get("gamma_io_ratio_sq")
        if ratio is not None:
            circuit = _circuit_with_ratio(device, ratio, float(proc_t.get("io_input_fraction", 0.0)),
                                          pump, process)
        else:
            circuit = circuit_from_table(device)

        detection = DetectionChain(**sections["detection"])
        b_t = sections["brightness"]
        b = b_t.get("b_degenerate_khz_per_nm_mw2", 2.5) if kind == "degenerate" else b_t.get("b_khz_per_nm_mw2", 2.7)
        brightness = BrightnessSpec(float(b), float(b_t.get("bandwidth_nm", 0.8)), pump.powers_mw)

        wdm = exp_t.get("wdm", {})
        if "delta_nm" in wdm and float(wdm["delta_nm"]) != delta:
            raise ConfigError(f"experiment.wdm.delta_nm ({wdm['delta_nm']}) disagrees with process.delta_nm ({delta})")
        delay = exp_t.get("delay", {})
        power = exp_t.get("power_sweep", {})
        simple = {k: v for k, v in exp_t.items() if k not in ("wdm", "delay", "power_sweep")}
        experiment = ExperimentSpec(
            **simple,
            wdm_width_nm=float(wdm.get("width_nm", 0.8)),
            delay_x_min_um=float(delay.get("x_min_um", -1200.0)),
            delay_x_max_um=float(delay.get("x_max_um", 1200.0)),
            delay_points=int(delay.get("points", 512)),
            power_min_mw=float(power.get("min_mw", 1.0)),
            power_max_mw=float(power.get("max_mw", 15.0)),
            power_points=int(power.get("points", 15)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return Config(circuit, pump, process, gamma0, detection, brightness, experiment,
                  copy.deepcopy(doc), source)


def _circuit_with_ratio(device, ratio, input_fraction: float, pump: PumpField,
                        process: PairProcess) -> CircuitSpec:
    if isinstance(device, str):
        device = {"template": device}
    if not isinstance(device, dict) or "template" not in device:
        raise ConfigError("process.gamma_io_ratio_sq needs a device template")
    for key in ("io_length_mm", "input_length_mm", "output_length_mm"):
        if key in device:
            raise ConfigError(f"device.{key} conflicts with process.gamma_io_ratio_sq")
    if isinstance(ratio, list):
        if len(ratio) != 2:
            raise ConfigError("process.gamma_io_ratio_sq takes one value or [A, B]")
        ratio = (float(ratio[0]), float(ratio[1]))
    else:
        ratio = float(ratio)
    source_len = float(device.get("source_length_mm", 5.2))

    def build(lin, outs):
        return circuit_from_table({**device, "input_length_mm": lin, "output_length_mm": list(outs)})

    return match_spurious_lengths(build, ratio, source_len, pump, process, input_fraction)


def parse_config(text: str, source: str = "<string>") -> Config:
    return build_config(load_toml(text), text, source)


def preset_path(name: str) -> Path | None:
    stem = Path(name).name
    if not stem.endswith(".toml"):
        stem += ".toml"
    candidate = resources.files("noonsim") / "presets" / stem
    return Path(str(candidate)) if candidate.is_file() else None


def read_config_text(path: str | Path) -> tuple[str, str]:
    """Config text and resolved source. Falls back to a bundled preset of the same name."""
    p = Path(path)
    if p.is_file():
        return p.read_text(), str(p)
    bundled = preset_path(str(path))
    if bundled is not None and Path(path).parent == Path("."):
        return bundled.read_text(), f"preset:{bundled.name}"
    raise ConfigError(f"config file not found: {path}")


def apply_overrides(doc: dict, *, delta_nm: float | None = None, points: int | None = None,
                    seed: int | None = None, series: str | None = None) -> dict:
    """Copy of a parsed document with command-line overrides applied.

    Setting ``delta_nm`` to 0 switches to degenerate pairs from a dual pump;
    a positive value switches to non-degenerate pairs from a single pump.
    """
    doc = copy.deepcopy(doc)
    exp = doc.setdefault("experiment", {})
    if delta_nm is not None:
        proc = doc.setdefault("process", {})
        pump = doc.setdefault("pump", {})
        proc["delta_nm"] = float(delta_nm)
        proc["process"] = "degenerate" if delta_nm == 0 else "nondegenerate"
        pump["scheme"] = "dual" if delta_nm == 0 else "single"
        if "wdm" in exp:
            exp["wdm"].pop("delta_nm", None)
    if points is not None:
        exp["points"] = int(points)
        exp.setdefault("delay", {})["points"] = int(points)
        exp.setdefault("power_sweep", {})["points"] = int(points)
    if seed is not None:
        exp["seed"] = int(seed)
    if series is not None:
        exp["series"] = series
    return doc


def load_config(path: str | Path, **overrides) -> Config:
    text, source = read_config_text(path)
    doc = load_toml(text)
    if any(v is not None for v in overrides.values()):
        doc = apply_overrides(doc, **overrides)
    return build_config(doc, text, source)
