"""Two-path waveguide circuits: netlist, thermo-optic heater and classical pump.

The device template is the reconfigurable two-source interferometer: an
optional input waveguide on path A, a first 2x2 coupler, one spiral source
per arm, a heater on arm B, a second coupler, and optional output waveguides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union

import numpy as np
import tomli
import tomli_w

from .errors import ConfigError, FuseError

ARMS = ("A", "B")
SEGMENT_TAGS = ("source", "input", "output")
TEMPLATE = "two-source-mzi"

DEFAULT_SOURCE_LENGTH_MM = 5.2
DEFAULT_FUSE_V = 2.7
# default calibration: the full 2.3 V / 36 mA drive (82.8 mW) spans one 2*pi fringe
DEFAULT_K_RAD_PER_MW = 2 * math.pi / 82.8


@dataclass(frozen=True)
class Coupler:
    R: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.R <= 1.0):
            raise ValueError(f"reflectivity {self.R} outside [0, 1]")


@dataclass(frozen=True)
class PhaseShifter:
    """Heater on one arm. Either ``phi`` (rad) or an electrical drive is given."""

    arm: str = "B"
    phi: float | None = 0.0
    voltage_v: float | None = None
    current_a: float | None = None

    def __post_init__(self):
        if self.arm not in ARMS:
            raise ValueError(f"unknown arm {self.arm!r}")
        driven = self.voltage_v is not None or self.current_a is not None
        if driven and (self.voltage_v is None or self.current_a is None):
            raise ValueError("electrical drive needs both voltage_v and current_a")
        if driven == (self.phi is not None):
            raise ValueError("phase shifter needs exactly one of phi or (voltage_v, current_a)")


@dataclass(frozen=True)
class Segment:
    arm: str
    length_mm: float
    loss_db_per_cm: float = 0.0
    tag: str = "source"
    is_source: bool = True

    def __post_init__(self):
        if self.arm not in ARMS:
            raise ValueError(f"unknown arm {self.arm!r}")
        if not self.length_mm > 0:
            raise ValueError(f"segment length must be positive, got {self.length_mm}")
        if not self.loss_db_per_cm >= 0:
            raise ValueError(f"loss must be non-negative, got {self.loss_db_per_cm}")
        if self.tag not in SEGMENT_TAGS:
            raise ValueError(f"segment tag must be one of {SEGMENT_TAGS}, got {self.tag!r}")

    def amplitude_factor(self, fraction: float = 1.0) -> float:
        """Field transmission over ``fraction`` of the segment."""
        return 10 ** (-self.loss_db_per_cm * self.length_mm * fraction / 10.0 / 20.0)


Component = Union[Coupler, PhaseShifter, Segment]


@dataclass(frozen=True)
class HeaterModel:
    k_rad_per_mw: float = DEFAULT_K_RAD_PER_MW
    phi0: float = 0.0
    fuse_v: float = DEFAULT_FUSE_V

    def __post_init__(self):
        if not math.isfinite(self.k_rad_per_mw):
            raise ValueError("heater coefficient must be finite")
        if not self.fuse_v > 0:
            raise ValueError("fuse voltage must be positive")


def electrical_to_phase(V: float, I: float, model: HeaterModel) -> float:
    """Thermo-optic phase for drive (V volts, I amps); linear in power in mW."""
    if V < 0 or I < 0:
        raise ValueError("voltage and current must be non-negative")
    if V >= model.fuse_v:
        raise FuseError(f"{V} V reaches the fuse voltage ({model.fuse_v} V)")
    return model.k_rad_per_mw * (V * I * 1000.0) + model.phi0


def power_to_phase(power_mw: float | np.ndarray, model: HeaterModel):
    return model.k_rad_per_mw * np.asarray(power_mw) + model.phi0


@dataclass(frozen=True)
class CircuitSpec:
    components: tuple[Component, ...]
    heater: HeaterModel = field(default_factory=HeaterModel)
    coupling_loss_db: float = 0.0
    input_port: str = "A"
    output_ports: tuple[str, str] = ("A", "B")

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ConfigError("no components")
        if self.input_port not in ARMS:
            raise ConfigError(f"unknown input port {self.input_port!r}")
        if self.coupling_loss_db < 0:
            raise ConfigError("coupling loss must be non-negative")
        couplers = [i for i, c in enumerate(self.components) if isinstance(c, Coupler)]
        if not couplers:
            raise ConfigError("circuit has no coupler")
        for i, c in enumerate(self.components):
            if isinstance(c, Segment):
                if c.tag == "input" and i > couplers[0]:
                    raise ConfigError(f"component {i} (input segment) must precede the first coupler")
                if c.tag == "output" and i < couplers[-1]:
                    raise ConfigError(f"component {i} (output segment) must follow the last coupler")

    @property
    def shifters(self) -> list[int]:
        return [i for i, c in enumerate(self.components) if isinstance(c, PhaseShifter)]

    @property
    def source_segments(self) -> list[int]:
        return [i for i, c in enumerate(self.components) if isinstance(c, Segment) and c.is_source]

    def resolved_phase(self, index: int) -> float:
        c = self.components[index]
        if c.phi is not None:
            return float(c.phi)
        return electrical_to_phase(c.voltage_v, c.current_a, self.heater)

    def with_phase(self, phi: float) -> "CircuitSpec":
        """Copy with the (single) heater set to ``phi`` radians."""
        idx = self.shifters
        if len(idx) != 1:
            raise ConfigError(f"expected exactly one phase shifter, found {len(idx)}")
        comps = list(self.components)
        comps[idx[0]] = PhaseShifter(comps[idx[0]].arm, phi=float(phi))
        return replace(self, components=tuple(comps))

    def without_losses(self) -> "CircuitSpec":
        comps = [replace(c, loss_db_per_cm=0.0) if isinstance(c, Segment) else c for c in self.components]
        return replace(self, components=tuple(comps), coupling_loss_db=0.0)


def two_source_mzi(coupler_R: float = 0.5, source_length_mm: float = DEFAULT_SOURCE_LENGTH_MM,
                   input_length_mm: float = 0.0,
                   output_length_mm: float | Sequence[float] = 0.0,
                   loss_db_per_cm: float = 0.0, coupling_loss_db: float = 0.0,
                   heater: HeaterModel | None = None, phi: float = 0.0,
                   shifter_arm: str = "B", io_sources: bool = True) -> CircuitSpec:
    """The reconfigurable two-source interferometer.

    Zero I/O lengths drop the corresponding segments. ``output_length_mm``
    may be a pair to give the two output waveguides different lengths.
    """
    if isinstance(output_length_mm, (int, float)):
        out_a = out_b = float(output_length_mm)
    else:
        out_a, out_b = (float(v) for v in output_length_mm)
    comps: list[Component] = []
    if input_length_mm > 0:
        comps.append(Segment("A", input_length_mm, loss_db_per_cm, "input", io_sources))
    comps.append(Coupler(coupler_R))
    comps.append(Segment("A", source_length_mm, loss_db_per_cm, "source", True))
    comps.append(Segment("B", source_length_mm, loss_db_per_cm, "source", True))
    comps.append(PhaseShifter(shifter_arm, phi=phi))
    comps.append(Coupler(coupler_R))
    for arm, length in (("A", out_a), ("B", out_b)):
        if length > 0:
            comps.append(Segment(arm, length, loss_db_per_cm, "output", io_sources))
    return CircuitSpec(tuple(comps), heater or HeaterModel(), coupling_loss_db)


# -- pump ---------------------------------------------------------------------

def symmetric_wavelengths(center_nm: float, spacing_nm: float) -> tuple[float, float]:
    """Wavelengths (short, long) spaced by ``spacing_nm`` and symmetric in frequency.

    Solves 1/l1 + 1/l2 = 2/center with l2 - l1 = spacing exactly.
    """
    if spacing_nm < 0:
        raise ValueError("spacing must be non-negative")
    if spacing_nm == 0:
        return center_nm, center_nm
    u = spacing_nm / (math.hypot(center_nm, spacing_nm) + center_nm)
    return center_nm / (1 + u), center_nm / (1 - u)


@dataclass(frozen=True)
class PumpField:
    """CW pump colours launched into one input port."""

    wavelengths_nm: tuple[float, ...]
    powers_mw: tuple[float, ...]
    input_path: str = "A"

    def __post_init__(self):
        object.__setattr__(self, "wavelengths_nm", tuple(float(w) for w in self.wavelengths_nm))
        object.__setattr__(self, "powers_mw", tuple(float(p) for p in self.powers_mw))
        if len(self.wavelengths_nm) != len(self.powers_mw) or len(self.powers_mw) not in (1, 2):
            raise ValueError("pump needs one or two colours with matching powers")
        if any(p < 0 for p in self.powers_mw) or sum(self.powers_mw) <= 0:
            raise ValueError("total launched pump power must be positive")
        if any(not (w > 0 and math.isfinite(w)) for w in self.wavelengths_nm):
            raise ValueError("pump wavelengths must be positive")
        if len(self.wavelengths_nm) == 2 and self.wavelengths_nm[0] == self.wavelengths_nm[1]:
            raise ValueError("dual pump needs two distinct wavelengths")
        if self.input_path not in ARMS:
            raise ValueError(f"unknown input path {self.input_path!r}")

    @classmethod
    def single(cls, wavelength_nm: float, power_mw: float) -> "PumpField":
        return cls((wavelength_nm,), (power_mw,))

    @classmethod
    def dual(cls, center_nm: float, detuning_nm: float, total_power_mw: float) -> "PumpField":
        l1, l2 = symmetric_wavelengths(center_nm, detuning_nm)
        return cls((l1, l2), (total_power_mw / 2, total_power_mw / 2))

    @property
    def scheme(self) -> str:
        return "single" if len(self.powers_mw) == 1 else "dual"

    @property
    def total_power_mw(self) -> float:
        return sum(self.powers_mw)

    def input_amplitudes(self) -> list[np.ndarray]:
        """Per colour, the field vector over (A, B) in sqrt(mW)."""
        out = []
        for p in self.powers_mw:
            v = np.zeros(2, dtype=complex)
            v[ARMS.index(self.input_path)] = math.sqrt(p)
            out.append(v)
        return out


def coupler_matrix(R: float) -> np.ndarray:
    r, t = math.sqrt(R), math.sqrt(1 - R)
    return np.array([[r, 1j * t], [1j * t, r]])


@dataclass(frozen=True)
class PumpPropagation:
    """Classical pump amplitudes through a circuit.

    ``segment_fields[i]`` holds, for component index ``i`` (segments only), one
    complex field per pump colour at the segment midpoint. ``outputs`` holds the
    per-colour field vector over (A, B) after the last component, before the
    lumped coupling loss.
    """

    segment_fields: dict[int, tuple[complex, ...]]
    outputs: tuple[np.ndarray, ...]
    input_power_mw: float
    coupling_loss_db: float

    @property
    def output_powers_mw(self) -> np.ndarray:
        lumped = 10 ** (-self.coupling_loss_db / 10)
        return lumped * sum(np.abs(v) ** 2 for v in self.outputs)

    @property
    def transmissions(self) -> np.ndarray:
        """Fraction of launched power leaving ports (A, B)."""
        return self.output_powers_mw / self.input_power_mw


def propagate_pump(circuit: CircuitSpec, pump: PumpField) -> PumpPropagation:
    fields = pump.input_amplitudes()
    seg_fields: dict[int, tuple[complex, ...]] = {}
    for i, comp in enumerate(circuit.components):
        if isinstance(comp, Coupler):
            m = coupler_matrix(comp.R)
            fields = [m @ v for v in fields]
        elif isinstance(comp, PhaseShifter):
            k = ARMS.index(comp.arm)
            phase = np.exp(1j * circuit.resolved_phase(i))
            fields = [v.copy() for v in fields]
            for v in fields:
                v[k] *= phase
        else:
            k = ARMS.index(comp.arm)
            seg_fields[i] = tuple(complex(v[k] * comp.amplitude_factor(0.5)) for v in fields)
            fields = [v.copy() for v in fields]
            for v in fields:
                v[k] *= comp.amplitude_factor()
    return PumpPropagation(seg_fields, tuple(fields), pump.total_power_mw, circuit.coupling_loss_db)


@dataclass(frozen=True)
class ClassicalFringe:
    phi: np.ndarray
    bar: np.ndarray
    cross: np.ndarray

    def __len__(self):
        return len(self.phi)


def classical_fringe(circuit: CircuitSpec, phis: Iterable[float],
                     pump: PumpField | None = None) -> ClassicalFringe:
    """Pump transmission into the bar (input-side) and cross ports versus heater phase."""
    phis = np.asarray(list(phis), dtype=float)
    if phis.size == 0:
        raise ValueError("phase sweep is empty")
    pump = pump or PumpField.single(1549.6, 1.0)
    bar_idx = ARMS.index(circuit.input_port)
    rows = [propagate_pump(circuit.with_phase(p), pump).transmissions for p in phis]
    t = np.array(rows)
    return ClassicalFringe(phis, t[:, bar_idx], t[:, 1 - bar_idx])


# -- netlist ------------------------------------------------------------------

_DEVICE_KEYS = {"template", "coupler_R", "source_length_mm", "io_length_mm", "input_length_mm",
                "output_length_mm", "loss_db_per_cm", "coupling_loss_db", "heater", "phase_rad",
                "shifter_arm", "component", "input_port"}
_HEATER_KEYS = {"k_rad_per_mw", "phi0", "fuse_v"}
_COMPONENT_KEYS = {
    "coupler": {"type", "R"},
    "phase": {"type", "arm", "phi_rad", "voltage_v", "current_a"},
    "segment": {"type", "arm", "length_mm", "loss_db_per_cm", "tag", "is_source"},
}


def load_toml(text: str) -> dict:
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from exc


def _reject_unknown(table: dict, allowed: set, where: str):
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _heater_from(table: dict | None) -> HeaterModel:
    if table is None:
        return HeaterModel()
    if not isinstance(table, dict):
        raise ConfigError("device.heater must be a table")
    _reject_unknown(table, _HEATER_KEYS, "device.heater")
    try:
        return HeaterModel(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"device.heater: {exc}") from exc


def _component_from(i: int, table: dict) -> Component:
    kind = table.get("type")
    if kind not in _COMPONENT_KEYS:
        raise ConfigError(f"component {i}: unknown type {kind!r}")
    _reject_unknown(table, _COMPONENT_KEYS[kind], f"component {i} ({kind})")
    try:
        if kind == "coupler":
            return Coupler(float(table.get("R", 0.5)))
        if kind == "phase":
            if "voltage_v" in table or "current_a" in table:
                return PhaseShifter(table.get("arm", "B"), phi=None,
                                    voltage_v=table.get("voltage_v"), current_a=table.get("current_a"))
            return PhaseShifter(table.get("arm", "B"), phi=float(table.get("phi_rad", 0.0)))
        return Segment(table["arm"], float(table["length_mm"]), float(table.get("loss_db_per_cm", 0.0)),
                       table.get("tag", "source"), bool(table.get("is_source", True)))
    except KeyError as exc:
        raise ConfigError(f"component {i} ({kind}): missing key {exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"component {i} ({kind}): {exc}") from exc


def circuit_from_table(device: dict | str | None) -> CircuitSpec:
    """Build a circuit from the parsed ``device`` entry of a config document."""
    if device is None:
        raise ConfigError("no components")
    if isinstance(device, str):
        device = {"template": device}
    if not isinstance(device, dict):
        raise ConfigError("device must be a table or a template name")
    _reject_unknown(device, _DEVICE_KEYS, "device")
    heater = _heater_from(device.get("heater"))
    template = device.get("template")
    comps = device.get("component")
    if template is not None:
        if template != TEMPLATE:
            raise ConfigError(f"unknown device template {template!r}")
        if comps:
            raise ConfigError("device: give either a template or explicit components, not both")
        io = float(device.get("io_length_mm", 0.0))
        in_len = float(device.get("input_length_mm", 0.0))
        out_len = device.get("output_length_mm", io - in_len)
        try:
            return two_source_mzi(
                coupler_R=float(device.get("coupler_R", 0.5)),
                source_length_mm=float(device.get("source_length_mm", DEFAULT_SOURCE_LENGTH_MM)),
                input_length_mm=in_len, output_length_mm=out_len,
                loss_db_per_cm=float(device.get("loss_db_per_cm", 0.0)),
                coupling_loss_db=float(device.get("coupling_loss_db", 0.0)),
                heater=heater, phi=float(device.get("phase_rad", 0.0)),
                shifter_arm=device.get("shifter_arm", "B"))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"device template: {exc}") from exc
    for key in ("coupler_R", "source_length_mm", "io_length_mm", "input_length_mm",
                "output_length_mm", "loss_db_per_cm", "phase_rad", "shifter_arm"):
        if key in device:
            raise ConfigError(f"device.{key} is a template override; use it with template = {TEMPLATE!r}")
    if not comps:
        raise ConfigError("no components")
    built = tuple(_component_from(i, c) for i, c in enumerate(comps))
    return CircuitSpec(built, heater, float(device.get("coupling_loss_db", 0.0)),
                       input_port=device.get("input_port", "A"))


def parse_netlist(text: str) -> CircuitSpec:
    """Parse the device part of a TOML config document into a circuit."""
    doc = load_toml(text)
    return circuit_from_table(doc.get("device"))


def circuit_to_table(circuit: CircuitSpec) -> dict:
    comps = []
    for c in circuit.components:
        if isinstance(c, Coupler):
            comps.append({"type": "coupler", "R": c.R})
        elif isinstance(c, PhaseShifter):
            d = {"type": "phase", "arm": c.arm}
            if c.phi is not None:
                d["phi_rad"] = c.phi
            else:
                d["voltage_v"], d["current_a"] = c.voltage_v, c.current_a
            comps.append(d)
        else:
            comps.append({"type": "segment", "arm": c.arm, "length_mm": c.length_mm,
                          "loss_db_per_cm": c.loss_db_per_cm, "tag": c.tag, "is_source": c.is_source})
    h = circuit.heater
    return {"input_port": circuit.input_port, "coupling_loss_db": circuit.coupling_loss_db,
            "heater": {"k_rad_per_mw": h.k_rad_per_mw, "phi0": h.phi0, "fuse_v": h.fuse_v},
            "component": comps}


def serialize_netlist(circuit: CircuitSpec) -> str:
    """TOML text with explicit components; ``parse_netlist`` inverts it."""
    return tomli_w.dumps({"device": circuit_to_table(circuit)})
