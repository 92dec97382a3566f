"""Few-photon Fock-state algebra over labelled optical modes.

States are finite superpositions of occupation patterns. Linear optical
elements act on creation operators, a_k^dag -> sum_j M[j, k] a_j^dag, and the
resulting polynomial is expanded term by term. The photon number never
exceeds four here, so a dictionary of amplitudes is all we need.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

PATHS = ("A", "B")
FREQ_BINS = ("pump", "pump1", "pump2", "signal", "idler", "degenerate")
MAX_PHOTONS = 4
PRUNE_TOL = 1e-15
UNITARY_TOL = 1e-10


class StructureError(ValueError):
    """A linear map or state does not fit the modes it is applied to."""


@dataclass(frozen=True, order=True)
class ModeLabel:
    path: str
    freq_bin: str
    wavelength_nm: float

    def __post_init__(self):
        if self.path not in PATHS:
            raise ValueError(f"unknown path {self.path!r}, expected one of {PATHS}")
        if self.freq_bin not in FREQ_BINS:
            raise ValueError(f"unknown frequency bin {self.freq_bin!r}")
        if not (math.isfinite(self.wavelength_nm) and self.wavelength_nm > 0):
            raise ValueError(f"wavelength must be positive and finite, got {self.wavelength_nm}")

    def on_path(self, path: str) -> "ModeLabel":
        return ModeLabel(path, self.freq_bin, self.wavelength_nm)

    def __str__(self):
        return f"{self.path}:{self.freq_bin}"


@dataclass(frozen=True)
class FockOccupation:
    """Photon counts per mode. Only occupied modes are stored, in sorted order."""

    counts: tuple[tuple[ModeLabel, int], ...] = ()

    def __post_init__(self):
        seen = set()
        for mode, n in self.counts:
            if not isinstance(n, (int, np.integer)) or n <= 0:
                raise ValueError(f"occupation of {mode} must be a positive integer, got {n!r}")
            if mode in seen:
                raise ValueError(f"mode {mode} listed twice")
            seen.add(mode)
        if self.total > MAX_PHOTONS:
            raise ValueError(f"{self.total} photons exceeds the simulator cap of {MAX_PHOTONS}")

    @classmethod
    def of(cls, mapping: Mapping[ModeLabel, int] | Iterable[ModeLabel] = ()) -> "FockOccupation":
        """Build from a mode->count mapping or from an iterable of modes (one photon each)."""
        if not isinstance(mapping, Mapping):
            mapping = Counter(mapping)
        items = sorted((m, int(n)) for m, n in mapping.items() if n)
        return cls(tuple(items))

    @property
    def total(self) -> int:
        return sum(n for _, n in self.counts)

    @property
    def modes(self) -> tuple[ModeLabel, ...]:
        return tuple(m for m, _ in self.counts)

    def __getitem__(self, mode: ModeLabel) -> int:
        for m, n in self.counts:
            if m == mode:
                return n
        return 0

    def photons_on_path(self, path: str) -> int:
        return sum(n for m, n in self.counts if m.path == path)

    def __str__(self):
        if not self.counts:
            return "|vac>"
        return "|" + ", ".join(f"{n}@{m}" for m, n in self.counts) + ">"


@dataclass(frozen=True)
class QuantumState:
    """Pure state as a map from occupation pattern to complex amplitude.

    Construct through :meth:`from_terms`, which prunes negligible amplitudes
    and merges duplicate patterns.
    """

    terms: Mapping[FockOccupation, complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", MappingProxyType(dict(self.terms)))

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[FockOccupation, complex]] | Mapping,
                   normalize: bool = False) -> "QuantumState":
        if isinstance(terms, Mapping):
            terms = terms.items()
        acc: dict[FockOccupation, complex] = {}
        for occ, amp in terms:
            acc[occ] = acc.get(occ, 0j) + complex(amp)
        pruned = {k: v for k, v in acc.items() if abs(v) > PRUNE_TOL}
        state = cls(pruned)
        return state.normalized() if normalize else state

    @classmethod
    def fock(cls, mapping: Mapping[ModeLabel, int] | Iterable[ModeLabel] = ()) -> "QuantumState":
        return cls({FockOccupation.of(mapping): 1.0 + 0j})

    @classmethod
    def vacuum(cls) -> "QuantumState":
        return cls({FockOccupation(): 1.0 + 0j})

    @property
    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def normalized(self) -> "QuantumState":
        n = math.sqrt(self.norm_sq)
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return QuantumState.from_terms({k: v / n for k, v in self.terms.items()})

    def scaled(self, factor: complex) -> "QuantumState":
        return QuantumState.from_terms({k: v * factor for k, v in self.terms.items()})

    def __add__(self, other: "QuantumState") -> "QuantumState":
        return QuantumState.from_terms(list(self.terms.items()) + list(other.terms.items()))

    def amplitude(self, pattern: FockOccupation) -> complex:
        return self.terms.get(pattern, 0j)

    def inner(self, other: "QuantumState") -> complex:
        """<self|other>."""
        return sum((self.terms[k].conjugate() * v for k, v in other.terms.items() if k in self.terms), 0j)

    def overlap(self, other: "QuantumState") -> float:
        """|<self|other>| for normalized states; 1 means equal up to global phase."""
        return abs(self.inner(other))

    @property
    def modes(self) -> frozenset[ModeLabel]:
        return frozenset(m for occ in self.terms for m in occ.modes)

    def photon_numbers(self) -> set[int]:
        return {occ.total for occ in self.terms}

    def __str__(self):
        parts = [f"({a.real:+.4f}{a.imag:+.4f}j){occ}" for occ, a in sorted(
            self.terms.items(), key=lambda kv: kv[0].counts)]
        return " ".join(parts) if parts else "0"


@dataclass(frozen=True)
class LinearMap:
    """Mode transformation matrix; column k is the image of input mode k."""

    modes: tuple[ModeLabel, ...]
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "modes", tuple(self.modes))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise StructureError(f"linear map must be square, got shape {mat.shape}")
        if mat.shape[0] != len(self.modes):
            raise StructureError(
                f"matrix of size {mat.shape[0]} does not match {len(self.modes)} mode labels")
        if len(set(self.modes)) != len(self.modes):
            raise StructureError("duplicate mode labels in linear map")

    @classmethod
    def identity(cls, modes: Sequence[ModeLabel]) -> "LinearMap":
        return cls(tuple(modes), np.eye(len(modes)))

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m.conj().T @ m - np.eye(len(self.modes)))) < tol)

    def then(self, other: "LinearMap") -> "LinearMap":
        """Map applying ``self`` first and ``other`` second (matrix ``other @ self``)."""
        if other.modes != self.modes:
            raise StructureError("cannot compose maps over different mode lists")
        return LinearMap(self.modes, other.matrix @ self.matrix)

    def direct_sum(self, other: "LinearMap") -> "LinearMap":
        if set(self.modes) & set(other.modes):
            raise StructureError("direct sum requires disjoint modes")
        n, k = len(self.modes), len(other.modes)
        mat = np.zeros((n + k, n + k), dtype=complex)
        mat[:n, :n] = self.matrix
        mat[n:, n:] = other.matrix
        return LinearMap(self.modes + other.modes, mat)

    def column(self, mode: ModeLabel) -> list[tuple[ModeLabel, complex]]:
        """Image of ``mode``; modes outside the map pass through unchanged."""
        try:
            k = self.modes.index(mode)
        except ValueError:
            return [(mode, 1.0 + 0j)]
        col = self.matrix[:, k]
        return [(self.modes[j], complex(col[j])) for j in range(len(col)) if col[j] != 0]


def beamsplitter_map(R: float, modes: tuple[ModeLabel, ModeLabel]) -> LinearMap:
    """Symmetric 2x2 coupler with power reflectivity ``R``.

    The matrix is [[sqrt(R), i sqrt(1-R)], [i sqrt(1-R), sqrt(R)]] over
    ``modes``; ``R`` is the amplitude kept on the input path.
    """
    if not (0.0 <= R <= 1.0) or not math.isfinite(R):
        raise ValueError(f"reflectivity must lie in [0, 1], got {R}")
    a, b = modes
    if a.freq_bin != b.freq_bin or a.wavelength_nm != b.wavelength_nm:
        raise StructureError("beamsplitter modes must share a frequency bin")
    if a.path == b.path:
        raise StructureError("beamsplitter modes must be on different paths")
    r, t = math.sqrt(R), math.sqrt(1.0 - R)
    return LinearMap((a, b), np.array([[r, 1j * t], [1j * t, r]]))


def coupler_map(R: float, bins: Iterable[ModeLabel]) -> LinearMap:
    """Beamsplitter acting identically on every frequency bin in ``bins``.

    ``bins`` may hold labels on either path; one A/B pair is built per bin.
    """
    out = None
    done = set()
    for mode in sorted(bins):
        key = (mode.freq_bin, mode.wavelength_nm)
        if key in done:
            continue
        done.add(key)
        bs = beamsplitter_map(R, (mode.on_path("A"), mode.on_path("B")))
        out = bs if out is None else out.direct_sum(bs)
    if out is None:
        raise StructureError("coupler needs at least one frequency bin")
    return out


def phase_shift(state: QuantumState, mode: ModeLabel, phi: float) -> QuantumState:
    """Multiply every term by exp(i n phi), n the photon count in ``mode``."""
    return QuantumState.from_terms(
        {occ: amp * np.exp(1j * occ[mode] * phi) for occ, amp in state.terms.items()})


def phase_shift_path(state: QuantumState, path: str, phi: float) -> QuantumState:
    """Apply the same phase to every frequency bin on ``path``."""
    return QuantumState.from_terms(
        {occ: amp * np.exp(1j * occ.photons_on_path(path) * phi) for occ, amp in state.terms.items()})


def apply_linear_map(state: QuantumState, lmap: LinearMap) -> QuantumState:
    out: dict[FockOccupation, complex] = {}
    for occ, amp in state.terms.items():
        # |n> = prod (a^dag)^n / sqrt(n!) |0>
        coeff = amp / math.sqrt(math.prod(math.factorial(n) for _, n in occ.counts))
        poly: dict[tuple[ModeLabel, ...], complex] = {(): coeff}
        for mode, n in occ.counts:
            col = lmap.column(mode)
            for _ in range(n):
                nxt: dict[tuple[ModeLabel, ...], complex] = {}
                for key, c in poly.items():
                    for target, m in col:
                        k2 = tuple(sorted(key + (target,)))
                        nxt[k2] = nxt.get(k2, 0j) + c * m
                poly = nxt
        for key, c in poly.items():
            counts = Counter(key)
            pattern = FockOccupation.of(counts)
            bose = math.sqrt(math.prod(math.factorial(n) for n in counts.values()))
            out[pattern] = out.get(pattern, 0j) + c * bose
    return QuantumState.from_terms(out)


def outcome_probability(state: QuantumState, pattern: FockOccupation) -> float:
    return abs(state.amplitude(pattern)) ** 2


def creation_monomial(modes: Sequence[ModeLabel], amplitude: complex = 1.0) -> QuantumState:
    """State  amplitude * prod_k a_k^dag |0>  (not normalized for repeated modes)."""
    counts = Counter(modes)
    bose = math.sqrt(math.prod(math.factorial(n) for n in counts.values()))
    return QuantumState.from_terms({FockOccupation.of(counts): amplitude * bose})
