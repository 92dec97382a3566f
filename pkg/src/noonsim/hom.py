"""Two-colour Hong-Ou-Mandel interference of the split pair state.

Lengths: wavelengths and filter widths in nm, delay displacement ``x`` in um.
The displacement is a single-pass free-space delay, tau = x / c.

Two routes to the coincidence probability are provided. ``hom_probability_closed``
is the cos x sinc formula; ``hom_probability_numeric`` discretizes the filtered
biphoton spectrum and applies the delay and beamsplitter to the two-photon
amplitude bin by bin. They share no code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NM_PER_UM = 1000.0
NORM_TOL = 1e-9


def sinc(z):
    """sin(z)/z with sinc(0) = 1."""
    return np.sinc(np.asarray(z, dtype=float) / np.pi)


def hom_probability_closed(x_um, delta_nm: float, w_nm: float, lambda_p_nm: float,
                           V: float = 1.0):
    """1/2 - V/2 cos(2 pi x delta / lp^2) sinc(2 pi x w / lp^2)."""
    if not (lambda_p_nm > 0 and w_nm > 0):
        raise ValueError("pump wavelength and filter width must be positive")
    if delta_nm < 0:
        raise ValueError("detuning must be non-negative")
    x_nm = np.asarray(x_um, dtype=float) * NM_PER_UM
    lp2 = lambda_p_nm ** 2
    beat = np.cos(2 * np.pi * x_nm * delta_nm / lp2)
    env = sinc(2 * np.pi * x_nm * w_nm / lp2)
    return 0.5 - 0.5 * V * beat * env


def beat_period(delta_nm: float, lambda_p_nm: float) -> float:
    """Delay (um) per beat of the two-colour fringe; ``inf`` when degenerate."""
    if delta_nm < 0:
        raise ValueError("detuning must be non-negative")
    if delta_nm == 0:
        return math.inf
    return lambda_p_nm ** 2 / delta_nm / NM_PER_UM


@dataclass(frozen=True)
class FilterSpec:
    center_nm: float
    width_nm: float
    shape: str = "top-hat"

    def __post_init__(self):
        if not self.width_nm > 0:
            raise ValueError("filter width must be positive")
        if self.shape != "top-hat":
            raise ValueError(f"unsupported filter shape {self.shape!r}")


@dataclass(frozen=True)
class BiphotonSpectrum:
    """Two-photon amplitude over frequency bins.

    ``kappa[k]`` is the frequency offset of the photon on path A from the
    pump, expressed as a spatial angular frequency in rad/um (its delay phase
    is exp(i kappa x)). Energy conservation puts the partner on path B at
    ``-kappa[k]``; ``amplitude[k]`` is the amplitude of that pair. The grid is
    mirror-symmetric so that bin ``n-1-k`` holds the exchanged pair.
    """

    kappa: np.ndarray
    amplitude: np.ndarray
    lambda_p_nm: float

    def __post_init__(self):
        k = np.asarray(self.kappa, dtype=float)
        a = np.asarray(self.amplitude, dtype=complex)
        if k.shape != a.shape or k.ndim != 1 or k.size < 2:
            raise ValueError("spectrum needs matching 1-D grids with at least two bins")
        if np.any(np.diff(k) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if not np.allclose(k, -k[::-1], rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(k)))):
            raise ValueError("frequency grid must be mirror-symmetric about the pump")
        if abs(np.sum(np.abs(a) ** 2) - 1.0) > NORM_TOL:
            raise ValueError("biphoton spectrum is not normalized")
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "amplitude", a)

    @classmethod
    def two_lobe(cls, lambda_p_nm: float, delta_nm: float, w_nm: float,
                 bins_per_lobe: int = 2048) -> "BiphotonSpectrum":
        """Flat lobes of width ``w`` centred at +-delta/2 from the pump.

        For ``delta = 0`` the lobes coincide and a single lobe is used.
        """
        if bins_per_lobe < 2:
            raise ValueError("need at least two bins per lobe")
        to_kappa = 2 * np.pi / lambda_p_nm ** 2 * NM_PER_UM  # nm of wavelength -> rad/um
        width = w_nm * to_kappa
        centre = 0.5 * delta_nm * to_kappa
        cells = (np.arange(bins_per_lobe) + 0.5) / bins_per_lobe - 0.5
        lobe = centre + cells * width
        if delta_nm == 0:
            return cls(lobe, np.full(lobe.size, 1 / math.sqrt(lobe.size), dtype=complex), lambda_p_nm)
        # overlapping lobes (delta < w) may put bins on the same frequency; merge their weight
        keys = np.round(np.concatenate([-lobe[::-1], lobe]) / width, 12)
        kappa, counts = np.unique(keys, return_counts=True)
        weight = counts / counts.sum()
        return cls(kappa * width, np.sqrt(weight).astype(complex), lambda_p_nm)


def hom_probability_numeric(spectrum: BiphotonSpectrum, x_um, R: float = 0.5):
    """Coincidence probability behind an R:(1-R) splitter, by direct summation.

    The pair (A at kappa, B at -kappa) with amplitude c(kappa) exits as
    one photon in each detector arm with amplitude
    R c(kappa) - (1 - R) c(-kappa); the probability sums |.|^2 over bins.
    """
    if not 0 <= R <= 1:
        raise ValueError("splitter reflectivity must lie in [0, 1]")
    x = np.atleast_1d(np.asarray(x_um, dtype=float))
    # delay on path A
    c = spectrum.amplitude[None, :] * np.exp(1j * np.outer(x, spectrum.kappa))
    coinc = R * c - (1 - R) * c[:, ::-1]
    p = np.sum(np.abs(coinc) ** 2, axis=1)
    return p if np.ndim(x_um) else float(p[0])


def effective_visibility(bunch_fraction: float, R: float = 0.5, mode_overlap: float = 1.0) -> float:
    """HOM visibility left after bunched contamination, splitter imbalance and mode mismatch.

    Split pairs give coincidences R^2 + (1-R)^2 - 2R(1-R) m S(x), where S is
    the cos x sinc term and m the mode overlap; bunched pairs give a flat
    2R(1-R). Returns the depth of the resulting dip relative to its baseline.
    """
    if not 0 <= bunch_fraction <= 1:
        raise ValueError("bunch fraction must lie in [0, 1]")
    if not 0 <= mode_overlap <= 1:
        raise ValueError("mode overlap must lie in [0, 1]")
    base, depth = _mixture_terms(bunch_fraction, R, mode_overlap)
    return depth / base


def _mixture_terms(f: float, R: float, m: float) -> tuple[float, float]:
    t = 2 * R * (1 - R)
    base = (1 - f) * (R ** 2 + (1 - R) ** 2) + f * t
    return base, (1 - f) * t * m


@dataclass(frozen=True)
class HomScan:
    x_um: np.ndarray
    P_hom: np.ndarray
    visibility: float
    delta_nm: float
    w_nm: float
    lambda_p_nm: float

    def __len__(self):
        return len(self.x_um)


def hom_scan(x_um, delta_nm: float, w_nm: float, lambda_p_nm: float, V: float | None = None,
             R: float = 0.5, bunch_fraction: float = 0.0, mode_overlap: float = 1.0) -> HomScan:
    """Coincidence probability along a delay scan.

    With ``V`` given the closed form is used as is. Otherwise the dip is built
    from the contamination model of :func:`effective_visibility`, which has the
    same shape scaled by the mixture baseline.
    """
    x = np.asarray(x_um, dtype=float)
    if x.size == 0:
        raise ValueError("delay sweep is empty")
    if V is not None:
        p = hom_probability_closed(x, delta_nm, w_nm, lambda_p_nm, V)
        vis = V
    else:
        base, depth = _mixture_terms(bunch_fraction, R, mode_overlap)
        vis = depth / base
        p = 2 * base * hom_probability_closed(x, delta_nm, w_nm, lambda_p_nm, vis)
    return HomScan(x, p, vis, delta_nm, w_nm, lambda_p_nm)


def dip_visibility(p_hom, baseline: float = 0.5) -> float:
    """(baseline - min) / baseline."""
    return (baseline - float(np.min(p_hom))) / baseline
