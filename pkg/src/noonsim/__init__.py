"""Simulation of a two-source SFWM silicon interferometer: path-entangled photon
pairs, on-chip fringes, off-chip HOM scans, detection statistics and fits."""

__version__ = "0.1.0"
