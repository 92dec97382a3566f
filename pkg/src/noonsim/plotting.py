"""Static SVG plots of sweeps: data with sqrt(N) error bars and the fitted curve."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fit import FitResult  # noqa: E402

XLABEL = {"phase-sweep": "heater phase (rad)", "hom-scan": "delay x (um)", "brightness": "pump power (mW)"}


def emit_plot(result, fits: list[FitResult] | FitResult | None, path: str | Path, title: str = "") -> Path:
    """Write an SVG. Raises ValueError (and writes nothing) for an empty result."""
    if len(result) == 0:
        raise ValueError("empty result, nothing to plot")
    if isinstance(fits, FitResult):
        fits = [fits]
    fits = fits or []
    plt.rcParams["svg.hashsalt"] = "noonsim"
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        if result.kind == "brightness":
            ax.loglog(result["power_mw"], result["pair_rate_hz"], "o", label="pair rate")
            ax.set_ylabel("pair rate (Hz)")
            ax.set_xlabel(XLABEL["brightness"])
        else:
            x = result["control"]
            ax.errorbar(x, result["counts_net"], yerr=result["sigma"], fmt="o", ms=3, capsize=1.5,
                        lw=0.8, label="net coincidences")
            xf = np.linspace(float(np.min(x)), float(np.max(x)), 1000)
            for fr in fits:
                ax.plot(xf, fr.predict(xf), "-", lw=1.2,
                        label=f"{fr.model.name} fit, V = {100 * fr.visibility:.1f} +- {100 * fr.sigma_visibility:.1f} %")
            ax.set_xlabel(XLABEL.get(result.kind, "control"))
            ax.set_ylabel("coincidences per point")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=8)
        fig.tight_layout()
        p = Path(path)
        fig.savefig(p, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return p
