"""Command-line front end.

    noonsim simulate {phase-sweep,hom-scan,brightness} --config paper.toml [--plot]
    noonsim fit results.csv --model sinsq
    noonsim report results.json

Exit status: 0 success, 1 configuration error, 2 runtime or fit error,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .config import load_config
from .errors import ConfigError, FitError, FuseError
from .fit import MODELS, HOMDip, fit_model, make_model

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="noonsim", description="Two-source SFWM interferometer simulator")
    p.add_argument("--version", action="version", version=f"noonsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--out", help="output directory (default: $NOONSIM_OUT or .)")
    common.add_argument("--plot", action="store_true", help="also write an SVG plot")

    sim = sub.add_parser("simulate", help="run a sweep from a config", parents=[common])
    sim.add_argument("experiment", choices=["phase-sweep", "hom-scan", "brightness"])
    sim.add_argument("--config", required=True, help="TOML config, or the name of a bundled preset")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--noiseless", action="store_true", help="expected counts instead of Poisson draws")
    sim.add_argument("--points", type=int)
    sim.add_argument("--delta", type=float, help="signal-idler detuning in nm; 0 selects degenerate pairs")
    sim.add_argument("--series", choices=["split", "bunch_A", "bunch_B"])
    sim.add_argument("--name", help="output file stem")

    fit = sub.add_parser("fit", help="fit a model to a sweep CSV", parents=[common])
    fit.add_argument("csv")
    fit.add_argument("--model", required=True, choices=sorted(MODELS))
    fit.add_argument("--free-period", action="store_true", help="fit the fringe period too")
    fit.add_argument("--lambda-p", type=float, help="pair centre wavelength for the HOM model (nm)")
    fit.add_argument("--delta", type=float, help="starting detuning for the HOM model (nm)")
    fit.add_argument("--width", type=float, help="starting filter width for the HOM model (nm)")

    rep = sub.add_parser("report", help="summarise a results JSON")
    rep.add_argument("results")
    return p


def _out_dir(arg: str | None) -> Path:
    d = Path(arg or os.environ.get("NOONSIM_OUT") or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _summary(fits: dict) -> str:
    lines = []
    for key, f in fits.items():
        if f is None:
            lines.append(f"{key}: none")
        elif isinstance(f, dict) and "V" in f:
            v, s = f["V"], f["sigma_V"]
            lines.append(f"{key}: V = {100 * v:.2f} +- {100 * s:.2f} %  (chi2/dof {f['chi2_red']:.3g})")
        elif isinstance(f, dict):
            lines.append(f"{key}: " + ", ".join(f"{k}={v:.6g}" for k, v in f.items() if isinstance(v, float)))
        else:
            lines.append(f"{key}: {f:.6g}")
    return "\n".join(lines)


def fit_objects(result):
    """FitResults rebuilt for plotting from the fits dictionary."""
    from .fit import FitResult
    objs = []
    for f in result.fits.values():
        if not (isinstance(f, dict) and "params" in f):
            continue
        desc = f["model"]
        name = desc["name"]
        if name == "hom":
            model = HOMDip(desc["lambda_p_nm"], desc["delta_guess"], desc["w_guess"], desc.get("fixed"))
        elif name in ("eq4a", "eq4b"):
            model = make_model(name, fixed=desc.get("fixed"))
        else:
            model = make_model(name, fixed=desc.get("fixed"), free_period="period" not in desc.get("fixed", {}))
        objs.append(FitResult(model, f["params"], f["errors"], np.zeros((0, 0)), f["chi2"], f["dof"],
                              f["n_iter"], f["converged"], f["N_max"], f["N_min"], f["V"], f["sigma_V"]))
    return objs


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, delta_nm=args.delta, points=args.points, seed=args.seed, series=args.series)
    out = _out_dir(args.out)
    stem = args.name or f"{cfg.experiment.name}_{args.experiment}"
    if args.experiment == "phase-sweep":
        result, pump = ex.run_phase_sweep(cfg, noiseless=args.noiseless)
        ex.emit_csv(pump, out / f"{stem}_pump.csv")
    elif args.experiment == "hom-scan":
        result = ex.run_hom_scan(cfg, noiseless=args.noiseless)
    else:
        result = ex.run_brightness(cfg)
    ex.emit_csv(result, out / f"{stem}.csv")
    ex.emit_json(result, out / f"{stem}.json")
    if args.plot:
        from .plotting import emit_plot
        emit_plot(result, fit_objects(result), out / f"{stem}.svg", title=stem)
    print(f"wrote {out / stem}.csv ({len(result)} rows)")
    if result.fits:
        print(_summary(result.fits))
    return EXIT_OK


def _sidecar(csv_path: Path) -> dict:
    side = csv_path.with_suffix(".json")
    if side.is_file():
        try:
            return json.loads(side.read_text()).get("metadata", {})
        except (json.JSONDecodeError, AttributeError):
            return {}
    return {}


def cmd_fit(args) -> int:
    path = Path(args.csv)
    result = ex.read_csv(path)
    if result.header != ex.SWEEP_HEADER:
        raise ValueError(f"{path}: fitting needs the sweep schema ({','.join(ex.SWEEP_HEADER)})")
    meta = _sidecar(path)
    if args.model == "hom":
        lp = args.lambda_p or meta.get("lambda_p_nm", 1549.6)
        delta = args.delta if args.delta is not None else meta.get("delta_nm", 6.4)
        width = args.width or meta.get("wdm_width_nm", 0.8)
        model = HOMDip(lp, delta, width)
    elif args.model in ("sinsq", "cossq", "classical"):
        model = make_model(args.model, free_period=args.free_period)
    else:
        model = make_model(args.model)
    fr = fit_model(result["control"], result["counts_net"], result["sigma"], model)
    result.kind = meta.get("kind", "phase-sweep" if args.model != "hom" else "hom-scan")
    result.fits = {args.model: ex._fit_dict(fr)}
    result.metadata = {"source_csv": path.name, "source_metadata": meta}
    out = _out_dir(args.out)
    stem = f"{path.stem}_fit_{args.model}"
    ex.emit_json(result, out / f"{stem}.json")
    if args.plot:
        from .plotting import emit_plot
        emit_plot(result, fr, out / f"{stem}.svg", title=path.stem)
    print(_summary(result.fits))
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.results)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not JSON ({exc})") from None
    version = doc.get("schema_version") if isinstance(doc, dict) else None
    if version != ex.SCHEMA_VERSION:
        raise ValueError(f"{path}: schema version {version!r}, this build reads {ex.SCHEMA_VERSION}")
    meta = doc.get("metadata", {})
    print(f"{path.name}: {doc.get('kind')} with {doc.get('rows')} rows")
    for key in ("process", "delta_nm", "seed", "noiseless", "config_hash"):
        if key in meta:
            print(f"  {key}: {meta[key]}")
    if doc.get("fits"):
        print(_summary({k: v for k, v in doc["fits"].items() if v is not None}))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FuseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FitError, ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
