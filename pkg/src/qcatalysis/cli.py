"""Command line front end.

    qcatalysis simulate  --scenario fock-cal --samples 100000 --out runs/fock
    qcatalysis sample    --state state.json --samples 14153 --out runs/data
    qcatalysis reconstruct --record runs/data/quadratures.csv --out runs/rec
    qcatalysis compare   a.json b.json
    qcatalysis sweep     --alphas 0.1 0.3 0.6 --out runs/sweep

Exit codes: 0 success, 1 input error, 2 numerical failure. Errors are also
printed to stderr as a one-line JSON record.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import harness
from .errors import CatalysisError, InputError, NumericalError
from .fock import load_density, save_density
from .homodyne import QuadratureRecord, apply_vacuum_scale, calibrate_vacuum, sample_quadratures

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2

# CLI flag -> RunConfig field
_OVERRIDES = {
    "scenario": str, "alpha": float, "t2": float, "eta_spd": float, "eta_photon": float,
    "eta_hd": float, "p_dark": float, "dim": int, "samples": int, "cutoff": float,
    "recon_dim": int, "phase_bins": int, "periods": float, "grid_half_width": float,
    "grid_points": int,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--out", help="output directory")
    for name, typ in _OVERRIDES.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)


def _config(args, **forced) -> harness.RunConfig:
    overrides = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if getattr(args, "alphas", None):
        overrides["alphas"] = list(args.alphas)
    overrides.update(forced)
    if args.config:
        return harness.RunConfig.from_json(args.config, **overrides)
    return harness.RunConfig.from_mapping(overrides)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcatalysis", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario end to end")
    _add_common(p)

    p = sub.add_parser("sample", help="write a synthetic quadrature record")
    _add_common(p)
    p.add_argument("--state", help="density-matrix JSON to sample (default: scenario forward model)")

    p = sub.add_parser("reconstruct", help="pattern-function and FBP reconstruction of a record")
    _add_common(p)
    p.add_argument("--record", required=True, help="quadrature CSV")
    p.add_argument("--vacuum-record", help="vacuum CSV used to rescale the record first")
    p.add_argument("--psd", action="store_true", help="project the density estimate onto PSD states")

    p = sub.add_parser("compare", help="fidelity / trace distance between two density matrices")
    p.add_argument("a", help="reference density-matrix JSON")
    p.add_argument("b", help="density-matrix JSON")
    p.add_argument("--out", help="also write compare.json into this directory")

    p = sub.add_parser("sweep", help="catalysis scenario over several alpha values")
    _add_common(p)
    p.add_argument("--alphas", type=float, nargs="+")
    return ap


def _cmd_simulate(args) -> dict:
    cfg = _config(args)
    summary = harness.run_scenario(cfg)
    return {"output_dir": cfg.output_dir, "scenario": cfg.scenario,
            "fidelity_reconstructed": summary["quantities"]["fidelity_reconstructed"]["value"]}


def _cmd_sample(args) -> dict:
    cfg = _config(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.state:
        rho = load_density(args.state)
        label = Path(args.state).stem
    else:
        rho, _ = harness.forward_state(cfg)
        label = cfg.scenario
        save_density(out / "state_true.json", rho)
    record = sample_quadratures(rho, cfg.samples, "ramp", cfg.seed, periods=cfg.periods,
                                phase_bins=cfg.phase_bins, label=label)
    record.to_csv(out / "quadratures.csv")
    return {"record": str(out / "quadratures.csv"), "samples": len(record)}


def _cmd_reconstruct(args) -> dict:
    cfg = _config(args)
    record = QuadratureRecord.from_csv(args.record)
    if args.vacuum_record:
        scale = calibrate_vacuum(QuadratureRecord.from_csv(args.vacuum_record))
        record = apply_vacuum_scale(record, scale)
    settings = cfg.settings
    if args.psd:
        settings = dataclasses.replace(settings, project_psd=True)
    return harness.reconstruct_record(record, settings, Path(cfg.output_dir))


def _cmd_compare(args) -> dict:
    metrics = harness.compare_states(load_density(args.a), load_density(args.b))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    return metrics


def _cmd_sweep(args) -> dict:
    cfg = _config(args, scenario="alpha-sweep")
    summary = harness.run_scenario(cfg)
    return {"output_dir": cfg.output_dir, "trend": summary["trend"]}


COMMANDS = {
    "simulate": _cmd_simulate,
    "sample": _cmd_sample,
    "reconstruct": _cmd_reconstruct,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        result = COMMANDS[args.command](args)
    except (InputError, OSError) as exc:
        return _fail(args, exc, EXIT_INPUT)
    except (NumericalError, CatalysisError, FloatingPointError) as exc:
        return _fail(args, exc, EXIT_NUMERICAL)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def _fail(args, exc: BaseException, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code,
              "command": args.command}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code

if __name__ == "__main__":
    raise SystemExit(main())
