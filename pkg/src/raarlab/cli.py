"""Command-line entry point: ``raarlab {synth,run,bench,convex-check}``.

Settings are layered: built-in defaults, then ``--config`` (``key = value``
lines), then explicit flags.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .algorithms import RelaxationSchedule, STEPS, run
from .convex import ConvergenceError, run_convex_suite
from .experiments import (
    AlgorithmConfig,
    ExperimentSpec,
    NoiseConfig,
    add_noise,
    aggregate_csv_text,
    plot_aggregate_svg,
    run_trials,
    snapshot,
    synthesize_data,
    trace_csv_text,
)
from .grid import DimensionError, read_grid, write_grid, write_pgm
from .projections import SmoothingConfig, check_magnitude, check_support

log = logging.getLogger("raarlab")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

DEFAULTS = {
    "out": "out",
    "seed": 0,
    "snr": 34.0,
    "pad": "128,128",
    "support": "64,64",
    "object_size": 38,
    "object": None,
    "init_norm": "data",
    "smooth_pm": True,
    "epsilon_scale": 1e-8,
    "algo": "raar",
    "schedule": "static",
    "beta": "0.75",
    "iters": 100,
    "trials": 100,
    "workers": 1,
    "snapshot": "",
    "png": False,
    "magnitude_file": None,
    "support_file": None,
    "initial_file": None,
    "starts": 5,
    "delta": 0.1,
    "samples": 100,
}

_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


class ValidationError(ValueError):
    pass


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _coerce(key, value):
    default = DEFAULTS[key]
    if value is None or isinstance(value, bool) and isinstance(default, bool):
        return value
    if isinstance(default, bool):
        try:
            return _BOOL[str(value).lower()]
        except KeyError:
            raise ValidationError(f"{key}: expected a boolean, got {value!r}") from None
    try:
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError:
        raise ValidationError(f"{key}: cannot parse {value!r}") from None
    return str(value)


def _ints(text, key):
    try:
        vals = tuple(int(v) for v in str(text).replace(" ", ",").split(",") if v)
    except ValueError:
        raise ValidationError(f"{key}: expected integers, got {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise ValidationError(f"{key}: extents must be positive")
    return vals


def _floats(text, key):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"{key}: expected numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="raarlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(sp, data=True):
        sp.add_argument("--config", default=S, help="key = value settings file")
        sp.add_argument("--out", default=S, help="output directory")
        sp.add_argument("--seed", default=S, help="base RNG seed")
        if data:
            sp.add_argument("--snr", default=S, help="noise level in dB")
            sp.add_argument("--pad", default=S, help="lattice extents, e.g. 128,128")
            sp.add_argument("--support", default=S, help="centred support extents, e.g. 64,64")
            sp.add_argument("--object-size", default=S, help="side of the synthetic object")
            sp.add_argument("--object", default=S, help="object grid or PGM file")
            sp.add_argument("--init-norm", default=S, choices=["data", "unit"])
            sp.add_argument("--smooth-pm", default=S, help="use the smoothed magnitude projector")
            sp.add_argument("--epsilon-scale", default=S, help="epsilon = scale * max(m)")

    def algo(sp):
        sp.add_argument("--algo", default=S, help=f"algorithm id(s), comma separated: {sorted(STEPS)}")
        sp.add_argument("--schedule", default=S, choices=["static", "smooth"])
        sp.add_argument("--beta", "--beta0", dest="beta", default=S,
                        help="static beta or smooth-step start value (comma list for bench)")
        sp.add_argument("--iters", default=S, help="iterations")

    sp = sub.add_parser("synth", help="write object, magnitude, support and initial guess files")
    common(sp)
    sp = sub.add_parser("run", help="run one algorithm and write its trace")
    common(sp)
    algo(sp)
    sp.add_argument("--snapshot", default=S, help="iteration(s) to save as images, comma list")
    sp.add_argument("--png", default=S, action="store_const", const=True)
    sp.add_argument("--magnitude-file", default=S)
    sp.add_argument("--support-file", default=S)
    sp.add_argument("--initial-file", default=S)
    sp = sub.add_parser("bench", help="multi-trial comparison with aggregate CSV and SVG")
    common(sp)
    algo(sp)
    sp.add_argument("--trials", default=S)
    sp.add_argument("--workers", default=S)
    sp = sub.add_parser("convex-check", help="fixed-point checks on the convex geometry suite")
    common(sp, data=False)
    sp.add_argument("--starts", default=S)
    sp.add_argument("--delta", default=S)
    sp.add_argument("--samples", default=S)
    return p


def resolve(ns: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    given = vars(ns).copy()
    command = given.pop("command")
    given.pop("verbose", None)
    if "config" in given:
        cfg.update({k: _coerce(k, v) for k, v in read_config(given.pop("config")).items()})
    cfg.update({k: _coerce(k, v) for k, v in given.items()})
    cfg["command"] = command
    return cfg


def config_header(cfg: dict) -> list[str]:
    return ["raarlab " + cfg["command"]] + [f"{k} = {cfg[k]}" for k in sorted(cfg) if k != "command"]


def experiment_spec(cfg: dict, configs=()) -> ExperimentSpec:
    obj = read_grid(cfg["object"]) if cfg["object"] else None
    if cfg["iters"] < 1 or cfg["trials"] < 1:
        raise ValidationError("iters and trials must be at least 1")
    if not cfg["epsilon_scale"] > 0:
        raise ValidationError("epsilon_scale must be positive")
    return ExperimentSpec(
        object=obj, object_size=cfg["object_size"], pad_dims=_ints(cfg["pad"], "pad"),
        support_dims=_ints(cfg["support"], "support"), snr_db=cfg["snr"], trials=cfg["trials"],
        iterations=cfg["iters"], configs=tuple(configs), seed=cfg["seed"],
        smoothed=cfg["smooth_pm"], epsilon_scale=cfg["epsilon_scale"], init_norm=cfg["init_norm"],
    )


def algorithm_configs(cfg: dict) -> list[AlgorithmConfig]:
    algos = [a.strip() for a in cfg["algo"].split(",") if a.strip()]
    for a in algos:
        if a not in STEPS:
            raise ValidationError(f"unknown algorithm {a!r}; choose from {sorted(STEPS)}")
    out = []
    for b in _floats(cfg["beta"], "beta"):
        if not 0 < b <= 1:
            raise ValidationError(f"beta must lie in (0, 1], got {b}")
        sched = RelaxationSchedule.static(b) if cfg["schedule"] == "static" else RelaxationSchedule.smooth(b)
        out.extend(AlgorithmConfig(a, sched) for a in algos)
    if not out:
        raise ValidationError("no algorithm/beta combination given")
    return out


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def cmd_synth(cfg):
    spec = experiment_spec(cfg)
    data = synthesize_data(spec)
    noisy = add_noise(data.magnitude, NoiseConfig.from_snr(data.magnitude, spec.snr_db, [spec.seed, 0]))
    hdr = config_header(cfg)
    out = cfg["out"]
    write_grid(os.path.join(out, "object.txt"), data.object, hdr)
    write_grid(os.path.join(out, "magnitude.txt"), data.magnitude, hdr)
    write_grid(os.path.join(out, "magnitude_noisy.txt"), noisy, hdr)
    write_grid(os.path.join(out, "support.txt"), data.support.astype(float), hdr)
    write_grid(os.path.join(out, "initial.txt"), data.initial_guess, hdr)
    if data.object.ndim == 2:
        write_pgm(os.path.join(out, "object.pgm"), data.object, header=hdr)


def cmd_run(cfg):
    configs = algorithm_configs(cfg)
    if len(configs) != 1:
        raise ValidationError("run takes exactly one algorithm and one beta")
    acfg = configs[0]
    spec = experiment_spec(cfg, configs)
    data = synthesize_data(spec) if not (cfg["magnitude_file"] and cfg["support_file"]) else None
    if cfg["magnitude_file"]:
        m = check_magnitude(read_grid(cfg["magnitude_file"]), hermitian=True)
    else:
        m = add_noise(data.magnitude, NoiseConfig.from_snr(data.magnitude, spec.snr_db, [spec.seed, 0]))
    D = check_support(read_grid(cfg["support_file"]) > 0.5, m.shape) if cfg["support_file"] else data.support
    if cfg["initial_file"]:
        u0 = read_grid(cfg["initial_file"])
    elif data is not None:
        u0 = data.initial_guess
    else:
        u0 = D.astype(float) * (np.linalg.norm(m) / np.sqrt(D.sum()))
    snaps = set(int(v) for v in _floats(cfg["snapshot"], "snapshot")) if cfg["snapshot"] else set()
    smoothing = SmoothingConfig.for_data(m, spec.epsilon_scale) if spec.smoothed else None
    hdr = config_header(cfg)

    def monitor(state):
        if state.index in snaps:
            snapshot(state.iterate, state.index, m, D, cfg["out"], prefix=acfg.label,
                     png=cfg["png"], header=hdr)

    res = run(acfg.algorithm, u0, m, D, acfg.schedule, spec.iterations, monitor=monitor,
              smoothing=smoothing)
    _write(os.path.join(cfg["out"], f"trace_{acfg.label}.csv"), trace_csv_text(acfg.label, res.states, hdr))
    write_grid(os.path.join(cfg["out"], f"final_{acfg.label}.txt"), res.final, hdr)


def cmd_bench(cfg):
    spec = experiment_spec(cfg, algorithm_configs(cfg))
    result = run_trials(spec, workers=max(1, cfg["workers"]))
    for lab in result.labels:
        if not np.all(np.isfinite(result.mean(lab))):
            raise FloatingPointError(f"non-finite error metric in {lab}")
    hdr = config_header(cfg)
    _write(os.path.join(cfg["out"], "aggregate.csv"), aggregate_csv_text(result, hdr))
    plot_aggregate_svg(os.path.join(cfg["out"], "aggregate.svg"), result,
                       title=f"mean over {spec.trials} trials, SNR {spec.snr_db:g} dB",
                       header="; ".join(hdr))


def cmd_convex_check(cfg):
    report = run_convex_suite(starts=cfg["starts"], seed=cfg["seed"], delta=cfg["delta"],
                              samples=cfg["samples"])
    report = {"config": {k: cfg[k] for k in sorted(cfg)}, **report}
    _write(os.path.join(cfg["out"], "convex_report.json"), json.dumps(report, indent=2, sort_keys=True) + "\n")
    if not report["all_pass"]:
        failed = [r["geometry"] for r in report["reports"] if not all(r["pass"].values())]
        raise FloatingPointError(f"convex checks failed for {sorted(set(failed))}")


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "bench": cmd_bench, "convex-check": cmd_convex_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        os.makedirs(cfg["out"], exist_ok=True)
        COMMANDS[cfg["command"]](cfg)
    except (ConvergenceError, FloatingPointError) as exc:
        print(f"raarlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:  # DimensionError and ValidationError are ValueErrors
        print(f"raarlab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
