"""Command-line entry point: simulate, generate, evaluate, inspect.

Exit codes: 0 ok, 1 usage/config error, 2 solver failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from .config import BenchmarkConfig, ConfigError, from_dict, load_config, prepared_circuit, set_path
from .dataset import (
    data_filename,
    export_csv,
    generate_benchmark,
    mode_identifiers,
    read_csv,
    read_sidecar,
    sidecar_path,
    simulate_run,
    _sidecar,
)
from .evaluation import evaluate, format_table
from .faults import parse_mode
from .network import SolverDiverged

OUT_ENV = "FUELBENCH_OUT"
EXIT_USAGE, EXIT_SOLVER, EXIT_IO = 1, 2, 3

log = logging.getLogger("fuelbench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _scalar(text: str):
    """Parse a flag value the way the config file would."""
    return yaml.safe_load(text)


def _key_values(items):
    out = []
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"expected KEY=VALUE, got {item!r}")
        out.append((key, _scalar(value)))
    return out


# Config keys and their flags are one-to-one: --runs-per-mode <-> runs_per_mode.
_SCALAR_KEYS = {
    "duration": float,
    "sample_rate": float,
    "runs_per_mode": int,
    "base_seed": int,
    "motor_speed_nominal": float,
    "speed_jitter": float,
    "out_dir": str,
}


def _add_config_flags(p):
    p.add_argument("--config", type=Path, help="YAML/JSON config file (default: built-in paper-default)")
    for key, typ in _SCALAR_KEYS.items():
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, default=None,
                       help=f"override config key '{key}'")
    p.add_argument("--modes", default=None, help="comma-separated modes, e.g. f0,f4,f9 (config key 'modes')")
    p.add_argument("--throttle", default=None,
                   help="profile name or JSON breakpoint list [[t, theta], ...] (config key 'throttle')")
    p.add_argument("--calibrate-bypass", dest="calibrate_bypass", action=argparse.BooleanOptionalAction,
                   default=None, help="calibrate the bypass set point to 67 bar rise (config key 'calibrate_bypass')")
    p.add_argument("--circuit", action="append", metavar="KEY=VALUE",
                   help="override a circuit parameter, e.g. pump.displacement=4e-5 (config section 'circuit')")
    p.add_argument("--solver", action="append", metavar="KEY=VALUE",
                   help="override a solver setting, e.g. max_internal_dt=5e-4 (config section 'solver')")
    p.add_argument("--faults", action="append", metavar="fN.KEY=VALUE",
                   help="override a fault setting, e.g. f4.magnitude=1e-10 (config section 'faults')")


def build_config(args) -> BenchmarkConfig:
    base = load_config(args.config) if args.config else BenchmarkConfig()
    data = base.to_dict()
    env_out = os.environ.get(OUT_ENV)
    if env_out:
        data["out_dir"] = env_out
    for key in _SCALAR_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "modes", None):
        data["modes"] = [m for m in args.modes.split(",") if m]
    if getattr(args, "throttle", None):
        text = args.throttle
        data["throttle"] = json.loads(text) if text.lstrip().startswith("[") else text
    if getattr(args, "calibrate_bypass", None) is not None:
        data["calibrate_bypass"] = args.calibrate_bypass
    for section in ("circuit", "solver"):
        for key, value in _key_values(getattr(args, section, None)):
            data = set_path(data, f"{section}.{key}", value)
    for key, value in _key_values(getattr(args, "faults", None)):
        mode, _, field_name = key.partition(".")
        mode_key = f"f{int(parse_mode(mode))}"
        faults = dict(data.get("faults", {}))
        faults[mode_key] = {**faults.get(mode_key, {}), field_name: value}
        data["faults"] = faults
    return from_dict(data)


def cmd_simulate(args) -> int:
    config = build_config(args)
    mode = int(parse_mode(args.mode))
    params = prepared_circuit(config)
    run_cfg = config.run_config(mode, args.seed)
    out = simulate_run(params, run_cfg, config.solver)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = Path(args.output) if args.output else out_dir / data_filename(mode)
    if mode == 0:
        export_csv([(out, mode_identifiers(run_cfg, out))], path, include_modes=True, overwrite=args.force)
    else:
        export_csv([out], path, overwrite=args.force)
    meta = _sidecar(config, params, mode, [args.seed], path.name)
    meta["labels_file"] = None
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path} ({len(out)} samples)")
    return 0


def cmd_generate(args) -> int:
    config = build_config(args)

    def progress(name, status):
        print(f"[{name}] {status}", file=sys.stderr)

    jobs = args.jobs or os.cpu_count() or 1
    paths = generate_benchmark(config, jobs=jobs, force=args.force, progress=progress)
    for p in paths:
        print(p)
    return 0


def cmd_evaluate(args) -> int:
    if args.baseline == (args.predictions is not None):
        raise UsageError("give exactly one of --predictions DIR or --baseline")
    result = evaluate(args.dataset, predictions_dir=args.predictions, baseline=args.baseline,
                      assignments=args.assignments, threshold=args.threshold, debounce=args.debounce)
    print(format_table(result))
    out = Path(args.output) if args.output else Path(args.dataset) / "scores.json"
    out.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return 1 if result["errors"] else 0


def cmd_inspect(args) -> int:
    root = Path(args.dataset)
    files = sorted(root.glob("healthy.csv")) + sorted(root.glob("fault_[0-9].csv"))
    if not files:
        raise FileNotFoundError(f"no dataset files in {root}")
    for path in files:
        header, values = read_csv(path)
        meta = read_sidecar(path)
        print(f"{path.name}: {len(values)} rows, {len(header)} columns, {meta['runs']} runs, "
              f"fault f{meta['fault']['mode']} ({meta['fault']['name']})")
        for i, name in enumerate(header):
            col = values[:, i]
            print(f"  {name:<15} min={col.min():.6g} mean={col.mean():.6g} max={col.max():.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fuelbench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate one run and write CSV + sidecar")
    _add_config_flags(p)
    p.add_argument("--mode", default="f0", help="operating mode f0..f9")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="CSV path (default: <out-dir>/<mode file name>)")
    p.add_argument("--force", action="store_true", help="overwrite existing output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", help="generate the 10-file benchmark")
    _add_config_flags(p)
    p.add_argument("--jobs", type=int, default=None, help="parallel runs (default: all cores)")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score predictions or the baseline per fault")
    p.add_argument("dataset", type=Path)
    p.add_argument("--predictions", type=Path, help="directory of fault_N.csv files with a 'prediction' column")
    p.add_argument("--baseline", action="store_true", help="run the z-score baseline detector")
    p.add_argument("--assignments", type=Path, help="CSV with a 'state' column aligned to healthy.csv")
    p.add_argument("--threshold", type=float, default=6.0)
    p.add_argument("--debounce", type=int, default=5)
    p.add_argument("--output", help="JSON score file (default: <dataset>/scores.json)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect", help="print dataset statistics")
    p.add_argument("dataset", type=Path)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"fuelbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverDiverged as exc:
        print(f"fuelbench: solver failure: {exc} {exc.context}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"fuelbench: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
