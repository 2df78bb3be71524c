"""Command-line entry point: ``holoregge run`` and ``holoregge fixture``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import jsonschema

from ._numerics import set_deterministic
from .errors import ConfigError, HoloReggeError, NumericalFailure
from .experiments import EXPERIMENTS, PARAM_SCHEMAS, RunResult, build_cases, effective_params, run_case
from .fixtures import FIXTURE_KINDS, generate_fixture

log = logging.getLogger("holoregge")

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "inputs": {"type": "array", "items": {"type": "string"}},
        "params": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["experiment"],
    "additionalProperties": False,
}

CSV_COLUMNS = ["case", "label", "quantity", "inputs", "value", "reference", "abs_error", "criterion", "pass"]


def _schema_error(exc: jsonschema.ValidationError, where: str) -> ConfigError:
    path = "/".join(str(p) for p in exc.absolute_path)
    return ConfigError(f"{where}{'/' + path if path else ''}: {exc.message}")


def validate_config(data) -> dict:
    """Check ``data`` against the schema; returns the config with defaults filled in."""
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise _schema_error(exc, "config") from exc
    exp = data["experiment"]
    params = data.get("params", {})
    schema = {"type": "object", "properties": PARAM_SCHEMAS[exp], "additionalProperties": False}
    try:
        jsonschema.validate(params, schema)
    except jsonschema.ValidationError as exc:
        raise _schema_error(exc, "params") from exc
    if "seed" in data and "seeds" in PARAM_SCHEMAS[exp] and "seeds" not in params:
        params = dict(params, seeds=[data["seed"]])
    return {"experiment": exp, "inputs": list(data.get("inputs", [])),
            "params": effective_params(exp, params)}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    cfg = validate_config(data)
    base = os.path.dirname(os.path.abspath(path))
    cfg["inputs"] = [p if os.path.isabs(p) else os.path.join(base, p) for p in cfg["inputs"]]
    for p in cfg["inputs"]:
        if not os.path.isfile(p):
            raise ConfigError(f"input file not found: {p}")
    return cfg


def _worker_init(deterministic: bool) -> None:
    set_deterministic(deterministic)


def _case_job(args):
    experiment, params, case = args
    return run_case(experiment, params, case)


def run(config: dict, jobs: int = 1, deterministic: bool = False) -> RunResult:
    """Run every case of a validated config; rows are ordered by case index."""
    exp, params = config["experiment"], config["params"]
    cases = build_cases(exp, params, config["inputs"])
    set_deterministic(deterministic)
    start = time.perf_counter()
    jobs_args = [(exp, params, c) for c in cases]
    if jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_worker_init,
                                 initargs=(deterministic,)) as pool:
            per_case = list(pool.map(_case_job, jobs_args))
    else:
        per_case = [_case_job(a) for a in jobs_args]
    rows = [r for chunk in per_case for r in chunk]
    return RunResult(exp, params, rows, time.perf_counter() - start)


def _cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.17g}"
    return str(x)


def write_outputs(result: RunResult, out_dir) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{result.experiment}.csv")
    json_path = os.path.join(out_dir, f"{result.experiment}.json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in result.rows:
            w.writerow([_cell(v) for v in (r.case, r.label, r.quantity, r.inputs, r.value, r.reference,
                                           r.abs_error, r.criterion, r.passed)])
    with open(json_path, "w") as fh:
        json.dump(result.as_dict(), fh, indent=1)
        fh.write("\n")
    return csv_path, json_path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holoregge", description="Run holonomy and Regge experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--deterministic", action="store_true")
    f = sub.add_parser("fixture", help="write an input fixture")
    f.add_argument("--kind", required=True, help=", ".join(FIXTURE_KINDS))
    f.add_argument("--seed", type=int, required=True)
    f.add_argument("--out", required=True)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "fixture":
            for p in generate_fixture(args.kind, args.seed, args.out):
                print(p)
            return 0
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = load_config(args.config)
        result = run(cfg, args.jobs, args.deterministic)
        paths = write_outputs(result, args.out)
        failed = [r for r in result.rows if not r.passed]
        for r in failed:
            log.warning("FAIL case %d (%s) %s: value %.6g reference %.6g [%s]",
                        r.case, r.label, r.quantity, r.value, r.reference, r.criterion)
        print(f"{result.experiment}: {len(result.rows) - len(failed)}/{len(result.rows)} rows passed "
              f"in {result.wall_time:.1f} s -> {paths[0]}")
        return 0 if not failed else 1
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except HoloReggeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
