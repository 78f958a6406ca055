"""Configuration-driven command line for the experiment registry.

Three subcommands: ``run`` executes one experiment (or all of them) from a
JSON config and writes machine-readable artifacts, ``list`` prints the
registry, ``schema`` prints the config schema with per-experiment defaults
and CSV columns.  Exit codes: 0 all pass-conditions hold, 1 a claim check
failed (artifacts still written), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .experiments import EXPERIMENTS, experiment_info, run_experiment

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "experiment runner configuration",
    "type": "object",
    "required": ["experiment"],
    "additionalProperties": False,
    "properties": {
        "experiment": {
            "type": "string",
            "description": "registered experiment name, or 'all'",
        },
        "seed": {"type": "integer", "minimum": 0, "default": 7},
        "params": {
            "type": "object",
            "description": ("experiment-specific overrides; for 'all', a "
                            "mapping from experiment name to its overrides"),
            "default": {},
        },
        "out_dir": {"type": "string", "default": "results"},
        "jobs": {"type": "integer", "minimum": 1, "default": 1},
    },
}


def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _dump_json(path: str, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True,
                                   default=_to_jsonable) + "\n")


def _csv_cell(v):
    if isinstance(v, (np.bool_, bool)):
        return "True" if v else "False"
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    return str(v)


def _write_csv(path: str, columns, rows):
    lines = []
    for row in rows:
        lines.append([_csv_cell(row.get(c, "")) for c in columns])
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(lines)
    os.replace(tmp, path)


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 2


def _load_config(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: {exc}") from exc


def _validate_config(config) -> None:
    import jsonschema
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ValueError(f"config rejected: {exc.message}") from exc
    name = config["experiment"]
    if name != "all" and name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment: {name!r}")


def _write_experiment_artifacts(out_dir, result, echo):
    exp_dir = os.path.join(out_dir, result.name)
    tables = os.path.join(exp_dir, "tables")
    os.makedirs(tables, exist_ok=True)
    _dump_json(os.path.join(exp_dir, "config.echo.json"), echo)
    payload = result.to_dict()
    payload["timestamp"] = datetime.now(timezone.utc).isoformat()
    _dump_json(os.path.join(exp_dir, "results.json"), payload)
    _write_csv(os.path.join(tables, f"{result.name}.csv"),
               result.columns, result.rows)


def _cmd_run(args) -> int:
    try:
        config = _load_config(args.config)
        _validate_config(config)
    except ValueError as exc:
        return _fail(str(exc))

    name = config["experiment"]
    seed = args.seed if args.seed is not None else config.get("seed", 7)
    out_dir = args.out or config.get("out_dir", "results")
    jobs = config.get("jobs", 1)
    if args.jobs is not None:
        jobs = args.jobs
    if os.environ.get("IDLAB_JOBS"):
        try:
            jobs = int(os.environ["IDLAB_JOBS"])
        except ValueError:
            return _fail("IDLAB_JOBS must be an integer")

    names = list(EXPERIMENTS) if name == "all" else [name]
    raw_params = config.get("params", {})

    statuses = {}
    for exp_name in names:
        params = (raw_params.get(exp_name, {}) if name == "all"
                  else raw_params)
        try:
            result = run_experiment(exp_name, params, seed=seed, jobs=jobs)
        except Exception as exc:  # bad params surface before artifacts
            return _fail(f"{exp_name}: {exc}")
        echo = {"experiment": exp_name, "seed": seed, "jobs": jobs,
                "params": {**EXPERIMENTS[exp_name].defaults, **params},
                "out_dir": out_dir}
        try:
            _write_experiment_artifacts(out_dir, result, echo)
        except OSError as exc:
            return _fail(f"cannot write artifacts: {exc}")
        statuses[exp_name] = result.passed
        verdict = "pass" if result.passed else "FAIL"
        print(f"{exp_name}: {verdict}")

    if name == "all":
        _dump_json(os.path.join(out_dir, "results.json"),
                   {"experiments": statuses,
                    "passed": all(statuses.values()),
                    "timestamp": datetime.now(timezone.utc).isoformat()})
    return 0 if all(statuses.values()) else 1


def _cmd_list(args) -> int:
    infos = [experiment_info(n) for n in EXPERIMENTS]
    if args.json:
        print(json.dumps([{"name": i["name"], "anchor": i["anchor"],
                           "runtime": i["runtime"]} for i in infos],
                         indent=2))
        return 0
    width = max(len(i["name"]) for i in infos)
    rt_width = max(len(i["runtime"]) for i in infos)
    for i in infos:
        print(f"{i['name']:<{width}}  {i['runtime']:<{rt_width}}  "
              f"{i['anchor']}")
    return 0


def _cmd_schema(args) -> int:
    schema = dict(CONFIG_SCHEMA)
    schema["x-experiments"] = {
        n: {"anchor": info["anchor"], "defaults": info["defaults"],
            "csv_columns": info["columns"]}
        for n, info in ((n, experiment_info(n)) for n in EXPERIMENTS)}
    print(json.dumps(schema, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="idlab",
        description="identifiability experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="path to JSON config")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    run_p.add_argument("--out", default=None,
                       help="override the config output directory")
    run_p.add_argument("--jobs", type=int, default=None,
                       help="worker threads for per-seed cells "
                            "(IDLAB_JOBS overrides)")
    run_p.set_defaults(func=_cmd_run)

    list_p = sub.add_parser("list", help="list registered experiments")
    list_p.add_argument("--json", action="store_true",
                        help="machine-readable output")
    list_p.set_defaults(func=_cmd_list)

    schema_p = sub.add_parser("schema", help="print the config JSON schema")
    schema_p.set_defaults(func=_cmd_schema)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
