"""Command-line scenario runner.

``geosandwich run --scenario PATH`` executes a scenario file (or every
``*.toml`` in a directory; ``--scenario builtin`` selects the bundled suite)
and writes one JSON report per scenario. Exit codes: 0 all checks passed,
1 some check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from importlib import resources

import numpy as np
import scipy

from . import __version__, _kernels
from .errors import ConfigError
from .fields import CATALOG_PARAMS
from .scenario import CHECKS, MANIFOLDS, Context, load_scenario, run_scenario

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def builtin_scenarios_dir():
    return str(resources.files("geosandwich") / "scenarios")


def versions():
    return {"geosandwich": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3])), "kernels": _kernels.BACKEND}


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def dumps(report):
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _scenario_paths(target):
    if target == "builtin":
        target = builtin_scenarios_dir()
    if os.path.isdir(target):
        paths = sorted(os.path.join(target, p) for p in os.listdir(target) if p.endswith(".toml"))
        if not paths:
            raise ConfigError(f"{target}: no .toml scenarios found")
        return paths
    return [target]


def _write_checks_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "label", "passed", "informational", "max_violation", "seed",
                    "duration_ms"])
        for r in records:
            w.writerow([r["name"], r["label"], r["passed"], r["informational"],
                        repr(r["max_violation"]), r["seed"], repr(r.get("duration_ms", ""))])


def _dump_artifacts(scenario, ctx, out_dir):
    written = []
    dumps_wanted = scenario.output.get("csv", [])
    if "separator" in dumps_wanted:
        path = os.path.join(out_dir, f"{scenario.name}_separator.csv")
        ctx.separator().to_csv(path)
        written.append(path)
    if "phi_profile" in dumps_wanted:
        for i, prof in enumerate(scenario.artifacts.get("phi_profile", [])):
            path = os.path.join(out_dir, f"{scenario.name}_phi_{i}.csv")
            prof.to_csv(path)
            written.append(path)
    return written


def cmd_run(args):
    try:
        paths = _scenario_paths(args.scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code = EXIT_OK
    for path in paths:
        try:
            scenario = load_scenario(path)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            code = EXIT_CONFIG
            continue
        report, ctx = run_scenario(scenario, args.seed, args.parallel)
        report["versions"] = versions()
        if args.no_timings:
            for rec in report["checks"]:
                rec.pop("duration_ms", None)
        out_dir = args.out or scenario.output.get("dir", "out")
        os.makedirs(out_dir, exist_ok=True)
        if args.format == "json":
            out_path = os.path.join(out_dir, f"{scenario.name}.json")
            with open(out_path, "w") as fh:
                fh.write(dumps(report))
        else:
            out_path = os.path.join(out_dir, f"{scenario.name}_checks.csv")
            _write_checks_csv(out_path, report["checks"])
        _dump_artifacts(scenario, ctx, out_dir)
        for rec in report["checks"]:
            status = "PASS" if rec["passed"] else ("INFO" if rec["informational"] else "FAIL")
            print(f"{scenario.name}: {status} {rec['label']} "
                  f"max_violation={_clean(rec['max_violation'])}")
        print(f"{scenario.name}: overall_pass={report['overall_pass']} -> {out_path}")
        if not report["overall_pass"] and code == EXIT_OK:
            code = EXIT_FAILED
    return code


def list_catalog(registry=None):
    """Alphabetized inventory ``{"checks", "fields", "manifolds"}`` of parameter lists."""
    if registry is None:
        registry = {"checks": {n: sorted(s.params) for n, s in CHECKS.items()},
                    "fields": dict(CATALOG_PARAMS),
                    "manifolds": {n: list(p) for n, (_, p) in MANIFOLDS.items()}}
    sections = ("checks", "fields", "manifolds")
    return {s: {k: list(registry.get(s, {})[k]) for k in sorted(registry.get(s, {}))}
            for s in sections}


def format_catalog(inventory):
    lines = []
    for section, entries in inventory.items():
        lines.append(f"{section}:")
        for name, params in entries.items():
            lines.append(f"  {name}({', '.join(params)})")
    return "\n".join(lines) + "\n"


def cmd_list(args):
    inv = list_catalog()
    sys.stdout.write(json.dumps(inv, indent=2) + "\n" if args.format == "json"
                     else format_catalog(inv))
    return EXIT_OK


def cmd_dump(args):
    try:
        scenario = load_scenario(args.scenario)
        k = Context(scenario, scenario.seed if args.seed is None else args.seed).separator()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or scenario.output.get("dir", "out")
    os.makedirs(out_dir, exist_ok=True)
    if args.format == "csv":
        path = k.to_csv(os.path.join(out_dir, f"{scenario.name}_separator.csv"))
    else:
        pts, vals, prov = k.samples()
        path = os.path.join(out_dir, f"{scenario.name}_separator.json")
        with open(path, "w") as fh:
            fh.write(dumps({"separator": k.describe(), "points": pts, "k_value": vals,
                            "best_chord_t": prov["t"], "best_a": prov["a"],
                            "best_b": prov["b"]}))
    print(path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="geosandwich", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute scenario checks")
    run.add_argument("--scenario", required=True,
                     help="scenario file, directory of scenarios, or 'builtin'")
    run.add_argument("--seed", type=int, help="override every seed in the scenario")
    run.add_argument("--out", help="output directory (default: [output].dir or ./out)")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--parallel", action="store_true", help="run checks concurrently")
    run.add_argument("--no-timings", action="store_true", help="omit duration_ms")
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list", help="print manifolds, fields and checks")
    lst.add_argument("--format", choices=("text", "json"), default="text")
    lst.set_defaults(func=cmd_list)

    dump = sub.add_parser("dump-separator", help="write separator samples")
    dump.add_argument("--scenario", required=True)
    dump.add_argument("--seed", type=int)
    dump.add_argument("--out")
    dump.add_argument("--format", choices=("json", "csv"), default="csv")
    dump.set_defaults(func=cmd_dump)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
