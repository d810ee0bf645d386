"""Scenario files: schema, validation and execution.

A scenario is a TOML document::

    [scenario]
    name = "euclid_1d"
    seed = 0

    [manifold]
    kind = "euclidean"
    dim = 1

    [fields.h]
    kind = "quadratic_distance"
    center = [0.0]

    [domain]            # optional; whole manifold if compact, else a ball
    kind = "ball"
    radius = 2.0

    [separator]         # optional; built when a check needs it
    h = "h"
    envelope_passes = 3

    [[checks]]
    name = "check_property_star"
    pair_count = 2000

    [output]
    dir = "out"
    csv = ["separator"]

Every key is validated; unknown keys are configuration errors that name the
offending key path. See ``docs/scenario_schema.md`` for the full schema.
"""

from __future__ import annotations

import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import ball_geometry as ball
from . import geodesic_calculus as calc
from . import sandwich
from .charts import PRESETS, chart_metric
from .domains import ball_domain, default_domain, sample_points, whole_domain
from .errors import ConfigError, ConfigParse, GeoSandwichError, UnknownCheck
from .fields import StarPair, make_catalog_field
from .manifolds import GeodesicSegment, euclidean, flat_torus, hyperbolic, sphere
from .rng import stream

MANIFOLDS = {
    "chart_metric": (chart_metric, ["preset", "dim", "radius", "curvature", "steps",
                                    "drift_tol"]),
    "euclidean": (euclidean, ["dim"]),
    "flat_torus": (flat_torus, ["periods"]),
    "hyperbolic": (hyperbolic, ["curvature", "dim"]),
    "sphere": (sphere, ["radius", "dim"]),
}
_MANIFOLD_ARG = {"dim": "n"}

COMMON_CHECK_KEYS = ("name", "label", "tolerance", "seed", "expected_open_question")


@dataclass(frozen=True)
class CheckSpec:
    run: object
    params: dict
    tolerance: float
    needs_separator: bool = False
    points: tuple = ()
    tangents: tuple = ()

    def needs(self, params):
        if callable(self.needs_separator):
            return bool(self.needs_separator(params))
        return self.needs_separator


CHECKS = {}


def _register(name, params, tolerance, needs_separator=False, points=(), tangents=()):
    def deco(fn):
        CHECKS[name] = CheckSpec(fn, params, tolerance, needs_separator, points, tangents)
        return fn
    return deco


def check_aliases():
    """Short names accepted in scenarios (``property_star`` for ``check_property_star``)."""
    return {n[len("check_"):]: n for n in CHECKS if n.startswith("check_")}


def resolve_check_name(name):
    if name in CHECKS:
        return name
    alias = check_aliases().get(name)
    if alias is None:
        raise UnknownCheck(f"unknown check {name!r}")
    return alias


# -- context --------------------------------------------------------------------

class Context:
    """Objects shared by the checks of one scenario run."""

    def __init__(self, scenario, seed):
        self.scenario = scenario
        self.seed = seed
        self.manifold = scenario.manifold
        self.fields = scenario.fields
        self.domain = scenario.domain
        self._separator = None
        self._lock = threading.Lock()

    def field(self, name, key):
        if name not in self.fields:
            raise ConfigError(f"{key}: unknown field {name!r}")
        return self.fields[name]

    def pair(self, params):
        return StarPair(self.field(params.get("f", "f"), "f"),
                        self.field(params.get("h", "h"), "h"))

    def separator(self):
        with self._lock:
            if self._separator is None:
                cfg = self.scenario.separator
                h = self.field(cfg.get("h", "h"), "separator.h")
                budget = {k: cfg[k] for k in ("direction_count", "length_count") if k in cfg}
                self._separator = sandwich.build_separator(
                    self.manifold, h, self.domain, budget or None,
                    cfg.get("envelope_passes", sandwich.DEFAULT_PASSES),
                    cfg.get("seed", self.seed), cfg.get("node_resolution"))
            return self._separator


def _record(rep, **extra):
    out = rep.to_dict()
    out.update(extra)
    return out


# -- check runners ----------------------------------------------------------------

@_register("check_pointwise_dominance", {"f": "f", "h": "h", "sample_count": 2000}, 0.0)
def _run_dominance(ctx, p, seed, tol):
    return [_record(sandwich.check_pointwise_dominance(
        ctx.pair(p), p["sample_count"], seed, tol, ctx.domain))]


@_register("check_property_star", {"f": "f", "h": "h", "pair_count": 2000, "t_grid_size": 17},
           1e-8)
def _run_star(ctx, p, seed, tol):
    return [_record(sandwich.check_property_star(
        ctx.pair(p), (p["pair_count"], p["t_grid_size"]), seed, tol, ctx.domain))]


@_register("build_separator", {"sample_count": 2000}, 0.0, needs_separator=True)
def _run_build(ctx, p, seed, tol):
    k = ctx.separator()
    x = sample_points(ctx.manifold, k.domain, p["sample_count"], stream(seed, "build_check"),
                      include_center=True)
    excess = k.eval(x) - k.h.eval(x)
    worst = float(np.max(excess))
    rec = {"name": "build_separator", "passed": worst <= tol, "max_violation": worst,
           "tolerance": tol, "samples_used": len(x), "seed": seed, "budget": k.budget,
           "components": k.describe()}
    if worst > tol:
        rec["witness"] = {"x": x[int(np.argmax(excess))].tolist()}
    return [rec]


@_register("check_sandwich", {"f": "f", "h": "h", "sample_count": 2000}, 1e-6,
           needs_separator=True)
def _run_sandwich(ctx, p, seed, tol):
    pair = ctx.pair(p)
    return [_record(sandwich.check_sandwich(pair.f, ctx.separator(), pair.h,
                                            p["sample_count"], seed, tol))]


@_register("check_geodesic_convex", {"field": None, "pair_count": 1000, "t_grid_size": 17},
           1e-4, needs_separator=lambda p: p["field"] is None)
def _run_convex(ctx, p, seed, tol):
    k = ctx.separator() if p["field"] is None else ctx.field(p["field"], "field")
    dom = ctx.domain if p["field"] is not None else None
    return [_record(sandwich.check_geodesic_convex(
        ctx.manifold, k, (p["pair_count"], p["t_grid_size"]), seed, tol, dom))]


@_register("check_constant_separator", {"sample_count": 2000}, 1e-3, needs_separator=True)
def _run_constant(ctx, p, seed, tol):
    return [_record(sandwich.check_constant_separator(
        ctx.manifold, ctx.separator(), p["sample_count"], seed, tol))]


@_register("check_along_closed_geodesic",
           {"f": "f", "h": "h", "start": None, "velocity": None, "t_grid_size": 257}, 1e-3,
           needs_separator=True, points=("start",), tangents=(("start", "velocity"),))
def _run_closed(ctx, p, seed, tol):
    loop = sandwich.closed_geodesic(ctx.manifold, p["start"], p["velocity"])
    rep = sandwich.check_along_closed_geodesic(ctx.manifold, ctx.pair(p), ctx.separator(), loop,
                                               p["t_grid_size"], tol)
    return [_record(rep.constancy, seed=seed), _record(rep.equality, seed=seed)]


@_register("space_form_ball_volume",
           {"curvature": 0.0, "dim": 2, "radius": 1.0, "expected": None}, 1e-10)
def _run_volume(ctx, p, seed, tol):
    v = ball.space_form_ball_volume(p["curvature"], p["dim"], p["radius"])
    return [_expected_record("space_form_ball_volume", v, p["expected"], tol, seed,
                             {"curvature": p["curvature"], "dim": p["dim"],
                              "radius": p["radius"]})]


@_register("geodesic_sphere_area", {"center": None, "radius": 1.0, "expected": None}, 1e-10,
           points=("center",))
def _run_area(ctx, p, seed, tol):
    c = ctx.manifold.origin() if p["center"] is None else p["center"]
    a = ball.geodesic_sphere_area(ctx.manifold, c, p["radius"])
    return [_expected_record("geodesic_sphere_area", a, p["expected"], tol, seed,
                             {"radius": p["radius"]})]


_BALL_BUDGET = {"method": "auto", "radial_nodes": ball.DEFAULT_RADIAL_NODES,
                "angular_nodes": ball.DEFAULT_ANGULAR_NODES, "mc_samples": ball.DEFAULT_MC_SAMPLES}


def _ball_budget(p):
    return {k: p[k] for k in _BALL_BUDGET}


@_register("ball_integral", {"field": "f", "center": None, "radius": 1.0, "expected": None,
                             **_BALL_BUDGET}, 1e-10, points=("center",))
def _run_integral(ctx, p, seed, tol):
    c = ctx.manifold.origin() if p["center"] is None else p["center"]
    spec = ball.BallSpec(ctx.manifold, c, p["radius"])
    value, se = ball.ball_integral(ctx.manifold, ctx.field(p["field"], "field"), spec,
                                   _ball_budget(p), seed)
    rec = _expected_record("ball_integral", value, p["expected"], tol, seed,
                           {"std_error": se}, guard=3.0 * se)
    rec["budget"] = _ball_budget(p)
    return [rec]


@_register("check_subharmonic_mean_inequality",
           {"field": "f", "center": None, "radius": 1.0, "curvature_bound": None,
            **_BALL_BUDGET}, 1e-8, points=("center",))
def _run_subharmonic(ctx, p, seed, tol):
    c = ctx.manifold.origin() if p["center"] is None else p["center"]
    spec = ball.BallSpec(ctx.manifold, c, p["radius"])
    rep = ball.check_subharmonic_mean_inequality(
        ctx.manifold, ctx.field(p["field"], "field"), spec, _ball_budget(p), seed, tol,
        p["curvature_bound"])
    return [_record(rep, seed=seed, tolerance=tol, budget=_ball_budget(p))]


@_register("check_curvature_sandwich_bound",
           {"f": "f", "h": "h", "center": None, "radius": 1.0, "outer_radius": None,
            **_BALL_BUDGET}, 1e-8, needs_separator=True, points=("center",))
def _run_curv_bound(ctx, p, seed, tol):
    c = ctx.manifold.origin() if p["center"] is None else p["center"]
    rep = ball.check_curvature_sandwich_bound(
        ctx.manifold, ctx.pair(p), ctx.separator(), c, p["radius"], _ball_budget(p), seed, tol,
        p["outer_radius"])
    return [_record(rep, seed=seed, tolerance=tol, budget=_ball_budget(p))]


@_register("mvt_point", {"field": "f", "p": None, "q": None, "grid_size": calc.DEFAULT_GRID,
                         "check_literal": True, "expected_t0": None,
                         "expected_tolerance": 1e-6}, 1e-10, points=("p", "q"))
def _run_mvt(ctx, p, seed, tol):
    f = ctx.field(p["field"], "field")
    res = calc.mvt_point(f, p["p"], p["q"], tol, p["grid_size"], p["check_literal"])
    comps = res.to_dict()
    passed = res.residual <= tol
    violation = res.residual - tol
    if p["expected_t0"] is not None:
        err = abs(res.t0 - p["expected_t0"])
        comps["expected_t0"] = p["expected_t0"]
        comps["t0_error"] = err
        passed = passed and err <= p["expected_tolerance"]
        violation = max(violation, err - p["expected_tolerance"])
    return [{"name": "mvt_point", "passed": passed, "max_violation": violation,
             "tolerance": tol, "seed": seed, "budget": {"grid_size": p["grid_size"]},
             "components": comps}]


@_register("orthogonal_point", {"field": "f", "p": None, "u": None, "segment_length": 1.0,
                                "grid_size": calc.DEFAULT_GRID}, 1e-10,
           points=("p",), tangents=(("p", "u"),))
def _run_orth(ctx, p, seed, tol):
    f = ctx.field(p["field"], "field")
    res = calc.orthogonal_point(f, p["p"], p["u"], p["segment_length"], tol, p["grid_size"])
    if isinstance(res, calc.NoRootFound):
        passed, violation = False, res.min_abs_phi - tol
    else:
        passed, violation = abs(res.phi_at_xi) <= tol, abs(res.phi_at_xi) - tol
    return [{"name": "orthogonal_point", "passed": passed, "max_violation": violation,
             "tolerance": tol, "seed": seed, "budget": {"grid_size": p["grid_size"]},
             "components": res.to_dict()}]


@_register("phi_profile", {"field": "f", "p": None, "q": None, "grid_size": calc.DEFAULT_GRID},
           1e-6, points=("p", "q"))
def _run_profile(ctx, p, seed, tol):
    f = ctx.field(p["field"], "field")
    seg = GeodesicSegment.between(ctx.manifold, p["p"], p["q"])
    prof = calc.phi_profile(f, seg, p["grid_size"])
    delta = float(f.eval(seg.end) - f.eval(seg.start))
    err = abs(prof.integral() - delta)
    thr = tol * (1.0 + abs(delta))
    ctx.scenario.artifacts.setdefault("phi_profile", []).append(prof)
    return [{"name": "phi_profile", "passed": err <= thr, "max_violation": err,
             "tolerance": thr, "seed": seed, "budget": {"grid_size": p["grid_size"]},
             "components": {"integral": prof.integral(), "endpoint_difference": delta}}]


def _expected_record(name, value, expected, tol, seed, comps, guard=0.0):
    comps = dict(comps, value=value)
    if expected is None:
        return {"name": name, "passed": True, "max_violation": 0.0, "tolerance": tol,
                "seed": seed, "budget": {}, "components": comps}
    err = abs(value - expected)
    thr = tol * max(1.0, abs(expected)) + guard
    comps.update(expected=expected, abs_error=err)
    return {"name": name, "passed": err <= thr, "max_violation": err, "tolerance": thr,
            "seed": seed, "budget": {}, "components": comps}


# -- loading --------------------------------------------------------------------

@dataclass
class Scenario:
    path: str
    name: str
    seed: int
    raw: dict
    manifold: object
    fields: dict
    domain: object
    separator: dict
    checks: list
    output: dict
    artifacts: dict = field(default_factory=dict)


def _table(doc, key):
    val = doc.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"{key}: expected a table")
    return val


def _reject_unknown(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}: unknown key")


def _build_manifold(cfg):
    if "kind" not in cfg:
        raise ConfigError("manifold.kind: missing")
    kind = cfg["kind"]
    if kind not in MANIFOLDS:
        raise ConfigError(f"manifold.kind: unknown manifold {kind!r} "
                          f"(known: {', '.join(sorted(MANIFOLDS))})")
    ctor, allowed = MANIFOLDS[kind]
    _reject_unknown({k: v for k, v in cfg.items() if k != "kind"}, allowed, "manifold")
    kwargs = {_MANIFOLD_ARG.get(k, k) if kind == "euclidean" else k: v
              for k, v in cfg.items() if k != "kind"}
    if kind == "chart_metric" and kwargs.get("preset") not in PRESETS:
        raise ConfigError(f"manifold.preset: unknown chart preset {kwargs.get('preset')!r}")
    try:
        return ctor(**kwargs)
    except (GeoSandwichError, ValueError, TypeError) as exc:
        raise ConfigError(f"manifold: {exc}") from None


def _build_fields(m, cfg):
    out = {}
    for name, spec in cfg.items():
        if not isinstance(spec, dict):
            raise ConfigError(f"fields.{name}: expected a table")
        spec = dict(spec)
        if isinstance(spec.get("base"), str):
            if spec["base"] not in out:
                raise ConfigError(f"fields.{name}.base: unknown field {spec['base']!r}")
            spec["base"] = out[spec["base"]]
        try:
            out[name] = make_catalog_field(m, spec)
        except (GeoSandwichError, ValueError, TypeError) as exc:
            raise ConfigError(f"fields.{name}: {exc}") from None
    return out


def _build_domain(m, cfg):
    if not cfg:
        return default_domain(m)
    _reject_unknown(cfg, ("kind", "center", "radius", "reach"), "domain")
    kind = cfg.get("kind", "ball")
    try:
        if kind == "whole":
            return whole_domain(m, cfg.get("reach"))
        if kind == "ball":
            return ball_domain(m, cfg.get("center"), cfg.get("radius"))
        if kind == "default":
            return default_domain(m)
    except (GeoSandwichError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from None
    raise ConfigError(f"domain.kind: unknown domain kind {kind!r}")


def _validate_check(m, fields, idx, cfg):
    where = f"checks[{idx}]"
    if "name" not in cfg:
        raise ConfigError(f"{where}.name: missing")
    name = resolve_check_name(cfg["name"])
    spec = CHECKS[name]
    _reject_unknown(cfg, tuple(spec.params) + COMMON_CHECK_KEYS, where)
    params = dict(spec.params)
    params.update({k: v for k, v in cfg.items() if k in spec.params})
    for key in ("f", "h", "field"):
        if key in spec.params and params[key] is not None and params[key] not in fields:
            raise ConfigError(f"{where}.{key}: unknown field {params[key]!r}")
    try:
        for key in spec.points:
            if params.get(key) is not None:
                params[key] = m.check_point(params[key])
        for base, key in spec.tangents:
            if params.get(key) is None:
                raise ConfigError(f"{where}.{key}: missing")
            params[key] = m.check_tangent(params[base], params[key])
    except (GeoSandwichError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None
    for key in ("p", "q", "start"):
        if key in spec.params and params[key] is None:
            raise ConfigError(f"{where}.{key}: missing")
    return {"name": name, "label": cfg.get("label", name), "params": params,
            "tolerance": float(cfg.get("tolerance", spec.tolerance)),
            "seed": cfg.get("seed"),
            "expected_open_question": bool(cfg.get("expected_open_question", False))}


def parse_scenario(text, path="<string>"):
    """Validate a scenario document and build its manifold, fields and domain."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParse(f"{path}: {exc}") from None
    _reject_unknown(doc, ("scenario", "manifold", "fields", "domain", "separator", "checks",
                          "output"), "")
    meta = _table(doc, "scenario")
    _reject_unknown(meta, ("name", "seed", "description"), "scenario")
    name = meta.get("name", os.path.splitext(os.path.basename(path))[0])
    seed = meta.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("scenario.seed: expected an integer")
    if "manifold" not in doc:
        raise ConfigError("manifold: missing")
    m = _build_manifold(_table(doc, "manifold"))
    fields = _build_fields(m, _table(doc, "fields"))
    domain = _build_domain(m, _table(doc, "domain"))
    sep = _table(doc, "separator")
    _reject_unknown(sep, ("h", "direction_count", "length_count", "envelope_passes",
                          "node_resolution", "seed"), "separator")
    checks_cfg = doc.get("checks", [])
    if not isinstance(checks_cfg, list):
        raise ConfigError("checks: expected an array of tables")
    checks = [_validate_check(m, fields, i, c) for i, c in enumerate(checks_cfg)]
    output = _table(doc, "output")
    needs_k = any(CHECKS[c["name"]].needs(c["params"]) for c in checks) or \
        "separator" in output.get("csv", [])
    if needs_k and sep.get("h", "h") not in fields:
        raise ConfigError(f"separator.h: unknown field {sep.get('h', 'h')!r}")
    _reject_unknown(output, ("dir", "csv"), "output")
    for item in output.get("csv", []):
        if item not in ("separator", "phi_profile"):
            raise ConfigError(f"output.csv: unknown dump {item!r}")
    return Scenario(path, name, seed, doc, m, fields, domain, sep, checks, output)


def load_scenario(path):
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))


# -- running ----------------------------------------------------------------------

def _run_one(ctx, check, seed_override):
    seed = seed_override if seed_override is not None else (
        check["seed"] if check["seed"] is not None else ctx.seed)
    spec = CHECKS[check["name"]]
    start = time.perf_counter()
    try:
        records = spec.run(ctx, check["params"], seed, check["tolerance"])
    except GeoSandwichError as exc:
        records = [{"name": check["name"], "passed": False, "max_violation": math.inf,
                    "tolerance": check["tolerance"], "seed": seed, "budget": {},
                    "error": f"{type(exc).__name__}: {exc}"}]
    elapsed = 1000.0 * (time.perf_counter() - start)
    for rec in records:
        rec["passed"] = bool(rec["passed"])
        rec["label"] = check["label"]
        rec["duration_ms"] = elapsed / len(records)
        rec["expected_open_question"] = check["expected_open_question"]
        rec["informational"] = bool(check["expected_open_question"] and not rec["passed"])
        if rec["informational"]:
            rec["falsification_candidate"] = True
    return records


def run_scenario(scenario, seed=None, parallel=False):
    """Execute every check in declared order; returns the report dict."""
    base_seed = scenario.seed if seed is None else seed
    ctx = Context(scenario, base_seed)
    checks = scenario.checks
    if parallel and len(checks) > 1:
        if any(CHECKS[c["name"]].needs(c["params"]) for c in checks) or \
                "separator" in scenario.output.get("csv", []):
            ctx.separator()
        with ThreadPoolExecutor(max_workers=os.cpu_count() or 1) as pool:
            results = list(pool.map(lambda c: _run_one(ctx, c, seed), checks))
    else:
        results = [_run_one(ctx, c, seed) for c in checks]
    records = [r for rs in results for r in rs]
    overall = all(r["passed"] or r["informational"] for r in records)
    return {"scenario": {"name": scenario.name, "seed": base_seed, "config": scenario.raw,
                         "manifold": scenario.manifold.describe(),
                         "domain": scenario.domain.describe()},
            "checks": records, "overall_pass": overall}, ctx
