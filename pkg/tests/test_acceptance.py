"""Acceptance criteria 1-8; each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the lines are also
repeated in the terminal summary.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from geosandwich import (build_separator, chart_metric,
                         check_along_closed_geodesic, check_constant_separator,
                         check_curvature_sandwich_bound, check_geodesic_convex,
                         check_property_star, check_sandwich, check_subharmonic_mean_inequality,
                         closed_geodesic, euclidean, exhaustive_envelope_1d, flat_torus,
                         hyperbolic, mvt_point, orthogonal_point, phi_profile,
                         space_form_ball_volume, sphere, BallSpec, GeodesicSegment, NoRootFound)
from geosandwich.charts import stereographic_coords, stereographic_pushforward
from geosandwich.cli import main as cli_main
from geosandwich.fields import StarPair

from support import (BANANA_TOML, BROKEN_TOML, FAILING_TOML, UNKNOWN_CHECK_TOML,
                     catalog_manifolds, field, one_dim_cases, perturbed_cases,
                     random_sphere_points, report)

N_ROUNDTRIP = 1000


# -- 1: geometry kernel -----------------------------------------------------------

def _roundtrip_samples(name, m, rng):
    n = N_ROUNDTRIP
    if name == "euclidean2":
        x = rng.uniform(-5, 5, (n, 2))
        v = rng.standard_normal((n, 2)) * 3.0
    elif name == "sphere1":
        x = random_sphere_points(rng, n)
        v = m.project(x, rng.standard_normal((n, 3)))
        v *= (0.9 * m.injectivity_radius * rng.uniform(0, 1, (n, 1))
              / np.linalg.norm(v, axis=-1, keepdims=True))
    elif name == "hyperbolic-1":
        r = np.tanh(rng.uniform(0, 1.0, n))
        ang = rng.uniform(0, 2 * np.pi, n)
        x = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)
        rot = rng.uniform(0, 2 * np.pi, n)
        frame = m.tangent_frame(x)
        u = np.cos(rot)[:, None] * frame[:, 0] + np.sin(rot)[:, None] * frame[:, 1]
        v = u * rng.uniform(0, 2.0, (n, 1))
    else:
        x = rng.uniform(0, 1, (n, 2))
        v = rng.standard_normal((n, 2))
        v *= (0.9 * m.injectivity_radius * rng.uniform(0, 1, (n, 1))
              / np.linalg.norm(v, axis=-1, keepdims=True))
    return x, v


def test_criterion_1_geometry_kernel():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    errors = {}
    manifolds = catalog_manifolds()
    for name, m in manifolds.items():
        x, v = _roundtrip_samples(name, m, rng)
        back = m.log(x, m.exp(x, v))
        errors[name] = float(np.max(np.sqrt(m.inner(x, back - v, back - v))))

    # chart backend against analytic geodesics, 1000 RK4 steps
    n = 200
    sph = sphere(1.0)
    chart_s = chart_metric("stereographic-sphere", steps=1000)
    p = random_sphere_points(rng, n)
    p[:, 2] = np.abs(p[:, 2])
    p /= np.linalg.norm(p, axis=-1, keepdims=True)
    v = sph.project(p, rng.standard_normal((n, 3)))
    v *= rng.uniform(0.1, 1.0, (n, 1)) / np.linalg.norm(v, axis=-1, keepdims=True)
    got = chart_s.exp(stereographic_coords(p), stereographic_pushforward(p, v))
    want = stereographic_coords(sph.exp(p, v))
    errors["chart_sphere"] = float(np.max(np.abs(got - want)))

    hyp = hyperbolic(-1.0)
    chart_h = chart_metric("poincare-disk", steps=1000)
    r = rng.uniform(0, 0.6, n)
    ang = rng.uniform(0, 2 * np.pi, n)
    x = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)
    frame = hyp.tangent_frame(x)
    rot = rng.uniform(0, 2 * np.pi, n)
    v = (np.cos(rot)[:, None] * frame[:, 0] + np.sin(rot)[:, None] * frame[:, 1])
    v *= rng.uniform(0.1, 1.5, (n, 1))
    errors["chart_hyperbolic"] = float(np.max(np.abs(chart_h.exp(x, v) - hyp.exp(x, v))))
    elapsed = time.perf_counter() - start

    ok = (all(errors[k] <= 1e-9 for k in manifolds) and errors["chart_sphere"] <= 1e-6
          and errors["chart_hyperbolic"] <= 1e-6 and elapsed < 10.0)
    detail = ", ".join(f"{k}={e:.2e}" for k, e in errors.items()) + f", runtime={elapsed:.2f}s"
    assert report(1, ok, detail), detail


# -- 2: converse direction ---------------------------------------------------------

def test_criterion_2_property_star_on_perturbed_pairs():
    parts = []
    ok = True
    for name, m, pair, dom in perturbed_cases():
        rep = check_property_star(pair, (2000, 17), seed=11, tolerance=1e-8, domain=dom)
        ok &= rep.passed
        parts.append(f"{name}={rep.max_violation:.3g}")
    assert report(2, ok, "max residual " + ", ".join(parts)), parts


# -- 3: forward direction ----------------------------------------------------------

def test_criterion_3_separator_construction():
    parts = []
    ok = True
    for name, m, pair, dom in perturbed_cases() + one_dim_cases():
        k = build_separator(m, pair.h, domain=dom)
        sw = check_sandwich(pair.f, k, pair.h, 2000, seed=12, tolerance=1e-6)
        cv = check_geodesic_convex(m, k, (5000, 17), seed=13, tolerance=1e-4)
        case_ok = sw.passed and cv.passed
        msg = f"{name}: sandwich={sw.max_violation:.2g} convex={cv.max_violation:.2g}"
        if m.dim == 1:
            xs = np.linspace(-2.0, 2.0, 2001)[:, None]
            oracle = exhaustive_envelope_1d(xs[:, 0], pair.h.eval(xs))
            gap = float(np.max(np.abs(k.eval(xs) - oracle)))
            case_ok &= gap <= k.slack
            msg += f" oracle_gap={gap:.2g}"
        msg += f" slack={k.slack:.2g}"
        ok &= case_ok
        parts.append(msg)
    assert report(3, ok, "; ".join(parts)), parts


# -- 4: finite-volume corollary ----------------------------------------------------

def test_criterion_4_constant_separator_on_finite_volume():
    sph = sphere(1.0)
    torus = flat_torus((1.0, 1.0))
    cases = [("sphere", sph, field(sph, "constant", value=1.0)),
             ("torus_periodic", torus, field(torus, "periodic_product", offset=0.5,
                                             amplitude=0.1))]
    parts = []
    ok = True
    for name, m, h in cases:
        k = build_separator(m, h)
        rep = check_constant_separator(m, k, 2000, seed=14, tolerance=1e-3)
        ok &= rep.passed and rep.tolerance == pytest.approx(1e-3 + 2 * k.slack)
        parts.append(f"{name}: spread={rep.max_violation:.2g} threshold={rep.tolerance:.2g}")
    assert report(4, ok, "; ".join(parts)), parts


# -- 5: closed-geodesic corollary --------------------------------------------------

def test_criterion_5_closed_geodesic():
    m = sphere(1.0)
    pair = StarPair(field(m, "constant", value=0.5), field(m, "constant", value=1.0))
    k = build_separator(m, pair.h)
    loop = closed_geodesic(m, [1.0, 0.0, 0.0], [0.0, 2 * np.pi, 0.0])
    rep = check_along_closed_geodesic(m, pair, k, loop, 721, tolerance=1e-3)
    ok = rep.constancy.passed and rep.constancy.tolerance == pytest.approx(1e-3 + 2 * k.slack)
    detail = (f"k spread={rep.constancy.max_violation:.2g} "
              f"(threshold {rep.constancy.tolerance:.2g}); informational f=h "
              f"{'holds' if rep.equality.passed else 'fails'} with |f-h|="
              f"{rep.equality.max_violation:.2g}")
    assert report(5, ok, detail), detail


# -- 6: ball inequalities ----------------------------------------------------------

def test_criterion_6_ball_inequalities():
    start = time.perf_counter()
    parts = []
    ok = True
    volumes = [((0.0, 2, 2.0), 4 * math.pi), ((1.0, 2, math.pi), 4 * math.pi),
               ((-1.0, 2, 1.0), 2 * math.pi * (math.cosh(1.0) - 1.0))]
    for args, want in volumes:
        rel = abs(space_form_ball_volume(*args) - want) / want
        ok &= rel <= 1e-10
        parts.append(f"V{args}: rel={rel:.1e}")

    e2, hyp, sph = euclidean(2), hyperbolic(-1.0), sphere(1.0)
    o2 = [0.0, 0.0]
    sub_cases = [
        ("euclid_d2", e2, field(e2, "quadratic_distance", center=o2, scale=1.0),
         BallSpec(e2, o2, 1.0)),
        ("euclid_const", e2, field(e2, "constant", value=2.5), BallSpec(e2, [0.3, -0.2], 0.7)),
        ("hyperbolic_cosh", hyp, field(hyp, "cosh_distance", center=o2), BallSpec(hyp, o2, 1.0)),
    ]
    for name, m, f, spec in sub_cases:
        rep = check_subharmonic_mean_inequality(m, f, spec, seed=15)
        ok &= rep.passed and rep.margin >= -3 * rep.mc_std_error
        parts.append(f"{name}: margin={rep.margin:.3g}")

    north = [0.0, 0.0, 1.0]
    one_e = field(e2, "constant", value=1.0)
    zero_e = field(e2, "constant", value=0.0)
    sph_pair = StarPair(field(sph, "constant", value=0.1), field(sph, "constant", value=1.0))
    bound_cases = [
        ("euclid_const1", e2, StarPair(one_e, one_e), one_e, o2, 1.0),
        ("euclid_const0", e2, StarPair(zero_e, zero_e), zero_e, o2, 1.0),
        ("sphere_const", sph, sph_pair, build_separator(sph, sph_pair.h), north, 0.5),
    ]
    for name, m, pair, k, p, xi in bound_cases:
        rep = check_curvature_sandwich_bound(m, pair, k, p, xi, seed=16)
        ok &= rep.passed
        parts.append(f"{name}: lhs={rep.lhs:.4g} rhs={rep.rhs:.4g}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30.0
    parts.append(f"runtime={elapsed:.1f}s")
    assert report(6, ok, "; ".join(parts)), parts


# -- 7: derivative profiles --------------------------------------------------------

def _profile_draw(rng):
    kind = rng.integers(4)
    if kind == 0:
        m = euclidean(2)
        f = field(m, "quadratic_distance", center=rng.uniform(-1, 1, 2).tolist(),
                  scale=float(rng.uniform(0.2, 2)))
        x, y = rng.uniform(-1, 1, (2, 2))
    elif kind == 1:
        m = hyperbolic(-1.0)
        f = field(m, "cosh_distance", center=(rng.uniform(-0.4, 0.4, 2)).tolist())
        x, y = rng.uniform(-0.5, 0.5, (2, 2))
    elif kind == 2:
        m = sphere(1.0)
        f = field(m, "height_z")
        x, y = random_sphere_points(rng, 2)
        if np.dot(x, y) < -0.9:
            y = -y
    else:
        m = euclidean(2)
        f = field(m, "exponential", rate=rng.uniform(-1, 1, 2).tolist())
        x, y = rng.uniform(-1, 1, (2, 2))
    return f, GeodesicSegment.between(m, x, y)


def test_criterion_7_derivative_profiles():
    parts = []
    ok = True
    e1, e2, sph = euclidean(1), euclidean(2), sphere(1.0)
    x2 = field(e1, "quadratic_distance", center=[0.0], scale=1.0)
    mvt_cases = [
        ("x2", mvt_point(x2, [0.0], [1.0]), 0.5),
        ("constant", mvt_point(field(e2, "constant", value=3.0), [0.0, 0.0], [1.0, 2.0]), None),
        ("sphere_height", mvt_point(field(sph, "height_z"), [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
         (2 / np.pi) * np.arccos(2 / np.pi)),
    ]
    for name, res, t0 in mvt_cases:
        ok &= res.residual <= 1e-8
        if t0 is not None:
            ok &= abs(res.t0 - t0) <= 1e-6
        parts.append(f"mvt {name}: t0={res.t0:.10g} residual={res.residual:.1e}")

    quad2 = field(e2, "quadratic_distance", center=[0.0, 0.0], scale=1.0)
    concave = field(e1, "coordinate_quadratic", matrix=[[-1.0]], center=[1.0])
    for name, f, p, u in [("x2+y2", quad2, [0.0, 1.0], [1.0, 0.0]),
                          ("-(x-1)^2", concave, [0.0], [1.0])]:
        res = orthogonal_point(f, p, u, 1.0)
        ok &= res.found and abs(res.phi_at_xi) <= 1e-10
        parts.append(f"orth {name}: xi={res.xi:.3g} |phi|={abs(res.phi_at_xi):.1e}")
    res = orthogonal_point(field(e1, "exponential", rate=[1.0]), [0.0], [1.0], 1.0)
    ok &= isinstance(res, NoRootFound) and res.hypothesis_held
    parts.append(f"orth exp: NoRootFound min|phi|={getattr(res, 'min_abs_phi', float('nan')):.3g}")

    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(100):
        f, seg = _profile_draw(rng)
        prof = phi_profile(f, seg, 1024)
        diff = float(f.eval(seg.end) - f.eval(seg.start))
        worst = max(worst, abs(prof.integral() - diff) / (1 + abs(diff)))
    ok &= worst <= 1e-6
    parts.append(f"integral identity worst={worst:.1e}")

    hyp = hyperbolic(-1.0)
    convex = [
        (e2, field(e2, "quadratic_distance", center=[0.3, -0.1], scale=1.0)),
        (e2, field(e2, "coordinate_quadratic", matrix=[[2.0, 0.5], [0.5, 1.0]])),
        (e2, field(e2, "exponential", rate=[0.7, -0.4])),
        (hyp, field(hyp, "cosh_distance", center=[0.1, 0.2])),
        (hyp, field(hyp, "quadratic_distance", center=[-0.2, 0.1], scale=1.0)),
    ]
    worst_step = np.inf
    for m, f in convex:
        for _ in range(20):
            if m is e2:
                x, y = rng.uniform(-2, 2, (2, 2))
            else:
                x, y = rng.uniform(-0.6, 0.6, (2, 2))
            prof = phi_profile(f, GeodesicSegment.between(m, x, y), 256)
            worst_step = min(worst_step, float(np.min(np.diff(prof.values))))
    ok &= worst_step >= -1e-8
    parts.append(f"monotonicity min step={worst_step:.2g}")
    assert report(7, ok, "; ".join(parts)), parts


# -- 8: CLI determinism and exit codes -------------------------------------------

def _read_reports(folder):
    return {name: open(os.path.join(folder, name), "rb").read()
            for name in sorted(os.listdir(folder)) if name.endswith(".json")}


def test_criterion_8_cli_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    code_a = cli_main(["run", "--scenario", "builtin", "--out", str(a), "--no-timings"])
    code_b = cli_main(["run", "--scenario", "builtin", "--out", str(b), "--no-timings"])
    ra, rb = _read_reports(a), _read_reports(b)
    identical = ra == rb and len(ra) > 0

    cases = {}
    for name, text in [("banana", BANANA_TOML), ("broken", BROKEN_TOML),
                       ("unknown", UNKNOWN_CHECK_TOML), ("failing", FAILING_TOML)]:
        cases[name] = tmp_path / f"{name}.toml"
        cases[name].write_text(text)
    out = str(tmp_path / "misc")
    codes = {name: cli_main(["run", "--scenario", str(path), "--out", out])
             for name, path in cases.items()}
    err = capsys.readouterr().err
    ok = (identical and code_a == 0 and code_b == 0 and codes["banana"] == 2
          and codes["broken"] == 2 and codes["unknown"] == 2 and codes["failing"] == 1
          and "manifold.kind" in err and "line" in err)
    payload = json.loads(next(iter(ra.values()))) if ra else {}
    detail = (f"{len(ra)} reports identical={identical}, exit builtin={code_a}/{code_b} "
              f"banana={codes['banana']} toml-error={codes['broken']} "
              f"unknown-check={codes['unknown']} failing={codes['failing']}, "
              f"report keys={sorted(payload)[:4]}")
    assert report(8, ok, detail), detail
