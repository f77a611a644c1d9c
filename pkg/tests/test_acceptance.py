"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line; the lines are printed together at the end of the pytest run.
"""

import math
import time

import numpy as np
import pytest

from finslerkit import geodesics, oracles, suites
from finslerkit.metricfile import fixture_path

from conftest import ACCEPTANCE_LINES, ALL_FIXTURES, RIEMANNIAN_FIXTURES, SPHERE_FIXTURES, load_fixture, random_elements

SEED = 20240611
ROUND_2D = {0.5: "sphere_c0.5", 1.0: "sphere_c1", 2.0: "sphere_c2"}


def verdict(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def run(name, suite, **kw):
    return suites.run_suite(suites.ExperimentConfig(metric=fixture_path(name), suite=suite, seed=SEED, **kw))


def by_tag(report):
    return {r.tag: r for r in report.records}


def test_criterion_1_constant_flag_curvature():
    worst, slowest = 0.0, 0.0
    for C, name in ROUND_2D.items():
        start = time.perf_counter()
        rec = by_tag(run(name, "flag-curvature", samples=500))["Eq-9"]
        slowest = max(slowest, time.perf_counter() - start)
        assert rec.samples == 500 and rec.extra["K_expected"] == pytest.approx(C * C)
        worst = max(worst, rec.max_residual)
    verdict(1, worst < 1e-6 and slowest < 10.0,
            f"max |K - C^2| = {worst:.2e} (< 1e-6) over 500 flags per C in (0.5, 1, 2); slowest C {slowest:.2f} s (< 10 s)")


def test_criterion_2_curvature_decomposition():
    tags = ("Eq-2.21-block1", "Eq-2.21-block2", "Eq-2.21-block3", "Prop-1-chain", "Prop-1-block3-substituted", "Eq-2")
    worst = {}
    for name in ("sphere_c1", "sphere_c2", "sphere3_c1", "sphere3_c2"):
        recs = by_tag(run(name, "decomposition", samples=100))
        for tag in tags:
            assert recs[tag].samples == 100
            worst[tag] = max(worst.get(tag, 0.0), recs[tag].max_residual)
    verdict(2, max(worst.values()) < 1e-6,
            "block/chain/metric residuals over 100 line elements, n in (2, 3): "
            + ", ".join(f"{t}={v:.1e}" for t, v in worst.items()))


def test_criterion_3_horizontal_hessian():
    worst = 0.0
    for name in ("sphere_c1", "sphere3_c2"):
        rec = by_tag(run(name, "hessian", samples=100))["Eq-16"]
        assert rec.extra["y_per_x"] == 50 and rec.extra["line_elements"] == 5000
        worst = max(worst, rec.max_residual)
    verdict(3, worst < 1e-6, f"max |Hess rho + C^2 rho g| = {worst:.2e} (< 1e-6) over 100 x with 50 y each")


def test_criterion_4_special_solution_ode():
    worst_res, worst_spacing = 0.0, 0.0
    for name in ROUND_2D.values():
        recs = by_tag(run(name, "ode", step=1e-3))
        worst_res = max(worst_res, recs["Eq-5"].max_residual)
        worst_spacing = max(worst_spacing, recs["Eq-8"].max_residual)
    verdict(4, worst_res < 1e-6 and worst_spacing < 1e-3,
            f"max |rho'' + C^2 rho| = {worst_res:.2e} (< 1e-6) at step 1e-3; "
            f"critical spacing error {worst_spacing:.2e} (< 1e-3)")


def test_criterion_5_constant_curvature_form():
    worst, weakest_probe = 0.0, math.inf
    for name in SPHERE_FIXTURES:
        recs = by_tag(run(name, "constant-form"))
        worst = max(worst, recs["Eq-11"].max_residual)
        weakest_probe = min(weakest_probe, recs["Eq-11-detector"].extra["probe_residual_min"])
    verdict(5, worst < 1e-6 and weakest_probe > 0.1,
            f"residual {worst:.2e} (< 1e-6) on {len(SPHERE_FIXTURES)} sphere fixtures; "
            f"wrong-K probe min {weakest_probe:.3f} (> 0.1)")


def test_criterion_6_cartan_torsion_ode():
    worst_A, worst_syn = 0.0, 0.0
    for name in RIEMANNIAN_FIXTURES:
        recs = by_tag(run(name, "torsion", step=1e-3))
        worst_A = max(worst_A, recs["Eq-14"].max_residual)
        worst_syn = max(worst_syn, recs["Eq-14-synthetic"].max_residual)
    verdict(6, worst_A < 1e-10 and worst_syn < 1e-8,
            f"Riemannian max |A| = {worst_A:.1e} (< 1e-10) on {len(RIEMANNIAN_FIXTURES)} fixtures; "
            f"synthetic sinusoid residual {worst_syn:.1e} (< 1e-8)")


def test_criterion_7_antipodal_focusing():
    spec = load_fixture("sphere_c1")
    rep = geodesics.antipodal_focusing(spec, pole_offset=0.05, count=8, step=1e-3, seed=SEED)
    assert rep.length == pytest.approx(math.pi - 0.1)
    control = geodesics.antipodal_focusing(load_fixture("flat_polar"), pole_offset=0.05, count=8, step=1e-3,
                                           length=2.5, seed=SEED)
    growing = bool(np.all(np.diff(control.profile_spread) > 0))
    # the chord spread must come back to its starting value at the antipodal level
    refocus = abs(rep.spread_end - rep.spread_start)
    ok = (rep.endpoint_t_spread < 1e-4 and rep.t_deviation < 1e-4 and refocus < 1e-4 and growing
          and control.linear_r2 > 1 - 1e-6)
    verdict(7, ok,
            f"endpoint spread {rep.endpoint_t_spread:.1e}, arrival error {rep.t_deviation:.1e}, "
            f"chord spread return {refocus:.1e} (< 1e-4) for 8 "
            f"geodesics of length pi - 0.1; flat control spread {control.spread_start:.3f} -> "
            f"{control.spread_end:.3f}, 1 - R^2 = {1 - control.linear_r2:.1e}")


def test_criterion_8_oracle_equivalence():
    rng = np.random.default_rng(SEED)
    worst_fd = 0.0
    for name in ALL_FIXTURES:
        spec = load_fixture(name)
        el = random_elements(spec, rng, 50)
        worst_fd = max(worst_fd, *oracles.jet_vs_richardson(spec, el.x, el.y).values())
    worst_cl = 0.0
    for name in RIEMANNIAN_FIXTURES:
        spec = load_fixture(name)
        el = random_elements(spec, rng, 200)
        X = rng.standard_normal((200, spec.dimension))
        worst_cl = max(worst_cl, *oracles.riemannian_vs_christoffel(spec, el, X).values())
    verdict(8, worst_fd < 1e-6 and worst_cl < 1e-6,
            f"jets vs Richardson {worst_fd:.1e} relative on {len(ALL_FIXTURES)} fixtures; "
            f"pipeline vs Christoffel oracle {worst_cl:.1e} on 200 flags x {len(RIEMANNIAN_FIXTURES)} fixtures (< 1e-6)")


def test_criterion_9_randers_negative_control():
    rep = run("randers_bump", "flag-curvature", samples=100)
    var = rep.records[0].extra["K_variance"]
    verdict(9, var > 1e-4 and not rep.passed, f"Randers K sample variance {var:.3e} (> 1e-4); reported non-constant")
