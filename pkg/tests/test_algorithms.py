import math
import os
import subprocess
import sys

import numpy as np
import pytest

from hadamard import (
    BHV,
    SPD,
    AnchorConfiguration,
    Euclidean,
    GeodesicBall,
    Indicator,
    InvalidInputError,
    RunConfig,
    ScaledSquaredDistance,
    Spider,
    StepSchedule,
    frechet_mean,
    geometric_median,
    lie_trotter_kato,
    lln_mean,
    objective_value,
    ppa_cyclic,
    ppa_random,
    variance_gap,
)
from hadamard import _kernels as K
from hadamard.algorithms import draw_indices

from helpers import flat_spaces, sampler


def remark_config():
    s = Spider(3)
    return s, AnchorConfiguration.uniform([s.point(0, 1), s.point(1, 1), s.point(2, 5)])


def triangle():
    e = Euclidean(2)
    return e, AnchorConfiguration.uniform([e.point([0, 0]), e.point([1, 0]), e.point([0, 1])])


def test_euclidean_triangle_mean():
    e, data = triangle()
    x, trace = frechet_mean(e, data)
    assert np.allclose(x.coords, [1 / 3, 1 / 3], atol=1e-3)
    assert trace.metadata["variant"] == "cyclic"


def test_remark_mean_cyclic():
    s, data = remark_config()
    x, _ = frechet_mean(s, data)
    assert x.ray == 2 and abs(x.radius - 1.0) <= 1e-2


def test_remark_mean_random_seeds():
    s, data = remark_config()
    for seed in range(10):
        x, trace = frechet_mean(s, data, "random", RunConfig(budget=200_000, seed=seed))
        assert s.distance(x, s.point(2, 1.0)) <= 5e-2
        assert trace.metadata["seed"] == seed


@pytest.mark.parametrize("variant", ["cyclic", "random", "lln"])
def test_single_anchor_is_returned(variant):
    e = Euclidean(2)
    a = e.point([0.3, -1.2])
    x, _ = frechet_mean(e, AnchorConfiguration.uniform([a]), variant, RunConfig(budget=50, seed=1))
    assert e.equal(x, a)
    if variant != "lln":
        m, _ = geometric_median(e, AnchorConfiguration.uniform([a]), variant, RunConfig(budget=50, seed=1))
        assert e.equal(m, a)


SPACES = flat_spaces() + [BHV(4)]


@pytest.mark.parametrize("space", SPACES, ids=[s.descriptor for s in SPACES])
def test_two_point_mean_is_weighted_geodesic_point(space, rng):
    draw = sampler(space)
    budget = 2000 if space.kind == "bhv" else 20_000
    for _ in range(3):
        a, b = draw(rng), draw(rng)
        s = float(rng.uniform(0.1, 0.9))
        x, _ = frechet_mean(space, AnchorConfiguration([a, b], [1 - s, s]), config=RunConfig(budget=budget))
        assert space.distance(x, space.geodesic(a, b, s)) <= 1e-3


def test_single_component_monotone():
    e = Euclidean(2)
    a = e.point([2.0, 1.0])
    trace = ppa_cyclic(e, [ScaledSquaredDistance(a, 1.0)], e.point([0.0, 0.0]), RunConfig(budget=30))
    d = [e.distance(x, a) for x in trace.iterates]
    assert all(d1 <= d0 for d0, d1 in zip(d, d[1:]))
    assert np.all(np.diff(trace.objectives) <= 0)
    r = ppa_random(e, [ScaledSquaredDistance(a, 1.0)], e.point([0.0, 0.0]), RunConfig(budget=30, seed=9))
    assert e.equal(r.final, trace.final)


def test_equal_components_converge_for_any_seed():
    e = Euclidean(1)
    a = e.point([1.5])
    comps = [ScaledSquaredDistance(a, 1.0)] * 3
    for seed in range(5):
        r = ppa_random(e, comps, e.point([-2.0]), RunConfig(budget=3000, seed=seed))
        assert abs(r.final.coords[0] - 1.5) <= 1e-3


def test_fermat_median():
    e, data = triangle()
    x, _ = geometric_median(e, data)
    c = (3 - math.sqrt(3)) / 6
    assert np.allclose(x.coords, [c, c], atol=1e-3)


def test_remark_median_is_origin():
    s, data = remark_config()
    x, _ = geometric_median(s, data)
    assert s.distance(x, s.origin) <= 1e-2
    assert objective_value(s, data.median_components(), x) == pytest.approx(7 / 3, abs=1e-2)


def test_two_balls_feasibility():
    e = Euclidean(2)
    balls = [GeodesicBall(e.point([0, 0]), 1.0), GeodesicBall(e.point([1.5, 0]), 1.0)]
    trace = ppa_cyclic(e, [Indicator(b) for b in balls], e.point([0.7, 3.0]), RunConfig(budget=200))
    for b in balls:
        assert b.distance_to(e, trace.final) <= 1e-6


def test_lie_trotter_kato():
    e = Euclidean(1)
    f = ScaledSquaredDistance(e.point([0.0]), 1.0)
    x0 = e.point([1.0])
    assert lie_trotter_kato(e, [f], x0, 0.0, 5) is x0
    k = 10_000
    one = lie_trotter_kato(e, [f], x0, 1.0, k).coords[0]
    assert one == pytest.approx((1 + 2 / k) ** -k, rel=1e-9)
    assert abs(one - math.exp(-2)) <= 1e-3
    assert abs(lie_trotter_kato(e, [f, f], x0, 1.0, k).coords[0] - math.exp(-4)) <= 1e-3
    with pytest.raises(InvalidInputError):
        lie_trotter_kato(e, [f], x0, -1.0, 5)
    with pytest.raises(InvalidInputError):
        lie_trotter_kato(e, [], x0, 1.0, 5)


def test_variance_gap_examples(rng):
    s, data = remark_config()
    xi = s.point(2, 1.0)
    assert variance_gap(s, data, xi, xi) == 0.0
    assert variance_gap(s, data, xi, s.origin) == pytest.approx(0.0, abs=1e-12)
    e = Euclidean(3)
    pts = [e.point(rng.normal(size=3)) for _ in range(6)]
    data = AnchorConfiguration.uniform(pts)
    mean = e.point(np.mean([p.coords for p in pts], axis=0))
    for _ in range(10):
        assert variance_gap(e, data, mean, e.point(rng.normal(size=3))) == pytest.approx(0.0, abs=1e-12)


def test_lln_examples():
    e = Euclidean(1)
    a = e.point([2.0])
    x, trace = lln_mean(e, AnchorConfiguration.uniform([a, a, a]), seed=3, steps=20)
    assert all(e.equal(p, a) for p in trace.iterates)
    x, trace = lln_mean(e, AnchorConfiguration.uniform([a]), seed=0, steps=1)
    assert e.equal(x, a) and trace.steps_taken == 1
    data = AnchorConfiguration.uniform([e.point([0.0]), e.point([1.0])])
    finals = [lln_mean(e, data, s, 1000, record_every=10**9)[0].coords[0] for s in range(1000)]
    assert abs(np.mean(finals) - 0.5) <= 0.05
    with pytest.raises(InvalidInputError):
        lln_mean(e, data, 0, 0)


def test_lln_samples_by_weight():
    e = Euclidean(1)
    data = AnchorConfiguration([e.point([0.0]), e.point([1.0])], [0.9, 0.1])
    _, trace = lln_mean(e, data, seed=4, steps=5000, record_every=1)
    share = np.mean(trace.component_index == 1)
    assert abs(share - 0.1) <= 0.02


def test_lln_trace_labels():
    e = Euclidean(1)
    data = AnchorConfiguration.uniform([e.point([0.0]), e.point([1.0])])
    _, trace = lln_mean(e, data, seed=2, steps=10)
    assert trace.steps.tolist() == list(range(1, 11))
    assert np.allclose(trace.t_coefficients, [1 / k for k in range(1, 11)])
    assert trace.metadata["variant"] == "lln"


@pytest.mark.parametrize("space", [Euclidean(2), Spider(3), SPD(2), BHV(4)], ids=lambda s: s.descriptor)
def test_lln_replays_random_mean_run(space, rng):
    # unit-weight squared distances with lambda_k = 1/(2(k+1)) give t = 1/(k+2), the inductive-mean step
    draw = sampler(space)
    pts = [draw(rng) for _ in range(4)]
    data = AnchorConfiguration.uniform(pts)
    steps = 200 if space.kind == "bhv" else 2000
    idx = draw_indices(11, data.weights, steps)
    _, lln = lln_mean(space, data, seed=11, steps=steps)
    comps = [ScaledSquaredDistance(a, 1.0) for a in pts]
    run = ppa_random(space, comps, pts[idx[0]], RunConfig(budget=steps, schedule=StepSchedule(0.5, 1.0)),
                     indices=idx[1:])
    assert len(run) == len(lln)
    assert np.array_equal(run.component_index[1:], lln.component_index[1:])
    for p, q in zip(run.iterates, lln.iterates):
        assert space.distance(p, q) <= 1e-10


@pytest.mark.parametrize("variant", ["cyclic", "random"])
def test_same_seed_same_trace(variant):
    s, data = remark_config()
    cfg = RunConfig(budget=500, seed=17)
    _, t1 = frechet_mean(s, data, variant, cfg)
    _, t2 = frechet_mean(s, data, variant, cfg)
    assert t1.to_csv() == t2.to_csv()
    assert all(s.distance(p, q) == 0.0 for p, q in zip(t1.iterates, t2.iterates))


def test_draw_indices_prefix_consistent():
    a = draw_indices(5, [0.2, 0.3, 0.5], 100)
    b = draw_indices(5, [0.2, 0.3, 0.5], 40)
    assert np.array_equal(a[:40], b)
    assert set(np.unique(a)) <= {0, 1, 2}


@pytest.mark.parametrize("space", flat_spaces() + [BHV(4), BHV(6)], ids=lambda s: s.descriptor)
@pytest.mark.parametrize("kind", ["mean", "median", "lln"])
def test_kernel_matches_generic_path(space, kind, rng):
    draw = sampler(space)
    data = AnchorConfiguration([draw(rng) for _ in range(5)], rng.uniform(0.5, 2.0, size=5))
    cfg = RunConfig(budget=40, seed=3)
    if kind == "lln":
        (_, fast), (_, slow) = (lln_mean(space, data, 3, 200, fast=f) for f in (True, False))
    else:
        fn = frechet_mean if kind == "mean" else geometric_median
        (_, fast), (_, slow) = (fn(space, data, "random", cfg, fast=f) for f in (True, False))
    assert fast.metadata["backend"] in ("numba", "python") and slow.metadata["backend"] == "generic"
    assert len(fast) == len(slow)
    assert np.array_equal(fast.component_index, slow.component_index)
    for p, q in zip(fast.iterates, slow.iterates):
        assert space.distance(p, q) <= 1e-9
    assert np.allclose(fast.objectives, slow.objectives, rtol=1e-9, atol=1e-9)


def test_jitted_kernel_matches_python_fallback(rng):
    anchors = rng.normal(size=(6, 3))
    weights = np.full(6, 1 / 6)
    idx = draw_indices(1, weights, 500)
    lam = 1.0 / (np.arange(500) + 1.0)
    args = (anchors, weights, anchors[0].copy(), idx, lam, 0, K.RULE_DISTANCE, 6, -1.0, 1e-12, 1)
    fast = K.run_euclid(*args)
    slow = K.run_euclid.py_func(*args)
    assert np.allclose(fast[0], slow[0], rtol=0, atol=1e-12)
    assert np.allclose(fast[7], slow[7], rtol=0, atol=1e-12)


def test_tolerance_stop():
    e, data = triangle()
    _, trace = frechet_mean(e, data, config=RunConfig(budget=100_000, tol=1e-4))
    assert trace.stop_reason == "tolerance"
    assert trace.steps_taken < 300_000 and trace.steps_taken % 3 == 0
    _, full = frechet_mean(e, data, config=RunConfig(budget=50))
    assert full.stop_reason == "budget" and full.steps_taken == 150


def test_record_every_keeps_endpoints():
    e, data = triangle()
    _, trace = frechet_mean(e, data, config=RunConfig(budget=10, record_every=7))
    assert trace.steps.tolist() == [0, 7, 14, 21, 28, 30]


def test_error_cases():
    e, data = triangle()
    with pytest.raises(InvalidInputError):
        ppa_cyclic(e, [], e.point([0, 0]))
    with pytest.raises(InvalidInputError):
        frechet_mean(e, data, "sideways")
    with pytest.raises(InvalidInputError):
        geometric_median(e, data, "lln")
    with pytest.raises(InvalidInputError):
        ppa_cyclic(e, data.mean_components(), e.point([0, 0]), RunConfig(budget=5, schedule=lambda k: -1.0))
    with pytest.raises(InvalidInputError):
        frechet_mean(Spider(3), data)


def test_disable_jit_flag_runs_python_path():
    code = ("from hadamard import *\n"
            "e = Euclidean(2)\n"
            "d = AnchorConfiguration.uniform([e.point([0,0]), e.point([1,0]), e.point([0,1])])\n"
            "x, t = frechet_mean(e, d, config=RunConfig(budget=200))\n"
            "print(t.metadata['backend'], repr(float(x.coords[0])))\n")
    env = dict(os.environ, HADAMARD_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, value = out.stdout.split()
    assert backend == "python"
    e, d = triangle()
    x, _ = frechet_mean(e, d, config=RunConfig(budget=200))
    assert abs(float(value) - x.coords[0]) <= 1e-12
