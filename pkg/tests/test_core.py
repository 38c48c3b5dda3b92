import math

import numpy as np
import pytest

from hadamard import (
    BHV,
    GeodesicBall,
    InvalidInputError,
    Euclidean,
    Spider,
    SPD,
    cat0_gap,
    distance,
    geodesic_point,
    project_ball,
    reshetnyak_gap,
)
from hadamard.core import Space

from helpers import flat_spaces, sampler, scale

ALL_SPACES = flat_spaces() + [BHV(4), BHV(5)]


def ids(spaces):
    return [s.descriptor for s in spaces]


def test_distance_examples():
    e, s = Euclidean(2), Spider(3)
    assert distance(e, e.point([0, 0]), e.point([3, 4])) == 5.0
    assert distance(s, s.point(0, 1), s.point(1, 2)) == 3.0
    assert distance(s, s.point(2, 1), s.point(2, 4)) == 3.0


def test_geodesic_examples():
    e, s = Euclidean(2), Spider(3)
    assert np.allclose(geodesic_point(e, e.point([0, 0]), e.point([2, 0]), 0.25).coords, [0.5, 0.0])
    assert geodesic_point(s, s.point(0, 1), s.point(1, 3), 0.5) == s.point(1, 1)
    p, q = s.point(0, 2), s.point(2, 1)
    assert geodesic_point(s, p, q, 1.0) is q
    assert geodesic_point(s, p, q, 0.0) is p


def test_t_out_of_range_is_rejected():
    e = Euclidean(1)
    with pytest.raises(InvalidInputError):
        e.geodesic(e.point([0]), e.point([1]), 1.5)
    with pytest.raises(InvalidInputError):
        e.geodesic(e.point([0]), e.point([1]), -0.1)


def test_mixing_backends_is_an_error():
    e, s = Euclidean(2), Spider(3)
    with pytest.raises(InvalidInputError):
        e.distance(e.point([0, 0]), s.point(0, 1))
    with pytest.raises(InvalidInputError):
        Euclidean(3).distance(e.point([0, 0]), e.point([1, 1]))
    with pytest.raises(InvalidInputError):
        SPD(2).distance(SPD(3).point(np.eye(3)), SPD(3).point(np.eye(3)))


def test_space_tolerance_bounds():
    with pytest.raises(InvalidInputError):
        Euclidean(2, tol=1e-3)
    with pytest.raises(InvalidInputError):
        Spider(3, tol=-1.0)
    assert Euclidean(2, tol=0.0).tol == 0.0


def test_abstract_space_needs_hooks():
    with pytest.raises(NotImplementedError):
        Space().distance(0, 1)


def test_cat0_examples():
    e, s = Euclidean(2), Spider(3)
    rng = np.random.default_rng(1)
    z, p, q = (e.point(rng.normal(size=2)) for _ in range(3))
    assert abs(cat0_gap(e, z, p, q, 0.3)) < 1e-12
    gap = cat0_gap(s, s.point(2, 1), s.point(0, 1), s.point(1, 1), 0.5)
    # midpoint is the origin: 1 - [0.5*4 + 0.5*4 - 0.25*4] = -2
    assert gap == pytest.approx(-2.0)
    assert cat0_gap(s, s.point(2, 1), s.point(0, 1), s.point(1, 3), 0.0) == 0.0


def test_reshetnyak_examples():
    e, s = Euclidean(1), Spider(3)
    x = e.point([0.0])
    assert reshetnyak_gap(e, x, x, x, x) == 0.0
    assert reshetnyak_gap(e, e.point([0]), e.point([1]), e.point([1]), e.point([0])) == 0.0
    assert reshetnyak_gap(s, s.point(0, 1), s.point(1, 1), s.point(1, 2), s.point(2, 1)) <= 0.0


def test_project_ball_examples():
    e, s = Euclidean(2), Spider(3)
    ball = GeodesicBall(e.point([0, 0]), 1.0)
    assert np.allclose(project_ball(e, ball, e.point([2, 0])).coords, [1, 0])
    inside = e.point([0.3, 0.2])
    assert project_ball(e, ball, inside) is inside
    assert project_ball(s, GeodesicBall(s.origin, 1.0), s.point(1, 3)) == s.point(1, 1)
    assert ball.contains(e, e.point([1, 0]))
    assert ball.distance_to(e, e.point([3, 0])) == 2.0


def test_ball_radius_validation():
    with pytest.raises(InvalidInputError):
        GeodesicBall(Euclidean(1).point([0]), -1.0)
    with pytest.raises(InvalidInputError):
        GeodesicBall(Euclidean(1).point([0]), math.inf)


@pytest.mark.parametrize("space", ALL_SPACES, ids=ids(ALL_SPACES))
def test_metric_axioms_and_constant_speed(space, rng):
    draw = sampler(space)
    for _ in range(40):
        p, q, r = draw(rng), draw(rng), draw(rng)
        d_pq = space.distance(p, q)
        assert d_pq == pytest.approx(space.distance(q, p), abs=1e-9)
        assert d_pq <= space.distance(p, r) + space.distance(r, q) + 1e-9
        assert space.distance(p, p) <= 1e-9
        for t in np.linspace(0.0, 1.0, 11):
            g = space.geodesic(p, q, t)
            assert abs(space.distance(p, g) - t * d_pq) <= 1e-9 * (1 + d_pq)
            assert abs(space.distance(g, q) - (1 - t) * d_pq) <= 1e-9 * (1 + d_pq)


@pytest.mark.parametrize("space", ALL_SPACES, ids=ids(ALL_SPACES))
def test_comparison_gaps_sampled(space, rng):
    draw = sampler(space)
    slack = 1e-8 if isinstance(space, BHV) else 1e-9
    for _ in range(60):
        pts = [draw(rng) for _ in range(4)]
        bound = slack * (1 + scale(space, pts) ** 2)
        assert cat0_gap(space, pts[0], pts[1], pts[2], rng.random()) <= bound
        assert reshetnyak_gap(space, *pts) <= bound


@pytest.mark.parametrize("space", ALL_SPACES, ids=ids(ALL_SPACES))
def test_ball_projection_nonexpansive(space, rng):
    draw = sampler(space)
    for _ in range(40):
        ball = GeodesicBall(draw(rng), rng.uniform(0.0, 1.5))
        x, y = draw(rng), draw(rng)
        px, py = project_ball(space, ball, x), project_ball(space, ball, y)
        assert space.distance(px, py) <= space.distance(x, y) + 1e-9
        assert space.distance(px, ball.center) <= ball.radius + 1e-9


def test_equal_uses_tolerance():
    s = Spider(3)
    assert s.equal(s.point(0, 0.0), s.point(2, 0.0))
    assert not s.equal(s.point(0, 1.0), s.point(2, 1.0))
