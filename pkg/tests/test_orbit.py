import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import square, unit_square
from ehzcap.core import capacity
from ehzcap.geometry import SymplecticContext, make_cross_polytope, make_cube, make_random_polytope, make_simplex
from ehzcap.orbit import (
    DegenerateSupport,
    NegativeSpeedScale,
    PiecewiseAffineLoop,
    action,
    action_quadrature,
    reconstruct,
    verify,
)

CTX1 = SymplecticContext(1)


def unit_square_loop():
    e1, e2 = np.eye(2)
    return PiecewiseAffineLoop(np.zeros(2), [4 * e1, 4 * e2, -4 * e1, -4 * e2], np.full(4, 0.25))


def test_unit_square_loop_action():
    # counterclockwise boundary: action equals the enclosed area
    loop = unit_square_loop()
    assert loop.closure_error() == 0.0
    assert action(CTX1, loop) == pytest.approx(1.0)
    rev = PiecewiseAffineLoop(loop.start, -loop.velocities[::-1], loop.durations[::-1])
    assert action(CTX1, rev) == pytest.approx(-1.0)


def test_zero_durations_dropped():
    loop = PiecewiseAffineLoop(np.zeros(2), np.eye(2), [0.0, 1.0])
    assert len(loop.segments) == 1


@st.composite
def closed_loops(draw):
    n = draw(st.sampled_from([1, 2]))
    m = draw(st.integers(3, 7))
    rng = np.random.default_rng(draw(st.integers(0, 2**31 - 1)))
    V = rng.normal(size=(m, 2 * n))
    T = rng.dirichlet(np.ones(m + 1))
    # last segment closes the loop
    V = np.vstack([V, -(T[:-1] @ V) / T[-1]])
    return SymplecticContext(n), PiecewiseAffineLoop(rng.normal(size=2 * n), V, T)


@given(closed_loops(), st.floats(0.1, 5.0))
def test_action_scaling_and_translation(data, lam):
    ctx, loop = data
    a = action(ctx, loop)
    assert action(ctx, loop.scaled(lam)) == pytest.approx(lam**2 * a, rel=1e-9, abs=1e-12)
    assert action(ctx, loop.translated(np.ones(ctx.dim))) == pytest.approx(a, rel=1e-9, abs=1e-12)


@given(closed_loops())
def test_quadrature_matches_discrete_action(data):
    ctx, loop = data
    assert action_quadrature(ctx, loop) == pytest.approx(action(ctx, loop), abs=1e-10)


def test_square_reconstruction():
    K = square()
    cert = reconstruct(K, (0, 3, 2, 1), np.full(4, 0.25))
    assert cert.speed_scale == pytest.approx(4.0)
    assert cert.action == pytest.approx(4.0)
    assert np.allclose(cert.loop.durations, 0.25)
    # traverses the boundary counterclockwise: right edge moving up, and so on
    assert np.allclose(np.abs(cert.loop.breakpoints()), 1.0)
    rep = verify(K, cert, 4.0)
    assert rep.ok, rep.failures
    assert rep.visit_counts.tolist() == [1, 1, 1, 1]


def test_wrong_orientation_rejected():
    with pytest.raises(NegativeSpeedScale):
        reconstruct(square(), (0, 1, 2, 3), np.full(4, 0.25))


def test_degenerate_support():
    with pytest.raises(DegenerateSupport):
        reconstruct(square(), (0, 2, 1, 3), np.array([0.5, 0.0, 0.5, 0.0]))


def test_verify_detects_broken_closure():
    K = square()
    cert = reconstruct(K, (0, 3, 2, 1), np.full(4, 0.25))
    T = cert.loop.durations.copy()
    T[0] *= 2
    broken = dataclasses.replace(cert, loop=PiecewiseAffineLoop(cert.loop.start, cert.loop.velocities, T))
    rep = verify(K, broken)
    assert not rep.ok
    assert any("closure" in f for f in rep.failures)


def test_verify_detects_wrong_action():
    K = square()
    cert = dataclasses.replace(reconstruct(K, (0, 3, 2, 1), np.full(4, 0.25)), action=5.0)
    rep = verify(K, cert, 4.0)
    assert any("stored action" in f for f in rep.failures)
    assert any("capacity" in f for f in rep.failures)


@pytest.mark.parametrize(
    "make",
    [unit_square, lambda: make_cube(2), lambda: make_simplex(2), lambda: make_random_polytope(2, 6, seed=9)],
)
def test_certificates_from_solver(make):
    K = make()
    res = capacity(K)
    rep = verify(K, res.orbit, res.capacity)
    assert rep.ok, rep.failures
    assert res.orbit.action == pytest.approx(res.capacity, rel=1e-8)
    assert res.orbit.speed_scale > 0
    assert np.all(res.orbit.facet_visit_counts <= 1)


def test_cross_polytope_certificate():
    K = make_cross_polytope(2)
    res = capacity(K, mode="symmetric")
    rep = verify(K, res.orbit, res.capacity)
    assert rep.ok, rep.failures
