"""Invariant suite run by ``ehzcap selftest``.

Each check raises ``AssertionError`` on failure.  The quick suite stays in
the plane; the full suite adds four-dimensional fixtures.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import qp
from .core import capacity, capacity_pruned, capacity_symmetric, objective
from .experiments import cut_check
from .geometry import (
    HPolytope,
    Hyperplane,
    SymplecticContext,
    apply_linear,
    make_box,
    make_cube,
    make_random_polytope,
    make_simplex,
    omega,
    random_symplectic,
    scale,
    translate,
)
from .oracles import area_2d, clarke_dual_ascent, repetition_bound, sample_sequences
from .orbit import verify


def _close(a, b, rel, what):
    assert abs(a - b) <= rel * max(1.0, abs(b)), f"{what}: {a!r} vs {b!r}"


def _square():
    return make_cube(1, 1.0)


def _triangle():
    return HPolytope.from_arrays([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], [0.0, 0.0, 1.0])


def check_omega():
    ctx = SymplecticContext(2)
    e = np.eye(4)
    assert omega(ctx, e[0], e[2]) == 1.0, "omega(e1, e3) must be 1"
    assert omega(ctx, e[1], e[3]) == 1.0, "omega(e2, e4) must be 1"


def check_objective_sign():
    K = _square()
    # facets of make_cube(1): e1, e2, -e1, -e2
    _close(objective(K.context, K.normals, (0, 1, 2, 3), np.full(4, 0.25)), -0.125, 1e-12, "objective")
    _close(objective(K.context, K.normals, (3, 2, 1, 0), np.full(4, 0.25)), 0.125, 1e-12, "reversed objective")


def check_fixtures_2d():
    for K, want in ((_square(), 4.0), (make_box([0, 0], [1, 1]), 1.0), (_triangle(), 0.5)):
        res = capacity(K)
        _close(res.capacity, want, 1e-10, "fixture capacity")
        rep = verify(K, res.orbit, res.capacity)
        assert rep.ok, "; ".join(rep.failures)


def check_planar_area(count: int = 20):
    for seed in range(count):
        K = make_random_polytope(1, 4 + seed % 5, seed=seed)
        _close(capacity(K).capacity, area_2d(K), 1e-9, f"polygon {seed}")


def check_invariance_2d():
    K = make_random_polytope(1, 6, seed=3)
    c = capacity(K).capacity
    _close(capacity(translate(K, [0.3, -0.2])).capacity, c, 1e-9, "translation")
    _close(capacity(scale(K, 3.0)).capacity, 9.0 * c, 1e-9, "scaling")
    A = random_symplectic(1, np.random.default_rng(0))
    _close(capacity(apply_linear(K, A)).capacity, c, 1e-7, "symplectic image")


def check_paths_2d():
    for seed in range(5):
        K = make_random_polytope(1, 5 + seed % 3, seed=100 + seed)
        _close(capacity_pruned(K).capacity, capacity(K).capacity, 1e-9, "pruned path")
    _close(capacity_symmetric(_square()).capacity, 4.0, 1e-9, "symmetric path")


def check_repetition_bounds_2d():
    K = make_random_polytope(1, 5, seed=11)
    c = capacity(K).capacity
    for seq in sample_sequences(K, 10, 7, seed=0):
        assert repetition_bound(K, seq) >= c - 1e-9, "repetition bound below capacity"


def check_cut_2d():
    rows = cut_check(_square(), [Hyperplane(np.array([1.0, 0.0]), 0.5)])
    assert rows and rows[0].holds(), "subadditivity"
    _close(rows[0].c_K1 + rows[0].c_K2, 4.0, 1e-9, "planar additivity")


def check_qp_small():
    rng = np.random.default_rng(0)
    for _ in range(10):
        F = 5
        A = rng.normal(size=(F, F))
        q = qp.QuadraticOverPolytope(A + A.T, np.ones((1, F)), np.ones(1))
        ex = qp.maximize_exact(q)
        he = qp.maximize_heuristic(q, restarts=5)
        assert he.value <= ex.value + 1e-9, "heuristic exceeds exact maximum"


def check_cube_4d():
    K = make_cube(2, 1.0)
    res = capacity(K)
    _close(res.capacity, 4.0, 1e-9, "cube")
    _close(capacity_symmetric(K).capacity, res.capacity, 1e-9, "cube symmetric path")
    _close(capacity_pruned(K).capacity, res.capacity, 1e-9, "cube pruned path")
    rep = verify(K, res.orbit, res.capacity)
    assert rep.ok, "; ".join(rep.failures)


def check_random_4d():
    K = make_random_polytope(2, 6, seed=5)
    c = capacity(K).capacity
    A = random_symplectic(2, np.random.default_rng(1))
    _close(capacity(apply_linear(K, A)).capacity, c, 1e-7, "symplectic image 4d")
    _close(capacity_pruned(K).capacity, c, 1e-9, "pruned path 4d")
    _close(capacity(make_simplex(2)).capacity, capacity_pruned(make_simplex(2)).capacity, 1e-9, "simplex")


def check_dual_ascent():
    K = _square()
    _close(clarke_dual_ascent(K, m_segments=4, restarts=10), 4.0, 1e-6, "dual ascent")


QUICK = [
    check_omega,
    check_objective_sign,
    check_fixtures_2d,
    check_planar_area,
    check_invariance_2d,
    check_paths_2d,
    check_repetition_bounds_2d,
    check_cut_2d,
    check_qp_small,
]
FULL = QUICK + [check_cube_4d, check_random_4d, check_dual_ascent]


@dataclass
class CheckResult:
    name: str
    ok: bool
    message: str
    seconds: float


def run(quick: bool = False) -> list[CheckResult]:
    results = []
    for check in QUICK if quick else FULL:
        t0 = time.perf_counter()
        try:
            check()
            ok, msg = True, ""
        except Exception as exc:  # a crash is a failed check too
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(check.__name__, ok, msg, time.perf_counter() - t0))
    return results
