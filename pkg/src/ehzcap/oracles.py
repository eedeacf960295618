"""Independent cross-checks for the capacity solvers.

* ``area_2d``: in the plane the capacity of a convex body is its area.
* Repetition bounds: any cyclic sequence of facet normals, repeats allowed,
  with coefficients in the analogue of M(K) gives an upper bound on the
  capacity.  Heights come from the support function of K, not from the
  stored facet data.
* ``clarke_dual_ascent``: a discrete version of the dual action principle.
  Closed loops with m affine pieces whose velocities lie in the convex hull
  of the facet velocities ``p_i = (2/h_i) J n_i`` give upper bounds
  ``2 / A`` on the capacity, where A is the loop's discrete action form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import qp
from .errors import DimensionMismatch, NonpositiveObjective, ValidationError
from .geometry import HPolytope, SymplecticContext, apply_J, chebyshev_center, omega_matrix, support_value, translate

SEQ_TOL = 1e-9
POSITIVE_TOL = 1e-12
ENUM_BUDGET = 20000
SEQ_EXACT_LIMIT = 12


def area_2d(K: HPolytope) -> float:
    """Shoelace area of a planar polygon without redundant facets."""
    if K.dim != 2:
        raise DimensionMismatch(f"area_2d needs a planar polygon, got dimension {K.dim}")
    N, h = K.normals, K.heights
    order = np.argsort(np.arctan2(N[:, 1], N[:, 0]))
    N, h = N[order], h[order]
    nxt = np.roll(np.arange(len(h)), -1)
    verts = np.array([np.linalg.solve(np.vstack([N[i], N[j]]), [h[i], h[j]]) for i, j in zip(range(len(h)), nxt)])
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


# --------------------------------------------------------------------------
# repetition sequences


@dataclass
class RepetitionSequence:
    normals: np.ndarray  # (L, 2n), repeats allowed
    beta: np.ndarray  # (L,)

    def __post_init__(self):
        self.normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        self.beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if self.normals.shape[0] != self.beta.shape[0]:
            raise ValueError("normals and beta differ in length")


def sequence_objective(ctx: SymplecticContext, normals, beta) -> float:
    """``sum_{j<i} beta_i beta_j omega(n_i, n_j)`` along the sequence."""
    vecs = np.asarray(beta, dtype=float)[:, None] * np.asarray(normals, dtype=float)
    return float(np.sum(np.tril(omega_matrix(ctx, vecs), k=-1)))


def _support_heights(K: HPolytope, normals) -> np.ndarray:
    cache = {}
    out = []
    for n in normals:
        key = tuple(np.round(n, 14))
        if key not in cache:
            cache[key] = support_value(K, n)
        out.append(cache[key])
    return np.array(out)


def repetition_bound(K: HPolytope, seq: RepetitionSequence) -> float:
    """Upper bound ``0.5 / objective`` from one valid sequence."""
    if seq.normals.shape[1] != K.dim:
        raise DimensionMismatch("sequence normals do not match the dimension of K")
    h = _support_heights(K, seq.normals)
    if np.any(seq.beta < -SEQ_TOL):
        raise ValidationError("sequence coefficients must be nonnegative")
    if abs(seq.beta @ h - 1.0) > SEQ_TOL:
        raise ValidationError(f"sum beta h = {seq.beta @ h!r}, expected 1")
    if np.linalg.norm(seq.beta @ seq.normals) > SEQ_TOL:
        raise ValidationError("sum beta n is not zero")
    obj = sequence_objective(K.context, seq.normals, seq.beta)
    if obj <= POSITIVE_TOL:
        raise NonpositiveObjective(f"sequence objective {obj!r} gives no bound")
    return 0.5 / obj


def _sequence_hessian(ctx, normals) -> np.ndarray:
    W = omega_matrix(ctx, normals)
    L = len(normals)
    idx = np.arange(L)
    return W * np.sign(idx[:, None] - idx[None, :])


def best_coefficients(K: HPolytope, facets, heights=None) -> RepetitionSequence | None:
    """Maximizing coefficients for a facet sequence, or None if no bound exists.

    ``facets`` are indices into K's facet list, repeats allowed.  ``heights``
    may hold precomputed support values of the facet normals.
    """
    facets = list(facets)
    normals = K.normals[facets]
    if heights is None:
        h = _support_heights(K, normals)
    else:
        h = np.asarray(heights)[facets]
    E = np.vstack([normals.T, h[None, :]])
    f = np.zeros(K.dim + 1)
    f[-1] = 1.0
    q = qp.QuadraticOverPolytope(_sequence_hessian(K.context, normals), E, f)
    try:
        if q.size <= SEQ_EXACT_LIMIT:
            sol = qp.maximize_exact(q, exact_limit=SEQ_EXACT_LIMIT)
        else:
            sol = qp.maximize_heuristic(q, restarts=10)
    except qp.InfeasiblePolytope:
        return None
    if sol.value <= POSITIVE_TOL:
        return None
    return RepetitionSequence(normals, sol.argmax)


def random_facet_sequence(F: int, length: int, rng: np.random.Generator) -> tuple:
    """Random cyclic facet sequence with no two adjacent entries equal.

    A random ordered subset of ``min(length, F)`` distinct facets is drawn
    and the remaining entries are inserted at random positions, so every
    facet may repeat.
    """
    while True:
        seq = [int(i) for i in rng.permutation(F)[: min(length, F)]]
        while len(seq) < length:
            seq.insert(int(rng.integers(0, len(seq) + 1)), int(rng.integers(0, F)))
        if all(a != b for a, b in zip(seq, seq[1:] + seq[:1])):
            return tuple(seq)


def sample_sequences(K: HPolytope, count: int, max_len: int, seed: int = 0, min_len: int = 3):
    """Up to ``count`` random sequences with their optimal coefficients.

    Sequences that admit no positive objective are skipped; at most
    ``20 * count`` draws are made.
    """
    rng = np.random.default_rng(seed)
    F = K.num_facets
    heights = _support_heights(K, K.normals)
    out = []
    for _ in range(20 * count):
        if len(out) >= count:
            break
        L = int(rng.integers(min_len, max_len + 1))
        seq = best_coefficients(K, random_facet_sequence(F, L, rng), heights)
        if seq is not None:
            out.append(seq)
    return out


def _distinct_bound(K: HPolytope, length: int, budget: int, rng) -> float:
    """Best bound over sequences of ``length`` distinct facets.

    Every cyclic class is enumerated when affordable, otherwise ``budget``
    random sequences are drawn.  Shorter distinct sequences are covered
    because their coefficients are the zero-padded faces of these.
    """
    F = K.num_facets
    ctx = K.context
    h_all = _support_heights(K, K.normals)
    f = np.zeros(K.dim + 1)
    f[-1] = 1.0
    n_classes = math.comb(F, length) * max(1, math.factorial(length - 1) // 2)
    if n_classes <= budget:
        subsets = itertools.combinations(range(F), length)
        groups = (
            (cols, [(cols[0],) + p for p in itertools.permutations(cols[1:]) if length < 3 or p[0] < p[-1]])
            for cols in subsets
        )
    else:
        draws: dict[tuple, list] = {}
        for _ in range(budget):
            seq = tuple(int(i) for i in rng.choice(F, size=length, replace=False))
            draws.setdefault(tuple(sorted(seq)), []).append(seq)
        groups = iter(draws.items())
    best = -np.inf
    W = omega_matrix(ctx, K.normals)
    for cols, seqs in groups:
        E = np.vstack([K.normals[list(cols)].T, h_all[list(cols)][None, :]])
        local = {c: k for k, c in enumerate(cols)}
        pos = np.empty((len(seqs), length), dtype=np.intp)
        for r, s in enumerate(seqs):
            pos[r, [local[c] for c in s]] = np.arange(length)
        Wc = W[np.ix_(cols, cols)]
        S = Wc[None] * np.sign(pos[:, :, None] - pos[:, None, :])
        try:
            ex = qp.extremes_batch(S, E, f)
        except qp.InfeasiblePolytope:
            continue
        best = max(best, float(ex.max_value.max()), float(-ex.min_value.min()))
    return best


def repetition_ladder(K: HPolytope, max_len: int, samples: int = 100, seed: int = 0, budget: int = ENUM_BUDGET) -> float:
    """Smallest repetition bound over sequences of length at most ``max_len``.

    Distinct-facet sequences of length ``min(F, max_len)`` are searched
    exhaustively when there are at most ``budget`` cyclic classes (so
    ``max_len = F`` reproduces the capacity); ``samples`` further random
    sequences with repetitions are added.
    """
    rng = np.random.default_rng(seed)
    F = K.num_facets
    best = _distinct_bound(K, min(F, max_len), budget, rng) if max_len >= 3 else -np.inf
    for seq in sample_sequences(K, samples, max_len, seed=int(rng.integers(2**31))):
        best = max(best, sequence_objective(K.context, seq.normals, seq.beta))
    if best <= POSITIVE_TOL:
        raise NonpositiveObjective("no sequence produced a positive objective")
    return 0.5 / best


# --------------------------------------------------------------------------
# discrete dual action ascent


def _action_form(ctx, t, V) -> float:
    """``sum_{j<i} t_i t_j omega(v_i, v_j)``."""
    return float(np.sum(np.tril(omega_matrix(ctx, t[:, None] * V), k=-1)))


def _action_gradient(ctx, t, V) -> np.ndarray:
    """Gradient of ``_action_form`` with respect to each velocity."""
    JV = apply_J(ctx, t[:, None] * V)
    after = np.cumsum(JV[::-1], axis=0)[::-1] - JV  # sum over k > i
    before = np.cumsum(JV, axis=0) - JV  # sum over j < i
    return t[:, None] * (after - before)


def _duration_step(ctx, V):
    """Exact maximization over durations for fixed velocities."""
    m, d = V.shape
    W = omega_matrix(ctx, V)
    idx = np.arange(m)
    S = W * np.sign(idx[:, None] - idx[None, :])
    E = np.vstack([V.T, np.ones((1, m))])
    f = np.zeros(d + 1)
    f[-1] = 1.0
    try:
        sol = qp.maximize_exact(qp.QuadraticOverPolytope(S, E, f))
    except qp.InfeasiblePolytope:
        return None
    return sol.argmax


def _velocity_step(ctx, t, V, P):
    """Frank-Wolfe vertex for the velocities: an LP over convex weights."""
    m, d = V.shape
    F = P.shape[0]
    G = _action_gradient(ctx, t, V)
    c = -(G @ P.T).reshape(-1)  # weight (i, k) scores <g_i, p_k>
    A_eq = np.vstack([
        np.kron(np.eye(m), np.ones((1, F))),
        np.kron(t[None, :], P.T),
    ])
    b_eq = np.concatenate([np.ones(m), np.zeros(d)])
    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * (m * F), method="highs")
    if res.status != 0:
        return None
    return res.x.reshape(m, F) @ P


def _ascend(ctx, P, V, max_iter: int, tol: float):
    t = _duration_step(ctx, V)
    if t is None:
        return -np.inf
    val = _action_form(ctx, t, V)
    for _ in range(max_iter):
        target = _velocity_step(ctx, t, V, P)
        if target is None:
            break
        D = target - V
        slope = float(np.sum(_action_gradient(ctx, t, V) * D))
        curv = _action_form(ctx, t, D)
        if slope <= tol:
            step = 0.0
        elif curv < 0:
            step = min(1.0, -slope / (2.0 * curv))
        else:
            step = 1.0
        V = V + step * D
        t_new = _duration_step(ctx, V)
        if t_new is not None:
            t = t_new
        new = _action_form(ctx, t, V)
        if new <= val + tol * max(1.0, abs(val)):
            val = max(val, new)
            break
        val = new
    return val


def clarke_dual_ascent(
    K: HPolytope, m_segments: int = 8, restarts: int = 20, seed: int = 0, max_iter: int = 200, tol: float = 1e-14
) -> float:
    """Upper bound on the capacity from the best discrete loop found.

    Alternates an LP step on the velocities (convex weights over the facet
    velocities, loop kept closed) with an exact QP step on the durations.
    Each restart starts from random facet velocities and is seeded by
    ``(seed, restart index)``.
    """
    center, _ = chebyshev_center(K)
    K0 = translate(K, -center)
    ctx = K0.context
    P = 2.0 * apply_J(ctx, K0.normals) / K0.heights[:, None]
    F = K0.num_facets
    best = -np.inf
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        if m_segments <= F:
            pick = rng.choice(F, size=m_segments, replace=False)
        else:
            pick = rng.integers(0, F, size=m_segments)
        weights = np.eye(F)[pick]
        if r % 2:
            weights = 0.7 * weights + 0.3 * rng.dirichlet(np.ones(F), size=m_segments)
        best = max(best, _ascend(ctx, P, weights @ P, max_iter, tol))
    if best <= POSITIVE_TOL:
        raise NonpositiveObjective("no closed discrete loop with positive action was found")
    return 2.0 / best
