"""EHZ capacity of a convex polytope from its facet data.

For a polytope with unit normals ``n_i`` and heights ``h_i`` (origin inside),

    c(K) = 1/2 * [ max_{sigma, beta} sum_{j<i} beta_s(i) beta_s(j) omega(n_s(i), n_s(j)) ]^-1

over orderings ``sigma`` of the facets and ``beta >= 0`` with
``sum beta_i h_i = 1`` and ``sum beta_i n_i = 0``.

For a fixed order the inner problem is a quadratic over a polytope, handled by
:mod:`ehzcap.qp`.  On the constraint set the objective is invariant under
cyclic rotation of the order and changes sign under reversal, so orders are
enumerated with facet 0 in front and one representative per reversal pair;
the reversed order is covered by the minimum of the same quadratic.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from . import qp
from .errors import (
    EmptyM,
    ExactLimitExceeded,
    NonpositiveMaximum,
    NotCentrallySymmetric,
    SolverError,
)
from .geometry import (
    HPolytope,
    SymplecticContext,
    apply_J,
    detect_central_symmetry,
    omega_matrix,
    translate,
    validate_polytope,
)

logger = logging.getLogger(__name__)

EXACT_LIMIT = 10
MAX_EXACT_LIMIT = 12
CHUNK = 4096
GRAPH_EPS = 1e-7
POSITIVE_TOL = 1e-12
TIE_TOL = 1e-12


class Mode(str, Enum):
    EXACT = "exact"
    HEURISTIC = "heuristic"
    SYMMETRIC = "symmetric"
    PRUNED = "pruned"


@dataclass(frozen=True, eq=False)
class MConstraints:
    """``{beta >= 0 : E beta = f}``; rows are the normal sum then the height row."""

    E: np.ndarray
    f: np.ndarray


@dataclass
class CandidateSolution:
    sigma: tuple
    beta: np.ndarray
    objective: float


@dataclass
class CapacityResult:
    capacity: float
    best: CandidateSolution
    mode: Mode
    permutations_examined: int
    orbit: object = None
    certified: bool = True
    center: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)


def build_M(K: HPolytope) -> MConstraints:
    if np.any(K.heights <= 0):
        raise EmptyM("origin must lie in the interior of K (all heights positive)")
    E = np.vstack([K.normals.T, K.heights[None, :]])
    f = np.zeros(K.dim + 1)
    f[-1] = 1.0
    res = linprog(
        np.zeros(K.num_facets), A_eq=E, b_eq=f, bounds=[(0, None)] * K.num_facets, method="highs"
    )
    if res.status != 0:
        raise EmptyM("coefficient polytope is empty; K is not a bounded polytope")
    return MConstraints(E, f)


def objective(ctx: SymplecticContext, normals, sigma, beta) -> float:
    """``sum_{j<i} beta_s(i) beta_s(j) omega(n_s(i), n_s(j))``; beta indexed by facet."""
    normals = np.asarray(normals, dtype=float)
    beta = np.asarray(beta, dtype=float)
    sigma = list(sigma)
    vecs = beta[sigma][:, None] * normals[sigma]
    W = omega_matrix(ctx, vecs)
    return float(np.sum(np.tril(W, k=-1)))


def order_matrix(W, positions) -> np.ndarray:
    """Hessians ``S[a, b] = W[a, b] * sign(pos[a] - pos[b])`` for a stack of orders.

    With these, ``0.5 * beta @ S @ beta`` is the objective for the order in
    which facet ``a`` sits at position ``pos[a]``.
    """
    P = np.asarray(positions)
    return W[None, :, :] * np.sign(P[:, :, None] - P[:, None, :])


def _canonical_orders(F: int):
    """Orders with facet 0 first and ``sigma[1] < sigma[-1]``."""
    if F <= 2:
        yield tuple(range(F))
        return
    for rest in itertools.permutations(range(1, F)):
        if rest[0] < rest[-1]:
            yield (0,) + rest


def count_classes(F: int) -> int:
    return 1 if F <= 2 else math.factorial(F - 1) // 2


def _reverse_cyclic(sigma):
    """Reversed order rotated so its first entry is ``sigma[0]`` again."""
    return (sigma[0],) + tuple(reversed(sigma[1:]))


def _positions(orders: np.ndarray) -> np.ndarray:
    pos = np.empty_like(orders)
    rows = np.arange(orders.shape[0])[:, None]
    pos[rows, orders] = np.arange(orders.shape[1])[None, :]
    return pos


class _Best:
    """Running maximum with lexicographic tie-breaking on the order."""

    def __init__(self):
        self.value = -np.inf
        self.sigma = None
        self.beta = None

    def offer(self, value, sigma, beta):
        if self.sigma is None:
            self.value, self.sigma, self.beta = value, sigma, beta
            return
        tol = TIE_TOL * max(1.0, abs(self.value))
        if value > self.value + tol or (value >= self.value - tol and sigma < self.sigma):
            self.value, self.sigma, self.beta = value, sigma, beta

    def merge(self, other: "_Best"):
        if other.sigma is not None:
            self.offer(other.value, other.sigma, other.beta)


def _scan_orders(W, E, f, orders: np.ndarray, faces) -> _Best:
    """Best (order, beta) over a stack of orders, covering reversals too."""
    best = _Best()
    ex = qp.extremes_batch(order_matrix(W, _positions(orders)), E, f, faces=faces)
    top = np.max(np.maximum(ex.max_value, -ex.min_value))
    tol = TIE_TOL * max(1.0, abs(top))
    for k in np.flatnonzero(ex.max_value >= top - tol):
        best.offer(float(ex.max_value[k]), tuple(int(i) for i in orders[k]), ex.max_arg[k])
    for k in np.flatnonzero(-ex.min_value >= top - tol):
        sigma = _reverse_cyclic(tuple(int(i) for i in orders[k]))
        best.offer(float(-ex.min_value[k]), sigma, ex.min_arg[k])
    return best


def _scan_chunk(args):
    W, E, f, orders = args
    faces = qp.enumerate_faces(E, f)
    return _scan_orders(W, E, f, orders, faces)


def _chunks(F: int, size: int):
    it = _canonical_orders(F)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("EHZ_WORKERS", "1")))
    except ValueError:
        return 1


def _prepare(K: HPolytope):
    report = validate_polytope(K)
    center = report.chebyshev_center
    return translate(K, -center), center


def _finish(K0, center, best_value, sigma, beta, mode, examined, started, with_orbit, **diag):
    if not best_value > POSITIVE_TOL:
        raise NonpositiveMaximum(f"maximum {best_value!r} is not positive")
    F = K0.num_facets
    sigma = tuple(sigma) + tuple(i for i in range(F) if i not in sigma)
    beta = np.asarray(beta, dtype=float)
    obj = objective(K0.context, K0.normals, sigma, beta)
    cand = CandidateSolution(sigma, beta, obj)
    result = CapacityResult(
        capacity=0.5 / obj,
        best=cand,
        mode=mode,
        permutations_examined=examined,
        center=center,
        certified=mode != Mode.HEURISTIC,
        diagnostics={"seconds": time.perf_counter() - started, "num_facets": F, **diag},
    )
    if with_orbit:
        from .orbit import reconstruct

        try:
            result.orbit = reconstruct(K0, sigma, beta, origin=np.zeros(K0.dim)).shifted(center)
        except SolverError as exc:
            # a heuristic optimizer need not carry a closed characteristic
            if mode != Mode.HEURISTIC:
                raise
            result.diagnostics["orbit_error"] = str(exc)
    return result


def capacity(
    K: HPolytope,
    mode: Mode | str = Mode.EXACT,
    exact_limit: int = EXACT_LIMIT,
    workers: int | None = None,
    seed: int = 0,
    samples: int = 200,
    restarts: int = 10,
    with_orbit: bool = True,
) -> CapacityResult:
    """Capacity of K by the combinatorial formula.

    ``mode`` may also be ``"symmetric"`` or ``"pruned"`` to dispatch to the
    specialized searches.
    """
    mode = Mode(mode)
    if mode == Mode.SYMMETRIC:
        return capacity_symmetric(K, with_orbit=with_orbit)
    if mode == Mode.PRUNED:
        return capacity_pruned(K, with_orbit=with_orbit)
    if mode == Mode.HEURISTIC:
        return _capacity_heuristic(K, seed, samples, restarts, with_orbit)
    started = time.perf_counter()
    if exact_limit > MAX_EXACT_LIMIT:
        raise ValueError(f"exact limit must not exceed {MAX_EXACT_LIMIT}")
    K0, center = _prepare(K)
    F = K0.num_facets
    if F > exact_limit:
        raise ExactLimitExceeded(f"{F} facets exceed the exact limit {exact_limit}")
    M = build_M(K0)
    W = omega_matrix(K0.context, K0.normals)
    workers = workers or default_workers()
    best = _Best()
    if workers == 1:
        faces = qp.enumerate_faces(M.E, M.f)
        for orders in _chunks(F, CHUNK):
            best.merge(_scan_orders(W, M.E, M.f, orders, faces))
    else:
        jobs = ((W, M.E, M.f, orders) for orders in _chunks(F, CHUNK))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_scan_chunk, jobs):
                best.merge(part)
    return _finish(
        K0, center, best.value, best.sigma, best.beta, Mode.EXACT, count_classes(F), started,
        with_orbit, workers=workers,
    )


def _capacity_heuristic(K, seed, samples, restarts, with_orbit):
    """Random orders with local ascent; the capacity reported is an upper bound."""
    started = time.perf_counter()
    K0, center = _prepare(K)
    F = K0.num_facets
    M = build_M(K0)
    W = omega_matrix(K0.context, K0.normals)
    rng = np.random.default_rng(seed)
    best = _Best()
    for k in range(samples):
        order = np.concatenate([[0], 1 + rng.permutation(F - 1)])
        S = order_matrix(W, _positions(order[None]))[0]
        for sign, sigma in ((1.0, tuple(int(i) for i in order)), (-1.0, None)):
            sol = qp.maximize_heuristic(
                qp.QuadraticOverPolytope(sign * S, M.E, M.f), restarts=restarts, seed=seed + k
            )
            s = sigma if sign > 0 else _reverse_cyclic(tuple(int(i) for i in order))
            best.offer(sol.value, s, sol.argmax)
    return _finish(
        K0, center, best.value, best.sigma, best.beta, Mode.HEURISTIC, samples, started, with_orbit,
    )


# --------------------------------------------------------------------------
# centrally symmetric polytopes


def _symmetric_classes(k: int):
    """(order, signs) with facet 0 first, positive, and one per reversal pair."""
    if k == 1:
        yield (0,), (1,)
        return
    for rest in itertools.permutations(range(1, k)):
        for tail in itertools.product((1, -1), repeat=k - 1):
            if k == 2 and tail[0] < 0:
                continue
            if k > 2 and rest[0] > rest[-1]:
                continue
            yield (0,) + rest, (1,) + tail


def capacity_symmetric(K: HPolytope, with_orbit: bool = True) -> CapacityResult:
    """Capacity of a polytope with ``K = -K`` from half of its facets.

    Maximizes ``sum_{j<i} b_i b_j omega(a_i m_i, a_j m_j)`` over orders of the
    representative normals ``m``, signs ``a`` and ``b >= 0`` with
    ``sum b_i h_i = 1/2``; the capacity is ``1/4`` over the maximum.

    The constraint set is a simplex, so each face is a subset of the
    representatives, and the value on it depends only on the order and
    signs induced on that subset.  Every subset is therefore solved once per
    induced class, at the stationary point of its relative interior.
    """
    started = time.perf_counter()
    pairs = detect_central_symmetry(K)
    if pairs is None:
        raise NotCentrallySymmetric("polytope is not symmetric about the origin")
    validate_polytope(K)
    reps = [i for i, _ in pairs]
    partner = dict(pairs)
    partner.update({j: i for i, j in pairs})
    m = len(reps)
    hrep = K.heights[reps]
    W = omega_matrix(K.context, K.normals[reps])
    f = np.array([0.5])
    best = _Best()
    examined = 0
    for k in range(2, m + 1):
        for cols in itertools.combinations(range(m), k):
            cols = list(cols)
            face = qp.face_of(hrep[None, cols], f, ())
            Wc = W[np.ix_(cols, cols)]
            it = _symmetric_classes(k)
            while True:
                block = list(itertools.islice(it, CHUNK * 4))
                if not block:
                    break
                orders = np.array([b[0] for b in block], dtype=np.intp)
                signs = np.array([b[1] for b in block], dtype=float)
                # sign of each representative, indexed by local facet
                sgn = np.empty_like(signs)
                sgn[np.arange(len(block))[:, None], orders] = signs
                S = order_matrix(Wc, _positions(orders)) * sgn[:, :, None] * sgn[:, None, :]
                beta, ok = qp.face_candidates(face, S)
                vals = 0.5 * np.einsum("bf,bfg,bg->b", beta, S, beta)
                examined += len(block)
                vals = np.where(ok, vals, 0.0)
                top = float(np.max(np.abs(vals)))
                if top + TIE_TOL * max(1.0, top) < best.value:
                    continue
                for r in np.flatnonzero(np.abs(vals) >= top - TIE_TOL * max(1.0, top)):
                    b_half = np.zeros(m)
                    b_half[cols] = beta[r]
                    order = [cols[i] for i in orders[r]]
                    full_sigma, full_beta = _unfold(
                        order, signs[r], b_half, reps, partner, K.num_facets, vals[r] < 0
                    )
                    best.offer(float(abs(vals[r])), full_sigma, full_beta)
    if not best.value > POSITIVE_TOL:
        raise NonpositiveMaximum(f"maximum {best.value!r} is not positive")
    # full-loop objective is twice the half-loop value
    return _finish(
        K, np.zeros(K.dim), 2.0 * best.value, best.sigma, best.beta, Mode.SYMMETRIC, examined,
        started, with_orbit, symmetric_max=best.value,
    )


def _unfold(order, signs, beta_half, reps, partner, F, reverse):
    """Full facet order and coefficients for a half-loop (order, signs, b)."""
    seq = []
    for r, a in zip(order, signs):
        facet = reps[r] if a > 0 else partner[reps[r]]
        seq.append((facet, beta_half[r]))
    seq = seq + [(partner[fc], b) for fc, b in seq]
    if reverse:
        seq = seq[::-1]
    beta = np.zeros(F)
    for fc, b in seq:
        beta[fc] = b
    return _rotate_min_first([int(fc) for fc, _ in seq]), beta


# --------------------------------------------------------------------------
# transition graph


def facet_velocities(K: HPolytope) -> np.ndarray:
    """Rows ``p_i = (2 / h_i) J n_i``; requires the origin in the interior."""
    return 2.0 * apply_J(K.context, K.normals) / K.heights[:, None]


def build_transition_graph(K: HPolytope, eps: float = GRAPH_EPS) -> nx.DiGraph:
    """Edge i -> j when flowing along ``p_i`` from a point of facet i reaches facet j.

    The open condition ``c > 0`` is closed off as ``c >= eps``.
    """
    N, h = K.normals, K.heights
    F, d = N.shape
    P = facet_velocities(K)
    G = nx.DiGraph()
    G.add_nodes_from(range(F))
    for i in range(F):
        for j in range(F):
            if i == j:
                continue
            # variables (x, c): x in F_i, x + c p_i in F_j, c >= eps
            A_ub = np.vstack([
                np.hstack([N, np.zeros((F, 1))]),
                np.hstack([N, (N @ P[i])[:, None]]),
            ])
            b_ub = np.concatenate([h, h])
            A_eq = np.array([
                np.append(N[i], 0.0),
                np.append(N[j], N[j] @ P[i]),
            ])
            b_eq = np.array([h[i], h[j]])
            res = linprog(
                np.zeros(d + 1), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                bounds=[(None, None)] * d + [(eps, None)], method="highs",
            )
            if res.status == 0:
                G.add_edge(i, j)
    return G


def capacity_pruned(K: HPolytope, with_orbit: bool = True) -> CapacityResult:
    """Search only the simple cycles of the transition graph.

    Some maximizer is the coefficient vector of a simple closed
    characteristic: its support is the set of facets the orbit visits and the
    orbit's visiting order is a cycle of the graph.  Each cycle therefore only
    needs the stationary point in the relative interior of its own face of
    M(K) (all its coefficients free, every other coefficient zero).  Both
    orientations of each cycle are scored.
    """
    started = time.perf_counter()
    K0, center = _prepare(K)
    G = build_transition_graph(K0)
    W = omega_matrix(K0.context, K0.normals)
    E_full = np.vstack([K0.normals.T, K0.heights[None, :]])
    f = np.zeros(K0.dim + 1)
    f[-1] = 1.0
    groups: dict[tuple, list] = {}
    n_cycles = 0
    for cyc in nx.simple_cycles(G):
        if len(cyc) < 3:
            continue
        n_cycles += 1
        groups.setdefault(tuple(sorted(cyc)), []).append(tuple(cyc))
    F = K0.num_facets
    best = _Best()
    for cols, cycles in sorted(groups.items()):
        others = tuple(i for i in range(F) if i not in cols)
        face = qp.face_of(E_full, f, others)
        if face is None:
            continue
        orders = np.array(cycles, dtype=np.intp)
        pos = np.zeros((len(cycles), F), dtype=np.intp)
        np.put_along_axis(pos, orders, np.arange(len(cols))[None, :], axis=1)
        S = order_matrix(W, pos)
        beta, ok = qp.interior_candidates(face, S)
        vals = 0.5 * np.einsum("bf,bfg,bg->b", beta, S, beta)
        for k in np.flatnonzero(ok):
            seq = cycles[k] if vals[k] >= 0 else cycles[k][::-1]
            best.offer(abs(float(vals[k])), _rotate_min_first(seq), beta[k])
    return _finish(
        K0, center, best.value, best.sigma, best.beta, Mode.PRUNED, n_cycles, started, with_orbit,
        graph_edges=G.number_of_edges(), cycle_groups=len(groups),
    )


def _rotate_min_first(seq):
    k = seq.index(min(seq))
    return tuple(int(i) for i in seq[k:] + seq[:k])
