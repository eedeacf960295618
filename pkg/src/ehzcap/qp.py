"""Global maximization of an indefinite quadratic form over a compact polytope.

The feasible set is ``P = {b : E b = f, b >= 0}`` and the objective is
``0.5 * b @ S @ b``.  The exact solver enumerates every face of P (one per
set of coordinates pinned to zero), solves the stationarity system of the
quadratic restricted to the affine hull of the face, and keeps feasible
candidates.  The global maximizer lies in the relative interior of some face,
where it is either a vertex or a stationary point, so the enumeration is
complete.  Stationary points do not depend on the sign of S, which lets one
pass return both the maximum and the minimum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from .errors import ExactLimitExceeded, InfeasiblePolytope

FEAS_TOL = 1e-9
STATIONARY_TOL = 1e-8
RANK_TOL = 1e-10
EXACT_LIMIT = 16


class QPStatus(str, Enum):
    EXACT = "Exact"
    HEURISTIC = "HeuristicLowerBound"


@dataclass(frozen=True, eq=False)
class QuadraticOverPolytope:
    S: np.ndarray
    E: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        E = np.atleast_2d(np.asarray(self.E, dtype=float))
        f = np.asarray(self.f, dtype=float).reshape(-1)
        if S.shape[0] != S.shape[1] or S.shape[0] != E.shape[1] or E.shape[0] != f.shape[0]:
            raise ValueError("inconsistent shapes for S, E, f")
        if not np.allclose(S, S.T, atol=1e-12):
            raise ValueError("S must be symmetric")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "f", f)

    @property
    def size(self) -> int:
        return self.S.shape[0]

    def value(self, beta) -> float:
        beta = np.asarray(beta, dtype=float)
        return 0.5 * float(beta @ self.S @ beta)

    def is_feasible(self, beta, tol: float = FEAS_TOL) -> bool:
        beta = np.asarray(beta, dtype=float)
        return bool(np.all(beta >= -tol) and np.allclose(self.E @ beta, self.f, atol=tol))


@dataclass
class QPSolution:
    value: float
    argmax: np.ndarray
    active_set: tuple
    status: QPStatus


@dataclass(frozen=True)
class Face:
    """Affine hull of the face where ``active`` coordinates vanish."""

    active: tuple
    free: tuple
    base: np.ndarray  # particular solution, zero on ``active``
    basis: np.ndarray  # (F, r) null-space directions, zero on ``active``


def face_of(E, f, active) -> Face | None:
    """Face with the given active set, or None if its affine hull is empty."""
    E = np.atleast_2d(np.asarray(E, dtype=float))
    f = np.asarray(f, dtype=float).reshape(-1)
    F = E.shape[1]
    active = tuple(sorted(active))
    free = tuple(i for i in range(F) if i not in active)
    if not free:
        return None
    scale = max(1.0, np.abs(E).max(), np.abs(f).max())
    Ef = E[:, free]
    U, s, Vt = np.linalg.svd(Ef)
    rank = int(np.sum(s > RANK_TOL * scale))
    x = Vt[:rank].T @ ((U[:, :rank].T @ f) / s[:rank])
    if np.linalg.norm(Ef @ x - f) > STATIONARY_TOL * scale:
        return None
    base = np.zeros(F)
    base[list(free)] = x
    basis = np.zeros((F, len(free) - rank))
    basis[list(free), :] = Vt[rank:].T
    return Face(active, free, base, basis)


def enumerate_faces(E, f) -> list[Face]:
    """All faces of ``{E b = f, b >= 0}`` whose affine hull is consistent.

    Faces come in lexicographic order of their active sets.
    """
    F = np.atleast_2d(np.asarray(E)).shape[1]
    faces = []
    for k in range(F + 1):
        for active in itertools.combinations(range(F), k):
            face = face_of(E, f, active)
            if face is not None:
                faces.append(face)
    faces.sort(key=lambda fc: fc.active)
    return faces


def face_candidates(face: Face, S: np.ndarray):
    """Stationary candidate on one face for a stack of Hessians ``S``.

    Returns ``(beta, ok)`` with beta of shape (B, F) and a boolean mask of
    candidates that are consistent and feasible.
    """
    B, F, _ = S.shape
    N = face.basis
    r = N.shape[1]
    base = face.base
    if r == 0:
        beta = np.broadcast_to(base, (B, F)).copy()
        ok = np.full(B, bool(np.all(base >= -FEAS_TOL)))
    else:
        SN = S @ N  # (B, F, r)
        H = np.einsum("fr,bfs->brs", N, SN)
        g = np.einsum("bfr,f->br", SN, base)
        t = _solve_stationary(H, -g)
        resid = np.linalg.norm(np.einsum("brs,bs->br", H, t) + g, axis=1)
        gscale = np.maximum(1.0, np.linalg.norm(g, axis=1))
        beta = base[None, :] + t @ N.T
        ok = (resid <= STATIONARY_TOL * gscale) & np.all(beta >= -FEAS_TOL, axis=1)
    np.clip(beta, 0.0, None, out=beta)
    return beta, ok


def interior_candidates(face: Face, S: np.ndarray):
    """Like ``face_candidates`` but searches the whole stationary set.

    When the reduced Hessian is singular the stationary points form an affine
    set on which the quadratic is constant; the least-norm point may be
    infeasible while another point of the set is feasible.  An LP finds one
    in that case.
    """
    beta, ok = face_candidates(face, S)
    N = face.basis
    r = N.shape[1]
    if r == 0 or np.all(ok):
        return beta, ok
    for b in np.flatnonzero(~ok):
        SN = S[b] @ N
        H = N.T @ SN
        g = SN.T @ face.base
        w = np.linalg.eigvalsh(H)
        if np.min(np.abs(w)) > 1e-9 * max(1.0, np.abs(w).max()):
            continue
        free = list(face.free)
        res = linprog(
            np.zeros(r), A_ub=-N[free], b_ub=face.base[free], A_eq=H, b_eq=-g,
            bounds=[(None, None)] * r, method="highs",
        )
        if res.status != 0:
            continue
        cand = face.base + N @ res.x
        gscale = max(1.0, float(np.linalg.norm(g)))
        if np.linalg.norm(H @ res.x + g) <= STATIONARY_TOL * gscale and np.all(cand >= -FEAS_TOL):
            beta[b] = np.clip(cand, 0.0, None)
            ok[b] = True
    return beta, ok


def _solve_stationary(H, rhs):
    """Least-squares solve of a batch of symmetric systems ``H t = rhs``."""
    r = H.shape[-1]
    try:
        cond_ok = np.abs(np.linalg.det(H)) > 1e-10 * np.maximum(1.0, np.abs(H).max(axis=(1, 2))) ** r
    except np.linalg.LinAlgError:
        cond_ok = np.zeros(H.shape[0], dtype=bool)
    t = np.empty(rhs.shape)
    if np.any(cond_ok):
        t[cond_ok] = np.linalg.solve(H[cond_ok], rhs[cond_ok][..., None])[..., 0]
    bad = ~cond_ok
    if np.any(bad):
        w, V = np.linalg.eigh(H[bad])
        wmax = np.maximum(np.abs(w).max(axis=1, keepdims=True), 1e-300)
        inv = np.where(np.abs(w) > 1e-12 * np.maximum(wmax, 1.0), 1.0 / np.where(w == 0, 1.0, w), 0.0)
        coef = np.einsum("brs,br->bs", V, rhs[bad]) * inv
        t[bad] = np.einsum("brs,bs->br", V, coef)
    return t


@dataclass
class BatchExtremes:
    max_value: np.ndarray
    max_arg: np.ndarray
    max_active: list
    min_value: np.ndarray
    min_arg: np.ndarray
    min_active: list


def extremes_batch(S, E, f, faces=None, tie_tol: float = 1e-13) -> BatchExtremes:
    """Exact max and min of ``0.5 b S_k b`` over a shared polytope, for each k.

    ``S`` has shape (B, F, F).  Ties keep the lexicographically smallest
    active set.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim == 2:
        S = S[None]
    B, F, _ = S.shape
    if faces is None:
        faces = enumerate_faces(E, f)
    best_max = np.full(B, -np.inf)
    best_min = np.full(B, np.inf)
    arg_max = np.zeros((B, F))
    arg_min = np.zeros((B, F))
    act_max = np.full(B, -1)
    act_min = np.full(B, -1)
    found = np.zeros(B, dtype=bool)
    for k, face in enumerate(faces):
        beta, ok = face_candidates(face, S)
        if not np.any(ok):
            continue
        found |= ok
        vals = 0.5 * np.einsum("bf,bfg,bg->b", beta, S, beta)
        up = ok & (vals > best_max + tie_tol)
        if np.any(up):
            best_max[up] = vals[up]
            arg_max[up] = beta[up]
            act_max[up] = k
        down = ok & (vals < best_min - tie_tol)
        if np.any(down):
            best_min[down] = vals[down]
            arg_min[down] = beta[down]
            act_min[down] = k
    if not np.all(found):
        raise InfeasiblePolytope("constraint polytope is empty")
    return BatchExtremes(
        best_max,
        arg_max,
        [faces[k].active for k in act_max],
        best_min,
        arg_min,
        [faces[k].active for k in act_min],
    )


def _check_feasible(E, f):
    F = E.shape[1]
    res = linprog(np.zeros(F), A_eq=E, b_eq=f, bounds=[(0, None)] * F, method="highs")
    if res.status != 0:
        raise InfeasiblePolytope("constraint polytope is empty")


def maximize_exact(q: QuadraticOverPolytope, exact_limit: int = EXACT_LIMIT) -> QPSolution:
    if q.size > exact_limit:
        raise ExactLimitExceeded(f"{q.size} variables exceed the exact limit {exact_limit}")
    _check_feasible(q.E, q.f)
    ex = extremes_batch(q.S[None], q.E, q.f)
    beta = ex.max_arg[0]
    return QPSolution(q.value(beta), beta, ex.max_active[0], QPStatus.EXACT)


# --------------------------------------------------------------------------
# heuristic


def _vertex_oracle(c, E, f):
    """Vertex of P maximizing ``c @ b``."""
    F = E.shape[1]
    res = linprog(-np.asarray(c), A_eq=E, b_eq=f, bounds=[(0, None)] * F, method="highs-ds")
    if res.status != 0:
        raise InfeasiblePolytope("constraint polytope is empty")
    return res.x


def _polish(q: QuadraticOverPolytope, beta):
    """Jump to the stationary point of the face supporting ``beta``, if feasible."""
    active = tuple(int(i) for i in np.flatnonzero(beta <= 1e-12))
    if len(active) == q.size:
        return beta
    face = face_of(q.E, q.f, active)
    if face is None:
        return beta
    cand, ok = face_candidates(face, q.S[None])
    if ok[0] and q.value(cand[0]) > q.value(beta):
        return cand[0]
    return beta


def _frank_wolfe(q: QuadraticOverPolytope, start, max_iter: int, tol: float):
    """Away-step Frank-Wolfe ascent with exact line search."""
    S, E, f = q.S, q.E, q.f
    atoms = [start]
    weights = [1.0]
    beta = start.copy()
    for _ in range(max_iter):
        g = S @ beta
        s = _vertex_oracle(g, E, f)
        d_fw = s - beta
        gap = g @ d_fw
        scores = [g @ a for a in atoms]
        ia = int(np.argmin(scores))
        d_aw = beta - atoms[ia]
        if gap <= tol and g @ d_aw <= tol:
            break
        if gap >= g @ d_aw:
            d, gmax, away = d_fw, 1.0, False
        else:
            wa = weights[ia]
            d, gmax, away = d_aw, wa / (1.0 - wa) if wa < 1.0 else 1e12, True
        slope = g @ d
        curv = d @ S @ d
        if curv < 0:
            step = min(gmax, -slope / curv)
        else:
            step = gmax
        if step <= 0:
            break
        beta = beta + step * d
        if away:
            weights = [w * (1 + step) for w in weights]
            weights[ia] -= step
        else:
            weights = [w * (1 - step) for w in weights]
            for k, a in enumerate(atoms):
                if np.allclose(a, s, atol=1e-12):
                    weights[k] += step
                    break
            else:
                atoms.append(s)
                weights.append(step)
        keep = [k for k, w in enumerate(weights) if w > 1e-14]
        atoms = [atoms[k] for k in keep]
        weights = [weights[k] for k in keep]
    return np.clip(beta, 0.0, None)


def maximize_heuristic(
    q: QuadraticOverPolytope, restarts: int = 20, seed: int = 0, max_iter: int = 200
) -> QPSolution:
    """Multi-start local ascent; a certified lower bound on the maximum."""
    rng = np.random.default_rng(seed)
    _check_feasible(q.E, q.f)
    best_beta, best_val = None, -np.inf
    for _ in range(max(1, restarts)):
        start = _vertex_oracle(rng.normal(size=q.size), q.E, q.f)
        beta = _frank_wolfe(q, start, max_iter, tol=1e-13)
        beta = _polish(q, beta)
        val = q.value(beta)
        if val > best_val:
            best_val, best_beta = val, beta
    active = tuple(int(i) for i in np.flatnonzero(best_beta <= 1e-12))
    return QPSolution(best_val, best_beta, active, QPStatus.HEURISTIC)
