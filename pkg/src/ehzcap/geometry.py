"""Half-space polytopes in R^2n and the symplectic linear algebra around them.

Coordinates are ordered ``(x_1, ..., x_n, y_1, ..., y_n)`` and the complex
structure acts as ``J(x, y) = (-y, x)``, so ``omega(u, v) = <J u, v>`` and
``omega(e_1, e_{n+1}) = 1``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DegenerateCut,
    DimensionMismatch,
    DuplicateNormal,
    EmptyInterior,
    GenerationFailure,
    RedundantFacet,
    SingularMatrix,
    TooFewFacets,
    Unbounded,
    ValidationError,
)

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9
ANGLE_TOL = 1e-9
LP_TOL = 1e-10
NORM_TOL = 1e-12


@dataclass(frozen=True)
class SymplecticContext:
    half_dim: int

    def __post_init__(self):
        if int(self.half_dim) < 1:
            raise ValueError("half_dim must be a positive integer")

    @property
    def dim(self) -> int:
        return 2 * self.half_dim

    def J(self) -> np.ndarray:
        """Matrix of the complex structure."""
        n = self.half_dim
        J = np.zeros((2 * n, 2 * n))
        J[:n, n:] = -np.eye(n)
        J[n:, :n] = np.eye(n)
        return J


def _check_len(ctx: SymplecticContext, *vectors):
    for v in vectors:
        if np.shape(v)[-1] != ctx.dim:
            raise DimensionMismatch(f"expected length {ctx.dim}, got {np.shape(v)[-1]}")


def apply_J(ctx: SymplecticContext, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    _check_len(ctx, u)
    n = ctx.half_dim
    return np.concatenate([-u[..., n:], u[..., :n]], axis=-1)


def omega(ctx: SymplecticContext, u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_len(ctx, u, v)
    return float(np.dot(apply_J(ctx, u), v))


def omega_matrix(ctx: SymplecticContext, vectors) -> np.ndarray:
    """Pairwise ``W[a, b] = omega(v_a, v_b)`` for the rows of ``vectors``."""
    V = np.asarray(vectors, dtype=float)
    return apply_J(ctx, V) @ V.T


@dataclass(frozen=True, eq=False)
class HPolytope:
    """Polytope ``{x : <x, n_i> <= h_i}`` with unit outer normals.

    Non-unit normals are rescaled on construction, ``(n, h) -> (n/|n|, h/|n|)``.
    """

    context: SymplecticContext
    normals: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        N = np.array(self.normals, dtype=float, ndmin=2)
        h = np.array(self.heights, dtype=float).reshape(-1)
        if N.shape[1] != self.context.dim:
            raise DimensionMismatch(
                f"normals have length {N.shape[1]}, context dimension is {self.context.dim}"
            )
        if N.shape[0] != h.shape[0]:
            raise DimensionMismatch("number of normals and heights differ")
        norms = np.linalg.norm(N, axis=1)
        if np.any(norms < NORM_TOL):
            raise ValidationError("zero normal vector")
        N = N / norms[:, None]
        h = h / norms
        N.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "normals", N)
        object.__setattr__(self, "heights", h)

    @classmethod
    def from_arrays(cls, normals, heights) -> "HPolytope":
        normals = np.asarray(normals, dtype=float)
        return cls(SymplecticContext(normals.shape[1] // 2), normals, heights)

    @property
    def dim(self) -> int:
        return self.context.dim

    @property
    def num_facets(self) -> int:
        return self.normals.shape[0]

    def facets(self):
        return list(zip(self.normals, self.heights))

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.normals @ x <= self.heights + tol))

    def subset(self, indices) -> "HPolytope":
        idx = list(indices)
        return HPolytope(self.context, self.normals[idx], self.heights[idx])


@dataclass(frozen=True)
class Hyperplane:
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > NORM_TOL:
            raise ValueError("hyperplane normal must have unit length")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))


@dataclass
class ValidationReport:
    chebyshev_center: np.ndarray
    inradius: float
    num_facets: int
    warnings: list = field(default_factory=list)


# --------------------------------------------------------------------------
# linear programming


def _lp(c, A_ub, b_ub, A_eq=None, b_eq=None, bounds=None):
    """Minimize ``c @ x``; free variables unless ``bounds`` is given."""
    c = np.asarray(c, dtype=float)
    if bounds is None:
        bounds = [(None, None)] * c.shape[0]
    return linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": LP_TOL, "dual_feasibility_tolerance": LP_TOL},
    )


def support_value(K: HPolytope, y) -> float:
    """``h_K(y) = max <x, y>`` over K, by linear programming."""
    y = np.asarray(y, dtype=float)
    _check_len(K.context, y)
    res = _lp(-y, K.normals, K.heights)
    if res.status == 3:
        raise Unbounded(f"support function unbounded in direction {y.tolist()}")
    if res.status == 2:
        raise EmptyInterior("half-space system is infeasible")
    if res.status != 0:
        raise ValidationError(f"support LP failed: {res.message}")
    return float(-res.fun)


def chebyshev_center(K: HPolytope, radius_cap: float = 1e6):
    """Center and radius of the largest inscribed ball."""
    d = K.dim
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A = np.hstack([K.normals, np.ones((K.num_facets, 1))])
    bounds = [(None, None)] * d + [(0.0, radius_cap)]
    res = _lp(c, A, K.heights, bounds=bounds)
    if res.status == 2:
        raise EmptyInterior("half-space system is infeasible")
    if res.status != 0:
        raise ValidationError(f"Chebyshev LP failed: {res.message}")
    return res.x[:d], float(res.x[-1])


def _is_redundant(normals, heights, i) -> bool:
    mask = np.ones(len(heights), dtype=bool)
    mask[i] = False
    # cap the objective so the reduced LP stays bounded
    A = np.vstack([normals[mask], normals[i]])
    b = np.append(heights[mask], heights[i] + 1.0)
    res = _lp(-normals[i], A, b)
    if res.status != 0:
        return False
    return -res.fun <= heights[i] + FEAS_TOL


def redundant_facets(K: HPolytope) -> list[int]:
    return [i for i in range(K.num_facets) if _is_redundant(K.normals, K.heights, i)]


def _duplicate_pairs(K: HPolytope):
    G = K.normals @ K.normals.T
    pairs = []
    for i in range(K.num_facets):
        for j in range(i + 1, K.num_facets):
            # angle <= ANGLE_TOL  <=>  1 - cos <= ANGLE_TOL^2 / 2
            if 1.0 - G[i, j] <= 0.5 * ANGLE_TOL**2 + 1e-15:
                pairs.append((i, j))
    return pairs


def validate_polytope(K: HPolytope) -> ValidationReport:
    """Check boundedness, interior, duplicate normals and redundant facets.

    Raises the first problem found; returns the Chebyshev data otherwise.
    """
    d = K.dim
    if K.num_facets < d + 1:
        raise TooFewFacets(
            f"{K.num_facets} facets cannot bound a polytope in R^{d} (need at least {d + 1})"
        )
    pairs = _duplicate_pairs(K)
    if pairs:
        raise DuplicateNormal(*pairs[0])
    for k in range(d):
        for s in (1.0, -1.0):
            e = np.zeros(d)
            e[k] = s
            support_value(K, e)
    center, radius = chebyshev_center(K)
    if radius <= FEAS_TOL:
        raise EmptyInterior(f"inradius {radius:.3e} is not positive")
    for i in range(K.num_facets):
        if _is_redundant(K.normals, K.heights, i):
            raise RedundantFacet(i)
    return ValidationReport(chebyshev_center=center, inradius=radius, num_facets=K.num_facets)


def remove_redundant(K: HPolytope) -> HPolytope:
    """Drop duplicate normals (keeping the tighter height) and redundant facets."""
    keep = list(range(K.num_facets))
    for i, j in _duplicate_pairs(K):
        if i in keep and j in keep:
            keep.remove(j if K.heights[j] >= K.heights[i] else i)
    N, h = K.normals[keep], K.heights[keep]
    i = 0
    # remove one at a time: two facets can each look redundant only together
    while i < len(h):
        if _is_redundant(N, h, i):
            N = np.delete(N, i, axis=0)
            h = np.delete(h, i)
        else:
            i += 1
    return HPolytope(K.context, N, h)


# --------------------------------------------------------------------------
# transformations


def translate(K: HPolytope, v) -> HPolytope:
    v = np.asarray(v, dtype=float)
    _check_len(K.context, v)
    return HPolytope(K.context, K.normals, K.heights + K.normals @ v)


def scale(K: HPolytope, lam: float) -> HPolytope:
    if lam <= 0:
        raise ValueError("scale factor must be positive")
    return HPolytope(K.context, K.normals, lam * K.heights)


def apply_linear(K: HPolytope, A) -> HPolytope:
    """H-representation of ``A K``: normals ``A^{-T} n`` renormalized."""
    A = np.asarray(A, dtype=float)
    if A.shape != (K.dim, K.dim):
        raise DimensionMismatch("matrix shape does not match polytope dimension")
    try:
        AinvT = np.linalg.inv(A).T
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("matrix is singular") from exc
    if not np.all(np.isfinite(AinvT)) or np.linalg.cond(A) > 1e14:
        raise SingularMatrix("matrix is numerically singular")
    N = K.normals @ AinvT.T
    s = np.linalg.norm(N, axis=1)
    return HPolytope(K.context, N / s[:, None], K.heights / s)


def cut(K: HPolytope, H: Hyperplane):
    """Split K by ``<x, n> = c`` into ``K1 = K ∩ {>= c}`` and ``K2 = K ∩ {<= c}``.

    Both pieces are translated by ``-c n`` so the origin lies on the cutting
    hyperplane; the new facet then has height 0 (normal ``-n`` in K1, ``+n``
    in K2).
    """
    n, c = H.normal, H.offset
    _check_len(K.context, n)
    pieces = []
    for sign in (-1.0, 1.0):
        P = HPolytope(
            K.context,
            np.vstack([K.normals, sign * n]),
            np.append(K.heights, sign * c),
        )
        try:
            _, r = chebyshev_center(P)
        except EmptyInterior:
            r = 0.0
        if r <= FEAS_TOL:
            raise DegenerateCut("hyperplane does not split the interior of K")
        P = remove_redundant(P)
        pieces.append(translate(P, -c * n))
    return pieces[0], pieces[1]


# --------------------------------------------------------------------------
# symplectic matrices


def is_symplectic(A, tol: float = 1e-9) -> bool:
    A = np.asarray(A, dtype=float)
    J = SymplecticContext(A.shape[0] // 2).J()
    return bool(np.allclose(A.T @ J @ A, J, atol=tol))


def random_symplectic(n: int, rng: np.random.Generator, factors: int = 3) -> np.ndarray:
    """Product of symplectic shears and unitary rotations, entries bounded by 2."""
    d = 2 * n
    A = np.eye(d)
    for _ in range(factors):
        kind = rng.integers(3)
        M = np.eye(d)
        if kind < 2:
            S = rng.uniform(-1.0, 1.0, size=(n, n))
            S = 0.5 * (S + S.T)
            S *= min(1.0, 2.0 / max(np.abs(S).max(), 1e-12))
            if kind == 0:
                M[:n, n:] = S
            else:
                M[n:, :n] = S
        else:
            Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            U, _ = np.linalg.qr(Z)
            M[:n, :n] = U.real
            M[:n, n:] = -U.imag
            M[n:, :n] = U.imag
            M[n:, n:] = U.real
        A = M @ A
        # keep conditioning mild
        if np.abs(A).max() > 2.0:
            A = M
    return A


# --------------------------------------------------------------------------
# generators


def make_cube(n: int, r: float = 1.0) -> HPolytope:
    d = 2 * n
    I = np.eye(d)
    return HPolytope(SymplecticContext(n), np.vstack([I, -I]), np.full(2 * d, float(r)))


def make_cross_polytope(n: int, r: float = 1.0) -> HPolytope:
    d = 2 * n
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=d)))
    # order as (s, ..., -s, ...) so opposite facets are F/2 apart
    half = signs[signs[:, 0] > 0]
    S = np.vstack([half, -half])
    return HPolytope(SymplecticContext(n), S / np.sqrt(d), np.full(len(S), r / np.sqrt(d)))


def make_simplex(n: int) -> HPolytope:
    d = 2 * n
    N = np.vstack([-np.eye(d), np.ones(d) / np.sqrt(d)])
    h = np.append(np.zeros(d), 1.0 / np.sqrt(d))
    return HPolytope(SymplecticContext(n), N, h)


def make_random_polytope(n: int, F: int, seed: int, max_tries: int = 200) -> HPolytope:
    """Polytope with exactly F facets tangent to the unit sphere.

    The F tangent points are drawn uniformly on the sphere; the result is the
    polar of their convex hull, so every facet is genuine.
    """
    d = 2 * n
    if F < d + 1:
        raise TooFewFacets(f"need at least {d + 1} facets in R^{d}")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        U = rng.normal(size=(F, d))
        U /= np.linalg.norm(U, axis=1)[:, None]
        K = HPolytope(SymplecticContext(n), U, np.ones(F))
        try:
            validate_polytope(K)
        except ValidationError:
            continue
        return K
    raise GenerationFailure(f"no valid random polytope after {max_tries} draws")


def make_box(lo, hi) -> HPolytope:
    """Axis-parallel box ``prod [lo_k, hi_k]``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = lo.shape[0]
    I = np.eye(d)
    return HPolytope(SymplecticContext(d // 2), np.vstack([I, -I]), np.concatenate([hi, -lo]))


def detect_central_symmetry(K: HPolytope, tol: float = 1e-9):
    """Pairs ``(i, j)`` with ``n_j = -n_i`` and ``h_j = h_i``, or None.

    The first index of each pair is the representative; there are F/2 pairs.
    """
    F = K.num_facets
    if F % 2:
        return None
    partner = [-1] * F
    for i in range(F):
        for j in range(F):
            if (
                j != i
                and np.max(np.abs(K.normals[i] + K.normals[j])) <= tol
                and abs(K.heights[i] - K.heights[j]) <= tol
            ):
                partner[i] = j
                break
        if partner[i] < 0:
            return None
    pairs = []
    seen = set()
    for i in range(F):
        if i not in seen:
            pairs.append((i, partner[i]))
            seen.update((i, partner[i]))
    return pairs
