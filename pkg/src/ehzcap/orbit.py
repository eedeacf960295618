"""Closed characteristics rebuilt from an optimal (order, coefficients) pair.

The loop visits the facets in the support of ``beta`` once each, spending
time ``T_i = beta_i h_i`` on facet i and moving with velocity ``d p_i``,
``p_i = (2/h_i) J n_i``.  The order that maximizes the objective under the
``omega(u, v) = <Ju, v>`` convention is the reverse of the order in which
the Hamiltonian flow ``J n`` traverses the facets, so the loop walks the
order backwards.  The start point and ``d`` are fitted by least squares to
the conditions that each segment starts on its facet.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog

from .errors import NegativeSpeedScale, ResidualTooLarge, SolverError
from .geometry import HPolytope, SymplecticContext, apply_J, omega_matrix

CLOSURE_TOL = 1e-8
BOUNDARY_TOL = 1e-6
INSIDE_TOL = 1e-7
CONE_TOL = 1e-8
ACTION_TOL = 1e-8
SUPPORT_TOL = 1e-10


class DegenerateSupport(SolverError):
    pass


@dataclass
class PiecewiseAffineLoop:
    start: np.ndarray
    velocities: np.ndarray  # (m, 2n)
    durations: np.ndarray  # (m,)

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        self.durations = np.asarray(self.durations, dtype=float).reshape(-1)
        keep = self.durations > 0
        self.velocities = self.velocities[keep]
        self.durations = self.durations[keep]

    @property
    def segments(self):
        return list(zip(self.velocities, self.durations))

    def breakpoints(self) -> np.ndarray:
        """Points at the segment boundaries, first and last included."""
        steps = self.durations[:, None] * self.velocities
        return self.start + np.vstack([np.zeros(len(self.start)), np.cumsum(steps, axis=0)])

    def closure_error(self) -> float:
        return float(np.linalg.norm(self.durations @ self.velocities))

    def scaled(self, lam: float) -> "PiecewiseAffineLoop":
        return PiecewiseAffineLoop(lam * self.start, lam * self.velocities, self.durations)

    def translated(self, v) -> "PiecewiseAffineLoop":
        return PiecewiseAffineLoop(self.start + np.asarray(v), self.velocities, self.durations)


@dataclass
class OrbitCertificate:
    loop: PiecewiseAffineLoop
    action: float
    boundary_residual: float
    cone_residual: float
    facet_visit_counts: np.ndarray
    speed_scale: float
    facets: tuple = ()
    # point used as origin of the gauge function; velocities are d (2/h_i) J n_i
    # with heights measured from here
    origin: np.ndarray = field(default=None)

    def shifted(self, v) -> "OrbitCertificate":
        v = np.asarray(v, dtype=float)
        origin = np.zeros_like(v) if self.origin is None else self.origin
        return replace(self, loop=self.loop.translated(v), origin=origin + v)


def action(ctx: SymplecticContext, loop: PiecewiseAffineLoop) -> float:
    """``1/2 * integral <J g, g'>`` of a closed piecewise affine loop.

    Expands to ``1/2 * sum_{j<i} T_i T_j omega(w_j, w_i)``; the start point
    drops out because the loop is closed.
    """
    tw = loop.durations[:, None] * loop.velocities
    W = omega_matrix(ctx, tw)
    return 0.5 * float(np.sum(np.triu(W, k=1)))


def action_quadrature(ctx: SymplecticContext, loop: PiecewiseAffineLoop) -> float:
    """Same quantity by the trapezoid rule on every segment (exact for affine pieces)."""
    pts = loop.breakpoints()
    total = 0.0
    for k, (w, T) in enumerate(loop.segments):
        a = np.dot(apply_J(ctx, pts[k]), w)
        b = np.dot(apply_J(ctx, pts[k + 1]), w)
        total += 0.5 * T * (a + b)
    return 0.5 * total


def reconstruct(K: HPolytope, sigma, beta, origin=None) -> OrbitCertificate:
    """Closed characteristic for the optimizer ``(sigma, beta)`` of K.

    ``origin`` is the interior point the heights are measured from (default:
    the coordinate origin, which must then be interior).
    """
    ctx = K.context
    origin = np.zeros(K.dim) if origin is None else np.asarray(origin, dtype=float)
    h = K.heights - K.normals @ origin
    if np.any(h <= 0):
        raise SolverError("origin is not in the interior of K")
    beta = np.asarray(beta, dtype=float)
    cutoff = SUPPORT_TOL * max(beta.max(), 1e-300)
    flow_order = [int(i) for i in reversed(list(sigma)) if beta[i] > cutoff]
    if len(flow_order) < 3:
        raise DegenerateSupport("fewer than three facets carry weight; no closed loop")
    N = K.normals[flow_order]
    hh = h[flow_order]
    T = beta[flow_order] * hh
    P = 2.0 * apply_J(ctx, N) / hh[:, None]
    # displacement at the start of each segment, per unit speed scale
    D = np.vstack([np.zeros(K.dim), np.cumsum(T[:, None] * P, axis=0)[:-1]])
    A = np.hstack([N, np.einsum("kd,kd->k", D, N)[:, None]])
    x, *_ = np.linalg.lstsq(A, hh, rcond=None)
    s, d = x[:-1], float(x[-1])
    resid = float(np.max(np.abs(A @ x - hh)))
    if d <= 0:
        raise NegativeSpeedScale(f"fitted speed scale {d:.3e} is not positive")
    if resid > BOUNDARY_TOL:
        raise ResidualTooLarge(f"boundary residual {resid:.3e}")
    if _outside(K, origin, s, d, D, T, P) > INSIDE_TOL:
        s = _inside_start(K, origin, d, D, N, hh, T, P)
        resid = float(np.max(np.abs(N @ s + d * np.einsum("kd,kd->k", D, N) - hh)))
    loop = PiecewiseAffineLoop(s, d * P, T)
    counts = np.zeros(K.num_facets, dtype=int)
    for i in flow_order:
        counts[i] += 1
    cert = OrbitCertificate(
        loop=loop,
        action=action(ctx, loop),
        boundary_residual=resid,
        cone_residual=0.0,
        facet_visit_counts=counts,
        speed_scale=d,
        facets=tuple(flow_order),
        origin=np.zeros(K.dim),
    )
    # loop coordinates are relative to origin; move back
    cert = cert.shifted(origin)
    _, cert.cone_residual, bnd = _cone_report(K, cert)
    cert.boundary_residual = max(resid, bnd)
    return cert


def _outside(K, origin, s, d, D, T, P) -> float:
    pts = s + d * np.vstack([D, D[-1] + T[-1] * P[-1]])
    h = K.heights - K.normals @ origin
    return float(np.max(pts @ K.normals.T - h))


def _inside_start(K, origin, d, D, N, hh, T, P):
    """Start point keeping every breakpoint in K, with d held fixed."""
    h = K.heights - K.normals @ origin
    pts = d * np.vstack([D, D[-1] + T[-1] * P[-1]])
    A_ub = np.vstack([K.normals] * len(pts))
    b_ub = np.concatenate([h - K.normals @ p for p in pts])
    A_eq = N
    b_eq = hh - d * np.einsum("kd,kd->k", D, N)
    res = linprog(
        np.zeros(K.dim), A_ub=A_ub, b_ub=b_ub + INSIDE_TOL, A_eq=A_eq, b_eq=b_eq,
        bounds=[(None, None)] * K.dim, method="highs",
    )
    if res.status != 0:
        raise ResidualTooLarge("no start point keeps the loop inside K")
    return res.x


def _cone_report(K: HPolytope, cert: OrbitCertificate):
    """Per-segment facet assignment, cone residual and boundary residual.

    Each segment is matched to the facet whose ``d (2/h) J n`` is closest to
    its velocity; the boundary residual measures how far the segment's
    endpoints are from that facet's hyperplane (or outside K).
    """
    ctx = K.context
    origin = np.zeros(K.dim) if cert.origin is None else cert.origin
    h0 = K.heights - K.normals @ origin
    with np.errstate(divide="ignore", invalid="ignore"):
        ideal = cert.speed_scale * 2.0 * apply_J(ctx, K.normals) / h0[:, None]
    pts = cert.loop.breakpoints()
    assigned, cone, bnd = [], 0.0, 0.0
    for k, (w, _) in enumerate(cert.loop.segments):
        dev = np.linalg.norm(ideal - w, axis=1) / max(np.linalg.norm(w), 1e-300)
        dev = np.where(h0 > 0, dev, np.inf)
        i = int(np.argmin(dev))
        assigned.append(i)
        cone = max(cone, float(dev[i]))
        for p in (pts[k], pts[k + 1]):
            bnd = max(bnd, abs(float(p @ K.normals[i] - K.heights[i])))
    outside = float(np.max(pts @ K.normals.T - K.heights))
    return assigned, cone, max(bnd, outside)


@dataclass
class VerificationReport:
    closure: float
    boundary_residual: float
    cone_residual: float
    visit_counts: np.ndarray
    action_error: float
    capacity_error: float | None
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def verify(K: HPolytope, cert: OrbitCertificate, capacity: float | None = None) -> VerificationReport:
    """Check closure, boundary incidence, the cone condition, simplicity and action."""
    failures = []
    closure = cert.loop.closure_error()
    if closure > CLOSURE_TOL:
        failures.append(f"closure {closure:.3e} > {CLOSURE_TOL:g}")
    assigned, cone, bnd = _cone_report(K, cert)
    if bnd > BOUNDARY_TOL:
        failures.append(f"boundary residual {bnd:.3e} > {BOUNDARY_TOL:g}")
    if cone > CONE_TOL:
        failures.append(f"cone residual {cone:.3e} > {CONE_TOL:g}")
    counts = np.zeros(K.num_facets, dtype=int)
    prev = None
    for i in assigned:
        if i != prev:
            counts[i] += 1
        prev = i
    if len(assigned) > 1 and assigned[0] == assigned[-1]:
        counts[assigned[0]] -= 1
    if np.any(counts > 1):
        failures.append(f"facets visited more than once: {np.flatnonzero(counts > 1).tolist()}")
    recomputed = action(K.context, cert.loop)
    act_err = abs(recomputed - cert.action)
    if act_err > ACTION_TOL * max(1.0, abs(recomputed)):
        failures.append(f"stored action differs from loop action by {act_err:.3e}")
    cap_err = None
    if capacity is not None:
        cap_err = max(abs(recomputed - capacity), abs(cert.action - capacity))
        if cap_err > ACTION_TOL * max(1.0, capacity):
            failures.append(f"action {cert.action:.12g} differs from capacity {capacity:.12g}")
    return VerificationReport(closure, bnd, cone, counts, act_err, cap_err, failures)
