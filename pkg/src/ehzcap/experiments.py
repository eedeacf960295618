"""Subadditivity of the capacity under hyperplane cuts."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import capacity
from .errors import DegenerateCut
from .geometry import HPolytope, Hyperplane, chebyshev_center, cut

logger = logging.getLogger(__name__)

CUT_TOL = 1e-9


@dataclass
class CutRow:
    index: int
    c_K: float
    c_K1: float
    c_K2: float
    facets: tuple  # facet counts of K1 and K2

    @property
    def slack(self) -> float:
        return self.c_K1 + self.c_K2 - self.c_K

    def holds(self, tol: float = CUT_TOL) -> bool:
        return self.slack >= -tol * self.c_K


def random_center_cuts(K: HPolytope, count: int, seed: int = 0, jitter: float = 0.5) -> list[Hyperplane]:
    """Hyperplanes with uniform random normals passing near the Chebyshev center.

    The offset is moved off the center by at most ``jitter`` times the
    inradius, so every cut splits the interior.
    """
    rng = np.random.default_rng(seed)
    center, radius = chebyshev_center(K)
    cuts = []
    for _ in range(count):
        n = rng.normal(size=K.dim)
        n /= np.linalg.norm(n)
        shift = jitter * radius * rng.uniform(-1.0, 1.0)
        cuts.append(Hyperplane(n, float(n @ center + shift)))
    return cuts


def cut_check(K: HPolytope, cuts, mode: str = "exact", **capacity_opts) -> list[CutRow]:
    """``c(K)``, ``c(K1)`` and ``c(K2)`` for each cut; degenerate cuts are skipped."""
    c_K = capacity(K, mode=mode, with_orbit=False, **capacity_opts).capacity
    rows = []
    for k, H in enumerate(cuts):
        try:
            K1, K2 = cut(K, H)
        except DegenerateCut as exc:
            logger.warning("cut %d skipped: %s", k, exc)
            continue
        c1 = capacity(K1, mode=mode, with_orbit=False, **capacity_opts).capacity
        c2 = capacity(K2, mode=mode, with_orbit=False, **capacity_opts).capacity
        rows.append(CutRow(k, c_K, c1, c2, (K1.num_facets, K2.num_facets)))
    return rows


def format_table(rows, tol: float = CUT_TOL) -> str:
    lines = [f"{'cut':>4} {'c(K)':>20} {'c(K1)':>20} {'c(K2)':>20} {'slack':>20} {'F1':>3} {'F2':>3}  ok"]
    for r in rows:
        lines.append(
            f"{r.index:>4} {r.c_K:>20.12g} {r.c_K1:>20.12g} {r.c_K2:>20.12g} {r.slack:>20.12g}"
            f" {r.facets[0]:>3} {r.facets[1]:>3}  {'yes' if r.holds(tol) else 'NO'}"
        )
    return "\n".join(lines) + "\n"
