"""Gauss rules and the nested driver for horizon-restricted double integrals.

Integrals of the form

    I_i = int_{K_i} F(x, sum_j int_{K_j ∩ B_delta(x)} G(x, y) dy) dx

are computed with Gauss-Legendre rules on both levels.  Two structural
refinements make this accurate for every delta/h ratio:

* The map x -> K_j ∩ B_delta(x) changes its description at the points
  a_j -+ delta, b_j -+ delta.  The outer rule is applied per smooth piece of
  K_i (the pieces are delimited by those crossings), never across one.  For
  delta much smaller than h the nonlocal operator content concentrates in
  O(delta)-wide windows at the element ends; a single whole-element rule
  cannot see them.
* Any inner interval that contains the outer point x_p strictly inside is
  split at x_p, so kernels that are merely continuous (or signed) across
  y = x_p are integrated on smooth pieces only.

With the built-in kernels every piece integrand is polynomial, so the nested
values are exact up to roundoff.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import horizon_neighbors


@dataclass(frozen=True)
class QuadRule:
    """Gauss-Legendre rule on [-1, 1]; exact for polynomials up to degree 2n-1."""

    points: np.ndarray
    weights: np.ndarray
    n: int

    def map_to(self, a, b):
        """Points and weights mapped onto (a, b)."""
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.points, half * self.weights


@lru_cache(maxsize=None)
def gauss_legendre(n):
    if n < 1:
        raise ValueError("quadrature order must be >= 1")
    pts, wts = np.polynomial.legendre.leggauss(n)
    pts.flags.writeable = False
    wts.flags.writeable = False
    return QuadRule(pts, wts, n)


def intersect(element, center, delta):
    """Intersection of an element interval with B_delta(center); None if empty."""
    a, b = element
    lo = max(a, center - delta)
    hi = min(b, center + delta)
    if hi - lo <= 0.0:
        return None
    return lo, hi


def smooth_pieces(outer, inner, delta):
    """Subintervals of ``outer`` where x -> inner ∩ B_delta(x) is one smooth map.

    Only the part of ``outer`` with a nonempty intersection is returned.
    """
    ai, bi = outer
    aj, bj = inner
    lo = max(ai, aj - delta)
    hi = min(bi, bj + delta)
    tol = 1e-12 * max(bi - ai, delta)
    if hi - lo <= tol:
        return []
    cuts = sorted(c for c in (aj - delta, aj + delta, bj - delta, bj + delta)
                  if lo + tol < c < hi - tol)
    edges = [lo, *cuts, hi]
    return [(edges[k], edges[k + 1]) for k in range(len(edges) - 1)
            if edges[k + 1] - edges[k] > tol]


def _union_pieces(mesh, i, neighbors):
    """Pieces of K_i delimited by every neighbor's intersection-pattern crossings."""
    ai, bi = mesh.bounds(i)
    tol = 1e-12 * max(bi - ai, mesh.delta)
    cuts = set()
    for j in neighbors:
        aj, bj = mesh.bounds(j)
        for c in (aj - mesh.delta, aj + mesh.delta, bj - mesh.delta, bj + mesh.delta):
            if ai + tol < c < bi - tol:
                cuts.add(c)
    edges = [ai, *sorted(cuts), bi]
    return [(edges[k], edges[k + 1]) for k in range(len(edges) - 1)
            if edges[k + 1] - edges[k] > tol]


def nested_integrate(mesh, i, inner_kernel, outer_weight, *, n_out, n_in):
    """Reference nested integral over element i (see module docstring).

    ``inner_kernel(x, y_array)`` returns G(x, y) values; ``outer_weight(x, v)``
    maps the accumulated inner value v at x to the outer integrand.
    """
    delta = mesh.delta
    neighbors = horizon_neighbors(mesh, i)
    rule_out = gauss_legendre(n_out)
    rule_in = gauss_legendre(n_in)
    bounds = [mesh.bounds(j) for j in neighbors]

    total = 0.0
    for lo, hi in _union_pieces(mesh, i, neighbors):
        xs, ws = rule_out.map_to(lo, hi)
        for x_p, w_p in zip(xs, ws):
            inner = 0.0
            for seg_bounds in bounds:
                seg = intersect(seg_bounds, x_p, delta)
                if seg is None:
                    continue
                a, b = seg
                parts = ((a, x_p), (x_p, b)) if a < x_p < b else ((a, b),)
                for pa, pb in parts:
                    if pb - pa <= 0.0:
                        continue
                    ys, wy = rule_in.map_to(pa, pb)
                    inner += wy @ np.asarray(inner_kernel(x_p, ys), dtype=float)
            total += w_p * outer_weight(x_p, inner)
    return total
