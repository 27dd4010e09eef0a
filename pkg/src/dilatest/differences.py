"""Finite differences and the local double-averaged difference functionals.

The order-M difference is the alternating binomial sum
``sum_j (-1)**j C(M, j) f(x + (M - j) h)``; the local functionals average its
absolute value both over a spatial box and over the displacement h. Three
flavors appear in the norm definitions and are kept verbatim:

* over a cube Q with h in l(Q)*(-1,1)^n, normalized by l(Q)**(2n),
* over a moving window x + 2**-k*(-1,1)^n with prefactor 2**(2kn),
* over the five-times expanded dyadic cube with h in 2**-k*(-1,1)^n but the
  normalization still using the expanded side 5*2**-k (taken literally).

Displacement quadrature uses midpoint nodes at roughly the grid spacing,
capped at 32 nodes per axis. (x, h) pairs whose evaluation points leave the
sampled box are dropped and the remaining weight renormalized, so boundary
windows stay unbiased; such windows are flagged.
"""

import math

import numpy as np

from .dyadic import (
    Box,
    DyadicCube,
    GridFunction,
    expanded_cube,
    level_cell_count,
    level_cube_count,
    level_first_index,
    padded_cumsum,
    range_sums_1d,
    range_sums_2d,
    window_sums,
)
from .errors import OutOfDomain, ResolutionExceeded

H_NODE_CAP = 32


def difference_coefficients(order):
    """(coefficient, step-multiple) pairs of the order-M difference."""
    if order < 1 or order != int(order):
        raise ValueError("difference order must be a positive integer")
    order = int(order)
    return [((-1) ** j * math.comb(order, j), order - j) for j in range(order + 1)]


def delta_m(f: GridFunction, order: int, h, x):
    """Order-M difference of f at x with displacement h (off-grid interpolated)."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    out = 0.0
    for coeff, mult in difference_coefficients(order):
        pts = x + mult * h
        if not np.all(f.in_domain(pts)):
            raise OutOfDomain("difference stencil leaves the sampled box")
        out = out + coeff * f.interp(pts)
    return out


def _h_nodes(halfwidth, spacing, dim):
    """Midpoint displacement nodes on (-a, a)^n and their common weight."""
    per_axis = int(max(2, min(H_NODE_CAP, round(2.0 * halfwidth / spacing))))
    dh = 2.0 * halfwidth / per_axis
    axis = -halfwidth + (np.arange(per_axis) + 0.5) * dh
    if dim == 1:
        return axis, dh
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=-1), dh**2


def _binomial_field(f: GridFunction, order, h):
    """|order-M difference| at every grid center, with a validity mask."""
    pts = f.points()
    acc = 0.0
    valid = np.ones(f.samples.shape, dtype=bool)
    for coeff, mult in difference_coefficients(order):
        shifted = pts + mult * h
        vals, mask = f.interp_masked(shifted)
        acc = acc + coeff * vals
        valid &= mask
    return np.abs(acc), valid


def _axis_overlap_weights(f: GridFunction, lo, hi):
    """Cells overlapping [lo, hi) on one axis with exact overlap fractions."""
    n, dx, L = f.resolution, f.spacing, f.halfwidth
    i0 = max(int(math.floor((lo + L) / dx)), 0)
    i1 = min(int(math.ceil((hi + L) / dx)), n)
    if i1 <= i0:
        return np.arange(0), np.zeros(0)
    idx = np.arange(i0, i1)
    left = -L + idx * dx
    w = (np.minimum(hi, left + dx) - np.maximum(lo, left)) / dx
    keep = w > 1e-12
    return idx[keep], w[keep]


def _double_average(f, box: Box, h_halfwidth, order, normalization):
    """Shared kernel: sum_h sum_x w |Delta_h^M f(x)|, renormalized for drops."""
    if min(box.sides) < f.spacing:
        raise ResolutionExceeded("box is below the grid resolution")
    dom = box.intersect(f.domain)
    if dom is None:
        raise OutOfDomain("box does not meet the sampled domain")
    axes = [_axis_overlap_weights(f, lo, hi) for lo, hi in zip(dom.lo, dom.hi)]
    if any(len(idx) == 0 for idx, _ in axes):
        raise OutOfDomain("box holds no grid cells")
    centers = f.axis_centers()
    if f.dim == 1:
        idx, w_x = axes[0]
        pts = centers[idx]
    else:
        (ix, wx), (iy, wy) = axes
        pts = np.stack(
            [np.repeat(centers[ix], len(iy)), np.tile(centers[iy], len(ix))], axis=-1
        )
        w_x = np.outer(wx, wy).ravel()
    w_x = w_x * f.spacing**f.dim

    nodes, w_h = _h_nodes(h_halfwidth, f.spacing, f.dim)
    num = 0.0
    valid_w = 0.0
    for h in nodes:
        acc = 0.0
        mask = np.ones(len(w_x), dtype=bool)
        for coeff, mult in difference_coefficients(order):
            vals, ok = f.interp_masked(pts + mult * h)
            acc = acc + coeff * vals
            mask &= ok
        num += w_h * float(np.sum(np.abs(acc) * w_x * mask))
        valid_w += w_h * float(np.sum(w_x * mask))
    total_w = len(nodes) * w_h * float(np.sum(w_x))
    if valid_w <= 0.0:
        raise OutOfDomain("every (x, h) pair leaves the sampled box")
    return num * (total_w / valid_w) / normalization


def delta_avg_cube(f: GridFunction, q: Box, order: int) -> float:
    """Double average over a cube with h ranging over l(Q)*(-1,1)^n."""
    side = q.sides[0]
    if any(abs(s - side) > 1e-9 * side for s in q.sides):
        raise ValueError("delta_avg_cube expects a cube")
    return _double_average(f, q, side, order, side ** (2 * f.dim))


def delta_avg_window(f: GridFunction, x, k: int, order: int) -> float:
    """Double average over the window x + 2**-k*(-1,1)^n, prefactor 2**(2kn)."""
    a = 2.0 ** (-k)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    box = Box(tuple(xi - a for xi in x), tuple(xi + a for xi in x))
    return _double_average(f, box, a, order, 2.0 ** (-2 * k * f.dim))


def delta_avg_expanded(f: GridFunction, k: int, m, order: int) -> float:
    """Double average over the expanded cube, h over 2**-k*(-1,1)^n.

    The normalization uses the expanded side 5*2**-k even though h ranges over
    the smaller box; both constants are kept exactly as in the norm they feed.
    """
    m = (m,) if np.isscalar(m) else tuple(m)
    box = expanded_cube(DyadicCube(k, m))
    return _double_average(f, box, 2.0 ** (-k), order, (5.0 * 2.0 ** (-k)) ** (2 * f.dim))


# -- vectorized fields ---------------------------------------------------------


def delta_window_field(f: GridFunction, k: int, order: int):
    """delta^M(x + 2**-k I^n) f at every grid center.

    Returns (values, flagged) where flagged marks windows that were clipped at
    the domain edge or lost (x, h) pairs to the boundary.
    """
    a = 2.0 ** (-k)
    r = int(round(a / f.spacing))
    if r < 1 or abs(r * f.spacing - a) > 1e-9 * a:
        raise ResolutionExceeded(f"window level {k} below grid resolution")
    nodes, w_h = _h_nodes(a, f.spacing, f.dim)
    cellw = f.spacing**f.dim

    num = 0.0
    valid = 0.0
    ones = np.ones(f.samples.shape)
    total_one = window_sums(ones, r)
    for h in nodes:
        g, mask = _binomial_field(f, order, h)
        num = num + window_sums(g * mask, r)
        valid = valid + window_sums(mask.astype(float), r)
    total = len(nodes) * total_one
    with np.errstate(invalid="ignore", divide="ignore"):
        renorm = np.where(valid > 0, total / np.maximum(valid, 1e-300), 0.0)
    values = 2.0 ** (2 * k * f.dim) * w_h * cellw * num * renorm
    interior = np.isclose(total_one, (2 * r) ** f.dim, rtol=1e-12)
    flagged = (valid < total - 1e-9) | ~interior
    return values, flagged


def _level_geometry(f, k):
    c = level_cell_count(f, k)
    nc = level_cube_count(f, k)
    m0 = level_first_index(f, k)
    return c, nc, m0


def delta_cube_field(f: GridFunction, k: int, order: int):
    """delta^M(Q_{k,m}) f for every level-k cube tiling the domain.

    Returns (values, flagged, first_index): values indexed by m - first_index
    along each axis.
    """
    c, nc, m0 = _level_geometry(f, k)
    side = 2.0 ** (-k)
    nodes, w_h = _h_nodes(side, f.spacing, f.dim)
    cellw = f.spacing**f.dim

    def block(v):
        if f.dim == 1:
            return v.reshape(nc, c).sum(axis=1)
        return v.reshape(nc, c, nc, c).sum(axis=(1, 3))

    num = 0.0
    valid = 0.0
    for h in nodes:
        g, mask = _binomial_field(f, order, h)
        num = num + block(g * mask)
        valid = valid + block(mask.astype(float))
    total = len(nodes) * float(c**f.dim)
    with np.errstate(invalid="ignore", divide="ignore"):
        renorm = np.where(valid > 0, total / np.maximum(valid, 1e-300), 0.0)
    values = w_h * cellw * num * renorm / side ** (2 * f.dim)
    flagged = valid < total - 1e-9
    return values, flagged, m0


def delta_expanded_field(f: GridFunction, k: int, order: int):
    """delta^M(Q_{k, m~}) f for every level-k cube tiling the domain."""
    c, nc, m0 = _level_geometry(f, k)
    a = 2.0 ** (-k)
    nodes, w_h = _h_nodes(a, f.spacing, f.dim)
    cellw = f.spacing**f.dim

    # expanded cube of cube j (0-based) covers cells [(j-2)c, (j+3)c)
    j = np.arange(nc)
    lo1, hi1 = (j - 2) * c, (j + 3) * c
    n = f.resolution
    if f.dim == 2:
        lo = np.stack(np.meshgrid(lo1, lo1, indexing="ij"), axis=-1)
        hi = np.stack(np.meshgrid(hi1, hi1, indexing="ij"), axis=-1)

    def expanded_sums(v):
        tab = padded_cumsum(v)
        if f.dim == 1:
            return range_sums_1d(tab, lo1, hi1)
        return range_sums_2d(tab, lo, hi)

    in_cells_1 = np.minimum(hi1, n) - np.maximum(lo1, 0)
    in_cells = in_cells_1 if f.dim == 1 else np.multiply.outer(in_cells_1, in_cells_1)

    num = 0.0
    valid = 0.0
    for h in nodes:
        g, mask = _binomial_field(f, order, h)
        num = num + expanded_sums(g * mask)
        valid = valid + expanded_sums(mask.astype(float))
    total = len(nodes) * in_cells.astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        renorm = np.where(valid > 0, total / np.maximum(valid, 1e-300), 0.0)
    values = w_h * cellw * num * renorm / (5.0 * a) ** (2 * f.dim)
    flagged = (valid < total - 1e-9) | (in_cells < (5 * c) ** f.dim)
    return values, flagged, m0
