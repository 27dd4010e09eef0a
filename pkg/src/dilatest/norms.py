"""Difference-based norms: the windowed zero-order term, the moving-window
B/F norms, and their dyadic-cube ("starred") counterparts.

All level sums are truncated at ``SpaceParams.k_max``; that truncation is the
single source of truth shared with the Fourier-side norms so equivalence
ratios compare like with like. Boundary-clipped windows and cubes are included
with renormalized quadrature and tracked as a boundary-mass fraction; runs
where flagged terms carry more than 20% of the total mass are marked
unreliable.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .differences import (
    delta_cube_field,
    delta_expanded_field,
    delta_window_field,
)
from .dyadic import GridFunction, level_block_reduce, window_sums
from .errors import InvalidExponent, ResolutionExceeded
from .weights import WeightSequence, cube_weight_norms_level, sigma1_of

BOUNDARY_MASS_LIMIT = 0.20


@dataclass
class SpaceParams:
    """Parameters of one weighted smoothness space.

    kind "B" aggregates levels in l_q after L_p; kind "F" the other way
    around. alpha = (alpha1, alpha2) are the inter-level regularity exponents,
    theta in [1, p] fixes sigma1 = theta * (p/theta)', and sigma2 defaults
    to p.
    """

    kind: str
    p: float
    q: float
    M: int
    alpha: tuple
    theta: float = 1.0
    sigma2: float = None
    k_max: int = 6

    def __post_init__(self):
        if self.kind not in ("B", "F"):
            raise InvalidExponent("kind must be 'B' or 'F'")
        if not 1.0 <= self.p < math.inf or not 1.0 <= self.q < math.inf:
            raise InvalidExponent("p and q must lie in [1, inf)")
        if self.M < 1 or self.M != int(self.M):
            raise InvalidExponent("difference order M must be a positive integer")
        if not 1.0 <= self.theta <= self.p:
            raise InvalidExponent("theta must lie in [1, p]")
        if self.sigma2 is None:
            self.sigma2 = self.p
        if self.sigma2 < self.p:
            raise InvalidExponent("sigma2 must be at least p")
        if self.k_max < 1:
            raise InvalidExponent("k_max must be at least 1")
        a1, a2 = self.alpha
        if not 0.0 < a1 <= a2 < self.M:
            warnings.warn(
                f"alpha = {self.alpha} violates 0 < alpha1 <= alpha2 < M = {self.M}; "
                "difference norms are only equivalent inside that range",
                stacklevel=2,
            )

    @property
    def sigma1(self):
        return sigma1_of(self.theta, self.p)


def _check_levels(f: GridFunction, sp: SpaceParams):
    if 2.0 ** (-sp.k_max) < 4.0 * f.spacing * (1 - 1e-12):
        raise ResolutionExceeded(
            f"k_max = {sp.k_max} needs window side >= 4 cells "
            f"(spacing {f.spacing:.3g})"
        )


def ltilde_norm(f: GridFunction, t0: GridFunction, p, details=False):
    """Zero-order term: L_p norm of the unit-window L_1 means against t0^p.

    Windows within distance 1 of the boundary are clipped (and reported in
    the boundary fraction when details are requested).
    """
    r = int(round(1.0 / f.spacing))
    if r < 1:
        raise ResolutionExceeded("unit window needs spacing <= 1")
    cellw = f.spacing**f.dim
    win = window_sums(np.abs(f.samples), r) * cellw
    dens = t0.samples**p * win**p
    total = float(np.sum(dens) * cellw)
    value = total ** (1.0 / p)
    if not details:
        return value
    if f.dim == 1:
        interior = np.abs(f.axis_centers()) <= f.halfwidth - 1.0
    else:
        c = np.abs(f.axis_centers()) <= f.halfwidth - 1.0
        interior = np.outer(c, c)
    clipped = float(np.sum(dens[~interior]) * cellw)
    return value, {"boundary_mass": clipped / total if total > 0 else 0.0}


def diff_norm(f: GridFunction, t: WeightSequence, sp: SpaceParams, details=False):
    """Moving-window difference norm (B or F kind) plus the zero-order term."""
    _check_levels(f, sp)
    if t.k_max < sp.k_max:
        raise ResolutionExceeded(
            f"weight sequence has levels 0..{t.k_max}, need {sp.k_max}"
        )
    cellw = f.spacing**f.dim
    zero = ltilde_norm(f, t.level(0), sp.p)

    level_terms = []
    flagged_mass = 0.0
    total_mass = 0.0
    agg = 0.0
    for k in range(1, sp.k_max + 1):
        field, flagged = delta_window_field(f, k, sp.M)
        weighted = t.level(k).samples * field
        if sp.kind == "B":
            term = float(np.sum(weighted**sp.p) * cellw) ** (1.0 / sp.p)
            level_terms.append(term)
        else:
            agg = agg + weighted**sp.q
        mass = weighted**sp.p * cellw
        flagged_mass += float(np.sum(mass[flagged]))
        total_mass += float(np.sum(mass))
    if sp.kind == "B":
        main = float(np.sum(np.asarray(level_terms) ** sp.q)) ** (1.0 / sp.q)
    else:
        main = float(np.sum(agg ** (sp.p / sp.q)) * cellw) ** (1.0 / sp.p)
    value = main + zero
    if not details:
        return value
    frac = flagged_mass / total_mass if total_mass > 0 else 0.0
    return value, {
        "zero_order": zero,
        "main": main,
        "level_terms": level_terms,
        "boundary_mass": frac,
        "reliable": frac <= BOUNDARY_MASS_LIMIT,
    }


def _broadcast_cube_to_cells(per_cube, f: GridFunction, k):
    c = int(round(2.0 ** (-k) / f.spacing))
    if f.dim == 1:
        return np.repeat(per_cube, c)
    return np.repeat(np.repeat(per_cube, c, axis=0), c, axis=1)


def star_norm(f: GridFunction, t: WeightSequence, sp: SpaceParams, details=False):
    """Dyadic-cube norm: per-cube weight norms against per-cube differences.

    The B kind pairs plain cubes with the cube-averaged difference; the F kind
    pairs each cube with its five-times expansion, scales by 2**(k n / p), and
    aggregates per cell through cube ownership. Both add the level-0 term
    built from cube L_1 norms.
    """
    _check_levels(f, sp)
    if t.k_max < sp.k_max:
        raise ResolutionExceeded(
            f"weight sequence has levels 0..{t.k_max}, need {sp.k_max}"
        )
    n, p, q = f.dim, sp.p, sp.q
    cellw = f.spacing**n

    t0m, _ = cube_weight_norms_level(t, 0)
    l1m = level_block_reduce(np.abs(f.samples), f, 0, op="sum") * cellw
    zero = float(np.sum((t0m * l1m) ** p)) ** (1.0 / p)

    flagged_mass = 0.0
    total_mass = 0.0
    if sp.kind == "B":
        acc = 0.0
        for k in range(1, sp.k_max + 1):
            tkm, _ = cube_weight_norms_level(t, k)
            dc, flags, _ = delta_cube_field(f, k, sp.M)
            contrib = (tkm * dc) ** p
            acc += float(np.sum(contrib)) ** (q / p)
            flagged_mass += float(np.sum(contrib[flags]))
            total_mass += float(np.sum(contrib))
        main = acc ** (1.0 / q)
    else:
        agg = 0.0
        for k in range(1, sp.k_max + 1):
            tkm, _ = cube_weight_norms_level(t, k)
            de, flags, _ = delta_expanded_field(f, k, sp.M)
            per_cube = 2.0 ** (k * n / p) * tkm * de
            cells = _broadcast_cube_to_cells(per_cube, f, k)
            agg = agg + cells**q
            contrib = per_cube**p
            flagged_mass += float(np.sum(contrib[flags]))
            total_mass += float(np.sum(contrib))
        main = float(np.sum(agg ** (p / q)) * cellw) ** (1.0 / p)
    value = main + zero
    if not details:
        return value
    frac = flagged_mass / total_mass if total_mass > 0 else 0.0
    return value, {
        "zero_order": zero,
        "main": main,
        "boundary_mass": frac,
        "reliable": frac <= BOUNDARY_MASS_LIMIT,
    }
