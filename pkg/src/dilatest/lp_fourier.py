"""Smooth dyadic resolution of unity and Fourier-side norms.

The band multipliers live on the DFT frequency lattice of the periodized box,
so "convolve with the band kernel" is a pointwise multiplication in frequency
space. The cutoff profile is exactly 1 on |xi| <= 1 and exactly 0 on
|xi| >= 3/2, hence the band sum telescopes identically and band-limited
inputs reconstruct to round-off.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import GridFunction
from .errors import MissingLevels, NyquistExceeded
from .weights import WeightSequence


def _transition(name):
    """C-infinity decreasing profile: exactly 1 on r<=1, exactly 0 on r>=3/2."""

    def e1(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    def e2(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos] ** 2)
        return out

    e = {"exp": e1, "exp2": e2}[name]

    def profile(r):
        r = np.asarray(r, dtype=float)
        a = e(3.0 - 2.0 * r)
        b = e(2.0 * r - 2.0)
        return a / (a + b)

    return profile


@dataclass
class ResolutionOfUnity:
    """Band multipliers phi_0..phi_K on a fixed DFT frequency lattice."""

    dim: int
    halfwidth: float
    resolution: int
    k_max: int
    profile: str = "exp"
    multipliers: list = field(default_factory=list)
    radial: np.ndarray = None

    def piece_multiplier(self, k):
        return self.multipliers[k]


def nyquist_frequency(halfwidth, resolution):
    return math.pi * resolution / (2.0 * halfwidth)


def default_k_max(halfwidth, resolution):
    """Deepest band whose support sits fully below the grid Nyquist."""
    return int(math.floor(math.log2(nyquist_frequency(halfwidth, resolution) / 3.0))) + 1


def build_phi(k_max, dim=1, halfwidth=8.0, resolution=1024, profile="exp") -> ResolutionOfUnity:
    """Evaluate the dyadic resolution of unity on the DFT lattice."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    nyq = nyquist_frequency(halfwidth, resolution)
    if 3.0 * 2.0 ** (k_max - 1) > nyq:
        raise NyquistExceeded(
            f"band {k_max} needs frequencies up to {3.0 * 2.0 ** (k_max - 1):.1f}, "
            f"Nyquist is {nyq:.1f}"
        )
    dx = 2.0 * halfwidth / resolution
    omega = 2.0 * math.pi * np.fft.fftfreq(resolution, d=dx)
    if dim == 1:
        radial = np.abs(omega)
    else:
        wx, wy = np.meshgrid(omega, omega, indexing="ij")
        radial = np.sqrt(wx * wx + wy * wy)
    psi = _transition(profile)
    mults = [psi(radial)]
    for k in range(1, k_max + 1):
        mults.append(psi(radial * 2.0**-k) - psi(radial * 2.0 ** (1 - k)))
    return ResolutionOfUnity(
        dim=dim,
        halfwidth=halfwidth,
        resolution=resolution,
        k_max=k_max,
        profile=profile,
        multipliers=mults,
        radial=radial,
    )


def _check_geometry(f: GridFunction, ru: ResolutionOfUnity):
    if (f.dim, f.halfwidth, f.resolution) != (ru.dim, ru.halfwidth, ru.resolution):
        raise ValueError("grid and resolution-of-unity geometries differ")


def lp_pieces(f: GridFunction, ru: ResolutionOfUnity):
    """Band-limited pieces of f; their sum telescopes to a low-pass of f."""
    _check_geometry(f, ru)
    spectrum = np.fft.fftn(f.samples)
    scale = max(float(np.sqrt(np.mean(f.samples**2))), 1e-300)
    pieces = []
    for mult in ru.multipliers:
        z = np.fft.ifftn(spectrum * mult)
        resid = float(np.max(np.abs(z.imag)))
        assert resid <= 1e-10 * scale, f"imaginary residue {resid:.3e} too large"
        pieces.append(f.with_samples(z.real.copy()))
    return pieces


def _lp(values, p, cellw):
    return float(np.sum(np.abs(values) ** p) * cellw) ** (1.0 / p)


def fourier_norm(f: GridFunction, t: WeightSequence, sp, ru: ResolutionOfUnity = None) -> float:
    """Fourier-side weighted norm of the B or F kind.

    B aggregates weighted L_p norms of the band pieces in l_q over levels;
    F swaps the order and takes the L_p norm of the pointwise l_q aggregate.
    """
    if ru is None:
        ru = build_phi(sp.k_max, f.dim, f.halfwidth, f.resolution)
    _check_geometry(f, ru)
    k_top = sp.k_max
    if ru.k_max < k_top:
        raise NyquistExceeded("resolution of unity holds fewer bands than requested")
    if t.k_max < k_top:
        raise MissingLevels(f"weight sequence has levels 0..{t.k_max}, need {k_top}")
    pieces = lp_pieces(f, ru)
    cellw = f.spacing**f.dim
    if sp.kind == "B":
        acc = 0.0
        for k in range(k_top + 1):
            acc += _lp(t.level(k).samples * pieces[k].samples, sp.p, cellw) ** sp.q
        return acc ** (1.0 / sp.q)
    agg = 0.0
    for k in range(k_top + 1):
        agg = agg + (t.level(k).samples * np.abs(pieces[k].samples)) ** sp.q
    return float(np.sum(agg ** (sp.p / sp.q)) * cellw) ** (1.0 / sp.p)


def classical_fourier_norm(f: GridFunction, s, p, q, kind="B", k_max=None, ru=None) -> float:
    """Unweighted smoothness-s norm: level factors 2**(k s) hardcoded."""
    if ru is None:
        k_max = default_k_max(f.halfwidth, f.resolution) if k_max is None else k_max
        ru = build_phi(k_max, f.dim, f.halfwidth, f.resolution)
    k_top = k_max if k_max is not None else ru.k_max
    pieces = lp_pieces(f, ru)
    cellw = f.spacing**f.dim
    if kind == "B":
        acc = 0.0
        for k in range(k_top + 1):
            acc += (2.0 ** (k * s) * _lp(pieces[k].samples, p, cellw)) ** q
        return acc ** (1.0 / q)
    agg = 0.0
    for k in range(k_top + 1):
        agg = agg + (2.0 ** (k * s) * np.abs(pieces[k].samples)) ** q
    return float(np.sum(agg ** (p / q)) * cellw) ** (1.0 / p)
