"""Built-in test functions and seeded random families.

Every fixture decays well inside the default box, so dilation clipping and
window clipping stay negligible. All fixtures carry closed-form evaluators,
which keeps resampling and dilation exact.
"""

import numpy as np

from .dyadic import GridFunction


def _radius2(pts, dim):
    pts = np.asarray(pts, dtype=float)
    if dim == 1:
        return pts * pts
    return np.sum(pts * pts, axis=-1)


def _axis_apply(fn1d, pts, dim):
    pts = np.asarray(pts, dtype=float)
    if dim == 1:
        return fn1d(pts)
    return fn1d(pts[..., 0]) * fn1d(pts[..., 1])


def _smooth_edge(t):
    # C-infinity transition: 0 for t <= 0, 1 for t >= 1
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


def gaussian(pts, dim=1, width=1.0, center=0.0):
    r2 = _radius2(np.asarray(pts, dtype=float) - center, dim)
    return np.exp(-r2 / width**2)


def bump(pts, dim=1, radius=3.0):
    """Compactly supported C-infinity tensor mollifier."""

    def one(x):
        u = x / radius
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
        return out

    return _axis_apply(one, pts, dim)

def sine_packet(pts, dim=1, freq=4.0, width=2.0):
    pts = np.asarray(pts, dtype=float)
    env = np.exp(-_radius2(pts, dim) / width**2)
    if dim == 1:
        return np.sin(freq * pts) * env
    return np.sin(freq * pts[..., 0]) * env


def mollified_step(pts, dim=1, halfwidth=1.0, edge=0.5, center=0.0):
    """Smoothed indicator of [center-halfwidth, center+halfwidth] per axis."""

    def one(x):
        return _smooth_edge((halfwidth - np.abs(x - center)) / edge + 0.5)

    return _axis_apply(lambda x: one(x), pts, dim)


_FIXTURES = {
    "zero": lambda pts, dim: np.zeros(np.shape(_radius2(pts, dim))),
    "gaussian": lambda pts, dim: gaussian(pts, dim),
    "gaussian_wide": lambda pts, dim: 0.75 * gaussian(pts, dim, width=1.6, center=0.5),
    "bump": lambda pts, dim: bump(pts, dim),
    "sine_packet": lambda pts, dim: sine_packet(pts, dim),
    "mollified_step": lambda pts, dim: mollified_step(pts, dim),
}

# the five-function family used by norm-equivalence regressions
EQUIVALENCE_FAMILY = (
    "gaussian",
    "gaussian_wide",
    "bump",
    "sine_packet",
    "mollified_step",
)


def fixture_names():
    return sorted(_FIXTURES)


def fixture(name, dim=1, halfwidth=8.0, resolution=1024) -> GridFunction:
    try:
        fn = _FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {fixture_names()}") from None
    return GridFunction.from_callable(
        lambda pts: fn(pts, dim), dim, halfwidth, resolution
    )


def random_smooth(seed, dim=1, halfwidth=8.0, resolution=1024, terms=4) -> GridFunction:
    """Seeded mixture of Gaussians, decaying well inside the box."""
    rng = np.random.default_rng(seed)
    amps = rng.uniform(0.3, 1.0, size=terms)
    centers = rng.uniform(-halfwidth / 4, halfwidth / 4, size=(terms, dim))
    widths = rng.uniform(0.4, 1.5, size=terms)

    def fn(pts):
        out = 0.0
        for a, c, w in zip(amps, centers, widths):
            cc = c[0] if dim == 1 else c
            out = out + a * gaussian(pts, dim, width=w, center=cc)
        return out

    return GridFunction.from_callable(fn, dim, halfwidth, resolution)


def random_indicator_family(seed, count, dim=1, halfwidth=8.0, resolution=1024):
    """Seeded family of shifted mollified indicators (vector-valued tests)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = rng.uniform(-halfwidth / 3, halfwidth / 3)
        hw = rng.uniform(0.4, 1.6)
        out.append(
            GridFunction.from_callable(
                lambda pts, c=c, hw=hw: mollified_step(
                    pts, dim, halfwidth=hw, center=c
                ),
                dim,
                halfwidth,
                resolution,
            )
        )
    return out
