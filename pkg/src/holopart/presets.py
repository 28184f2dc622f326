"""Named density presets used by experiments and the test suite.

All presets return floored densities normalized to mean one.
"""

from __future__ import annotations

import numpy as np

from .circle import DEFAULT_N, CircleGrid, Density
from .rng import derive_key

PRESETS = ("uniform", "two-arc", "power-spike", "random-trig")


def uniform(n: int = DEFAULT_N) -> Density:
    return Density.uniform(n)


def arc_mask(n: int, center: float, width: float) -> np.ndarray:
    """Grid points within angular distance width/2 of ``center``."""
    th = CircleGrid(n).angles
    d = np.abs(np.angle(np.exp(1j * (th - center))))
    return d <= width / 2


def two_arc(n: int = DEFAULT_N, height: float = 20.0, width: float = 0.3,
            centers=(0.8, 3.9), base: float = 1.0) -> Density:
    """Base level plus two raised arcs (lengths in radians)."""
    v = np.full(n, base)
    for c in centers:
        v[arc_mask(n, c, width)] += height
    return Density.from_samples(v)


def power_spike(n: int = DEFAULT_N, a: float = -0.4) -> Density:
    """|1 - e^{i theta}|^a, clamped at half a grid cell from the singular point."""
    if not -0.5 < a < 0.5:
        raise ValueError("power-spike exponent must lie in (-1/2, 1/2)")
    th = CircleGrid(n).angles
    r = np.maximum(np.abs(1 - np.exp(1j * th)), np.pi / n)
    return Density.from_samples(r**a)


def random_trig(n: int = DEFAULT_N, seed: int = 7, degree: int = 6, floor: float = 0.05) -> Density:
    """|P|^2 + floor for a random complex polynomial P of the given degree."""
    rng = np.random.default_rng(derive_key(seed, "random-trig"))
    c = (rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)) / np.sqrt(2 * (degree + 1))
    z = CircleGrid(n).points
    p = np.polynomial.polynomial.polyval(z, c)
    v = np.abs(p) ** 2
    return Density.from_samples(v + floor * v.mean())


def make(name: str, n: int = DEFAULT_N, seed: int = 7, **kw) -> Density:
    if name == "uniform":
        return uniform(n)
    if name == "two-arc":
        return two_arc(n, **kw)
    if name == "power-spike":
        return power_spike(n, **kw)
    if name == "random-trig":
        return random_trig(n, seed=seed, **kw)
    raise KeyError(f"unknown density preset {name!r}; choose from {', '.join(PRESETS)}")


def suite(n: int = DEFAULT_N, seed: int = 7) -> dict[str, Density]:
    """The standard density suite."""
    return {
        "uniform": uniform(n),
        "two-arc": two_arc(n),
        "power-spike": power_spike(n, a=-0.4),
        "power-spike-pos": power_spike(n, a=0.4),
        "random-trig": random_trig(n, seed=seed),
    }
