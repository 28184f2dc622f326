"""Counter-based random streams keyed by (seed, tag, path index, counter).

Every draw is a pure function of its coordinates, so a path can be regenerated
in isolation and results never depend on how paths are batched or which worker
simulated them.  Keys are derived with ``numpy.random.SeedSequence`` from the
run seed and a module tag; the per-draw mixing is the SplitMix64 finalizer
applied twice.
"""

from __future__ import annotations

import zlib

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_G_PATH = np.uint64(0x9E3779B97F4A7C15)
_G_COUNTER = np.uint64(0xD1B54A32D192ED03)
_G_LANE = np.uint64(0x8CB92BA72F3D8DD7)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))


def derive_key(seed: int, tag: str) -> int:
    """64-bit stream key for ``tag`` under the run seed."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> _S30)
    x = x * _M1
    x = x ^ (x >> _S27)
    x = x * _M2
    return x ^ (x >> _S31)


def uniforms(key: int, index, counter, lane: int = 0) -> np.ndarray:
    """Uniform draws in the open interval (0, 1)."""
    with np.errstate(over="ignore"):
        x = (
            np.uint64(key)
            + np.asarray(index).astype(np.uint64) * _G_PATH
            + np.asarray(counter).astype(np.uint64) * _G_COUNTER
            + np.uint64(lane) * _G_LANE
        )
        x = _mix(_mix(x))
    return ((x >> _S11).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def complex_normals(key: int, index, counter, lane: int = 0) -> np.ndarray:
    """g1 + i g2 with independent standard normal parts (Box-Muller)."""
    u1 = uniforms(key, index, counter, 2 * lane)
    u2 = uniforms(key, index, counter, 2 * lane + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.exp(2j * np.pi * u2)
