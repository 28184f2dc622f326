"""Boundary functions on the unit circle.

Functions are stored as ``n`` equispaced samples ``f(e^{i theta_k})`` with
``theta_k = 2 pi k / n``.  Integrals against ``dt`` are sample averages, so the
circle carries the normalized measure.  Fourier coefficients follow the numpy
index convention: index ``k < n/2`` is frequency ``k``, index ``k >= n/2`` is
frequency ``k - n`` (the Nyquist index counts as negative).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

DEFAULT_N = 4096
PAD_FACTOR = 4


class DegenerateFactorization(ValueError):
    """Raised when a function is numerically zero and has no inner-outer split."""


class UnflooredDensity(ValueError):
    """Raised when a weight dips below its declared positivity floor."""


def check_grid_size(n: int) -> int:
    n = int(n)
    if n < 16 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two >= 16, got {n}")
    return n


@dataclass(frozen=True)
class CircleGrid:
    n: int = DEFAULT_N

    def __post_init__(self):
        check_grid_size(self.n)

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n) / self.n

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    @property
    def frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Complex grid samples on the circle; coefficients are derived lazily."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim != 1:
            raise ValueError("boundary samples must be one-dimensional")
        check_grid_size(v.size)
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def grid(self) -> CircleGrid:
        return CircleGrid(self.n)

    @cached_property
    def coeffs(self) -> np.ndarray:
        return _readonly(np.fft.fft(self.values) / self.n)

    @classmethod
    def from_coeffs(cls, coeffs: np.ndarray) -> "BoundaryFunction":
        c = np.asarray(coeffs, dtype=np.complex128)
        return cls(np.fft.ifft(c) * c.size)

    @classmethod
    def from_callable(cls, fn, n: int = DEFAULT_N) -> "BoundaryFunction":
        return cls(fn(CircleGrid(n).angles))

    def mean(self) -> complex:
        return complex(self.values.mean())

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def negative_defect(self) -> float:
        """Largest negative-frequency coefficient relative to the largest coefficient."""
        c = np.abs(self.coeffs)
        top = c.max()
        if top == 0:
            return 0.0
        return float(c[self.n // 2:].max() / top)

    # serialization -------------------------------------------------------
    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "re", "im"])
            for k, v in enumerate(self.values):
                w.writerow([k, repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def from_csv(cls, path) -> "BoundaryFunction":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        rows.sort(key=lambda r: int(r["index"]))
        return cls(np.array([complex(float(r["re"]), float(r["im"])) for r in rows]))

    def dump_coeffs(self, path) -> None:
        """Little-endian float64, interleaved (re, im), frequency index 0..n-1."""
        inter = np.empty(2 * self.n, dtype="<f8")
        inter[0::2] = self.coeffs.real
        inter[1::2] = self.coeffs.imag
        Path(path).write_bytes(inter.tobytes())

    @classmethod
    def load_coeffs(cls, path) -> "BoundaryFunction":
        inter = np.frombuffer(Path(path).read_bytes(), dtype="<f8")
        return cls.from_coeffs(inter[0::2] + 1j * inter[1::2])


@dataclass(frozen=True, eq=False)
class AnalyticBoundaryFunction(BoundaryFunction):
    """Boundary samples of an H^p function.

    ``tol_a`` bounds the negative-frequency content relative to the largest
    coefficient; construction fails if the samples violate it.
    """

    tol_a: float = 1e-9

    def __post_init__(self):
        super().__post_init__()
        defect = self.negative_defect()
        if defect > self.tol_a * (1 + 1e-9) + 1e-15:
            raise ValueError(f"negative-frequency defect {defect:.3e} exceeds tol_a={self.tol_a:.3e}")

    @classmethod
    def measured(cls, values: np.ndarray, floor: float = 1e-12) -> "AnalyticBoundaryFunction":
        """Wrap samples, recording their actual analyticity defect as ``tol_a``."""
        probe = BoundaryFunction(values)
        return cls(probe.values, tol_a=max(floor, probe.negative_defect()))

    @classmethod
    def constant(cls, c: complex, n: int = DEFAULT_N) -> "AnalyticBoundaryFunction":
        return cls(np.full(n, c, dtype=np.complex128))

    @classmethod
    def from_callable(cls, fn, n: int = DEFAULT_N) -> "AnalyticBoundaryFunction":
        return cls.measured(fn(CircleGrid(n).angles))

    @classmethod
    def from_holomorphic(cls, fn, n: int = DEFAULT_N) -> "AnalyticBoundaryFunction":
        """Boundary values of a function given as a callable of the point z on the circle."""
        return cls.measured(fn(CircleGrid(n).points))

    @property
    def taylor(self) -> np.ndarray:
        """Coefficients of frequencies 0..n/2-1, the ones kept by interior evaluation."""
        return self.coeffs[: self.n // 2]


@dataclass(frozen=True, eq=False)
class Density:
    """Real positive boundary weight with an enforced positivity floor."""

    values: np.ndarray
    floor: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("density samples must be one-dimensional")
        check_grid_size(v.size)
        if not self.floor > 0:
            raise ValueError("density floor must be positive")
        if not np.all(np.isfinite(v)) or v.min() < self.floor * (1 - 1e-12):
            raise UnflooredDensity(f"density sample {v.min():.3e} below floor {self.floor:.3e}")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def from_samples(cls, samples, *, normalize: bool = True, floor_rel: float = 1e-8) -> "Density":
        v = np.asarray(samples, dtype=np.float64)
        if np.any(~np.isfinite(v)) or v.max() <= 0:
            raise ValueError("density samples must be finite with positive mass")
        eta = floor_rel * v.clip(min=0).mean()
        v = np.maximum(v, eta)
        if normalize:
            s = v.mean()
            v, eta = v / s, eta / s
        return cls(v, eta)

    @classmethod
    def uniform(cls, n: int = DEFAULT_N) -> "Density":
        return cls.from_samples(np.ones(n))

    @property
    def n(self) -> int:
        return self.values.size

    def mass(self) -> float:
        return float(self.values.mean())

    def as_function(self) -> BoundaryFunction:
        return BoundaryFunction(self.values.astype(np.complex128))


# -- spectral operations ------------------------------------------------------


def _signum_multiplier(n: int) -> np.ndarray:
    s = np.zeros(n)
    s[1: n // 2] = 1.0
    s[n // 2 + 1:] = -1.0
    return s


def riesz_project(f: BoundaryFunction) -> AnalyticBoundaryFunction:
    """Zero the negative frequencies (the Nyquist index counts as negative)."""
    c = np.array(f.coeffs)
    c[f.n // 2:] = 0
    return AnalyticBoundaryFunction(np.fft.ifft(c) * f.n, tol_a=0.0)


def conjugate(u) -> np.ndarray:
    """Harmonic conjugate of a real grid function, normalized to zero mean."""
    vals = u.values if isinstance(u, (BoundaryFunction, Density)) else np.asarray(u)
    if np.iscomplexobj(vals) and np.abs(vals.imag).max() > 1e-12 * max(1.0, np.abs(vals).max()):
        raise ValueError("conjugate expects a real-valued function")
    vals = np.real(vals)
    c = np.fft.fft(vals)
    return np.real(np.fft.ifft(-1j * _signum_multiplier(vals.size) * c))


def analytic_completion(u: np.ndarray) -> np.ndarray:
    """Samples of u + i*conjugate(u) for real u (real at the origin).

    The Nyquist mode is real with zero conjugate; it is kept once so that the
    real part reproduces u exactly.
    """
    n = u.size
    c = np.fft.fft(u)
    c[1: n // 2] *= 2
    c[n // 2 + 1:] = 0
    return np.fft.ifft(c)


def outer_from_modulus(w: Density) -> AnalyticBoundaryFunction:
    """Outer function O = exp(log w + i*conjugate(log w)), so |O| = w on the grid."""
    if not isinstance(w, Density):
        raise TypeError("outer_from_modulus expects a Density")
    if w.values.min() < w.floor * (1 - 1e-12):
        raise UnflooredDensity("weight below its floor")
    return AnalyticBoundaryFunction.measured(np.exp(analytic_completion(np.log(w.values))))


def outer_power(w: Density, power: float) -> AnalyticBoundaryFunction:
    """Outer function with modulus w**power, computed through the log-modulus."""
    return AnalyticBoundaryFunction.measured(np.exp(power * analytic_completion(np.log(w.values))))


def evaluate_interior(F: AnalyticBoundaryFunction, z):
    """Power series sum_{k>=0} c_k z^k over the retained frequencies 0..n/2-1."""
    z_arr = np.asarray(z, dtype=np.complex128)
    if np.any(np.abs(z_arr) > 1 - 1e-9):
        raise ValueError("interior evaluation refused within 1e-9 of the circle; use boundary samples")
    out = np.polynomial.polynomial.polyval(z_arr, F.taylor)
    return complex(out) if out.ndim == 0 else out


def inner_outer(g: AnalyticBoundaryFunction, floor_rel: float = 1e-8):
    """Split g into (inner, outer, tolerance).

    The modulus is floored at ``floor_rel * max|g|``; the returned tolerance is
    max | |inner| - 1 | on the grid and measures the damage done by flooring.
    """
    mod = np.abs(g.values)
    top = mod.max()
    if not np.isfinite(top) or top < 1e-300:
        raise DegenerateFactorization("function vanishes identically on the grid")
    eta = floor_rel * top
    outer = outer_from_modulus(Density(np.maximum(mod, eta), eta))
    inner_vals = g.values / outer.values
    inner = AnalyticBoundaryFunction.measured(inner_vals)
    tol = float(np.abs(np.abs(inner_vals) - 1).max())
    return inner, outer, tol


def hp_norm(f, p: float, weight: Density | None = None) -> float:
    """Sample-average (weighted) p-norm; p = inf ignores the weight."""
    vals = np.abs(f.values if hasattr(f, "values") else np.asarray(f))
    if p < 1:
        raise ValueError("p must be >= 1")
    if np.isinf(p):
        return float(vals.max())
    wts = 1.0 if weight is None else weight.values
    return float(np.mean(vals**p * wts) ** (1.0 / p))


def padded_multiply(*factors: BoundaryFunction, pad: int = PAD_FACTOR) -> BoundaryFunction:
    """Product evaluated on a ``pad``-times finer grid, then low-passed back.

    Frequencies outside (-n/2, n/2) are discarded instead of aliasing onto the
    coarse grid.  The product of analytic inputs is returned as analytic.
    """
    if not factors:
        raise ValueError("need at least one factor")
    n = factors[0].n
    big = pad * n
    acc = None
    for f in factors:
        if f.n != n:
            raise ValueError("grid mismatch in product")
        c = np.zeros(big, dtype=np.complex128)
        c[: n // 2] = f.coeffs[: n // 2]
        c[big - n // 2 + 1:] = f.coeffs[n // 2 + 1:]
        fine = np.fft.ifft(c) * big
        acc = fine if acc is None else acc * fine
    cb = np.fft.fft(acc) / big
    out = np.zeros(n, dtype=np.complex128)
    out[: n // 2] = cb[: n // 2]
    out[n // 2 + 1:] = cb[big - n // 2 + 1:]
    if all(isinstance(f, AnalyticBoundaryFunction) for f in factors):
        out[n // 2:] = 0
        return AnalyticBoundaryFunction(np.fft.ifft(out) * n, tol_a=0.0)
    return BoundaryFunction(np.fft.ifft(out) * n)


def poisson_smooth(values: np.ndarray, r: float) -> np.ndarray:
    """Poisson integral of real grid data evaluated on the circle of radius r."""
    n = values.size
    k = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    return np.real(np.fft.ifft(np.fft.fft(values) * r**k))


def trig_polynomial(coeffs: dict[int, complex], n: int = DEFAULT_N) -> BoundaryFunction:
    """Grid samples of sum_k c_k e^{ik theta} for a sparse coefficient map."""
    th = CircleGrid(n).angles
    vals = np.zeros(n, dtype=np.complex128)
    for k, c in coeffs.items():
        vals += c * np.exp(1j * k * th)
    if all(k >= 0 for k in coeffs):
        return AnalyticBoundaryFunction.measured(vals)
    return BoundaryFunction(vals)


__all__ = [
    "AnalyticBoundaryFunction",
    "BoundaryFunction",
    "CircleGrid",
    "DEFAULT_N",
    "DegenerateFactorization",
    "Density",
    "UnflooredDensity",
    "analytic_completion",
    "conjugate",
    "evaluate_interior",
    "hp_norm",
    "inner_outer",
    "outer_from_modulus",
    "outer_power",
    "padded_multiply",
    "poisson_smooth",
    "riesz_project",
    "trig_polynomial",
]
