"""Havin pairs: analytic (alpha, beta) with |alpha| + |beta| <= 1, beta small and alpha ~ 1/5 on E.

Construction for a boundary set E and parameter eps:

1. chi is the Poisson-smoothed indicator of E (smoothing radius ``rho_s``);
2. G = exp(-(chi + i conj(chi))) is outer with |G| = exp(-chi);
3. beta = G^N with N = ceil(log(1/eps) / (1 - eta)), eta the collar defect of chi on E_rho;
4. v = min(1, 5(1-|beta|)/|1-beta|^2), V = outer(v);
5. alpha = (1/5)(1 - beta)^2 V.

Step 4 guarantees |alpha| <= 1 - |beta|.  Any v < 1 makes V non-trivial and its
phase spoils alpha ~ 1/5 on E, so before step 3 chi is raised off E until the
pointwise condition |1 - beta|^2 <= 5(1 - |beta|) already holds and V = 1.  In
polar form beta = r e^{-is} the condition reads r <= r*(s) with
r*(s) = (-(5 - 2cos s) + sqrt((5 - 2cos s)^2 + 16)) / 2, i.e. a lower bound on
chi that depends on conj(chi); it is enforced by a short fixed-point iteration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circle import (
    AnalyticBoundaryFunction,
    CircleGrid,
    DEFAULT_N,
    Density,
    conjugate,
    outer_from_modulus,
    poisson_smooth,
)

SMOOTH_CELLS = 8
COLLAR_FACTOR = 8
MARGIN = 0.15
MAX_ROUNDS = 40


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as (start, length), merging the run that wraps around."""
    n = mask.size
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    shift = int(np.flatnonzero(~mask)[0])
    m = np.roll(mask, -shift).astype(np.int8)
    d = np.diff(np.concatenate([[0], m, [0]]))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    out = [(int((s + shift) % n), int(e - s)) for s, e in zip(starts, ends)]
    return sorted(out)


def _distance_to_complement(mask: np.ndarray) -> np.ndarray:
    """Grid distance (in cells) from each point to the nearest point outside the mask."""
    n = mask.size
    if mask.all():
        return np.full(n, np.inf)
    out_idx = np.flatnonzero(~mask)
    idx = np.arange(n)
    pos = np.searchsorted(out_idx, idx)
    left = out_idx[(pos - 1) % out_idx.size]
    right = out_idx[pos % out_idx.size]
    dl = (idx - left) % n
    dr = (right - idx) % n
    return np.minimum(dl, dr).astype(np.float64)


@dataclass(frozen=True, eq=False)
class BoundarySet:
    """Subset of the grid with an interior collar of ``collar`` cells."""

    mask: np.ndarray
    collar: int = SMOOTH_CELLS * COLLAR_FACTOR

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 1:
            raise ValueError("mask must be one-dimensional")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def n(self) -> int:
        return self.mask.size

    @property
    def measure(self) -> float:
        return float(self.mask.mean())

    @property
    def interior(self) -> np.ndarray:
        """Points of E farther than ``collar`` cells (angular distance) from the complement."""
        return self.mask & (_distance_to_complement(self.mask) > self.collar)

    @property
    def interior_measure(self) -> float:
        return float(self.interior.mean())

    @classmethod
    def from_arcs(cls, arcs, n: int = DEFAULT_N, collar: int | None = None) -> "BoundarySet":
        """Union of arcs given as (start angle, length) in radians."""
        th = CircleGrid(n).angles
        m = np.zeros(n, dtype=bool)
        for a, length in arcs:
            m |= np.mod(th - a, 2 * np.pi) < length
        return cls(m, SMOOTH_CELLS * COLLAR_FACTOR if collar is None else collar)

    @classmethod
    def empty(cls, n: int = DEFAULT_N) -> "BoundarySet":
        return cls(np.zeros(n, dtype=bool))

    @classmethod
    def full(cls, n: int = DEFAULT_N) -> "BoundarySet":
        return cls(np.ones(n, dtype=bool))

    def to_rle(self) -> dict:
        return {"n": self.n, "collar": self.collar, "runs": [list(r) for r in _runs(self.mask)]}

    @classmethod
    def from_rle(cls, data: dict) -> "BoundarySet":
        n = int(data["n"])
        m = np.zeros(n, dtype=bool)
        for s, length in data["runs"]:
            m[(np.arange(length) + s) % n] = True
        return cls(m, int(data["collar"]))


def cantor_like(n: int = DEFAULT_N, start: float = 0.3, length: float = 4.0, levels: int = 3,
                keep: float = 0.42) -> BoundarySet:
    """Fat Cantor-type set: each arc keeps two end pieces of relative length ``keep``."""
    arcs = [(start, length)]
    for _ in range(levels):
        nxt = []
        for a, L in arcs:
            nxt += [(a, keep * L), (a + (1 - keep) * L, keep * L)]
        arcs = nxt
    return BoundarySet.from_arcs(arcs, n)


def random_arcs(n: int = DEFAULT_N, count: int = 4, seed: int = 0, max_len: float = 0.6) -> BoundarySet:
    rng = np.random.default_rng(seed)
    arcs = [(rng.uniform(0, 2 * np.pi), rng.uniform(0.1, max_len)) for _ in range(count)]
    return BoundarySet.from_arcs(arcs, n)


def _r_star(s: np.ndarray) -> np.ndarray:
    a = 5 - 2 * np.cos(s)
    return (-a + np.sqrt(a * a + 16)) / 2


@dataclass
class HavinPair:
    alpha: AnalyticBoundaryFunction
    beta: AnalyticBoundaryFunction
    eps: float
    params: dict
    chi: np.ndarray = field(repr=False)
    G: AnalyticBoundaryFunction | None = field(default=None, repr=False)
    property_report: dict = field(default_factory=dict)


def havin_pair(E: BoundarySet, eps: float, smooth_cells: int = SMOOTH_CELLS) -> HavinPair:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    n = E.n
    if not E.mask.any():
        one = AnalyticBoundaryFunction.constant(1.0, n)
        zero = AnalyticBoundaryFunction.constant(0.0, n)
        pair = HavinPair(zero, one, eps, {"N": 0, "rho_cells": smooth_cells, "rounds": 0, "eta": 0.0},
                         chi=np.zeros(n), G=one)
        pair.property_report = verify_havin(pair, E)
        return pair
    rho = smooth_cells * 2 * np.pi / n
    ind = E.mask.astype(np.float64)
    chi0 = np.clip(poisson_smooth(ind, 1 - rho), 0.0, 1.0)
    inner = E.interior
    # an empty interior makes every "on E" property vacuous
    eta = max(float(1 - chi0[inner].min()), 0.0) if inner.any() else 0.0
    N = int(np.ceil(np.log(1 / eps) / (1 - eta)))
    chi = chi0
    rounds = 0
    for rounds in range(1, MAX_ROUNDS + 1):
        ct = conjugate(chi)
        need = -np.log(_r_star(N * ct)) / N
        if np.all(chi >= need * (1 + 1e-9)):
            break
        chi = poisson_smooth(np.maximum(ind, (1 + MARGIN) * need), 1 - rho)
    F = chi + 1j * conjugate(chi)
    G = AnalyticBoundaryFunction.measured(np.exp(-F))
    beta_vals = np.exp(-N * F)
    beta = AnalyticBoundaryFunction.measured(beta_vals)
    one_minus = 1 - beta_vals
    sq = np.abs(one_minus) ** 2
    budget = 1 - np.abs(beta_vals)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(np.abs(one_minus) < 1e-9, 1.0, np.minimum(1.0, 5 * budget / sq))
    if np.all(v >= 1.0):
        V_vals = np.ones(n, dtype=np.complex128)
    else:
        floor = max(float(v.min()), 1e-300)
        V_vals = outer_from_modulus(Density(v, floor)).values
    alpha = AnalyticBoundaryFunction.measured(0.2 * one_minus**2 * V_vals)
    pair = HavinPair(
        alpha,
        beta,
        eps,
        {
            "N": N,
            "rho_cells": smooth_cells,
            "collar_cells": E.collar,
            "rounds": rounds,
            "eta": eta,
            "v_min": float(v.min()),
        },
        chi=chi,
        G=G,
    )
    pair.property_report = verify_havin(pair, E)
    return pair


def verify_havin(pair: HavinPair, E: BoundarySet) -> dict:
    a = pair.alpha.values
    b = pair.beta.values
    eps = pair.eps
    P = E.measure
    L = np.log(1 / eps)
    inner = E.interior
    collar = E.mask & ~inner
    pointwise = np.abs(a) - np.minimum(0.2 * np.abs(1 - b) ** 2, 1 - np.abs(b))
    alpha_l1 = float(np.mean(np.abs(a)))
    omb_l2 = float(np.sqrt(np.mean(np.abs(1 - b) ** 2)))
    beta_E = float(np.abs(b[inner]).max()) if inner.any() else 0.0
    alpha_E = float(np.abs(a[inner] - 0.2).max()) if inner.any() else 0.0
    G = pair.G.values if pair.G is not None else np.ones_like(b)
    omg_l2 = float(np.sqrt(np.mean(np.abs(1 - G) ** 2)))
    chi_l2 = float(np.sqrt(np.mean(pair.chi**2)))
    N = pair.params.get("N", 0)
    rep = {
        "eps": eps,
        "measure": P,
        "interior_measure": float(inner.mean()),
        "N": N,
        "eta": pair.params.get("eta", 0.0),
        "budget_max": float(np.max(np.abs(a) + np.abs(b))),
        "pointwise_excess": float(pointwise.max()),
        "beta_on_E": beta_E,
        "alpha_on_E": alpha_E,
        "slack_beta": beta_E / eps,
        "slack_alpha": alpha_E / eps,
        "collar_beta": float(np.abs(b[collar]).max()) if collar.any() else 0.0,
        "collar_alpha": float(np.abs(a[collar] - 0.2).max()) if collar.any() else 0.0,
        "alpha_l1": alpha_l1,
        "alpha_l1_norm": alpha_l1 / (L**2 * P) if P > 0 else 0.0,
        "one_minus_beta_l2": omb_l2,
        "one_minus_beta_l2_norm": omb_l2 / (L * np.sqrt(P)) if P > 0 else 0.0,
        "chain_beta_G": omb_l2 <= N * omg_l2 * (1 + 1e-9) + 1e-12,
        "chain_G_chi": omg_l2 <= np.sqrt(2) * chi_l2 * (1 + 1e-9) + 1e-12,
        "chain_alpha_beta": alpha_l1 <= 0.2 * omb_l2**2 * (1 + 1e-9) + 1e-12,
        "defect_alpha": float(pair.alpha.tol_a),
        "defect_beta": float(pair.beta.tol_a),
    }
    rep["passed"] = bool(
        rep["budget_max"] <= 1 + 1e-9
        and rep["pointwise_excess"] <= 1e-9
        and rep["beta_on_E"] <= eps
        and rep["alpha_on_E"] <= eps
        and rep["chain_beta_G"]
        and rep["chain_G_chi"]
        and rep["chain_alpha_beta"]
        and rep["eta"] <= 0.1
    )
    return rep


def report_json(rep: dict) -> str:
    return json.dumps(rep, indent=2, sort_keys=True, default=float)
