"""Weighted Marcinkiewicz decompositions.

Path space: with a partition {theta_j, w_j} and f in the lift class, f_j = w_j f is
stopped when |f_j(B_t)| first exceeds lambda; g_j is the stopped value,
h_j = f_j(exit) - g_j, and g = sum g_j w_j theta_j, h = sum h_j w_j theta_j, so
g + h = f phi with phi = sum theta_j w_j^2.

Circle: an outer multiplier u with |u| = min(1, lambda / |f|_reg) truncates f into
g = f u and h = f (1 - u) against the weight B from :func:`kislyakov_weight`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .circle import AnalyticBoundaryFunction, Density, outer_from_modulus, poisson_smooth
from .engine import DiscTable, PathEnsemble, first_exceedance, map_ensemble, mc_expectation
from .partition import PartitionOfUnity, _interp_grid, fit_mass_exponent
from .weights import WeightReport, hl_maximal, kislyakov_weight

SWEEP_RATIO = np.sqrt(10.0)


def lambda_grid(center: float, points: int = 5, ratio: float = SWEEP_RATIO) -> np.ndarray:
    """Geometric grid of ``points`` values with the given ratio, centred on ``center``."""
    k = np.arange(points) - (points - 1) / 2
    return center * ratio**k


def sweep_lambdas(f: AnalyticBoundaryFunction, p: PartitionOfUnity, points: int = 5,
                  ratio: float = SWEEP_RATIO) -> np.ndarray:
    """Geometric lambda grid starting at the median of |f|, or just above every |f_j(0)|.

    Below |f_j(0)| the stopping time is t = 0 and no bound ||g_j|| <= lambda can hold.
    """
    start_vals = np.abs(np.mean(p.w_grid * f.values[None, :], axis=1))
    lam0 = max(float(np.median(np.abs(f.values))), 1.05 * float(start_vals.max()))
    return lam0 * ratio ** np.arange(points)


def _stop_chunk(batch, payload):
    table, lams, wf_exit_fn, config = payload
    vals = table(batch.points)  # (K, npts)
    ends = batch.ends
    wx, fx = wf_exit_fn(batch.exit_angles)
    vals[:, ends] = (wx * fx[None, :])
    K = vals.shape[0]
    P = batch.size
    g = np.empty((len(lams), K, P), dtype=np.complex128)
    crossed = np.zeros((len(lams), K, P), dtype=bool)
    sup = np.empty((K, P))
    for j in range(K):
        for a, lam in enumerate(lams):
            out, hit, s = first_exceedance(batch, table, lam, config, vals=vals[j], component=j)
            g[a, j] = out
            crossed[a, j] = hit
        sup[j] = s
    return {"g": np.moveaxis(g, 2, 0), "crossed": np.moveaxis(crossed, 2, 0), "sup": sup.T,
            "fexit": (wx * fx[None, :]).T}


class _ExitValues:
    """Picklable exit-point evaluation of (w_j, f) by periodic linear interpolation."""

    def __init__(self, w_grid: np.ndarray, f_vals: np.ndarray):
        self.w_grid = w_grid
        self.f_vals = f_vals

    def __call__(self, angles):
        return _interp_grid(self.w_grid, angles), _interp_grid(self.f_vals, angles)


@dataclass
class Decomposition:
    f: AnalyticBoundaryFunction
    q: float
    lambdas: np.ndarray
    partition: PartitionOfUnity
    phi: np.ndarray  # per path
    Delta1: Density  # Delta + sum c_i |w_i|
    f_exit: np.ndarray  # per path f(exit)
    fj_exit: np.ndarray  # (P, K)
    gj: np.ndarray  # (P, n_lambda, K)
    crossed: np.ndarray  # (P, n_lambda, K)
    fj_sup: np.ndarray  # (P, K)
    g: np.ndarray  # (P, n_lambda)
    h: np.ndarray  # (P, n_lambda)
    valid: np.ndarray

    @property
    def hj(self) -> np.ndarray:
        return self.fj_exit[:, None, :] - self.gj

    def gluing_error(self) -> float:
        ok = self.valid
        return float(np.abs(self.g[ok] + self.h[ok] - (self.f_exit * self.phi)[ok, None]).max())


def decompose(f: AnalyticBoundaryFunction, lam, q: float, p: PartitionOfUnity,
              ensemble: PathEnsemble) -> Decomposition:
    """Stopping-time decomposition of f phi at each level in ``lam`` (scalar or array)."""
    lams = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    if np.any(lams <= 0):
        raise ValueError("lambda must be positive")
    if not q > 2:
        raise ValueError("q must exceed 2")
    if (ensemble.config, ensemble.n_paths) != p.ensemble_id:
        raise ValueError("partition and ensemble differ (seed, configuration or size)")
    wg = p.w_grid
    fj = [AnalyticBoundaryFunction.measured(wg[k] * f.values) for k in range(wg.shape[0])]
    table = DiscTable(fj, exit_band=ensemble.config.exit_band)
    exit_fn = _ExitValues(wg, f.values)
    parts = map_ensemble(ensemble, _stop_chunk, (table, list(lams), exit_fn, ensemble.config))
    gj = np.concatenate([r["g"] for r in parts])
    crossed = np.concatenate([r["crossed"] for r in parts])
    sup = np.concatenate([r["sup"] for r in parts])
    fjx = np.concatenate([r["fexit"] for r in parts])
    rec = p.records
    wx, fx = exit_fn(rec.exit_angle)
    wx = wx.T  # (P, K)
    wt = wx * p.theta
    g = np.einsum("pak,pk->pa", gj, wt)
    h = np.einsum("pak,pk->pa", fjx[:, None, :] - gj, wt)
    phi = np.sum(p.theta * wx**2, axis=1)
    D1 = Density(p.Delta.values + np.sum(p.c[:, None] * np.abs(wg), axis=0), p.Delta.floor)
    return Decomposition(f, q, lams, p, phi, D1, fx, fjx, gj, crossed, sup, g, h, rec.valid)


@dataclass
class Theorem6Report:
    q: float
    delta: float
    phi_sup: float
    phi_bound: float
    mass_ratio: float
    mass_exponent: float
    residual: float
    residual_stderr: float
    gluing_error: float
    rows: list = field(default_factory=list)
    truncation: list = field(default_factory=list)
    lambda_exponent: float = float("nan")

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=float)

    def write_sweep_csv(self, path) -> None:
        cols = ["lambda", "g_sup", "h_mass", "f_mass", "bound_ratio", "g_over_lambda", "stopped_bound_ratio"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(cols)
            for r in self.rows:
                wr.writerow([f"{r[c]:.10g}" for c in cols])


def verify_theorem6(d: Decomposition, Delta: Density | None = None, delta: float | None = None) -> Theorem6Report:
    p = d.partition
    Delta = Delta or p.Delta
    delta = p.delta if delta is None else delta
    ok = d.valid
    ang = p.records.exit_angle[ok]
    Dx = _interp_grid(Delta.values, ang)
    D1x = _interp_grid(d.Delta1.values, ang)
    phi = d.phi[ok]
    wg = np.abs(p.w_grid)
    theta_sup = np.abs(p.theta[ok]).max(axis=0)
    phi_bound = float(np.sum(wg.max(axis=1) ** 2 * theta_sup))
    resid = mc_expectation(np.abs(1 - phi) * Dx)
    mass = d.Delta1.values.mean() / Delta.values.mean()
    f_q = mc_expectation(np.abs(d.f_exit[ok]) ** d.q * D1x)
    rows, trunc = [], []
    wsum = np.sum(np.abs(p.w_at_exit()[ok] * p.theta[ok]), axis=1)
    for a, lam in enumerate(d.lambdas):
        g = d.g[ok, a]
        h = d.h[ok, a]
        gj = d.gj[ok, a]
        cr = d.crossed[ok, a]
        # per-path overshoot of the stopped values
        over = np.where(cr, np.abs(gj) / lam - 1, 0.0).max(axis=1).clip(min=0)
        stop_bound = np.abs(g) / ((1 + over) * lam * np.maximum(wsum, 1e-300))
        hm = mc_expectation(np.abs(h) ** 2 * D1x)
        rows.append({
            "lambda": float(lam),
            "g_sup": float(np.abs(g).max()),
            "g_over_lambda": float(np.abs(g).max() / lam),
            "stopped_bound_ratio": float(stop_bound.max()),
            "h_mass": float(hm.mean),
            "h_mass_stderr": hm.stderr,
            "f_mass": float(f_q.mean),
            "bound_ratio": float(hm.mean / (lam ** (2 - d.q) * f_q.mean)),
        })
        hj = np.abs(d.fj_exit[ok] - gj)
        for k in range(gj.shape[1]):
            lhs = np.abs(hj[:, k])
            rhs = 2 * np.abs(d.fj_exit[ok, k]) * (d.fj_sup[ok, k] > lam)
            diff = mc_expectation(lhs - rhs)
            trunc.append({
                "lambda": float(lam),
                "j": int(p.levels[k]),
                "h_abs_mean": float(lhs.mean()),
                "bound_mean": float(rhs.mean()),
                "ok": bool(diff.mean <= 4 * diff.stderr + 1e-15),
            })
    lam_arr = np.array([r["lambda"] for r in rows])
    hm_arr = np.array([r["h_mass"] for r in rows])
    pos = hm_arr > 0
    slope = float(np.polyfit(np.log(lam_arr[pos]), np.log(hm_arr[pos]), 1)[0]) if pos.sum() >= 2 else float("nan")
    return Theorem6Report(
        q=d.q,
        delta=delta,
        phi_sup=float(np.abs(phi).max()),
        phi_bound=phi_bound,
        mass_ratio=float(mass),
        mass_exponent=float(np.log(mass) / np.log(1 / delta)),
        residual=float(resid.mean),
        residual_stderr=resid.stderr,
        gluing_error=d.gluing_error(),
        rows=rows,
        truncation=trunc,
        lambda_exponent=slope,
    )


def mass_exponent_fit(reports: list[Theorem6Report]) -> float:
    return fit_mass_exponent([r.delta for r in reports], [r.mass_ratio for r in reports])


# -- deterministic circle variant ----------------------------------------------------

REG_CELLS = 4


@dataclass
class KislyakovResult:
    B: Density
    g: AnalyticBoundaryFunction
    h: AnalyticBoundaryFunction
    u: AnalyticBoundaryFunction
    weight_report: WeightReport
    report: dict


def kislyakov_circle(b: Density, lam: float, f: AnalyticBoundaryFunction,
                     weight: tuple[Density, WeightReport] | None = None) -> KislyakovResult:
    """B >= b with int B <= 2 int b, and f = g + h with |g| <= lambda, h small in L1(B).

    ``weight`` may pass a precomputed ``kislyakov_weight(b)`` when sweeping lambda.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    B, wrep = weight if weight is not None else kislyakov_weight(b)
    n = f.n
    mod = np.abs(f.values)
    if mod.max() == 0:
        zero = AnalyticBoundaryFunction.constant(0.0, n)
        one = AnalyticBoundaryFunction.constant(1.0, n)
        rep = _kislyakov_report(b, B, zero, zero, f, lam, wrep)
        return KislyakovResult(B, zero, zero, one, wrep, rep)
    reg = np.maximum(mod, poisson_smooth(mod, 1 - REG_CELLS * 2 * np.pi / n))
    v = np.minimum(1.0, lam / np.maximum(reg, 1e-300))
    if np.all(v >= 1.0):
        u = AnalyticBoundaryFunction.constant(1.0, n)
    else:
        u = outer_from_modulus(Density(v, float(v.min())))
    g = AnalyticBoundaryFunction.measured(f.values * u.values)
    h = AnalyticBoundaryFunction.measured(f.values * (1 - u.values))
    rep = _kislyakov_report(b, B, g, h, f, lam, wrep)
    return KislyakovResult(B, g, h, u, wrep, rep)


def _kislyakov_report(b, B, g, h, f, lam, wrep) -> dict:
    Bv = B.values
    mod = np.abs(f.values)
    big = mod > lam
    h_mass = float(np.mean(np.abs(h.values) * Bv))
    f_big = float(np.mean(mod * big * Bv))
    return {
        "lambda": float(lam),
        "g_sup": float(np.abs(g.values).max()),
        "g_over_lambda": float(np.abs(g.values).max() / lam),
        "B_dominates": bool(np.all(Bv >= b.values)),
        "B_mass_ratio": float(Bv.mean() / b.values.mean()),
        "B_maximal_control": float(np.max(hl_maximal(Bv) / Bv)),
        "B_maximal_bound": wrep.maximal_control_bound,
        "h_mass": h_mass,
        "f_mass_above": f_big,
        "h_ratio": h_mass / f_big if f_big > 0 else (0.0 if h_mass == 0 else float("inf")),
        "h_fraction_above": float(np.mean(np.abs(h.values) * Bv * big) / h_mass) if h_mass > 0 else 1.0,
        "gh_sum_error": float(np.abs(g.values + h.values - f.values).max()),
    }
