"""Analytic partitions of unity on path space and their projection to the circle.

For a density D and delta, with M = 1/delta and eps = M^-2:

* D1 is the self-improving weight of D and Psi = outer(D1);
* every path is stopped when |Psi(B_t)| first exceeds M^j; theta_-1 = Psi(0)/Psi(exit)
  and theta_i = d_i / Psi(exit) with d_i the ladder increments, so sum theta_i = 1;
* Havin pairs (alpha_i, beta_i) are built on the boundary sets
  E_i = {nt_maximal(D1) > M^i} (E_-1 = E_0 = whole circle) and
  w_i = 5 alpha_i prod_{s>=8} beta_{i+s}^s, lifted to paths through the exit point;
* c_i = M^(i+8).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circle import (
    AnalyticBoundaryFunction,
    DegenerateFactorization,
    Density,
    inner_outer,
    outer_from_modulus,
    outer_power,
)
from .engine import (
    DiscTable,
    EnsembleFailure,
    PathEnsemble,
    concat_results,
    ladder_batch,
    map_ensemble,
    mc_expectation,
    project_N,
)
from .havin import BoundarySet, HavinPair, havin_pair
from .weights import WeightReport, build_weight, nt_maximal

PRODUCT_START = 8
OVERSHOOT_LIMIT = 0.5
OVERSHOOT_FRACTION = 0.01
# wide cones make the lifted sets E_i catch almost every path whose maximal function
# crosses M^i, which is what the residual estimate needs
SET_APERTURE = 16.0


def _interp_grid(values: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Periodic linear interpolation of grid samples (rows of ``values``) at angles."""
    n = values.shape[-1]
    x = np.mod(angles, 2 * np.pi) / (2 * np.pi) * n
    i0 = np.floor(x).astype(np.int64) % n
    t = x - np.floor(x)
    return (1 - t) * values[..., i0] + t * values[..., (i0 + 1) % n]


@dataclass
class PathRecords:
    """Per-path ladder data shared by every partition built from one weight."""

    exit_angle: np.ndarray
    valid: np.ndarray
    start: np.ndarray
    exit: np.ndarray
    sup: np.ndarray
    stopped: dict  # M -> (P, J+1) complex
    times: dict
    realized: dict
    overshoot: dict


def _ladder_chunk(batch, payload):
    table, Ms, jmax, config = payload
    return ladder_batch(batch, table, Ms, jmax, config)


def run_ladders(Psi: AnalyticBoundaryFunction, Ms, jmax: dict, ensemble: PathEnsemble) -> PathRecords:
    table = DiscTable(Psi, exit_band=ensemble.config.exit_band)
    parts = map_ensemble(ensemble, _ladder_chunk, (table, list(Ms), jmax, ensemble.config))
    r = concat_results(parts)
    return PathRecords(
        exit_angle=r["exit_angle"],
        valid=r["valid"],
        start=r["start"],
        exit=r["exit"],
        sup=r["sup"],
        stopped={M: r[f"values_{M}"] for M in Ms},
        times={M: r[f"times_{M}"] for M in Ms},
        realized={M: r[f"realized_{M}"] for M in Ms},
        overshoot={M: r[f"overshoot_{M}"] for M in Ms},
    )


@dataclass
class PartitionOfUnity:
    delta: float
    M: float
    eps: float
    Delta: Density
    Delta1: Density
    Psi: AnalyticBoundaryFunction
    nt: np.ndarray
    i_max: int
    levels: np.ndarray  # i = -1 .. J
    sets: list
    pairs: list
    w: list
    c: np.ndarray
    theta: np.ndarray  # (P, L) complex
    records: PathRecords
    weight_report: WeightReport
    ensemble_id: tuple
    info: dict = field(default_factory=dict)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def w_grid(self) -> np.ndarray:
        return np.stack([wi.values for wi in self.w])

    def w_at_exit(self) -> np.ndarray:
        """(P, L) values w_i(exit point) per path."""
        return _interp_grid(self.w_grid, self.records.exit_angle).T

    def phi(self) -> np.ndarray:
        """Per-path sum_i theta_i w_i^2."""
        return np.sum(self.theta * self.w_at_exit() ** 2, axis=1)

    @property
    def increments(self) -> np.ndarray:
        sv = self.records.stopped[self.M]
        ext = np.concatenate([sv, self.records.exit[:, None]], axis=1)
        return np.diff(ext, axis=1)

    def save(self, path) -> None:
        """Weight, outer Psi coefficients, per-level Havin pairs and per-path ladder records."""
        np.savez_compressed(
            path,
            delta=self.delta,
            M=self.M,
            eps=self.eps,
            Delta=self.Delta.values,
            Delta1=self.Delta1.values,
            Psi_coeffs=self.Psi.coeffs,
            levels=self.levels,
            c=self.c,
            alpha=np.stack([p.alpha.values for p in self.pairs]),
            beta=np.stack([p.beta.values for p in self.pairs]),
            w=self.w_grid,
            exit_angle=self.records.exit_angle,
            valid=self.records.valid,
            stopped=self.records.stopped[self.M],
            times=self.records.times[self.M],
            realized=self.records.realized[self.M],
            theta=self.theta,
        )


def _levels_for(M: float, nt_max: float) -> int:
    return max(1, int(np.ceil(np.log(nt_max) / np.log(M) - 1e-12)))


def partition_family(Delta: Density, deltas, ensemble: PathEnsemble, operator: str = "hl",
                     aperture: float = SET_APERTURE, C: float | None = None) -> list[PartitionOfUnity]:
    """Partitions for several delta sharing the weight, Psi and one pass over the paths."""
    deltas = [float(d) for d in deltas]
    if any(not 0 < d < 1 for d in deltas):
        raise ValueError("delta must lie in (0, 1)")
    if abs(Delta.mass() - 1) > 1e-9:
        raise ValueError("density must be normalized to mean one")
    D1, wrep = build_weight(Delta, operator, C)
    Psi = outer_from_modulus(D1)
    nt = nt_maximal(D1, aperture)
    Ms = [1.0 / d for d in deltas]
    jmax = {M: _levels_for(M, nt.max()) for M in Ms}
    records = run_ladders(Psi, Ms, jmax, ensemble)
    out = []
    for d, M in zip(deltas, Ms):
        out.append(_assemble(Delta, D1, Psi, nt, d, M, jmax[M], records, wrep, ensemble))
    return out


def build_partition(Delta: Density, delta: float, ensemble: PathEnsemble, **kw) -> PartitionOfUnity:
    return partition_family(Delta, [delta], ensemble, **kw)[0]


def _assemble(Delta, D1, Psi, nt, delta, M, J, records, wrep, ensemble) -> PartitionOfUnity:
    kappa = records.overshoot[M]
    valid = records.valid
    bad = np.mean(kappa[valid] > OVERSHOOT_LIMIT)
    if bad > OVERSHOOT_FRACTION:
        raise EnsembleFailure(
            f"ladder overshoot above {OVERSHOOT_LIMIT} on {bad:.2%} of paths; refine the step policy"
        )
    eps = M**-2
    n = Delta.n
    levels = np.arange(-1, J + 1)
    sets = []
    for i in levels:
        if i <= 0:
            sets.append(BoundarySet.full(n))
        else:
            sets.append(BoundarySet(nt > M**i))
    pairs: list[HavinPair] = [havin_pair(E, eps) for E in sets]
    beta = {int(i): p.beta.values for i, p in zip(levels, pairs)}
    w = []
    for i, p in zip(levels, pairs):
        vals = 5 * p.alpha.values
        for s in range(PRODUCT_START, J - int(i) + 1):
            vals = vals * beta[int(i) + s] ** s
        w.append(AnalyticBoundaryFunction.measured(vals))
    c = M ** (levels.astype(float) + PRODUCT_START)
    # theta_-1 = Psi(0)/Psi(exit), theta_i = d_i / Psi(exit)
    sv = records.stopped[M]
    ext = np.concatenate([sv, records.exit[:, None]], axis=1)
    d = np.diff(ext, axis=1)
    theta = np.concatenate([records.start[:, None], d], axis=1) / records.exit[:, None]
    return PartitionOfUnity(
        delta=delta,
        M=M,
        eps=eps,
        Delta=Delta,
        Delta1=D1,
        Psi=Psi,
        nt=nt,
        i_max=J,
        levels=levels,
        sets=sets,
        pairs=pairs,
        w=w,
        c=c,
        theta=theta,
        records=records,
        weight_report=wrep,
        ensemble_id=(ensemble.config, ensemble.n_paths),
    )


@dataclass
class PartitionReport:
    delta: float
    M: float
    n_paths: int
    n_invalid: int
    theta_sum_error: float
    theta_max: dict
    sum_w_max: float
    w_bound_violations: int
    w_over_5alpha: float
    c_violations: int
    c_ratio_max: float
    sum_c_w1: float
    fitted_C: float
    residual: float
    residual_stderr: float
    support_violations: int
    increment_violations: int
    overshoot_q99: float
    overshoot_max: float
    leak: dict
    havin_passed: bool

    @property
    def residual_ok(self) -> bool:
        return self.residual <= self.delta + 3 * self.residual_stderr

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["residual_ok"] = self.residual_ok
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=float)


def verify_partition(p: PartitionOfUnity, Delta: Density | None = None,
                     ensemble: PathEnsemble | None = None) -> PartitionReport:
    Delta = Delta or p.Delta
    if ensemble is not None and (ensemble.config, ensemble.n_paths) != p.ensemble_id:
        raise ValueError("partition was built on a different ensemble")
    rec = p.records
    ok = rec.valid
    theta = p.theta[ok]
    sums = theta.sum(axis=1)
    wg = np.abs(p.w_grid)
    alpha5 = np.stack([5 * np.abs(pr.alpha.values) for pr in p.pairs])
    D = Delta.values
    c_ratio = wg * D[None, :] / p.c[:, None]
    phi = p.phi()[ok]
    dex = _interp_grid(D, rec.exit_angle[ok])
    resid = np.abs(1 - phi) * dex
    mc = mc_expectation(resid)
    # support: d_i != 0 only if sup >= M^i (i >= 1); |d_i| <= 2 (1 + kappa) M^(i+1)
    d = p.increments[ok]
    sup = rec.sup[ok]
    kappa = rec.overshoot[p.M][ok]
    sup_viol = 0
    inc_viol = 0
    for k in range(1, d.shape[1]):
        lev = p.M**k
        nz = np.abs(d[:, k]) > 1e-12 * lev
        sup_viol += int(np.sum(nz & (sup < lev * (1 - 1e-9))))
    for k in range(d.shape[1]):
        inc_viol += int(np.sum(np.abs(d[:, k]) > 2 * (1 + kappa) * p.M ** (k + 1) * (1 + 1e-9)))
    # leak: paths crossing M^i whose exit lies outside the boundary set E_i
    leak = {}
    for idx, i in enumerate(p.levels):
        if i < 1:
            continue
        crossed = sup > p.M**i
        if crossed.sum() == 0:
            continue
        inside = _interp_grid(p.sets[idx].mask.astype(float), rec.exit_angle[ok]) > 0.5
        leak[int(i)] = float(np.mean(crossed & ~inside) / np.mean(crossed))
    s = float(np.sum(p.c * wg.mean(axis=1)))
    return PartitionReport(
        delta=p.delta,
        M=p.M,
        n_paths=int(ok.size),
        n_invalid=int((~ok).sum()),
        theta_sum_error=float(np.abs(sums - 1).max()) if sums.size else 0.0,
        theta_max={int(i): float(np.abs(theta[:, k]).max()) for k, i in enumerate(p.levels)},
        sum_w_max=float(wg.sum(axis=0).max()),
        w_bound_violations=int(np.sum(wg > 5 * (1 + 1e-9))),
        w_over_5alpha=float(np.max(wg - alpha5)),
        c_violations=int(np.sum(c_ratio > 1)),
        c_ratio_max=float(c_ratio.max()),
        sum_c_w1=s,
        fitted_C=float(np.log(s) / np.log(1 / p.delta)),
        residual=float(mc.mean),
        residual_stderr=mc.stderr,
        support_violations=sup_viol,
        increment_violations=inc_viol,
        overshoot_q99=float(np.quantile(kappa, 0.99)),
        overshoot_max=float(kappa.max()),
        leak=leak,
        havin_passed=all(pr.property_report.get("passed", False) for pr in p.pairs),
    )


def fit_mass_exponent(deltas, sums) -> float:
    """Least-squares C in log(sum c_i ||w_i||_1) = C log(1/delta) + const."""
    x = np.log(1 / np.asarray(deltas, float))
    y = np.log(np.asarray(sums, float))
    if x.size < 2:
        return float(y[0] / x[0])
    return float(np.polyfit(x, y, 1)[0])


# -- projection to the circle -----------------------------------------------------


@dataclass
class CircleFamily:
    levels: list
    g: list
    gamma: list
    tau: list
    c: np.ndarray
    inner_tol: list
    projection_error: float
    report: dict


def project_theorem1(p: PartitionOfUnity, f: Density, ensemble: PathEnsemble | None = None,
                     bins: int = 256) -> CircleFamily:
    """g_i = N(theta_i w_i^2), gamma_i its inner factor and tau_i the square root of its outer factor."""
    if ensemble is not None and (ensemble.config, ensemble.n_paths) != p.ensemble_id:
        raise ValueError("partition was built on a different ensemble")
    if np.max(np.abs(f.values - p.Delta.values)) > 1e-12 * f.values.max():
        raise ValueError("the partition must be built from the density f itself (Delta = Mf)")
    rec = p.records
    ok = rec.valid
    wx = p.w_at_exit()
    n = f.n
    levels, gs, gammas, taus, tols, cs = [], [], [], [], [], []
    errs = []
    for k, i in enumerate(p.levels):
        vals = p.theta[:, k] * wx[:, k] ** 2
        if np.abs(vals[ok]).max() == 0:
            continue
        proj = project_N(vals, rec.exit_angle, n, bins=bins, valid=ok)
        g = proj.function
        errs.append(proj.binning_error)
        try:
            gamma, a, tol = inner_outer(g)
        except DegenerateFactorization:
            continue
        mod = np.abs(a.values)
        tau = outer_power(Density(mod, mod.min()), 0.5)
        levels.append(int(i))
        gs.append(g)
        gammas.append(gamma)
        taus.append(tau)
        tols.append(tol)
        cs.append(p.c[k])
    cs = np.array(cs)
    G = np.stack([g.values for g in gs])
    Gam = np.stack([g.values for g in gammas])
    T = np.stack([t.values for t in taus])
    fv = f.values
    total = np.sum(Gam * T**2, axis=0)
    proj_tol = float(np.sqrt(np.sum(np.square(errs))))
    resid = float(np.mean(np.abs(1 - total) * fv))
    report = {
        "gamma_sup": float(np.abs(Gam).max()),
        "inner_tolerance": float(max(tols)),
        "sum_tau2_gamma": float(np.abs(T**2 * Gam).sum(axis=0).max()),
        "sum_tau_sq": float((np.abs(T) ** 2).sum(axis=0).max()),
        "tau_f_ratio_max": float(np.max(np.abs(T) * fv[None, :] / cs[:, None])),
        "tau_f_violations": int(np.sum(np.abs(T) * fv[None, :] > cs[:, None])),
        "sum_c_tau1": float(np.sum(cs * np.abs(T).mean(axis=1))),
        "fitted_C": float(np.log(np.sum(cs * np.abs(T).mean(axis=1))) / np.log(1 / p.delta)),
        "residual": resid,
        "projection_tolerance": proj_tol,
        "residual_bound": p.delta + proj_tol,
        "sum_g_vs_gamma_tau": float(np.abs(G.sum(axis=0) - total).max()),
    }
    report["residual_ok"] = resid <= report["residual_bound"]
    return CircleFamily(levels, gs, gammas, taus, cs, tols, proj_tol, report)
