"""Desk-scale summing operators: Pietsch certificates, splitting and witness lower bounds.

A :class:`FiniteOperator` samples a function at m grid points and applies a d x m
matrix.  Certificates and witnesses live in the family of analytic trigonometric
polynomials of degree at most ``degree``: on that family the best Pietsch
constant for a density f is the top generalized eigenvalue of
(V^H A^H A V, W(f)), with V the point-evaluation matrix and W(f) the Gram matrix
of the weighted L2(f) norm.

The splitting lifts the certificate density to paths, builds a partition and
decomposes b phi = g + h for witnesses b in H^q(Delta_1) at the balancing level
lambda = (pi_2 / ||S||)^(2/q); the residual operator of a round is
S diag(N(1 - phi)) restricted to the evaluation points.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linprog

from .circle import CircleGrid, DEFAULT_N, Density
from .engine import (
    DiscTable,
    PathEnsemble,
    batch_values,
    first_exceedance,
    map_ensemble,
    project_N,
)
from .partition import PartitionOfUnity, _interp_grid, partition_family
from .weights import default_constant, measure_operator_norm

DEGREE = 16
COARSE = 256
MAX_M, MAX_D = 64, 16


class NonContraction(RuntimeError):
    """The residual operator did not shrink between splitting rounds."""


@dataclass(frozen=True, eq=False)
class FiniteOperator:
    indices: np.ndarray  # grid indices of the evaluation points
    matrix: np.ndarray  # (d, m) complex
    n: int = DEFAULT_N

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        A = np.atleast_2d(np.asarray(self.matrix, dtype=np.complex128))
        if idx.ndim != 1 or A.shape[1] != idx.size:
            raise ValueError("matrix must have one column per evaluation point")
        if idx.size > MAX_M or A.shape[0] > MAX_D:
            raise ValueError(f"desk scale requires m <= {MAX_M} and d <= {MAX_D}")
        if np.unique(idx).size != idx.size or idx.min() < 0 or idx.max() >= self.n:
            raise ValueError("evaluation points must be distinct grid indices")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "matrix", A)

    @property
    def m(self) -> int:
        return self.indices.size

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def points(self) -> np.ndarray:
        return 2 * np.pi * self.indices / self.n

    def apply_values(self, c: np.ndarray) -> np.ndarray:
        return self.matrix @ c

    def apply(self, x) -> np.ndarray:
        vals = getattr(x, "values", x)
        return self.matrix @ np.asarray(vals)[..., self.indices].T

    def scaled(self, c: float) -> "FiniteOperator":
        return FiniteOperator(self.indices, c * self.matrix, self.n)

    def with_column_weights(self, rho: np.ndarray) -> "FiniteOperator":
        return FiniteOperator(self.indices, self.matrix * rho[None, :], self.n)

    @classmethod
    def random(cls, m: int, d: int, seed: int = 0, n: int = DEFAULT_N) -> "FiniteOperator":
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(n, size=m, replace=False))
        A = (rng.standard_normal((d, m)) + 1j * rng.standard_normal((d, m))) / np.sqrt(2 * m)
        return cls(idx, A, n)

    @classmethod
    def rank_one(cls, index: int, y, n: int = DEFAULT_N) -> "FiniteOperator":
        y = np.asarray(y, dtype=np.complex128).reshape(-1, 1)
        return cls(np.array([index]), y, n)

    def to_text(self) -> str:
        lines = [f"{self.m} {self.d} {self.n}", " ".join(str(int(i)) for i in self.indices)]
        for row in self.matrix:
            lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FiniteOperator":
        rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        m, d, n = (int(v) for v in rows[0].split())
        idx = np.array([int(v) for v in rows[1].split()])
        A = np.array([[complex(*map(float, tok.split(","))) for tok in rows[2 + r].split()] for r in range(d)])
        if idx.size != m or A.shape != (d, m):
            raise ValueError("operator file header does not match its body")
        return cls(idx, A, n)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# finite operator: m d n / point indices / d rows of re,im entries\n")
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "FiniteOperator":
        with open(path) as fh:
            return cls.from_text(fh.read())


def operator_norm(S: FiniteOperator, starts: int = 32, iters: int = 300, seed: int = 0) -> float:
    """max ||A c|| over |c_i| <= 1 (the sup-norm ball on finitely many boundary points)."""
    A = S.matrix
    if not np.any(A):
        return 0.0
    G = A.conj().T @ A
    rng = np.random.default_rng(seed)
    best = 0.0
    inits = [np.exp(1j * np.angle(np.linalg.svd(A)[2][0].conj()))]
    inits += [np.exp(2j * np.pi * rng.random(S.m)) for _ in range(starts)]
    for c in inits:
        for _ in range(iters):
            v = G @ c
            nc = np.where(np.abs(v) > 0, v / np.maximum(np.abs(v), 1e-300), c)
            if np.allclose(nc, c, atol=1e-13):
                break
            c = nc
        best = max(best, float(np.linalg.norm(A @ c)))
    return best


# -- Pietsch certificates -----------------------------------------------------------


def _vander(angles: np.ndarray, degree: int) -> np.ndarray:
    return np.exp(1j * np.outer(angles, np.arange(degree + 1)))


def peak_coeffs(t: float, degree: int) -> np.ndarray:
    """Coefficients of ((1 + e^{i(theta - t)}) / 2)^degree: modulus 1 at t, below 1 elsewhere."""
    from scipy.special import comb

    k = np.arange(degree + 1)
    return comb(degree, k) / 2.0**degree * np.exp(-1j * k * t)


@dataclass
class PietschCertificate:
    density: np.ndarray  # grid density with mean one
    pi2_upper: float
    degree: int
    iterations: int
    solver_value: float
    converged: bool

    def bound(self, x_values: np.ndarray) -> np.ndarray:
        return self.pi2_upper * np.sqrt(np.mean(np.abs(x_values) ** 2 * self.density, axis=-1))

    def to_dict(self) -> dict:
        return {
            "pi2_upper": self.pi2_upper,
            "degree": self.degree,
            "iterations": self.iterations,
            "solver_value": self.solver_value,
            "gap": self.pi2_upper / self.solver_value - 1 if self.solver_value > 0 else 0.0,
            "converged": self.converged,
        }


def _gram(g_fine: np.ndarray, degree: int) -> np.ndarray:
    n = g_fine.size
    c = np.fft.fft(g_fine) / n  # c[m] = mean(g e^{-im theta})
    k = np.arange(degree + 1)
    return c[(k[:, None] - k[None, :]) % n]


def pietsch_constant(S: FiniteOperator, density: np.ndarray, degree: int = DEGREE) -> float:
    """Smallest c with ||Sx|| <= c (mean |x|^2 f)^(1/2) on the family, for a fixed density f."""
    f = np.asarray(density, dtype=np.float64)
    f = f / f.mean()
    V = _vander(S.points, degree)
    Q = V.conj().T @ (S.matrix.conj().T @ S.matrix) @ V
    W = _gram(f, degree)
    lam = eigh((Q + Q.conj().T) / 2, (W + W.conj().T) / 2, eigvals_only=True)[-1]
    return float(np.sqrt(max(lam, 0.0)))


def _cell_grams(n: int, degree: int, coarse: int) -> np.ndarray:
    """W_j = integral over coarse cell j of conj(v) v^T, v(theta) = (e^{ik theta})_k."""
    F = _vander(CircleGrid(n).angles, degree).reshape(coarse, n // coarse, degree + 1)
    return np.einsum("jck,jcl->jkl", F.conj(), F) / n


def _real_embedding(M: np.ndarray) -> np.ndarray:
    return np.block([[M.real, -M.imag], [M.imag, M.real]])


def pietsch_fit(S: FiniteOperator, degree: int = DEGREE, coarse: int = COARSE, reg: float = 1e-6,
                solver: str = "CLARABEL") -> PietschCertificate:
    """Density f, piecewise constant on ``coarse`` cells, minimizing the Pietsch constant.

    Solves min mean(g) subject to W(g) >= Q (a small semidefinite program) and
    then rescales the floored solution by the top generalized eigenvalue of
    (Q, W(g)), so the returned constant is exact for the final density whatever
    the solver accuracy.
    """
    import cvxpy as cp

    n = S.n
    if not np.any(S.matrix):
        raise ValueError("operator is zero")
    if n % coarse:
        raise ValueError("coarse must divide the grid size")
    scale = np.linalg.norm(S.matrix)
    A = S.matrix / scale
    V = _vander(S.points, degree)
    Q = V.conj().T @ (A.conj().T @ A) @ V
    Q = (Q + Q.conj().T) / 2
    Wj = _cell_grams(n, degree, coarse)
    k = 2 * (degree + 1)
    Wr = np.stack([_real_embedding(w) for w in Wj]).reshape(coarse, -1).T
    g = cp.Variable(coarse, nonneg=True)
    M = cp.reshape(Wr @ g, (k, k), order="C") - _real_embedding(Q)
    prob = cp.Problem(cp.Minimize(cp.sum(g) / coarse), [(M + M.T) / 2 >> 0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prob.solve(solver=solver)
    if g.value is None:
        raise RuntimeError(f"Pietsch program failed: {prob.status}")
    gv = np.maximum(g.value, 0.0)
    gv = gv + reg * gv.mean()
    W = np.einsum("j,jkl->kl", gv, Wj)
    lam = float(eigh(Q, (W + W.conj().T) / 2, eigvals_only=True)[-1])
    gv = gv * max(lam, 1e-300)
    g_fine = np.repeat(gv, n // coarse)
    return PietschCertificate(
        density=g_fine / g_fine.mean(),
        pi2_upper=float(np.sqrt(g_fine.mean())) * scale,
        degree=degree,
        iterations=int(prob.solver_stats.num_iters or 0),
        solver_value=float(np.sqrt(max(prob.value, 0.0))) * scale,
        converged=prob.status in ("optimal", "optimal_inaccurate"),
    )


def random_witnesses(count: int, degree: int = DEGREE, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((count, degree + 1)) + 1j * rng.standard_normal((count, degree + 1))) / np.sqrt(2)


def certificate_violations(S: FiniteOperator, cert: PietschCertificate, count: int = 1000,
                           seed: int = 12345) -> tuple[int, float]:
    """Held-out check on random polynomials in the family; returns (violations, worst ratio)."""
    a = random_witnesses(count, cert.degree, seed)
    x = a @ _vander(CircleGrid(S.n).angles, cert.degree).T  # (count, n)
    lhs = np.linalg.norm(S.apply(x), axis=0)
    rhs = cert.bound(x)
    ratio = lhs / rhs
    return int(np.sum(ratio > 1 + 1e-9)), float(ratio.max())


# -- lower bounds ---------------------------------------------------------------------


def _weak_lp(s: np.ndarray, X: np.ndarray, p: float) -> float:
    """max sum b_i s_i^p subject to sum b_i |x_i(t)|^p <= 1 on the grid, b >= 0; returns value^(1/p).

    Solved by constraint generation: start from a coarse subgrid plus each
    witness's peak, add the violated grid points and resolve until the full
    grid is feasible.
    """
    if not np.any(s > 0):
        return 0.0
    cons = np.abs(X.T) ** p  # (n, k)
    n = cons.shape[0]
    active = np.zeros(n, dtype=bool)
    active[:: max(n // 128, 1)] = True
    active[np.argmax(cons, axis=0)] = True
    c = -(s**p)
    while True:
        rows = cons[active]
        res = linprog(c, A_ub=rows, b_ub=np.ones(rows.shape[0]), bounds=(0, None), method="highs")
        if res.status != 0:
            raise RuntimeError(f"witness LP failed: {res.message}")
        load = cons @ res.x
        bad = load > 1 + 1e-12
        if not bad.any():
            return float((-res.fun) ** (1.0 / p))
        # scaling down the solution keeps it feasible; stop early if that is already tight
        new = np.flatnonzero(bad & ~active)
        if new.size == 0:
            return float((-res.fun / load.max()) ** (1.0 / p))
        worst = new[np.argsort(load[new])[::-1][:64]]
        active[worst] = True


@dataclass
class LowerBound:
    value: float
    family: np.ndarray  # (k, D+1) coefficients
    p: float

    def evaluate(self, S: FiniteOperator, p: float) -> float:
        """Same witness family, another exponent."""
        return family_ratio(S, self.family, p)


def family_ratio(S: FiniteOperator, coeffs: np.ndarray, p: float) -> float:
    deg = coeffs.shape[1] - 1
    X = coeffs @ _vander(CircleGrid(S.n).angles, deg).T
    s = np.linalg.norm(S.apply(X), axis=0)
    return _weak_lp(s, X, p)


def summing_lower_bound(S: FiniteOperator, p: float, budget: int = 100, k: int = 32,
                        degree: int = DEGREE, seed: int = 0) -> LowerBound:
    """Random plus local search over witness families of at most k polynomials."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if not np.any(S.matrix):
        return LowerBound(0.0, np.zeros((1, degree + 1), complex), p)
    rng = np.random.default_rng(seed)
    peaks = np.array([peak_coeffs(t, degree) for t in S.points])
    # norm maximizer phases spread over the points
    G = S.matrix.conj().T @ S.matrix
    _, v = np.linalg.eigh(G)
    pool = [peaks]
    for col in v[:, ::-1][:, : min(4, S.m)].T:
        pool.append((np.exp(1j * np.angle(col))[:, None] * peaks).sum(axis=0, keepdims=True) / S.m)
    pool = np.concatenate(pool)

    def score(fam):
        return family_ratio(S, fam, p)

    best = pool[: min(k, len(pool))]
    best_val = score(best)
    # a single witness needs no program: the value is ||Sx|| / ||x||_inf
    Xp = peaks @ _vander(CircleGrid(S.n).angles, degree).T
    singles = np.linalg.norm(S.apply(Xp), axis=0) / np.abs(Xp).max(axis=1)
    i = int(np.argmax(singles))
    if singles[i] > best_val:
        best, best_val = peaks[i : i + 1], float(singles[i])
    for _ in range(budget):
        size = int(rng.integers(1, k + 1))
        choice = rng.choice(len(pool), size=min(size, len(pool)), replace=False)
        fam = pool[choice] * np.exp(2j * np.pi * rng.random(len(choice)))[:, None]
        if rng.random() < 0.5:
            fam = fam + 0.3 * random_witnesses(len(choice), degree, int(rng.integers(1 << 30))) / (degree + 1)
        val = score(fam)
        if val > best_val:
            best, best_val = fam, val
    return LowerBound(best_val, best, p)


# -- splitting --------------------------------------------------------------------------


class _ProductEval:
    """z -> w_j(z) * x(z) for a table of weights and a polynomial witness."""

    single = True

    def __init__(self, table: DiscTable, j: int, coeffs: np.ndarray):
        self.table, self.j, self.coeffs = table, j, coeffs

    def __call__(self, z):
        return self.table(z)[self.j] * np.polynomial.polynomial.polyval(z, self.coeffs)


def _witness_chunk(batch, payload):
    table, coeffs, lam, exit_fn, config = payload
    wv = batch_values(batch, table)  # (K, npts)
    ends = batch.ends
    wx = exit_fn(batch.exit_angles)  # (K, P)
    wv[:, ends] = wx
    deg = coeffs.shape[1] - 1
    xv = coeffs @ np.vander(batch.points, deg + 1, increasing=True).T  # (W, npts)
    xe = coeffs @ np.vander(batch.exit_points, deg + 1, increasing=True).T  # (W, P)
    xv[:, ends] = xe
    K, P, Wn = wv.shape[0], batch.size, coeffs.shape[0]
    # stopped values default to exit values; only pairs that can reach lam need the path scan
    g = np.einsum("wp,kp->pwk", xe, wx)
    wmax = np.abs(wv).max(axis=1)
    xmax = np.abs(xv).max(axis=1)
    for w in range(Wn):
        for j in range(K):
            if wmax[j] * xmax[w] <= lam:
                continue
            vals = wv[j] * xv[w]
            out, _, _ = first_exceedance(batch, _ProductEval(table, j, coeffs[w]), lam, config, vals=vals)
            g[:, w, j] = out
    return {"g": g, "x_exit": xe.T}


LIFT_FLOOR = 1e-3


def certificate_partitions(cert: PietschCertificate, deltas, ensemble: PathEnsemble) -> list:
    """Partitions of unity against the (floored) certificate density, one per delta.

    Certificate densities can be sharply concentrated, so the weight constant
    is raised to 1.2 times the maximal operator's measured growth on this
    density when that exceeds the suite default.
    """
    f = Density.from_samples(cert.density, floor_rel=LIFT_FLOOR)
    C = max(default_constant("hl", f.n), 1.2 * measure_operator_norm("hl", [f]))
    return partition_family(f, list(deltas), ensemble, C=C)


@dataclass
class SplitReport:
    q: float
    delta: float
    lam: float
    op_norm: float
    pi2: float
    balance_error: float
    target: float
    certified_ratio: np.ndarray  # per witness
    main_ratio: np.ndarray  # ||U(b phi)|| / target per witness
    error_norm: np.ndarray  # ||U(b(1-phi))|| per witness
    error_ratio: np.ndarray  # error_norm / (delta^(1/2) pi2)
    error_norm_raw: np.ndarray  # ||U(b(1-phi))|| for the unnormalized draw (identical across delta)
    gluing_error: float
    unweighted_norms: np.ndarray
    residual_weights: np.ndarray  # N(1 - phi) at the evaluation points
    partition_delta: float = 0.0
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "delta": self.delta,
            "lambda": self.lam,
            "op_norm": self.op_norm,
            "pi2_upper": self.pi2,
            "balance_error": self.balance_error,
            "target": self.target,
            "certified_ratio_max": float(self.certified_ratio.max()),
            "main_ratio_max": float(self.main_ratio.max()),
            "error_norm_max": float(self.error_norm.max()),
            "error_ratio_max": float(self.error_ratio.max()),
            "error_ratio_mean": float(self.error_ratio.mean()),
            "gluing_error": self.gluing_error,
            "unweighted_norm_range": [float(self.unweighted_norms.min()), float(self.unweighted_norms.max())],
            **self.info,
        }


def balancing_lambda(op_norm: float, pi2: float, q: float) -> float:
    """lambda with ||S|| lambda = pi_2 lambda^(1 - q/2)."""
    return (pi2 / op_norm) ** (2.0 / q)


class _ExitW:
    def __init__(self, w_grid):
        self.w_grid = w_grid

    def __call__(self, ang):
        return _interp_grid(self.w_grid, ang)


def split_operator(S: FiniteOperator, cert: PietschCertificate, q: float, delta: float,
                   ensemble: PathEnsemble, witnesses: int = 50, seed: int = 0, bins: int = 128,
                   partition: PartitionOfUnity | None = None) -> SplitReport:
    if not q > 2:
        raise ValueError("q must exceed 2")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    p = partition if partition is not None else certificate_partitions(cert, [delta], ensemble)[0]
    norm = operator_norm(S)
    pi2 = cert.pi2_upper
    lam = balancing_lambda(norm, pi2, q)
    target = norm ** (1 - 2 / q) * pi2 ** (2 / q)
    balance = abs(norm * lam - pi2 * lam ** (1 - q / 2)) / (norm * lam)
    coeffs, unweighted, wnorm = _weighted_witnesses(S, p, q, witnesses, cert.degree, seed)
    table = DiscTable(list(p.w), exit_band=ensemble.config.exit_band)
    parts = map_ensemble(ensemble, _witness_chunk, (table, coeffs, lam, _ExitW(p.w_grid), ensemble.config))
    gj = np.concatenate([r["g"] for r in parts])  # (P, W, K)
    xx = np.concatenate([r["x_exit"] for r in parts])  # (P, W)
    rec = p.records
    ok = rec.valid
    wx = p.w_at_exit()  # (P, K)
    wt = wx * p.theta
    fj = xx[:, :, None] * wx[:, None, :]
    g = np.einsum("pwk,pk->pw", gj, wt)
    h = np.einsum("pwk,pk->pw", fj - gj, wt)
    phi = p.phi()
    glue = float(np.abs(g[ok] + h[ok] - xx[ok] * phi[ok, None]).max())
    Dx = _interp_grid(p.Delta.values, rec.exit_angle)
    certified = np.empty(witnesses)
    main = np.empty(witnesses)
    err = np.empty(witnesses)
    for w in range(witnesses):
        gsup = np.abs(g[ok, w]).max()
        hmass = np.sqrt(np.mean(np.abs(h[ok, w]) ** 2 * Dx[ok]))
        certified[w] = (norm * gsup + pi2 * hmass) / target
        Ub = S.apply(project_N(xx[:, w] * phi, rec.exit_angle, S.n, bins=bins, valid=ok).function)
        main[w] = np.linalg.norm(Ub) / target
        Ue = S.apply(project_N(xx[:, w] * (1 - phi), rec.exit_angle, S.n, bins=bins, valid=ok).function)
        err[w] = np.linalg.norm(Ue)
    rho = project_N(1 - phi, rec.exit_angle, S.n, bins=bins, valid=ok).function.values[S.indices]
    return SplitReport(
        q=q,
        delta=delta,
        lam=lam,
        op_norm=norm,
        pi2=pi2,
        balance_error=float(balance),
        target=target,
        certified_ratio=certified,
        main_ratio=main,
        error_norm=err,
        error_ratio=err / (np.sqrt(delta) * pi2),
        error_norm_raw=err * wnorm,
        gluing_error=glue,
        unweighted_norms=unweighted,
        residual_weights=rho,
        partition_delta=p.delta,
        info={"residual_weight_max": float(np.abs(rho).max()), "witnesses": witnesses},
    )


@dataclass
class ErrorProfile:
    """Error terms ||S N(b(1 - phi))|| of one witness draw, without the stopping scan."""

    delta: float
    error_norm: np.ndarray  # normalized witnesses
    error_norm_raw: np.ndarray  # unnormalized draw


def _weighted_witnesses(S: FiniteOperator, p: PartitionOfUnity, q: float, witnesses: int, deg: int, seed: int):
    D1 = p.Delta.values + np.sum(p.c[:, None] * np.abs(p.w_grid), axis=0)
    coeffs = random_witnesses(witnesses, deg, seed)
    Xg = coeffs @ _vander(CircleGrid(S.n).angles, deg).T
    unweighted = np.mean(np.abs(Xg) ** q, axis=1) ** (1 / q)
    wnorm = np.mean(np.abs(Xg) ** q * D1[None, :], axis=1) ** (1 / q)
    return coeffs / wnorm[:, None], unweighted / wnorm, wnorm


def error_profile(S: FiniteOperator, cert: PietschCertificate, q: float, delta: float, ensemble: PathEnsemble,
                  witnesses: int = 50, seed: int = 0, bins: int = 128,
                  partition: PartitionOfUnity | None = None) -> ErrorProfile:
    """Only the error term of :func:`split_operator` (same witness draw for the same seed)."""
    p = partition if partition is not None else certificate_partitions(cert, [delta], ensemble)[0]
    coeffs, _, wnorm = _weighted_witnesses(S, p, q, witnesses, cert.degree, seed)
    rec = p.records
    ok = rec.valid
    xx = np.polynomial.polynomial.polyval(np.exp(1j * rec.exit_angle), coeffs.T)  # (W, P)
    residual = 1 - p.phi()
    err = np.array([np.linalg.norm(S.apply(project_N(xx[w] * residual, rec.exit_angle, S.n, bins=bins,
                                                     valid=ok).function)) for w in range(witnesses)])
    return ErrorProfile(delta, err, err * wnorm)


def delta_scaling(coarse, fine) -> dict:
    """Two-point check that the error term shrinks like delta^(1/2).

    ``coarse`` and ``fine`` are split reports or error profiles built from the
    same witness draw (same seed and count); the
    measured ratio of mean raw error norms is compared with sqrt(delta ratio).
    """
    if coarse.error_norm_raw.shape != fine.error_norm_raw.shape:
        raise ValueError("reports use different witness families")
    measured = float(fine.error_norm_raw.mean() / coarse.error_norm_raw.mean())
    expected = float(np.sqrt(fine.delta / coarse.delta))
    return {"measured": measured, "expected": expected, "factor": measured / expected}


@dataclass
class InterpolationEstimate:
    q: float
    rounds: list  # per-round dicts
    certified_bound: float
    lower_bound: float
    reference: float  # pi2^(2/q) ||S||^(1-2/q)
    decay_ok: bool

    @property
    def ratio(self) -> float:
        return self.lower_bound / self.reference if self.reference > 0 else 0.0

    @property
    def sandwich_ok(self) -> bool:
        return self.lower_bound <= self.certified_bound * (1 + 1e-9)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "rounds": self.rounds,
            "certified_bound": self.certified_bound,
            "lower_bound": self.lower_bound,
            "reference": self.reference,
            "ratio": self.ratio,
            "sandwich_ok": self.sandwich_ok,
            "decay_ok": self.decay_ok,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=float)


def iterate_split(S: FiniteOperator, q: float, delta: float, ensemble: PathEnsemble, rounds: int = 2,
                  witnesses: int = 50, first: tuple | None = None, lower: LowerBound | None = None,
                  seed: int = 0) -> InterpolationEstimate:
    """Split, replace S by its residual operator, repeat; the certified bounds add up geometrically.

    ``first`` may carry an already computed (certificate, SplitReport) for round one.
    """
    if not 1 <= rounds <= 6:
        raise ValueError("rounds must lie in 1..6")
    out = []
    cur = S
    total = 0.0
    pi2_0 = None
    for r in range(rounds):
        if r == 0 and first is not None:
            cert, rep = first
        else:
            cert = pietsch_fit(cur)
            rep = split_operator(cur, cert, q, delta, ensemble, witnesses=witnesses, seed=seed + r)
        if pi2_0 is None:
            pi2_0 = cert.pi2_upper
        C_r = float(rep.certified_ratio.max())
        total += C_r * rep.target
        out.append({
            "round": r + 1,
            "pi2_upper": cert.pi2_upper,
            "op_norm": rep.op_norm,
            "certified_constant": C_r,
            "error_ratio_max": float(rep.error_ratio.max()),
            "error_norm_max": float(rep.error_norm.max()),
        })
        nxt = cur.with_column_weights(rep.residual_weights)
        if r + 1 < rounds:
            if not np.any(nxt.matrix):
                break
            if np.linalg.norm(nxt.matrix) >= np.linalg.norm(cur.matrix):
                raise NonContraction(f"round {r + 1}: residual operator did not shrink")
        cur = nxt
    # remaining residual: pi_q <= pi_2
    tail = pietsch_fit(cur).pi2_upper if np.any(cur.matrix) else 0.0
    total += tail
    out.append({"round": "tail", "pi2_upper": tail})
    # geometric decay of the residual Pietsch constants
    decay_ok = True
    pis = [d["pi2_upper"] for d in out if d["round"] != "tail"] + [tail]
    if len(pis) >= 3 and pis[0] > 0 and pis[1] > 0:
        rate = pis[1] / pis[0]
        for k in range(2, len(pis)):
            decay_ok &= pis[k] <= 2 * rate**k * pis[0]
    norm = operator_norm(S)
    ref = pi2_0 ** (2 / q) * norm ** (1 - 2 / q)
    lb = lower if lower is not None else summing_lower_bound(S, q)
    return InterpolationEstimate(q, out, float(total), float(lb.value), float(ref), bool(decay_ok))
