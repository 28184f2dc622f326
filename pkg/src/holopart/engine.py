"""Complex Brownian motion in the unit disc and holomorphic martingales along it.

A path is an adaptive Euler skeleton ``z <- z + sqrt(h) (g1 + i g2)`` with
``h = h0 * max(h_min, (1-|z|)^2)``, finalized by one exact hop to the circle
drawn from harmonic measure once ``1-|z| < exit_band``.  Analytic functions are
evaluated along paths through a polar lookup table (``DiscTable``), which
realizes the martingale ``E(F | F_t) = F(B_t)``.

Paths are pure functions of ``(seed, index)``: all draws come from the keyed
streams in :mod:`holopart.rng`.  Level crossings are located by Brownian-bridge
subdivision of the crossing step; bridge points are keyed as well, so two
observers refining the same step see the same sub-path.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .circle import AnalyticBoundaryFunction, BoundaryFunction, riesz_project
from .rng import complex_normals, derive_key, uniforms

WORKERS_ENV = "HOLOPART_WORKERS"
_BIG = np.iinfo(np.int64).max


class EnsembleFailure(RuntimeError):
    """Too many invalid paths, or an estimator precondition failed."""


class UnderfilledBins(EnsembleFailure):
    def __init__(self, counts: np.ndarray, minimum: int):
        self.counts = counts
        self.minimum = minimum
        super().__init__(
            f"{int((counts < minimum).sum())} of {counts.size} bins hold fewer than {minimum} paths "
            f"(min {int(counts.min())}, max {int(counts.max())})"
        )


@dataclass(frozen=True)
class PathConfig:
    base_step: float = 0.05
    h_min: float = 1e-4
    exit_band: float = 1e-3
    max_steps: int = 20_000
    seed: int = 20240917
    start: complex = 0j
    refine: int = 16
    refine_depth: int = 3
    refine_target: float = 0.02

    def __post_init__(self):
        if not self.base_step > 0:
            raise ValueError("base_step must be positive")
        if not self.h_min > 0:
            raise ValueError("h_min must be positive")
        if not 1e-6 < self.exit_band < 1e-2:
            raise ValueError("exit_band must lie in (1e-6, 1e-2)")
        if self.max_steps < 10_000:
            raise ValueError("max_steps must be at least 1e4")
        if abs(self.start) >= 1 - self.exit_band:
            raise ValueError("start point must lie inside the exit band")
        if self.refine < 2 or self.refine_depth < 1:
            raise ValueError("refinement needs at least 2 sub-steps and depth 1")

    @property
    def keys(self) -> dict[str, int]:
        return {tag: derive_key(self.seed, tag) for tag in ("path", "exit", "bridge")}


@dataclass
class DiscPath:
    times: np.ndarray
    points: np.ndarray
    exit_angle: float
    seed_index: int
    valid: bool = True

    @property
    def exit_point(self) -> complex:
        return complex(np.exp(1j * self.exit_angle))


@dataclass
class PathBatch:
    """Consecutive paths in flat storage: path p owns ``offsets[p]:offsets[p+1]``.

    The last point of every path is its exit point on the circle.
    """

    indices: np.ndarray
    offsets: np.ndarray
    points: np.ndarray
    times: np.ndarray
    valid: np.ndarray

    @property
    def size(self) -> int:
        return self.indices.size

    @property
    def starts(self) -> np.ndarray:
        return self.offsets[:-1]

    @property
    def ends(self) -> np.ndarray:
        return self.offsets[1:] - 1

    @property
    def exit_points(self) -> np.ndarray:
        return self.points[self.ends]

    @property
    def exit_angles(self) -> np.ndarray:
        return np.mod(np.angle(self.exit_points), 2 * np.pi)

    @property
    def path_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.size), np.diff(self.offsets))

    def path(self, p: int) -> DiscPath:
        a, b = self.offsets[p], self.offsets[p + 1]
        return DiscPath(
            times=self.times[a:b].copy(),
            points=self.points[a:b].copy(),
            exit_angle=float(self.exit_angles[p]),
            seed_index=int(self.indices[p]),
            valid=bool(self.valid[p]),
        )


def simulate_batch(config: PathConfig, indices) -> PathBatch:
    indices = np.asarray(indices, dtype=np.int64)
    P = indices.size
    keys = config.keys
    z = np.full(P, config.start, dtype=np.complex128)
    t = np.zeros(P)
    act = np.arange(P)
    rec_id, rec_z, rec_t = [act.copy()], [z.copy()], [t.copy()]
    valid = np.ones(P, dtype=bool)
    step = 0
    inner_edge = 1 - 0.5 * config.exit_band
    while act.size:
        if step >= config.max_steps:
            valid[act] = False
            break
        za = z[act]
        rho = 1 - np.abs(za)
        h = config.base_step * np.maximum(config.h_min, rho * rho)
        zn = za + np.sqrt(h) * complex_normals(keys["path"], indices[act], step)
        out = np.abs(zn) >= 1
        if out.any():
            zn[out] = zn[out] / np.abs(zn[out]) * inner_edge
        t[act] += h
        z[act] = zn
        rec_id.append(act)
        rec_z.append(zn)
        rec_t.append(t[act])
        act = act[1 - np.abs(zn) >= config.exit_band]
        step += 1
    # exact exit: harmonic measure at z is the Moebius image of the uniform law
    u = np.exp(2j * np.pi * uniforms(keys["exit"], indices, 0))
    e = (u + z) / (1 + np.conj(z) * u)
    e = e / np.abs(e)
    rec_id.append(np.arange(P))
    rec_z.append(e)
    rec_t.append(t.copy())
    ids = np.concatenate(rec_id)
    order = np.argsort(ids, kind="stable")
    counts = np.bincount(ids, minlength=P)
    offsets = np.zeros(P + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return PathBatch(
        indices=indices,
        offsets=offsets,
        points=np.concatenate(rec_z)[order],
        times=np.concatenate(rec_t)[order],
        valid=valid,
    )


def sample_path(config: PathConfig, index: int) -> DiscPath:
    return simulate_batch(config, [index]).path(0)


@dataclass
class PathEnsemble:
    config: PathConfig
    n_paths: int
    chunk: int = 4096

    def chunk_ranges(self) -> list[tuple[int, int]]:
        return [(a, min(a + self.chunk, self.n_paths)) for a in range(0, self.n_paths, self.chunk)]

    def batches(self):
        for a, b in self.chunk_ranges():
            yield simulate_batch(self.config, np.arange(a, b))

    def same_paths(self, other: "PathEnsemble") -> bool:
        return self.config == other.config and self.n_paths == other.n_paths


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _chunk_task(args):
    config, a, b, fn, payload = args
    return fn(simulate_batch(config, np.arange(a, b)), payload)


def map_ensemble(ensemble: PathEnsemble, fn, payload=None, workers: int | None = None) -> list:
    """Apply ``fn(batch, payload)`` to every chunk; results come back in chunk order.

    ``fn`` must be a module-level function when more than one worker is used.
    """
    workers = worker_count() if workers is None else workers
    tasks = [(ensemble.config, a, b, fn, payload) for a, b in ensemble.chunk_ranges()]
    if workers <= 1 or len(tasks) <= 1:
        return [_chunk_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_chunk_task, tasks))


def concat_results(parts: list[dict]) -> dict:
    return {k: np.concatenate([p[k] for p in parts], axis=0) for k in parts[0]}


# -- interior evaluation ------------------------------------------------------


class DiscTable:
    """Polar lookup table for one or more analytic functions.

    Rows sit at equally spaced ``s = -log(1 - r)``; each row holds the power
    series on an angular grid fine enough for its distance to the circle.
    Evaluation is bilinear in (s, angle); beyond the last row it blends linearly
    in ``1 - r`` into the boundary samples.
    """

    def __init__(self, functions, exit_band: float = 1e-3, ds: float = 0.05, cap_factor: int = 2):
        funcs = list(functions) if isinstance(functions, (list, tuple)) else [functions]
        self.single = not isinstance(functions, (list, tuple))
        n = funcs[0].n
        self.n = n
        self.K = len(funcs)
        self.ds = ds
        taylor = np.stack([f.taylor for f in funcs])
        self.boundary_values = np.stack([f.values for f in funcs])
        s_max = -np.log(exit_band / 16)
        s = np.arange(0.0, s_max + ds, ds)
        rho = np.exp(-s)
        r = 1 - rho
        k = np.arange(n // 2)
        sizes, rows = [], []
        for rj, pj in zip(r, rho):
            N = int(min(cap_factor * n, max(64, 2 ** int(np.ceil(np.log2(70 / pj))))))
            c = taylor * (rj**k)
            if N >= n // 2:
                buf = np.zeros((self.K, N), dtype=np.complex128)
                buf[:, : n // 2] = c
            else:
                pad = (-c.shape[1]) % N
                buf = np.pad(c, ((0, 0), (0, pad))).reshape(self.K, -1, N).sum(axis=1)
            rows.append(np.fft.ifft(buf, axis=1) * N)
            sizes.append(N)
        self.sizes = np.array(sizes, dtype=np.int64)
        self.row_offsets = np.concatenate([[0], np.cumsum(self.sizes)[:-1]])
        self.flat = np.concatenate(rows, axis=1)
        self.rho_last = float(rho[-1])
        self.n_rows = len(sizes)

    @property
    def nbytes(self) -> int:
        return self.flat.nbytes

    def _row_lookup(self, j, phase):
        N = self.sizes[j]
        x = phase * N
        i0 = np.floor(x).astype(np.int64)
        t = x - i0
        i0 = np.mod(i0, N)
        i1 = np.where(i0 + 1 == N, 0, i0 + 1)
        o = self.row_offsets[j]
        return (1 - t) * self.flat[:, o + i0] + t * self.flat[:, o + i1]

    def boundary(self, angles) -> np.ndarray:
        phase = np.mod(np.asarray(angles, dtype=np.float64) / (2 * np.pi), 1.0)
        x = phase * self.n
        i0 = np.floor(x).astype(np.int64)
        t = x - i0
        i0 = np.mod(i0, self.n)
        i1 = np.where(i0 + 1 == self.n, 0, i0 + 1)
        out = (1 - t) * self.boundary_values[:, i0] + t * self.boundary_values[:, i1]
        return out[0] if self.single else out

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        shape = z.shape
        z = z.ravel()
        a = np.abs(z)
        phase = np.mod(np.angle(z) / (2 * np.pi), 1.0)
        out = np.empty((self.K, z.size), dtype=np.complex128)
        rho = 1 - a
        deep = rho >= self.rho_last
        if deep.any():
            sv = -np.log1p(-a[deep]) / self.ds
            j = np.minimum(sv.astype(np.int64), self.n_rows - 2)
            f = sv - j
            ph = phase[deep]
            out[:, deep] = (1 - f) * self._row_lookup(j, ph) + f * self._row_lookup(j + 1, ph)
        edge = ~deep
        if edge.any():
            w = np.clip(rho[edge] / self.rho_last, 0.0, 1.0)
            ph = phase[edge]
            last = self._row_lookup(np.full(ph.size, self.n_rows - 1), ph)
            bnd = self.boundary(2 * np.pi * ph)
            bnd = bnd[None, :] if self.single else bnd
            out[:, edge] = w * last + (1 - w) * bnd
        out = out.reshape((self.K,) + shape)
        return out[0] if self.single else out


def eval_along(path: DiscPath, F: AnalyticBoundaryFunction, table: DiscTable | None = None) -> np.ndarray:
    """F(B_t) at every recorded point; the last value uses the boundary samples."""
    table = table or DiscTable(F)
    vals = table(path.points)
    vals[-1] = table.boundary(path.exit_angle)
    return vals


def batch_values(batch: PathBatch, table: DiscTable) -> np.ndarray:
    vals = table(batch.points)
    ends = batch.ends
    ex = table.boundary(batch.exit_angles)
    if table.single:
        vals[ends] = ex
    else:
        vals[:, ends] = ex
    return vals


# -- crossings ------------------------------------------------------------------


def _first_above(mod: np.ndarray, level: float, starts: np.ndarray) -> np.ndarray:
    idx = np.where(mod > level, np.arange(mod.size, dtype=np.int64), _BIG)
    return np.minimum.reduceat(idx, starts)


def refine_crossings(batch: PathBatch, table: DiscTable, pos: np.ndarray, level, config: PathConfig,
                     component: int = 0):
    """Locate first crossings of ``|F| > level`` inside skeleton steps.

    ``pos`` are flat positions of the first skeleton point above the level; the
    step ``pos-1 -> pos`` is subdivided by Brownian-bridge points, repeatedly
    while the relative jump at the located crossing exceeds ``refine_target``.
    Returns (value, time) at the crossing.
    """
    pos = np.asarray(pos, dtype=np.int64)
    level = np.broadcast_to(np.asarray(level, dtype=np.float64), pos.shape).copy()
    key = config.keys["bridge"]
    R = config.refine
    path_idx = batch.indices[np.searchsorted(batch.offsets, pos, side="right") - 1]
    step = pos - batch.offsets[np.searchsorted(batch.offsets, pos, side="right") - 1] - 1
    za, zb = batch.points[pos - 1].copy(), batch.points[pos].copy()
    ta, tb = batch.times[pos - 1].copy(), batch.times[pos].copy()

    def f_at(z):
        v = table(z)
        return v if table.single else v[component]

    vb = f_at(zb)
    va = f_at(za)
    counter = step.astype(np.int64)
    todo = np.ones(pos.size, dtype=bool)
    for depth in range(config.refine_depth):
        jump = np.abs(vb) / level - 1
        todo &= jump > config.refine_target
        sel = np.flatnonzero(todo)
        if sel.size == 0:
            break
        T = tb[sel] - ta[sel]
        dt = T / R
        cur = za[sel].copy()
        subs = np.empty((R + 1, sel.size), dtype=np.complex128)
        subs[0] = cur
        for j in range(1, R):
            remaining = T - (j - 1) * dt
            mean = cur + (zb[sel] - cur) * (dt / remaining)
            var = dt * (remaining - dt) / remaining
            g = complex_normals(key, path_idx[sel], counter[sel] * R + j, lane=depth)
            cur = mean + np.sqrt(var) * g
            over = np.abs(cur) >= 1
            if over.any():
                cur[over] = cur[over] / np.abs(cur[over]) * (1 - 0.5 * config.exit_band)
            subs[j] = cur
        subs[R] = zb[sel]
        vals = f_at(subs[1:R].ravel()).reshape(R - 1, sel.size)
        vals = np.concatenate([vals, vb[sel][None, :]], axis=0)
        above = np.abs(vals) > level[sel][None, :]
        jfirst = np.argmax(above, axis=0) + 1  # endpoint is always above
        cols = np.arange(sel.size)
        prev_z = subs[jfirst - 1, cols]
        prev_v = np.where(jfirst == 1, va[sel], vals[np.maximum(jfirst - 2, 0), cols])
        za[sel] = prev_z
        va[sel] = prev_v
        zb[sel] = subs[jfirst, cols]
        vb[sel] = vals[jfirst - 1, cols]
        ta_new = ta[sel] + (jfirst - 1) * dt
        tb[sel] = ta_new + dt
        ta[sel] = ta_new
        counter[sel] = counter[sel] * R + jfirst
    return vb, tb


@dataclass
class StoppingLadder:
    M: float
    crossing_times: np.ndarray
    stopped_values: np.ndarray
    realized: np.ndarray
    exit_value: complex
    max_along_path: float
    overshoot_factor: float

    @property
    def increments(self) -> np.ndarray:
        """d_j = Psi_{j+1} - Psi_j for j = 0..j_max, with Psi_{j_max+1} the exit value."""
        ext = np.append(self.stopped_values, self.exit_value)
        return np.diff(ext)

    @property
    def highest_level(self) -> int:
        r = np.flatnonzero(self.realized)
        return int(r.max()) if r.size else 0


def ladder_batch(batch: PathBatch, table: DiscTable, Ms, j_max: dict | int, config: PathConfig,
                 vals: np.ndarray | None = None) -> dict:
    """Ladders of ``|F(B_t)|`` over levels ``M^j`` for each base in ``Ms``.

    Returns per-path arrays: start and exit values, path sup, and for each M the
    stopped values (P, j_max+1), crossing times, realized mask and overshoot.
    """
    vals = batch_values(batch, table) if vals is None else vals
    mod = np.abs(vals)
    starts, ends = batch.starts, batch.ends
    res = {
        "start": vals[starts],
        "exit": vals[ends],
        "sup": np.maximum.reduceat(mod, starts),
        "exit_angle": batch.exit_angles,
        "valid": batch.valid,
        "exit_time": batch.times[ends],
    }
    for M in Ms:
        J = j_max[M] if isinstance(j_max, dict) else j_max
        P = batch.size
        sv = np.empty((P, J + 1), dtype=np.complex128)
        tm = np.empty((P, J + 1))
        real = np.zeros((P, J + 1), dtype=bool)
        sv[:, 0] = vals[starts]
        tm[:, 0] = 0.0
        real[:, 0] = True
        kappa = np.zeros(P)
        for j in range(1, J + 1):
            lev = float(M) ** j
            first = _first_above(mod, lev, starts)
            hit = first != _BIG
            sv[:, j] = vals[ends]
            tm[:, j] = batch.times[ends]
            hp = np.flatnonzero(hit)
            fpos = first[hp]
            at_start = fpos == starts[hp]
            at_exit = fpos == ends[hp]
            sv[hp[at_start], j] = vals[fpos[at_start]]
            tm[hp[at_start], j] = 0.0
            sv[hp[at_exit], j] = vals[fpos[at_exit]]
            mid = ~(at_start | at_exit)
            if mid.any():
                v, t = refine_crossings(batch, table, fpos[mid], lev, config)
                sv[hp[mid], j] = v
                tm[hp[mid], j] = t
            real[hp, j] = True
            kappa[hp] = np.maximum(kappa[hp], np.abs(sv[hp, j]) / lev - 1)
        res[f"values_{M}"] = sv
        res[f"times_{M}"] = tm
        res[f"realized_{M}"] = real
        res[f"overshoot_{M}"] = kappa
    return res


def crossing_ladder(path: DiscPath, Psi: AnalyticBoundaryFunction, M: float, j_max: int,
                    config: PathConfig | None = None, table: DiscTable | None = None) -> StoppingLadder:
    if not M > 1:
        raise ValueError("level base M must exceed 1")
    config = config or PathConfig()
    table = table or DiscTable(Psi, exit_band=config.exit_band)
    batch = _single_batch(path)
    r = ladder_batch(batch, table, [M], j_max, config)
    return StoppingLadder(
        M=M,
        crossing_times=r[f"times_{M}"][0],
        stopped_values=r[f"values_{M}"][0],
        realized=r[f"realized_{M}"][0],
        exit_value=complex(r["exit"][0]),
        max_along_path=float(r["sup"][0]),
        overshoot_factor=float(r[f"overshoot_{M}"][0]),
    )


def _single_batch(path: DiscPath) -> PathBatch:
    pts = np.array(path.points, dtype=np.complex128)
    pts[-1] = path.exit_point
    return PathBatch(
        indices=np.array([path.seed_index]),
        offsets=np.array([0, pts.size]),
        points=pts,
        times=np.asarray(path.times, dtype=np.float64),
        valid=np.array([path.valid]),
    )


def first_exceedance(batch: PathBatch, table: DiscTable, level: float, config: PathConfig,
                     vals: np.ndarray | None = None, component: int = 0):
    """Stopped value at the first time |F(B_t)| > level (exit value if never)."""
    if vals is None:
        vals = batch_values(batch, table)
        vals = vals if table.single else vals[component]
    mod = np.abs(vals)
    starts, ends = batch.starts, batch.ends
    first = _first_above(mod, level, starts)
    hit = first != _BIG
    out = vals[ends].copy()
    hp = np.flatnonzero(hit)
    fpos = first[hp]
    simple = (fpos == starts[hp]) | (fpos == ends[hp])
    out[hp[simple]] = vals[fpos[simple]]
    mid = ~simple
    if mid.any():
        v, _ = refine_crossings(batch, table, fpos[mid], level, config, component=component)
        out[hp[mid]] = v
    return out, hit, np.maximum.reduceat(mod, starts)


# -- Monte Carlo ------------------------------------------------------------------


@dataclass(frozen=True)
class MCResult:
    mean: complex
    stderr: float
    n: int
    n_invalid: int = 0

    def within(self, target: complex, k: float = 4.0) -> bool:
        return abs(self.mean - target) <= k * self.stderr + 1e-14 * max(1.0, abs(target))


def mc_expectation(values, valid=None, max_invalid_fraction: float = 0.01) -> MCResult:
    v = np.asarray(values)
    ok = np.ones(v.shape[0], dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    bad = int((~ok).sum())
    if bad > max_invalid_fraction * ok.size:
        raise EnsembleFailure(f"{bad} of {ok.size} paths invalid (limit {max_invalid_fraction:.0%})")
    x = v[ok]
    m = x.mean()
    se = float(np.sqrt(np.mean(np.abs(x - m) ** 2) / max(x.size - 1, 1))) if x.size > 1 else 0.0
    m = complex(m) if np.iscomplexobj(x) else float(m)
    return MCResult(mean=m, stderr=se, n=int(x.size), n_invalid=bad)


@dataclass
class Lift:
    """The lift Mf: the path functional omega -> f(exit point)."""

    f: AnalyticBoundaryFunction
    exit_band: float = 1e-3
    _table: DiscTable | None = field(default=None, repr=False)

    @property
    def table(self) -> DiscTable:
        if self._table is None:
            self._table = DiscTable(self.f, exit_band=self.exit_band)
        return self._table

    def at_exit(self, exit_angles) -> np.ndarray:
        return self.table.boundary(exit_angles)

    def along(self, points) -> np.ndarray:
        return self.table(points)

    def __call__(self, exit_angles) -> np.ndarray:
        return self.at_exit(exit_angles)


def lift_M(f: AnalyticBoundaryFunction, exit_band: float = 1e-3) -> Lift:
    return Lift(f, exit_band)


@dataclass
class Projection:
    function: AnalyticBoundaryFunction
    counts: np.ndarray
    bin_means: np.ndarray
    bin_stderr: np.ndarray
    binning_error: float


def _box_gain(k: np.ndarray, width: float) -> np.ndarray:
    x = k * width / 2
    return np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x))


def project_N(values, exit_angles, n: int, bins: int = 256, min_count: int = 50,
              valid=None) -> Projection:
    """Conditional expectation on the exit angle, resampled to the grid, then analytic projection.

    Bin means are treated as box averages: their spectrum is divided by the
    box transfer function before zero-padding to ``n`` samples.
    """
    v = np.asarray(values, dtype=np.complex128)
    ang = np.mod(np.asarray(exit_angles, dtype=np.float64), 2 * np.pi)
    if valid is not None:
        v, ang = v[valid], ang[valid]
    width = 2 * np.pi / bins
    b = np.minimum((ang / width).astype(np.int64), bins - 1)
    counts = np.bincount(b, minlength=bins)
    if counts.min() < min_count:
        raise UnderfilledBins(counts, min_count)
    sums = np.bincount(b, weights=v.real, minlength=bins) + 1j * np.bincount(b, weights=v.imag, minlength=bins)
    means = sums / counts
    sq = np.bincount(b, weights=np.abs(v) ** 2, minlength=bins)
    var = np.maximum(sq / counts - np.abs(means) ** 2, 0.0) * counts / np.maximum(counts - 1, 1)
    se = np.sqrt(var / counts)
    k = np.fft.fftfreq(bins, d=1.0 / bins)
    gain = _box_gain(k, width)
    # bin m is centred at (m + 1/2) * width
    spec = np.fft.fft(means) / bins * np.exp(-1j * k * width / 2) / gain
    full = np.zeros(n, dtype=np.complex128)
    half = bins // 2
    full[:half] = spec[:half]
    full[n - half + 1:] = spec[half + 1:]
    boundary = BoundaryFunction(np.fft.ifft(full) * n)
    proj = riesz_project(boundary)
    kept = np.arange(half)
    err = float(np.sqrt(np.mean(se**2) / bins * np.sum(1.0 / gain[kept] ** 2)))
    return Projection(proj, counts, means, se, err)


def with_start(config: PathConfig, start: complex) -> PathConfig:
    return replace(config, start=start)
