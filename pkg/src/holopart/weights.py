"""Maximal operators on the circle and self-improving weights.

``build_weight`` forms ``D1 = sum_k (2C)^-k A^k D`` for a maximal operator A.
If A is sublinear with ``int A^k D <= C^k int D`` this gives

* ``D <= D1`` (the k = 0 term),
* ``int D1 <= 2 int D``,
* ``A(D1) <= 2C (D1 - D) + (2C)^-N A^(N+1) D <= 2C D1``,

the last step once the truncation depth N is deep enough that the leftover
term is below ``2C D``.  The depth is increased automatically until it is.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d

from .circle import Density, outer_from_modulus
from .engine import DiscTable, PathEnsemble, batch_values, map_ensemble

MAX_DEPTH = 200


class WeightGrowth(RuntimeError):
    """Series terms grow: the constant C is below the operator's measured norm."""

    def __init__(self, measured: float, C: float, term: int):
        self.measured = measured
        self.C = C
        super().__init__(
            f"term {term}: measured L1 growth {measured:.4f} exceeds C = {C:.4f}; "
            f"choose C >= {measured:.4f}"
        )


def hl_maximal(w) -> np.ndarray:
    """Centred Hardy-Littlewood maximal function over grid arcs of odd length."""
    v = np.asarray(getattr(w, "values", w), dtype=np.float64)
    n = v.size
    ext = np.concatenate([v, v, v])
    cs = np.concatenate([[0.0], np.cumsum(ext)])
    k = np.arange(n) + n
    best = v.copy()
    for m in range(1, n // 2):
        avg = (cs[k + m + 1] - cs[k - m]) / (2 * m + 1)
        np.maximum(best, avg, out=best)
    np.maximum(best, v.mean(), out=best)
    return best


def _cone_halfwidth(rho: float, aperture: float) -> float:
    """Half-angle of the cone {|z - 1| < aperture (1 - |z|)} at radius 1 - rho."""
    r = 1 - rho
    if r <= 0:
        return np.pi
    c = (aperture**2 - 1) * rho**2 / (2 * r)
    return np.pi if c >= 2 else float(np.arccos(1 - c))


def nt_maximal(w, aperture: float = 2.0, rows: int = 96) -> np.ndarray:
    """Non-tangential maximal function of |outer(w)| over a discrete cone sampling.

    The cone at a boundary point is sampled on ``rows`` circles with
    geometrically spaced distance to the boundary, from half a grid cell to the
    centre, plus the boundary row itself (where |outer(w)| = w).
    """
    if aperture < 1:
        raise ValueError("aperture must be at least 1")
    dens = w if isinstance(w, Density) else Density(np.asarray(w, float), float(np.min(w)))
    v = dens.values
    n = v.size
    taylor = outer_from_modulus(dens).taylor
    k = np.arange(n // 2)
    best = v.copy()
    cell = 2 * np.pi / n
    for rho in np.geomspace(np.pi / n, 1.0, rows):
        r = 1 - rho
        buf = np.zeros(n, dtype=np.complex128)
        buf[: n // 2] = taylor * r**k
        row = np.abs(np.fft.ifft(buf) * n)
        half = int(_cone_halfwidth(rho, aperture) / cell)
        if half >= n // 2:
            np.maximum(best, row.max(), out=best)
        elif half > 0:
            np.maximum(best, maximum_filter1d(row, 2 * half + 1, mode="wrap"), out=best)
        else:
            np.maximum(best, row, out=best)
    return best


def maximal_operator(choice: str, aperture: float = 2.0):
    if choice == "hl":
        return hl_maximal
    if choice == "nt":
        return lambda w: nt_maximal(w, aperture)
    raise ValueError(f"unknown maximal operator {choice!r} (use 'hl' or 'nt')")


def measure_operator_norm(choice: str, densities, depth: int = 3, aperture: float = 2.0) -> float:
    """Largest L1 growth factor int A^(k+1) w / int A^k w over densities and k < depth."""
    A = maximal_operator(choice, aperture)
    worst = 1.0
    for w in densities:
        t = np.asarray(getattr(w, "values", w), dtype=np.float64)
        for _ in range(depth):
            nxt = A(t)
            worst = max(worst, nxt.mean() / t.mean())
            t = nxt
    return float(worst)


_NORM_CACHE: dict = {}


def default_constant(choice: str, n: int, aperture: float = 2.0) -> float:
    """1.2 times the measured suite operator norm of the chosen maximal operator."""
    key = (choice, n, aperture)
    if key not in _NORM_CACHE:
        from .presets import suite

        _NORM_CACHE[key] = 1.2 * measure_operator_norm(choice, suite(n).values(), aperture=aperture)
    return _NORM_CACHE[key]


@dataclass
class WeightReport:
    operator: str
    C: float
    input_mass: float
    output_mass: float
    mass_ratio: float
    domination: float
    maximal_control: float
    maximal_control_bound: float
    self_control_excess: float
    n_max: int
    n_requested: int
    tail_estimate: float
    tail_bound: float
    term_ratios: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.domination <= 1.0
            and self.mass_ratio <= 2.0
            and self.self_control_excess <= 1e-9
            and self.tail_estimate <= self.tail_bound
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def build_weight(w: Density, operator_choice: str = "hl", C: float | None = None, n_max: int = 8,
                 aperture: float = 2.0) -> tuple[Density, WeightReport]:
    if n_max < 8:
        raise ValueError("n_max must be at least 8")
    A = maximal_operator(operator_choice, aperture)
    if C is None:
        C = default_constant(operator_choice, w.n, aperture)
    base = w.values
    q = 1.0 / (2 * C)
    total = base.copy()
    term = base.copy()
    ratios = []
    N = 0
    while True:
        nxt = A(term)
        ratio = nxt.mean() / term.mean()
        ratios.append(float(ratio))
        if ratio > C * (1 + 1e-12):
            raise WeightGrowth(float(ratio), C, N + 1)
        # leftover of the truncated sum in A(D1) is q^N A^(N+1) D; stop once it is below 2C D
        leftover_ok = np.all(q**N * nxt <= 2 * C * base)
        if N >= n_max and leftover_ok:
            tail_next = nxt
            break
        if N >= MAX_DEPTH:
            tail_next = nxt
            break
        N += 1
        term = nxt
        total = total + q**N * term
    D1 = Density(total, w.floor)
    A_D1 = A(total)
    bound = 2 * C * total
    excess = float(np.max(A_D1 - bound))
    r_tail = max(ratios)
    tail = q ** (N + 1) * tail_next.mean() / max(1 - r_tail * q, 1e-300)
    rep = WeightReport(
        operator=operator_choice,
        C=float(C),
        input_mass=float(base.mean()),
        output_mass=float(total.mean()),
        mass_ratio=float(total.mean() / base.mean()),
        domination=float(np.max(base / total)),
        maximal_control=float(np.max(A_D1 / total)),
        maximal_control_bound=float(2 * C),
        self_control_excess=excess,
        n_max=N,
        n_requested=n_max,
        tail_estimate=float(tail),
        tail_bound=float(2.0**-N * base.mean()),
        term_ratios=ratios,
    )
    return D1, rep


def kislyakov_weight(b: Density) -> tuple[Density, WeightReport]:
    """Weight B >= b with int B <= 2 int b and hl_maximal(B) <= 2C B."""
    return build_weight(b, "hl", None, 8)


# -- path-space maximal function ---------------------------------------------------


def _path_sup_chunk(batch, payload):
    table, nt_vals = payload
    vals = batch_values(batch, table)
    sup = np.maximum.reduceat(np.abs(vals), batch.starts)
    ang = batch.exit_angles
    n = nt_vals.size
    x = ang / (2 * np.pi) * n
    i0 = np.floor(x).astype(np.int64) % n
    t = x - np.floor(x)
    nt_exit = (1 - t) * nt_vals[i0] + t * nt_vals[(i0 + 1) % n]
    return {"sup": sup, "nt_exit": nt_exit, "valid": batch.valid}


@dataclass
class PathMaximalSummary:
    mean_sup: float
    stderr: float
    l1_norm: float
    ratio: float
    quantiles: dict
    cmp_q99: float
    n_paths: int
    n_invalid: int

    def to_dict(self) -> dict:
        return asdict(self)


def path_maximal_experiment(w: Density, ensemble: PathEnsemble, aperture: float = 2.0) -> PathMaximalSummary:
    """Per-path sup |d(B_t)| with d = outer(w), against ||d||_1 and the lifted nt maximal."""
    d = outer_from_modulus(w)
    table = DiscTable(d, exit_band=ensemble.config.exit_band)
    nt = nt_maximal(w, aperture)
    parts = map_ensemble(ensemble, _path_sup_chunk, (table, nt))
    sup = np.concatenate([p["sup"] for p in parts])
    ntx = np.concatenate([p["nt_exit"] for p in parts])
    ok = np.concatenate([p["valid"] for p in parts])
    s = sup[ok]
    l1 = float(w.values.mean())
    return PathMaximalSummary(
        mean_sup=float(s.mean()),
        stderr=float(s.std(ddof=1) / np.sqrt(s.size)) if s.size > 1 else 0.0,
        l1_norm=l1,
        ratio=float(s.mean() / l1),
        quantiles={str(p): float(np.quantile(s, p)) for p in (0.5, 0.9, 0.99)},
        cmp_q99=float(np.quantile(s / ntx[ok], 0.99)),
        n_paths=int(sup.size),
        n_invalid=int((~ok).sum()),
    )
