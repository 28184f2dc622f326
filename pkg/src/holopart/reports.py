"""Run reports, property rows and golden constants.

A report is a JSON document::

    {
      "schema_version": 1,
      "code_version": "...",
      "command": "partition",
      "config": {...},
      "sections": {name: {"properties": [...], "metrics": {...}, "tables": {...}}},
      "golden_measurements": {name: value},
      "goldens": {"regressions": [...], "missing": [...]},
      "passed": true,
      "timestamp": {"utc": "...", "wall_clock_s": {...}, "throughput": {...}}
    }

Everything outside ``timestamp`` is a deterministic function of the config.
Each property row records the measured value, its bound, the relation and the
verdict, so no inequality is asserted without its numbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

SCHEMA_VERSION = 1
GOLDEN_MARGIN = 1.25


class SchemaMismatch(ValueError):
    """A report or golden file has an unsupported schema version."""


def _clean(x):
    """JSON-ready copy: numpy scalars and arrays to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def prop(name: str, measured, bound, relation: str = "<=") -> dict:
    """One asserted inequality with its numbers.

    ``relation`` is ``<=``, ``>=``, ``==`` or ``in`` (bound is a [low, high] pair).
    A bound of None means the golden constant is missing: the row is kept, marked
    and does not fail.
    """
    m = float(measured) if not isinstance(measured, bool) else measured
    if bound is None:
        return {"name": name, "measured": m, "bound": None, "relation": relation, "passed": True,
                "note": "missing golden"}
    if relation == "<=":
        ok = m <= bound
    elif relation == ">=":
        ok = m >= bound
    elif relation == "==":
        ok = m == bound
    elif relation == "in":
        ok = bound[0] <= m <= bound[1]
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return {"name": name, "measured": m, "bound": bound, "relation": relation, "passed": bool(ok)}


@dataclass
class Section:
    properties: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    golden: dict = field(default_factory=dict)  # golden name -> measured value (worst case)
    wall_clock: float = 0.0
    paths: int = 0

    def add(self, *rows) -> None:
        self.properties.extend(rows)

    def measure(self, name: str, value: float) -> None:
        """Record a golden-referenced measurement, keeping the worst (largest) value."""
        v = float(value)
        self.golden[name] = max(self.golden.get(name, -math.inf), v)

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.properties)

    def to_dict(self) -> dict:
        return {"properties": self.properties, "metrics": self.metrics, "tables": self.tables,
                "passed": self.passed}


# -- goldens -------------------------------------------------------------------------


@dataclass
class Goldens:
    constants: dict  # name -> {"value": float, "tol": float}
    source: str = ""

    def get(self, name: str):
        c = self.constants.get(name)
        return None if c is None else c["value"] * (1 + c.get("tol", 0.0))

    @classmethod
    def from_dict(cls, d: dict, source: str = "") -> "Goldens":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatch(f"golden file schema {d.get('schema_version')} != {SCHEMA_VERSION}")
        return cls(dict(d["constants"]), source)

    @classmethod
    def load(cls, path=None) -> "Goldens":
        if path is None:
            text = resources.files("holopart").joinpath("goldens.json").read_text()
            return cls.from_dict(json.loads(text), "package")
        with open(path) as fh:
            return cls.from_dict(json.load(fh), str(path))

    @classmethod
    def empty(cls) -> "Goldens":
        return cls({}, "empty")

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "constants": self.constants}


def _round_up(x: float, digits: int = 2) -> float:
    if x <= 0:
        return 0.0
    e = math.floor(math.log10(x)) - digits + 1
    return float(f"{math.ceil(x / 10**e * (1 - 1e-12)) * 10**e:.12g}")


def calibrate(measurements: dict, margin: float = GOLDEN_MARGIN, previous: Goldens | None = None) -> Goldens:
    """Fresh golden constants: margin times the measured worst case, rounded up to two digits."""
    consts = dict(previous.constants) if previous is not None else {}
    for name, v in sorted(measurements.items()):
        consts[name] = {"value": _round_up(float(v) * margin), "tol": 0.0, "calibrated_from": float(v)}
    return Goldens(consts, "calibration")


def compare_goldens(report: dict, goldens: Goldens) -> dict:
    """Regressions (measured above golden) and golden names without a measurement."""
    meas = report.get("golden_measurements", {})
    regressions, missing, checked = [], [], []
    for name, c in sorted(goldens.constants.items()):
        if name not in meas:
            missing.append(name)
            continue
        bound = c["value"] * (1 + c.get("tol", 0.0))
        checked.append(name)
        if meas[name] > bound:
            regressions.append({"name": name, "measured": meas[name], "golden": bound})
    for name in sorted(set(meas) - set(goldens.constants)):
        missing.append(name)
    return {"regressions": regressions, "missing": missing, "checked": checked}


# -- run report ------------------------------------------------------------------------


def build_report(command: str, config_dict: dict, sections: dict, goldens: Goldens, timestamp: dict) -> dict:
    from . import __version__

    meas = {}
    for s in sections.values():
        for k, v in s.golden.items():
            meas[k] = max(meas.get(k, -math.inf), v)
    rep = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "command": command,
        "config": config_dict,
        "sections": {k: s.to_dict() for k, s in sections.items()},
        "golden_measurements": meas,
    }
    rep["goldens"] = compare_goldens(rep, goldens)
    rep["passed"] = all(s.passed for s in sections.values()) and not rep["goldens"]["regressions"]
    rep["timestamp"] = timestamp
    return _clean(rep)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def load_report(path) -> dict:
    with open(path) as fh:
        rep = json.load(fh)
    if rep.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(f"report schema {rep.get('schema_version')} != {SCHEMA_VERSION}")
    return rep


def strip_timestamp(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timestamp"}


def failures(report: dict) -> list[str]:
    out = []
    for name, s in report["sections"].items():
        for r in s["properties"]:
            if not r["passed"]:
                out.append(f"{name}: {r['name']} measured {r['measured']} {r['relation']} {r['bound']}")
    for r in report["goldens"]["regressions"]:
        out.append(f"golden {r['name']}: {r['measured']} > {r['golden']}")
    return out
