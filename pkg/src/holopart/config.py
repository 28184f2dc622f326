"""Experiment configuration with a lossless INI text form.

Every key is explicit; floats are written with ``repr`` so a config read back
from its text is equal to the original.  Example::

    [experiment]
    n = 4096
    preset = two-arc
    deltas = 0.5, 0.25
    ...
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

from .circle import check_grid_size
from .presets import PRESETS

SECTION = "experiment"
MIN_PER_BIN = 100  # mean paths per projection bin (each bin needs at least 50)
OPERATOR_BINS = 128  # projection bins of the operator splitting


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 4096
    preset: str = "two-arc"
    preset_seed: int = 7
    power_a: float = -0.4
    deltas: tuple = (0.5, 0.25)
    partition_presets: tuple = ("two-arc", "power-spike", "random-trig")
    qs: tuple = (3.0, 4.0)
    paths: int = 100_000
    seed: int = 20240917
    maximal: str = "hl"
    aperture: float = 2.0
    bins: int = 256
    eps: tuple = (0.1, 0.01)
    lambda_points: int = 5
    operators: int = 5
    operator_paths: int = 20_000
    operator_q: float = 4.0
    operator_deltas: tuple = (0.25, 0.1)
    witnesses: int = 50
    rounds: int = 2
    output: str = "holopart-out"

    def __post_init__(self):
        try:
            check_grid_size(self.n)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        for name in (self.preset,) + tuple(self.partition_presets):
            if name not in PRESETS:
                raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
        if not self.partition_presets:
            raise ConfigError("partition_presets must name at least one preset")
        if not -0.5 < self.power_a < 0.5:
            raise ConfigError("power_a must lie in (-1/2, 1/2)")
        for d in self.deltas + self.operator_deltas:
            if not 0 < d < 1:
                raise ConfigError("every delta must lie in (0, 1)")
        if any(q <= 2 for q in self.qs) or self.operator_q <= 2:
            raise ConfigError("every q must exceed 2")
        if any(not 0 < e < 1 for e in self.eps):
            raise ConfigError("every eps must lie in (0, 1)")
        if self.maximal not in ("hl", "nt"):
            raise ConfigError("maximal must be 'hl' or 'nt'")
        if self.aperture < 1:
            raise ConfigError("aperture must be at least 1")
        if self.paths < 1000 or self.operator_paths < 1000:
            raise ConfigError("path counts must be at least 1000")
        if self.bins < 8 or self.n % self.bins:
            raise ConfigError("bins must be at least 8 and divide n")
        if self.paths < MIN_PER_BIN * self.bins:
            raise ConfigError(f"paths must be at least {MIN_PER_BIN} x bins for the boundary projection")
        if self.operator_paths < MIN_PER_BIN * OPERATOR_BINS:
            raise ConfigError(f"operator_paths must be at least {MIN_PER_BIN * OPERATOR_BINS}")
        if not 1 <= self.rounds <= 6:
            raise ConfigError("rounds must lie in 1..6")
        if self.operators < 0 or self.witnesses < 1 or self.lambda_points < 2:
            raise ConfigError("operators >= 0, witnesses >= 1 and lambda_points >= 2 required")

    # -- text form ---------------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"[{SECTION}]"]
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple) and all(isinstance(x, str) for x in v):
                s = ", ".join(v)
            elif isinstance(v, tuple):
                s = ", ".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                s = repr(v)
            else:
                s = str(v)
            lines.append(f"{f.name} = {s}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as e:
            raise ConfigError(f"cannot parse config: {e}") from None
        if not cp.has_section(SECTION):
            raise ConfigError(f"missing [{SECTION}] section")
        sec = cp[SECTION]
        known = {f.name: f for f in fields(cls)}
        unknown = set(sec) - set(known)
        if unknown:
            raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
        kw = {}
        defaults = cls()
        for name, raw in sec.items():
            proto = getattr(defaults, name)
            try:
                if isinstance(proto, tuple) and isinstance(proto[0], str):
                    kw[name] = tuple(t.strip() for t in raw.split(",") if t.strip())
                elif isinstance(proto, tuple):
                    kw[name] = _floats(raw)
                elif isinstance(proto, bool):
                    kw[name] = sec.getboolean(name)
                elif isinstance(proto, int):
                    kw[name] = int(raw)
                elif isinstance(proto, float):
                    kw[name] = float(raw)
                else:
                    kw[name] = raw.strip()
            except ValueError:
                raise ConfigError(f"bad value for {name}: {raw!r}") from None
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_text(fh.read())
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    def to_dict(self) -> dict:
        return {f.name: (list(getattr(self, f.name)) if isinstance(getattr(self, f.name), tuple)
                         else getattr(self, f.name)) for f in fields(self)}

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)
