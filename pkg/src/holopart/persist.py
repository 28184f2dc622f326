"""Binary persistence of path ensembles and their ladder records.

Layout (all little-endian)::

    magic        8 bytes   b"HOLOENS1"
    header_len   uint32    length of the UTF-8 JSON header that follows
    header       JSON      {"config": {...PathConfig...}, "n_paths": P, "M": M, "levels": L}
    records      P x record, record = (
                    seed_index  uint64,
                    exit_angle  float64,
                    valid       uint8,
                    realized    L x uint8,
                    stopped     L x (float64 re, float64 im),
                    times       L x float64,
                 )

``levels`` is zero when only exit data is stored.  The header is written with
sorted keys, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .engine import PathConfig, PathEnsemble

MAGIC = b"HOLOENS1"


def _record_dtype(levels: int) -> np.dtype:
    fields = [("seed_index", "<u8"), ("exit_angle", "<f8"), ("valid", "u1")]
    if levels:
        fields += [("realized", "u1", (levels,)), ("stopped", "<f8", (levels, 2)), ("times", "<f8", (levels,))]
    return np.dtype(fields)


def _config_dict(config: PathConfig) -> dict:
    d = asdict(config)
    d["start"] = [config.start.real, config.start.imag]
    return d


def _config_from(d: dict) -> PathConfig:
    d = dict(d)
    d["start"] = complex(*d["start"])
    return PathConfig(**d)


@dataclass
class StoredEnsemble:
    config: PathConfig
    n_paths: int
    M: float | None
    seed_index: np.ndarray
    exit_angle: np.ndarray
    valid: np.ndarray
    stopped: np.ndarray | None = None  # (P, L) complex
    times: np.ndarray | None = None
    realized: np.ndarray | None = None

    @property
    def ensemble(self) -> PathEnsemble:
        return PathEnsemble(self.config, self.n_paths)


def save_ensemble(path, ensemble: PathEnsemble, exit_angle, valid, M: float | None = None,
                  stopped=None, times=None, realized=None) -> None:
    P = ensemble.n_paths
    levels = 0 if stopped is None else int(np.shape(stopped)[1])
    rec = np.zeros(P, dtype=_record_dtype(levels))
    rec["seed_index"] = np.arange(P, dtype=np.uint64)
    rec["exit_angle"] = exit_angle
    rec["valid"] = np.asarray(valid, dtype=np.uint8)
    if levels:
        s = np.asarray(stopped)
        rec["realized"] = np.asarray(realized, dtype=np.uint8)
        rec["stopped"][..., 0] = s.real
        rec["stopped"][..., 1] = s.imag
        rec["times"] = times
    header = json.dumps(
        {"config": _config_dict(ensemble.config), "n_paths": P, "M": M, "levels": levels},
        sort_keys=True,
    ).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(rec.tobytes())


def save_records(path, ensemble: PathEnsemble, records, M: float) -> None:
    """Store a partition's per-path ladder records (see :class:`holopart.partition.PathRecords`)."""
    save_ensemble(path, ensemble, records.exit_angle, records.valid, M,
                  records.stopped[M], records.times[M], records.realized[M])


def load_ensemble(path) -> StoredEnsemble:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError("not an ensemble file")
        (hl,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hl).decode())
        levels = int(header["levels"])
        rec = np.frombuffer(fh.read(), dtype=_record_dtype(levels))
    if rec.size != header["n_paths"]:
        raise ValueError("truncated ensemble file")
    out = StoredEnsemble(
        config=_config_from(header["config"]),
        n_paths=int(header["n_paths"]),
        M=header["M"],
        seed_index=rec["seed_index"].copy(),
        exit_angle=rec["exit_angle"].copy(),
        valid=rec["valid"].astype(bool),
    )
    if levels:
        out.stopped = rec["stopped"][..., 0] + 1j * rec["stopped"][..., 1]
        out.times = rec["times"].copy()
        out.realized = rec["realized"].astype(bool)
    return out
