"""Serialization: binary field files, curve CSVs and run manifests.

Field file layout (little-endian):

    offset  size  content
    0       4     magic "CVST"
    4       4     format version (1)
    8       8     nx (pixels along x)
    16      8     ny (pixels along y)
    24      8     pixel spacing h
    32      8     x_min
    40      8     y_min
    48      1     signedness flag (1 = field may take negative values)
    49      15    reserved (zero)
    64      ...   nx*ny float64 values, row-major (rows along y)

Curve CSVs use the schema stat,ordering,t,value,replicate with empty cells
for missing values, UTF-8 and LF line endings; floats are written with %.12g
so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError
from .estimators import Envelope, StatCurve
from .grid import GridSpec, ScalarField
from .oracles import OracleCurve

MAGIC = b"CVST"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQdddB15x")
assert _HEADER.size == 64

CURVE_HEADER = ["stat", "ordering", "t", "value", "replicate"]
ORACLE_HEADER = ["stat", "ordering", "t", "value", "method"]
ENVELOPE_HEADER = ["stat", "ordering", "t", "mean", "lower", "upper", "n_replicates", "q"]


def _fmt(v: float) -> str:
    if v != v:  # NaN -> empty cell
        return ""
    return "%.12g" % v


def write_field(path, fld: ScalarField) -> None:
    spec = fld.spec
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        spec.nx,
        spec.ny,
        spec.h,
        spec.x_min,
        spec.y_min,
        1 if fld.signed else 0,
    )
    data = np.ascontiguousarray(fld.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_field(path) -> ScalarField:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise FormatError("field file shorter than its header")
        magic, version, nx, ny, h, x_min, y_min, signed = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise FormatError("bad magic %r" % (magic,))
        if version != FORMAT_VERSION:
            raise FormatError("unsupported field format version %d" % version)
        payload = fh.read()
    expected = nx * ny * 8
    if len(payload) != expected:
        raise FormatError("payload is %d bytes, expected %d" % (len(payload), expected))
    values = np.frombuffer(payload, dtype="<f8").reshape(ny, nx).copy()
    spec = GridSpec(x_min, x_min + nx * h, y_min, y_min + ny * h, h)
    return ScalarField(spec, values, signed=bool(signed))


def _open_csv_writer(path):
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_curves(path, curves: list[StatCurve]) -> None:
    fh, w = _open_csv_writer(path)
    with fh:
        w.writerow(CURVE_HEADER)
        for c in curves:
            rep = c.meta.get("replicate", "")
            for tt, vv in zip(c.t, c.values):
                w.writerow([c.name, c.ordering, _fmt(tt), _fmt(vv), rep])


def read_curves(path) -> list[StatCurve]:
    groups: dict[tuple, list] = {}
    order: list[tuple] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CURVE_HEADER:
            raise FormatError("unexpected curve header %r" % (header,))
        for row in reader:
            stat, ordering, t, value, rep = row
            key = (stat, ordering, rep)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append((float(t), float(value) if value else math.nan))
    out = []
    for key in order:
        stat, ordering, rep = key
        pts = groups[key]
        t = np.array([p[0] for p in pts])
        v = np.array([p[1] for p in pts])
        meta = {"replicate": int(rep)} if rep else {}
        out.append(StatCurve(stat, ordering, t, v, meta))
    return out


def write_oracle_curves(path, curves: list[OracleCurve]) -> None:
    fh, w = _open_csv_writer(path)
    with fh:
        w.writerow(ORACLE_HEADER)
        for c in curves:
            for tt, vv in zip(c.t, c.values):
                w.writerow([c.name, c.ordering, _fmt(tt), _fmt(vv), c.method])


def read_oracle_curves(path) -> list[OracleCurve]:
    groups: dict[tuple, list] = {}
    order: list[tuple] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ORACLE_HEADER:
            raise FormatError("unexpected oracle header %r" % (header,))
        for row in reader:
            stat, ordering, t, value, method = row
            key = (stat, ordering, method)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append((float(t), float(value) if value else math.nan))
    out = []
    for (stat, ordering, method) in order:
        pts = groups[(stat, ordering, method)]
        t = np.array([p[0] for p in pts])
        v = np.array([p[1] for p in pts])
        out.append(OracleCurve(stat, ordering, t, v, method))
    return out


def write_envelopes(path, envelopes: list[Envelope]) -> None:
    fh, w = _open_csv_writer(path)
    with fh:
        w.writerow(ENVELOPE_HEADER)
        for e in envelopes:
            for i, tt in enumerate(e.t):
                w.writerow(
                    [
                        e.name,
                        e.ordering,
                        _fmt(tt),
                        _fmt(e.mean[i]),
                        _fmt(e.lower[i]),
                        _fmt(e.upper[i]),
                        e.n_replicates,
                        _fmt(e.q),
                    ]
                )


def read_envelopes(path) -> list[Envelope]:
    groups: dict[tuple, list] = {}
    order: list[tuple] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ENVELOPE_HEADER:
            raise FormatError("unexpected envelope header %r" % (header,))
        for row in reader:
            stat, ordering, t, mean, lower, upper, n, q = row
            key = (stat, ordering, int(n), float(q))
            if key not in groups:
                groups[key] = []
                order.append(key)
            nan = math.nan
            groups[key].append(
                (
                    float(t),
                    float(mean) if mean else nan,
                    float(lower) if lower else nan,
                    float(upper) if upper else nan,
                )
            )
    out = []
    for (stat, ordering, n, q) in order:
        pts = groups[(stat, ordering, n, q)]
        arr = np.array(pts)
        out.append(Envelope(stat, ordering, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], n, q))
    return out


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """Provenance record written next to every command's outputs."""

    command: str
    config: dict
    package_version: str
    master_seed: int
    replicate_seeds: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "config_sha256": config_hash(self.config),
            "package_version": self.package_version,
            "master_seed": self.master_seed,
            "replicate_seeds": self.replicate_seeds,
            "outputs": self.outputs,
            "wall_time_s": self.wall_time_s,
        }


def write_manifest(path, manifest: RunManifest) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
