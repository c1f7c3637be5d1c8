"""Bit-exact file formats: binary snapshots, CSV series, JSON reports.

Snapshot layout (little-endian):
    bytes 0-3   magic "MCFS"
    uint32      format_version
    uint32      n   (intrinsic dimension)
    uint32      N   (ambient dimension)
    uint32 x n  nodes per axis
    f64    x n  grid spacing per axis
    f64         flow time t
    payload     node-major float64 F values (C order, ambient axis last)

All floating-point text output uses 17 significant digits, which
round-trips float64 exactly; identical configurations therefore produce
byte-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import VersionMismatch
from .grid import Immersion, ParameterGrid

MAGIC = b"MCFS"
FORMAT_VERSION = 1


def fmt17(x: float) -> str:
    """17-significant-digit decimal, round-trip exact for float64."""
    return format(float(x), ".17g")


def write_snapshot(path, imm: Immersion) -> None:
    grid = imm.grid
    n, N = grid.ndim, imm.ambient_dim
    header = MAGIC
    header += struct.pack("<III", FORMAT_VERSION, n, N)
    header += struct.pack(f"<{n}I", *grid.sizes)
    header += struct.pack(f"<{n}d", *grid.spacing)
    header += struct.pack("<d", float(imm.t))
    payload = np.ascontiguousarray(imm.points, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


@dataclass
class SnapshotData:
    """Decoded snapshot file: raw coordinates plus grid metadata."""

    points: np.ndarray
    t: float
    sizes: tuple[int, ...]
    spacing: tuple[float, ...]


def read_snapshot(path) -> SnapshotData:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise VersionMismatch(f"{path}: bad magic {raw[:4]!r}")
    version, n, N = struct.unpack_from("<III", raw, 4)
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format_version {version} != {FORMAT_VERSION}")
    off = 16
    sizes = struct.unpack_from(f"<{n}I", raw, off)
    off += 4 * n
    spacing = struct.unpack_from(f"<{n}d", raw, off)
    off += 8 * n
    (t,) = struct.unpack_from("<d", raw, off)
    off += 8
    count = int(np.prod(sizes)) * N
    payload = np.frombuffer(raw, dtype="<f8", count=count, offset=off)
    if payload.size != count or len(raw) != off + 8 * count:
        raise VersionMismatch(f"{path}: truncated payload")
    points = payload.reshape(sizes + (N,)).astype(np.float64)
    return SnapshotData(points=points, t=float(t), sizes=sizes, spacing=spacing)


def snapshot_to_immersion(data: SnapshotData, template: Immersion | None = None) -> Immersion:
    """Rebuild an Immersion, inheriting periods/graph metadata from a template."""
    grid = ParameterGrid(tuple(int(s) for s in data.sizes), tuple(float(h) for h in data.spacing))
    periods = graph_dims = None
    lagrangian = False
    if template is not None:
        if tuple(template.grid.sizes) != tuple(data.sizes):
            raise VersionMismatch("snapshot grid does not match the template scenario")
        periods = template.ambient_periods
        graph_dims = template.graph_dims
        lagrangian = template.lagrangian
    return Immersion(grid=grid, points=data.points, ambient_periods=periods,
                     t=data.t, graph_dims=graph_dims, lagrangian=lagrangian)


def write_series_csv(path, columns: list[tuple[str, np.ndarray]]) -> None:
    names = [name for name, _ in columns]
    arrays = [np.asarray(vals, dtype=np.float64) for _, vals in columns]
    rows = len(arrays[0]) if arrays else 0
    if any(len(a) != rows for a in arrays):
        raise ValueError("all series columns must share one length")
    lines = [",".join(names)]
    for i in range(rows):
        lines.append(",".join(fmt17(a[i]) for a in arrays))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_series_csv(path) -> dict[str, np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    names = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=np.float64)
    if data.size == 0:
        data = data.reshape(0, len(names))
    return {name: data[:, k] for k, name in enumerate(names)}


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
