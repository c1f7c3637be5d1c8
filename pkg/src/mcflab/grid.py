"""Periodic parameter grids and discretized immersions.

An Immersion stores the node positions of a map F from a fully periodic
parameter grid (dimension 1 or 2) into R^N.  Flat-torus ambient factors are
realized by per-axis periods: stored coordinates are a continuous lift and
all differencing reduces neighbor differences to their minimal image.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NonFinite

MIN_NODES_PER_AXIS = 8
SUPPORTED_DIMS = (1, 2)


@dataclass(frozen=True)
class ParameterGrid:
    """Uniform periodic grid of intrinsic dimension 1 or 2.

    sizes:    nodes per axis
    spacing:  h per axis (> 0); the axis parameter length is sizes*spacing
    periodic: per-axis flag; only fully periodic grids are supported
              (compact domains without boundary)
    """

    sizes: tuple[int, ...]
    spacing: tuple[float, ...]
    periodic: tuple[bool, ...] = field(default=())

    def __post_init__(self):
        if not self.periodic:
            object.__setattr__(self, "periodic", (True,) * len(self.sizes))
        if len(self.sizes) not in SUPPORTED_DIMS:
            raise ValueError(f"intrinsic dimension must be 1 or 2, got {len(self.sizes)}")
        if len(self.spacing) != len(self.sizes) or len(self.periodic) != len(self.sizes):
            raise ValueError("sizes, spacing, periodic must have equal length")
        if any(s < MIN_NODES_PER_AXIS for s in self.sizes):
            raise ValueError(f"need >= {MIN_NODES_PER_AXIS} nodes per axis, got {self.sizes}")
        if any(h <= 0 for h in self.spacing):
            raise ValueError(f"grid spacing must be positive, got {self.spacing}")
        if not all(self.periodic):
            raise ValueError("only fully periodic grids are supported")

    @property
    def ndim(self) -> int:
        return len(self.sizes)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(s * h for s, h in zip(self.sizes, self.spacing))

    def axes(self) -> list[np.ndarray]:
        """Per-axis parameter coordinates (node positions)."""
        return [np.arange(s) * h for s, h in zip(self.sizes, self.spacing)]


@dataclass
class Immersion:
    """Discretized immersion F: grid -> R^N at flow time t.

    points:          array of shape (*grid.sizes, N)
    ambient_periods: optional (N,) array; entry p > 0 marks a flat-torus
                     ambient factor of period p, entry 0 marks a Euclidean
                     axis.  Stored coordinates are a continuous lift;
                     differencing uses minimal representatives.
    graph_dims:      (n, m) when F = (x, f(x)) is a graph whose first n
                     ambient coordinates are the domain factor; else None.
    lagrangian:      True for gradient graphs in R^{2n} (phase monitors apply).
    """

    grid: ParameterGrid
    points: np.ndarray
    ambient_periods: np.ndarray | None = None
    t: float = 0.0
    graph_dims: tuple[int, int] | None = None
    lagrangian: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        expected = tuple(self.grid.sizes) + (self.points.shape[-1],)
        if self.points.shape != expected:
            raise ValueError(f"points shape {self.points.shape} != {expected}")
        n, N = self.grid.ndim, self.ambient_dim
        if N < n + 1:
            raise ValueError(f"ambient dimension {N} must exceed intrinsic dimension {n}")
        if not np.all(np.isfinite(self.points)):
            raise NonFinite("immersion has non-finite coordinates")
        if self.ambient_periods is not None:
            self.ambient_periods = np.asarray(self.ambient_periods, dtype=np.float64)
            if self.ambient_periods.shape != (N,):
                raise ValueError("ambient_periods must have one entry per ambient axis")
            if np.any(self.ambient_periods < 0) or not np.all(np.isfinite(self.ambient_periods)):
                raise ValueError("ambient periods must be finite and >= 0")
        if self.graph_dims is not None:
            gm, gn = self.graph_dims[1], self.graph_dims[0]
            if gn != n or gn + gm > N:
                raise ValueError(f"graph_dims {self.graph_dims} inconsistent with n={n}, N={N}")

    @property
    def ambient_dim(self) -> int:
        return int(self.points.shape[-1])

    def copy(self, **changes) -> "Immersion":
        out = replace(self, **changes)
        if "points" not in changes:
            out.points = self.points.copy()
        return out


def wrap_minimal(diff: np.ndarray, periods: np.ndarray | None) -> np.ndarray:
    """Reduce an ambient difference array (..., N) to minimal representatives.

    Operates in place on periodic axes and returns diff.
    """
    if periods is None:
        return diff
    for a in np.flatnonzero(periods > 0):
        p = periods[a]
        d = diff[..., a]
        d -= p * np.rint(d / p)
    return diff
