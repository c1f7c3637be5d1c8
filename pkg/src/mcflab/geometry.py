"""Discrete differential geometry of immersions by central finite differences.

All stencils are second-order central with periodic wraparound; mixed second
derivatives use the 4-point cross stencil.  Flat-torus ambient factors are
handled by minimal-image differencing, which keeps every formula identical
to the Euclidean case.  Quadrature is the plain node sum times the cell
volume (trapezoid on a periodic domain, spectrally accurate for smooth data).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetric
from .grid import Immersion, wrap_minimal

EPS_DEG = 1e-12

# Packed ordering of the symmetric index pairs (i, j), i <= j.
PAIRS = {1: ((0, 0),), 2: ((0, 0), (0, 1), (1, 1))}


def _one_sided_diffs(imm: Immersion):
    """Wrapped forward/backward neighbor differences per grid axis.

    Returns [(dp, dm), ...] with dp = F(x+h e_i) - F(x), dm = F(x) - F(x-h e_i),
    both reduced to minimal ambient images.
    """
    F, per = imm.points, imm.ambient_periods
    out = []
    for ax in range(imm.grid.ndim):
        dp = wrap_minimal(np.roll(F, -1, axis=ax) - F, per)
        dm = wrap_minimal(F - np.roll(F, 1, axis=ax), per)
        out.append((dp, dm))
    return out


def tangent_frames(imm: Immersion, diffs=None) -> np.ndarray:
    """Central-difference tangent frames dF/dx^i, shape (n, *sizes, N)."""
    diffs = diffs if diffs is not None else _one_sided_diffs(imm)
    h = imm.grid.spacing
    return np.stack([(dp + dm) / (2.0 * h[i]) for i, (dp, dm) in enumerate(diffs)])


def second_derivatives(imm: Immersion, diffs=None) -> np.ndarray:
    """Packed second derivatives d2F/dx^i dx^j, shape (n_pairs, *sizes, N).

    Pair order follows PAIRS[n].  The mixed term combines the four wrapped
    corner differences relative to the center node (4-point cross stencil).
    """
    diffs = diffs if diffs is not None else _one_sided_diffs(imm)
    h = imm.grid.spacing
    n = imm.grid.ndim
    packed = []
    for i in range(n):
        dp, dm = diffs[i]
        packed.append((dp - dm) / (h[i] * h[i]))
        if i == 0 and n == 2:
            F, per = imm.points, imm.ambient_periods
            Fp = np.roll(F, -1, axis=0)
            Fm = np.roll(F, 1, axis=0)
            dpp = wrap_minimal(np.roll(Fp, -1, axis=1) - F, per)
            dpm = wrap_minimal(np.roll(Fp, 1, axis=1) - F, per)
            dmp = wrap_minimal(np.roll(Fm, -1, axis=1) - F, per)
            dmm = wrap_minimal(np.roll(Fm, 1, axis=1) - F, per)
            packed.append((dpp - dpm - dmp + dmm) / (4.0 * h[0] * h[1]))
    return np.stack(packed)


def induced_metric(frames: np.ndarray, eps_deg: float = EPS_DEG):
    """First fundamental form g_ij = <dF/dx^i, dF/dx^j> and derived data.

    Returns (g, g_inv, sqrt_det) with shapes (*sizes, n, n) twice and (*sizes,).
    Raises DegenerateMetric when det g <= eps_deg anywhere.
    """
    n = frames.shape[0]
    if n == 1:
        g00 = np.einsum("...a,...a->...", frames[0], frames[0])
        det = g00
        _check_det(det, eps_deg)
        g = g00[..., None, None]
        ginv = (1.0 / g00)[..., None, None]
    else:
        g00 = np.einsum("...a,...a->...", frames[0], frames[0])
        g01 = np.einsum("...a,...a->...", frames[0], frames[1])
        g11 = np.einsum("...a,...a->...", frames[1], frames[1])
        det = g00 * g11 - g01 * g01
        _check_det(det, eps_deg)
        g = np.stack([np.stack([g00, g01], -1), np.stack([g01, g11], -1)], -2)
        inv = np.stack([np.stack([g11, -g01], -1), np.stack([-g01, g00], -1)], -2)
        ginv = inv / det[..., None, None]
    return g, ginv, np.sqrt(det)


def _check_det(det: np.ndarray, eps_deg: float):
    m = float(np.min(det))
    if not np.isfinite(m) or m <= eps_deg:
        raise DegenerateMetric(m, eps_deg)


def normal_projector(frames: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Projection onto the normal space: P = I - g^{kl} dF/dx^k (dF/dx^l)^T."""
    N = frames.shape[-1]
    tang = np.einsum("...kl,k...a,l...b->...ab", ginv, frames, frames)
    return np.eye(N) - tang


def second_fundamental_form(imm: Immersion, frames, ginv, projector, diffs=None):
    """Normal-projected second derivatives and their traces.

    Returns (A, H, norm_A2, norm_H2) where A is packed as in PAIRS[n],
    H = g^{ij} A_ij (computed from the same A arrays), |A|^2 is the fully
    contracted g^{ik} g^{jl} <A_ij, A_kl>.
    """
    n = imm.grid.ndim
    u = second_derivatives(imm, diffs)
    A = np.einsum("...ab,p...b->p...a", projector, u)
    full = _unpack_pairs(A, n)
    H = np.einsum("...ij,...ija->...a", ginv, full)
    norm_A2 = np.einsum("...ik,...jl,...ija,...kla->...", ginv, ginv, full, full)
    norm_H2 = np.einsum("...a,...a->...", H, H)
    return A, H, norm_A2, norm_H2


def _unpack_pairs(packed: np.ndarray, n: int) -> np.ndarray:
    """Packed (n_pairs, *sizes, N) -> full symmetric (*sizes, n, n, N)."""
    if n == 1:
        return packed[0][..., None, None, :]
    rows = [np.stack([packed[0], packed[1]], axis=-2), np.stack([packed[1], packed[2]], axis=-2)]
    return np.stack(rows, axis=-3)


def area(imm: Immersion, sqrt_det: np.ndarray) -> float:
    """Total area: node sum of the area density times the cell volume."""
    return float(np.sum(sqrt_det) * imm.grid.cell_volume)


@dataclass
class GeometrySnapshot:
    """Per-node first/second fundamental data of an immersion."""

    frames: np.ndarray        # (n, *sizes, N)
    metric: np.ndarray        # (*sizes, n, n)
    inv_metric: np.ndarray    # (*sizes, n, n)
    sqrt_det: np.ndarray      # (*sizes,)
    projector: np.ndarray     # (*sizes, N, N)
    second_form: np.ndarray   # packed (n_pairs, *sizes, N)
    mean_curvature: np.ndarray  # (*sizes, N)
    norm_A2: np.ndarray       # (*sizes,)
    norm_H2: np.ndarray       # (*sizes,)
    area: float

    @property
    def ndim(self) -> int:
        return int(self.frames.shape[0])

    def validate(self, tol: float = 1e-12) -> None:
        """Assert the linear-algebra invariants of the snapshot."""
        P = self.projector
        err_sym = float(np.max(np.abs(P - np.swapaxes(P, -1, -2))))
        PP = np.einsum("...ab,...bc->...ac", P, P)
        err_idem = float(np.max(np.abs(PP - P)))
        err_tang = float(np.max(np.abs(np.einsum("...ab,i...b->i...a", P, self.frames))))
        if max(err_sym, err_idem, err_tang) > tol:
            raise AssertionError(
                f"projector invariants violated: sym={err_sym:.2e} "
                f"idem={err_idem:.2e} tang={err_tang:.2e} (tol {tol:.1e})"
            )
        n = self.ndim
        slack = 1e-10 * (1.0 + float(np.max(self.norm_A2)))
        if np.any(self.norm_H2 > n * self.norm_A2 + slack):
            raise AssertionError("|H|^2 <= n |A|^2 violated")
        if self.area <= 0:
            raise AssertionError("nonpositive area")


def geometry_snapshot(imm: Immersion, eps_deg: float = EPS_DEG) -> GeometrySnapshot:
    """Compute the full geometric state of an immersion."""
    diffs = _one_sided_diffs(imm)
    frames = tangent_frames(imm, diffs)
    g, ginv, sdet = induced_metric(frames, eps_deg)
    P = normal_projector(frames, ginv)
    A, H, nA2, nH2 = second_fundamental_form(imm, frames, ginv, P, diffs)
    return GeometrySnapshot(
        frames=frames, metric=g, inv_metric=ginv, sqrt_det=sdet, projector=P,
        second_form=A, mean_curvature=H, norm_A2=nA2, norm_H2=nH2,
        area=area(imm, sdet),
    )
