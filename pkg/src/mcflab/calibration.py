"""Calibration quantities on graphical submanifolds and their audits.

For a graph F = (x, f(x)) in a product of flat tori the evaluations of the
factor volume forms on the tangent plane reduce to closed forms in the
singular values of df:

    omega1 = 1 / prod_i sqrt(1 + lambda_i^2)
    omega2 = det(df) * omega1              (n = m = 2)

omega2 keeps the sign of det(df): the pullback of the target area form per
unit induced area.  Unsigned singular values alone would lose it, and the
preserved inequalities compare omega1 against |omega2|.  eta1 = omega1 +
omega2 and eta2 = omega1 - omega2 by construction.

The Lagrangian angle of a gradient graph in R^{2n} ~ C^n uses
e^{i theta} = det(I + i df) / |det(I + i df)|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphLost, KBelowMu, UnwrapAmbiguity
from .geometry import geometry_snapshot, tangent_frames, induced_metric
from .grid import Immersion
from .seriestools import MonotoneFlag, Series, monotone_flags


# ---------------------------------------------------------------------------
# pointwise algebra


def singular_values(df: np.ndarray) -> np.ndarray:
    """Singular values of node-indexed small matrices, descending.

    df has shape (..., m, n).  The 2x2 case uses the exact closed form via
    the two rotation invariants; the 1-column case is the column norm;
    other small sizes fall back to an eigen-decomposition of df^T df.
    """
    df = np.asarray(df, dtype=np.float64)
    m, n = df.shape[-2:]
    if n == 1:
        return np.sqrt(np.sum(df * df, axis=(-2, -1)))[..., None]
    if m == 2 and n == 2:
        a, b = df[..., 0, 0], df[..., 0, 1]
        c, d = df[..., 1, 0], df[..., 1, 1]
        e, f = 0.5 * (a + d), 0.5 * (a - d)
        g, h = 0.5 * (c + b), 0.5 * (c - b)
        q = np.hypot(e, h)
        r = np.hypot(f, g)
        return np.stack([q + r, np.abs(q - r)], axis=-1)
    w = np.linalg.eigvalsh(np.swapaxes(df, -1, -2) @ df)
    return np.sqrt(np.clip(w[..., ::-1], 0.0, None))


def omega_values(lams: np.ndarray, det_df: np.ndarray | None = None):
    """(omega1, omega2) from singular values; omega2 needs the signed det.

    omega1 = 1/prod sqrt(1 + lambda_i^2) for any n; omega2 is defined only
    for n = m = 2 and returned as None when det_df is not supplied.
    """
    omega1 = 1.0 / np.sqrt(np.prod(1.0 + lams * lams, axis=-1))
    omega2 = None if det_df is None else det_df * omega1
    return omega1, omega2


def det2(df: np.ndarray) -> np.ndarray:
    return df[..., 0, 0] * df[..., 1, 1] - df[..., 0, 1] * df[..., 1, 0]


def projection_jacobian(frames: np.ndarray, sqrt_det: np.ndarray, domain_dim: int) -> np.ndarray:
    """Jacobian of the projection onto the domain factor, from Gram determinants.

    Computed as sqrt(det G_dom / det g) where G_dom is the Gram matrix of the
    domain components of the tangent frames.  Independent cross-check of the
    singular-value formula for omega1.
    """
    dom = frames[..., :domain_dim]
    n = frames.shape[0]
    if n == 1:
        det_dom = np.einsum("...a,...a->...", dom[0], dom[0])
    else:
        d00 = np.einsum("...a,...a->...", dom[0], dom[0])
        d01 = np.einsum("...a,...a->...", dom[0], dom[1])
        d11 = np.einsum("...a,...a->...", dom[1], dom[1])
        det_dom = d00 * d11 - d01 * d01
    return np.sqrt(np.clip(det_dom, 0.0, None)) / sqrt_det


def graph_jacobian(imm: Immersion, frames: np.ndarray | None = None) -> np.ndarray:
    """Map Jacobian df of a graph immersion, shape (..., m, n).

    The parametrization may drift tangentially along the flow, so df is the
    target-part frame matrix composed with the inverse of the domain-part
    frame matrix.  Raises GraphLost when the domain part degenerates or
    reverses orientation.
    """
    if imm.graph_dims is None:
        raise ValueError("immersion does not carry graph structure")
    n, m = imm.graph_dims
    fr = tangent_frames(imm) if frames is None else frames
    # D[..., a, i] = d(domain coord a)/dx^i, T[..., b, i] = d(target coord b)/dx^i
    D = np.stack([fr[i][..., :n] for i in range(n)], axis=-1)
    T = np.stack([fr[i][..., n:n + m] for i in range(n)], axis=-1)
    if n == 1:
        det = D[..., 0, 0]
        if np.min(det) <= 1e-12:
            raise GraphLost(imm.t, "domain frame degenerate")
        return T / det[..., None, None]
    det = det2(D)
    if np.min(det) <= 1e-12:
        raise GraphLost(imm.t, "domain frame degenerate")
    inv = np.empty_like(D)
    inv[..., 0, 0] = D[..., 1, 1]
    inv[..., 0, 1] = -D[..., 0, 1]
    inv[..., 1, 0] = -D[..., 1, 0]
    inv[..., 1, 1] = D[..., 0, 0]
    inv /= det[..., None, None]
    return T @ inv


@dataclass
class CalibrationState:
    """Per-node calibration data of one graphical snapshot."""

    lams: np.ndarray            # (..., n) singular values, descending
    omega1: np.ndarray
    omega2: np.ndarray | None   # None unless n = m = 2
    eta1: np.ndarray | None
    eta2: np.ndarray | None
    det_df: np.ndarray | None
    min_eta1: float = field(init=False, default=float("nan"))
    min_eta2: float = field(init=False, default=float("nan"))
    min_mu: float = field(init=False, default=float("nan"))

    def __post_init__(self):
        self.min_mu = float(np.min(self.omega1))
        if self.eta1 is not None:
            self.min_eta1 = float(np.min(self.eta1))
            self.min_eta2 = float(np.min(self.eta2))


def calibration_state(imm: Immersion, frames: np.ndarray | None = None) -> CalibrationState:
    """Singular values, omega and eta fields of a graph snapshot."""
    df = graph_jacobian(imm, frames)
    lams = singular_values(df)
    n, m = imm.graph_dims
    if n == 2 and m == 2:
        det = det2(df)
        omega1, omega2 = omega_values(lams, det)
        return CalibrationState(lams, omega1, omega2, omega1 + omega2, omega1 - omega2, det)
    omega1, _ = omega_values(lams)
    return CalibrationState(lams, omega1, None, None, None, None)


# ---------------------------------------------------------------------------
# generic form evaluation


def star_alpha(imm: Immersion, form: np.ndarray, frames: np.ndarray | None = None) -> np.ndarray:
    """Evaluate a constant-coefficient n-form on the oriented tangent planes.

    The tangent frame is orthonormalized (Gram-Schmidt, orientation fixed by
    frame order) and contracted with the form.  The result lies in [-1, 1]
    when the supplied form has comass <= 1; comass normalization is the
    caller's responsibility and is not verified here.
    """
    fr = tangent_frames(imm) if frames is None else frames
    n = fr.shape[0]
    form = np.asarray(form, dtype=np.float64)
    e1 = fr[0] / np.linalg.norm(fr[0], axis=-1, keepdims=True)
    if n == 1:
        if form.shape != (imm.ambient_dim,):
            raise ValueError("1-form coefficients must be a vector of length N")
        return np.einsum("a,...a->...", form, e1)
    if form.shape != (imm.ambient_dim,) * 2:
        raise ValueError("2-form coefficients must be an N x N matrix")
    if float(np.max(np.abs(form + form.T))) > 1e-12 * (1.0 + float(np.max(np.abs(form)))):
        raise ValueError("2-form coefficient matrix must be antisymmetric")
    v2 = fr[1] - np.einsum("...a,...a->...", fr[1], e1)[..., None] * e1
    e2 = v2 / np.linalg.norm(v2, axis=-1, keepdims=True)
    return np.einsum("...a,ab,...b->...", e1, form, e2)


# ---------------------------------------------------------------------------
# Lagrangian angle


@dataclass
class LagrangianState:
    """Unwrapped phase field of a (near-)gradient graph snapshot."""

    theta: np.ndarray
    cos_theta: np.ndarray
    symmetry_defect: float

    @property
    def min_cos(self) -> float:
        return float(np.min(self.cos_theta))


def _phase_det(df: np.ndarray) -> np.ndarray:
    n = df.shape[-1]
    if n == 1:
        return 1.0 + 1j * df[..., 0, 0]
    return (1.0 + 1j * df[..., 0, 0]) * (1.0 + 1j * df[..., 1, 1]) \
        - (1j * df[..., 0, 1]) * (1j * df[..., 1, 0])


def lagrangian_angle(df: np.ndarray, prev_theta: np.ndarray | None = None) -> LagrangianState:
    """Unwrapped Lagrangian angle theta, cos theta, and the symmetry defect.

    Spatial unwrapping runs from the reference node (index 0) along each
    axis; when prev_theta is given the whole field is aligned to it by a
    multiple of 2 pi at the reference node and per-node continuity in time
    is enforced.  Raises UnwrapAmbiguity when a jump >= pi is unavoidable.
    """
    detc = _phase_det(df)
    mod = np.abs(detc)
    cos_theta = detc.real / mod
    raw = np.angle(detc)
    th = np.unwrap(raw, axis=0)
    if th.ndim == 2:
        th = np.unwrap(th, axis=1)
    for ax in range(th.ndim):
        jumps = np.abs(th - np.roll(th, 1, axis=ax))
        worst = float(np.max(jumps))
        if worst >= math.pi:
            loc = np.unravel_index(int(np.argmax(jumps)), th.shape)
            raise UnwrapAmbiguity(loc, worst)
    if prev_theta is not None:
        ref = (0,) * th.ndim
        th = th + 2.0 * math.pi * round((float(prev_theta[ref]) - float(th[ref])) / (2.0 * math.pi))
        jumps = np.abs(th - prev_theta)
        worst = float(np.max(jumps))
        if worst >= math.pi:
            loc = np.unravel_index(int(np.argmax(jumps)), th.shape)
            raise UnwrapAmbiguity(loc, worst)
    defect = float(np.max(np.abs(df - np.swapaxes(df, -1, -2))))
    return LagrangianState(theta=th, cos_theta=cos_theta, symmetry_defect=defect)


def apply_complex_structure(v: np.ndarray) -> np.ndarray:
    """J of R^{2n} ~ C^n with block layout (x, y):  J(vx, vy) = (-vy, vx)."""
    N = v.shape[-1]
    if N % 2:
        raise ValueError("ambient dimension must be even")
    n = N // 2
    out = np.empty_like(v)
    out[..., :n] = -v[..., n:]
    out[..., n:] = v[..., :n]
    return out


def laplace_beltrami(field_vals: np.ndarray, ginv: np.ndarray, sqrt_det: np.ndarray, spacing) -> np.ndarray:
    """Divergence-form Laplace-Beltrami of a scalar field on the periodic grid.

    (1/sqrt g) d_i ( sqrt g g^{ij} d_j f ) with central differences.
    """
    n = ginv.shape[-1]

    def cd(u, ax):
        return (np.roll(u, -1, axis=ax) - np.roll(u, 1, axis=ax)) / (2.0 * spacing[ax])

    grad = [cd(field_vals, ax) for ax in range(n)]
    div = np.zeros_like(field_vals)
    for i in range(n):
        w = sqrt_det * sum(ginv[..., i, j] * grad[j] for j in range(n))
        div += cd(w, i)
    return div / sqrt_det


# ---------------------------------------------------------------------------
# trajectory monitors


@dataclass
class EtaMonitorResult:
    """min eta_1, min eta_2, min omega1 series and their monotonicity flags."""

    min_eta1: Series
    min_eta2: Series
    min_mu: Series
    slack: float
    flags: dict[str, list[MonotoneFlag]]

    @property
    def flag_count(self) -> int:
        return sum(len(v) for v in self.flags.values())


def eta_monitor(trajectory, slack: float | None = None) -> EtaMonitorResult:
    """Audit the preserved-quantity series of a graphical trajectory.

    The continuous maximum principle makes min eta_i nondecreasing; the
    discrete audit allows slack C_mono (h^2 + dt) and flags anything worse.
    Raises GraphLost at the first snapshot that is not a graph.
    """
    e1, e2, mu = [], [], []
    for snap in trajectory.snapshots:
        state = calibration_state(snap)
        if state.min_mu <= 0.0:
            raise GraphLost(snap.t, "omega1 <= 0")
        e1.append(state.min_eta1)
        e2.append(state.min_eta2)
        mu.append(state.min_mu)
    slack = trajectory.mono_slack() if slack is None else slack
    t = trajectory.times
    s1, s2, smu = Series(t, np.asarray(e1)), Series(t, np.asarray(e2)), Series(t, np.asarray(mu))
    flags = {
        "min_eta1": monotone_flags(s1, slack),
        "min_eta2": monotone_flags(s2, slack),
        "min_mu": monotone_flags(smu, slack),
    }
    return EtaMonitorResult(s1, s2, smu, slack, flags)


@dataclass
class LagrangianMonitorResult:
    """Phase-equation residuals and the min cos theta audit."""

    theta_heat: Series        # max |d theta/dt - Lap_g theta| at interior snapshots
    h_vs_jgrad: Series        # max |H - J grad_g theta| at every snapshot
    cos_evolution: Series     # max |d cos/dt - Lap_g cos - |H|^2 cos| at interior snapshots
    min_cos: Series
    symmetry_defect: Series
    slack: float
    flags: list[MonotoneFlag]


def lagrangian_residuals(trajectory, slack: float | None = None) -> LagrangianMonitorResult:
    """Residuals of the phase heat equation, H = J grad theta, and the
    cos theta evolution along a recorded gradient-graph trajectory.

    All residuals are O(h^2) + O(dt) for resolved runs; exact zeros occur on
    stationary linear graphs.
    """
    snaps = trajectory.snapshots
    if len(snaps) < 2:
        raise ValueError("need at least two snapshots")
    thetas, coss, r2, defects, mins = [], [], [], [], []
    lap_theta, lap_cos, h2cos = [], [], []
    prev = None
    spacing = snaps[0].grid.spacing
    for snap in snaps:
        geo = geometry_snapshot(snap)
        df = graph_jacobian(snap, geo.frames)
        state = lagrangian_angle(df, prev_theta=prev)
        prev = state.theta
        grad = np.einsum("...ij,j...,i...a->...a", geo.inv_metric,
                         np.stack([_central(state.theta, ax, spacing) for ax in range(geo.ndim)]),
                         geo.frames)
        resid = geo.mean_curvature - apply_complex_structure(grad)
        r2.append(float(np.max(np.sqrt(np.sum(resid * resid, axis=-1)))))
        thetas.append(state.theta)
        coss.append(state.cos_theta)
        defects.append(state.symmetry_defect)
        mins.append(state.min_cos)
        lap_theta.append(laplace_beltrami(state.theta, geo.inv_metric, geo.sqrt_det, spacing))
        lap_cos.append(laplace_beltrami(state.cos_theta, geo.inv_metric, geo.sqrt_det, spacing))
        h2cos.append(geo.norm_H2 * state.cos_theta)
    t = trajectory.times
    r1, r3 = [], []
    for k in range(1, len(snaps) - 1):
        span = t[k + 1] - t[k - 1]
        dth = (thetas[k + 1] - thetas[k - 1]) / span
        dcs = (coss[k + 1] - coss[k - 1]) / span
        r1.append(float(np.max(np.abs(dth - lap_theta[k]))))
        r3.append(float(np.max(np.abs(dcs - lap_cos[k] - h2cos[k]))))
    slack = trajectory.mono_slack() if slack is None else slack
    min_cos = Series(t, np.asarray(mins))
    return LagrangianMonitorResult(
        theta_heat=Series(t[1:-1], np.asarray(r1)),
        h_vs_jgrad=Series(t, np.asarray(r2)),
        cos_evolution=Series(t[1:-1], np.asarray(r3)),
        min_cos=min_cos,
        symmetry_defect=Series(t, np.asarray(defects)),
        slack=slack,
        flags=monotone_flags(min_cos, slack),
    )


def _central(u: np.ndarray, ax: int, spacing) -> np.ndarray:
    return (np.roll(u, -1, axis=ax) - np.roll(u, 1, axis=ax)) / (2.0 * spacing[ax])


@dataclass
class RatioMonitorResult:
    """max_p |A|^2 / (omega1 - k) series and its tail-boundedness audit."""

    ratio_max: Series
    k: float
    tail_start: float
    tail_sup: float
    bounded: bool


def ratio_monitor(trajectory, k: float, tail_frac: float = 0.25, headroom: float = 1.1) -> RatioMonitorResult:
    """Boundedness diagnostic for |A|^2 / (omega1 - k) along a graph trajectory.

    Requires min omega1 > k on every recorded snapshot (KBelowMu otherwise).
    The audit reports the sup over the trailing window and whether it stays
    within `headroom` times the value at the window start.
    """
    vals = []
    for snap in trajectory.snapshots:
        geo = geometry_snapshot(snap)
        state = calibration_state(snap, geo.frames)
        if state.min_mu <= k:
            raise KBelowMu(snap.t, k, state.min_mu)
        vals.append(float(np.max(geo.norm_A2 / (state.omega1 - k))))
    series = Series(trajectory.times, np.asarray(vals))
    w = max(2, int(math.ceil(tail_frac * len(vals))))
    tail = series.values[-w:]
    tail_sup = float(np.max(tail))
    start = float(tail[0])
    bounded = tail_sup <= headroom * start + 1e-300
    return RatioMonitorResult(series, float(k), float(series.times[-w]), tail_sup, bounded)
