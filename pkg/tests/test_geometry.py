"""Discrete geometry: frames, metric, projector, curvature, area."""

import math

import numpy as np
import pytest

import mcflab as m
from mcflab.geometry import geometry_snapshot, tangent_frames, induced_metric, \
    normal_projector, second_fundamental_form, area, PAIRS, second_derivatives
from mcflab.grid import Immersion, ParameterGrid
from mcflab.stepkern import step_fields_1d, step_fields_2d

TAU = 2.0 * math.pi


def circle_immersion(r=1.0, res=256, ambient=3):
    return m.make_circle(r, ambient_dim=ambient, resolution=res).immersion


def random_fourier_curve(rng, res=128, ambient=3, modes=3, amp=0.3):
    grid = ParameterGrid((res,), (1.0 / res,))
    x = grid.axes()[0]
    F = np.zeros((res, ambient))
    F[:, 0] = np.cos(TAU * x)
    F[:, 1] = np.sin(TAU * x)
    for a in range(ambient):
        for k in range(1, modes + 1):
            F[:, a] += amp / k * (rng.normal() * np.cos(TAU * k * x) + rng.normal() * np.sin(TAU * k * x))
    return Immersion(grid=grid, points=F)


def random_fourier_graph(rng, res=32, amp=0.08, modes=2):
    grid = ParameterGrid((res, res), (1.0 / res, 1.0 / res))
    x, y = np.meshgrid(*grid.axes(), indexing="ij")
    f = np.zeros((res, res, 2))
    for a in range(2):
        for kx in range(1, modes + 1):
            for ky in range(1, modes + 1):
                f[..., a] += amp * (
                    rng.normal() * np.cos(TAU * (kx * x + ky * y))
                    + rng.normal() * np.sin(TAU * (kx * x - ky * y))
                )
    F = np.stack([x, y, x + f[..., 0], y + f[..., 1]], axis=-1)
    return Immersion(grid=grid, points=F, ambient_periods=np.ones(4), graph_dims=(2, 2))


class TestFrames:
    def test_unit_circle_speed(self):
        imm = circle_immersion(1.0)
        fr = tangent_frames(imm)
        speed = np.linalg.norm(fr[0], axis=-1)
        h = imm.grid.spacing[0]
        assert np.max(np.abs(speed - 1.0)) < h * h

    def test_identity_graph_frames_exact(self):
        imm = m.make_torus_graph(np.eye(2)).immersion
        fr = tangent_frames(imm)
        S = imm.grid.sizes[0]
        e1 = np.array([1.0, 0.0, 1.0, 0.0])
        e2 = np.array([0.0, 1.0, 0.0, 1.0])
        assert np.array_equal(fr[0], np.broadcast_to(e1, (S, S, 4)))
        assert np.array_equal(fr[1], np.broadcast_to(e2, (S, S, 4)))

    def test_second_order_convergence_against_analytic_derivative(self):
        # oracle: d/dx (cos 2pi x, sin 2pi x, cos 2pi x sin 2pi x)
        def deriv(x):
            return np.stack([-TAU * np.sin(TAU * x), TAU * np.cos(TAU * x),
                             TAU * np.cos(2 * TAU * x)], axis=-1)

        errs = []
        for res in (64, 128):
            grid = ParameterGrid((res,), (1.0 / res,))
            x = grid.axes()[0]
            F = np.stack([np.cos(TAU * x), np.sin(TAU * x),
                          np.cos(TAU * x) * np.sin(TAU * x)], axis=-1)
            fr = tangent_frames(Immersion(grid=grid, points=F))
            errs.append(np.max(np.abs(fr[0] - deriv(x))))
        assert errs[0] / errs[1] > 3.5  # ~O(h^2)
        assert errs[1] < 0.02


class TestMetric:
    def test_circle_metric(self):
        r = 1.7
        imm = circle_immersion(r)
        fr = tangent_frames(imm)
        g, ginv, sdet = induced_metric(fr)
        h = imm.grid.spacing[0]
        assert np.allclose(g[..., 0, 0], r * r, atol=r * r * h * h)
        assert np.allclose(ginv[..., 0, 0], 1.0 / (r * r), rtol=h * h)
        assert np.allclose(sdet, r, rtol=h * h)

    def test_identity_graph_metric_exact(self):
        imm = m.make_torus_graph(np.eye(2)).immersion
        fr = tangent_frames(imm)
        g, ginv, sdet = induced_metric(fr)
        assert np.array_equal(g[..., 0, 0], np.full_like(sdet, 2.0))
        assert np.array_equal(g[..., 0, 1], np.zeros_like(sdet))
        assert np.array_equal(sdet, np.full_like(sdet, 2.0))

    def test_constant_graph_metric(self):
        imm = m.make_torus_graph(np.zeros((2, 2))).immersion
        fr = tangent_frames(imm)
        g, _, sdet = induced_metric(fr)
        assert np.array_equal(g[..., 0, 0], np.ones_like(sdet))
        assert np.array_equal(sdet, np.ones_like(sdet))

    def test_degenerate_metric_raises(self):
        grid = ParameterGrid((16,), (0.0625,))
        imm = Immersion(grid=grid, points=np.ones((16, 2)))  # collapsed to a point
        with pytest.raises(m.DegenerateMetric):
            geometry_snapshot(imm)


class TestProjector:
    def test_circle_projector_at_east_node(self):
        imm = circle_immersion(1.0)
        snap = geometry_snapshot(imm)
        # node 0 sits at (1, 0, 0); tangent e2, normal span{e1, e3}
        assert np.allclose(snap.projector[0], np.diag([1.0, 0.0, 1.0]), atol=1e-12)

    def test_trace_equals_codimension(self):
        rng = np.random.default_rng(7)
        for imm in (random_fourier_curve(rng), random_fourier_graph(rng)):
            snap = geometry_snapshot(imm)
            n, N = imm.grid.ndim, imm.ambient_dim
            tr = np.einsum("...aa->...", snap.projector)
            assert np.max(np.abs(tr - (N - n))) < 1e-11

    def test_idempotence_on_random_immersions(self):
        rng = np.random.default_rng(11)
        for k in range(6):
            imm = random_fourier_curve(rng, ambient=3 + (k % 2)) if k % 2 == 0 \
                else random_fourier_graph(rng)
            snap = geometry_snapshot(imm)
            snap.validate(tol=1e-12)


class TestSecondFundamentalForm:
    def test_circle_mean_curvature_magnitude_and_direction(self):
        imm = circle_immersion(2.0)
        snap = geometry_snapshot(imm)
        h = imm.grid.spacing[0]
        Hn = np.sqrt(snap.norm_H2)
        assert np.max(np.abs(Hn - 0.5)) < 0.5 * h * h
        inward = -imm.points / 2.0
        cosang = np.einsum("...a,...a->...", snap.mean_curvature, inward) / (Hn * 1.0)
        assert np.min(cosang) > 1.0 - 1e-10

    def test_linear_torus_graphs_are_totally_geodesic(self):
        for L in (np.eye(2), np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros((2, 2))):
            imm = m.make_torus_graph(L).immersion
            snap = geometry_snapshot(imm)
            assert float(np.max(snap.norm_A2)) == 0.0
            assert float(np.max(snap.norm_H2)) == 0.0

    def test_graph_curve_second_form_against_planar_oracle(self):
        # oracle: kappa^2 = f''^2 / (1 + f'^2)^3 for the curve (x, eps sin 2pi x)
        eps = 0.05
        errs = []
        for res in (32, 64):
            grid = ParameterGrid((res, res), (1.0 / res, 1.0 / res))
            x, y = np.meshgrid(*grid.axes(), indexing="ij")
            F = np.stack([x, y, eps * np.sin(TAU * x), np.zeros_like(x)], axis=-1)
            imm = Immersion(grid=grid, points=F,
                            ambient_periods=np.array([1.0, 1.0, 0.0, 0.0]))
            snap = geometry_snapshot(imm)
            fp = eps * TAU * np.cos(TAU * x)
            fpp = -eps * TAU * TAU * np.sin(TAU * x)
            kappa2 = fpp * fpp / (1.0 + fp * fp) ** 3
            errs.append(np.max(np.abs(snap.norm_A2 - kappa2)))
        assert errs[0] / errs[1] > 3.5
        assert errs[1] < 2e-3 * float(np.max(kappa2))

    def test_trace_inequality_on_random_immersions(self):
        rng = np.random.default_rng(3)
        for k in range(4):
            imm = random_fourier_curve(rng) if k % 2 == 0 else random_fourier_graph(rng)
            snap = geometry_snapshot(imm)
            n = imm.grid.ndim
            assert np.all(snap.norm_H2 <= n * snap.norm_A2 * (1 + 1e-12) + 1e-14)

    def test_mean_curvature_error_halves_at_order_two(self):
        errs = []
        for res in (128, 256):
            snap = geometry_snapshot(circle_immersion(1.0, res=res))
            errs.append(np.max(np.abs(np.sqrt(snap.norm_H2) - 1.0)))
        assert errs[0] / errs[1] > 3.5


class TestArea:
    def test_circle_area(self):
        # central-difference frames make the node-sum area exactly
        # 2 pi r sinc(h): quadrature itself is exact, the O(h^2) bias is the
        # frame discretization
        h = TAU / 256
        for r in (0.5, 1.0, 2.0):
            snap = geometry_snapshot(circle_immersion(r))
            assert abs(snap.area - TAU * r * math.sin(h) / h) < 1e-12 * r
            assert abs(snap.area - TAU * r) < TAU * r * h * h / 6 * 1.01

    def test_identity_graph_area_exact(self):
        snap = geometry_snapshot(m.make_torus_graph(np.eye(2)).immersion)
        assert snap.area == 2.0

    def test_constant_graph_area_exact(self):
        snap = geometry_snapshot(m.make_torus_graph(np.zeros((2, 2))).immersion)
        assert snap.area == 1.0

    def test_area_positive_on_random_immersions(self):
        rng = np.random.default_rng(5)
        for _ in range(3):
            assert geometry_snapshot(random_fourier_graph(rng)).area > 0


class TestStepKernelAgreement:
    """The fused stepping kernel must reproduce the reference numpy path."""

    @pytest.mark.parametrize("case", ["curve", "graph", "curve_periodic"])
    def test_kernel_matches_reference(self, case):
        rng = np.random.default_rng(17)
        if case == "curve":
            imm = random_fourier_curve(rng)
        elif case == "graph":
            imm = random_fourier_graph(rng)
        else:
            grid = ParameterGrid((64,), (1.0 / 64,))
            x = grid.axes()[0]
            F = np.stack([x + 0.1 * np.sin(TAU * x), 0.2 * np.cos(TAU * x)], axis=-1)
            imm = Immersion(grid=grid, points=F, ambient_periods=np.array([1.0, 0.0]))
        snap = geometry_snapshot(imm)
        periods = imm.ambient_periods if imm.ambient_periods is not None \
            else np.zeros(imm.ambient_dim)
        H = np.empty_like(imm.points)
        if imm.grid.ndim == 1:
            out = step_fields_1d(imm.points, periods, imm.grid.spacing[0], H)
        else:
            out = step_fields_2d(imm.points, periods, *imm.grid.spacing, H)
        mindet, sup_A2, sup_H2, _stab, area_sum, int_H2_sum = out
        scale = float(np.max(np.abs(snap.mean_curvature))) + 1.0
        assert np.max(np.abs(H - snap.mean_curvature)) < 1e-11 * scale
        assert abs(sup_A2 - float(np.max(snap.norm_A2))) < 1e-10 * (1 + sup_A2)
        assert abs(sup_H2 - float(np.max(snap.norm_H2))) < 1e-10 * (1 + sup_H2)
        assert abs(area_sum * imm.grid.cell_volume - snap.area) < 1e-10 * snap.area
        ref_int = float(np.sum(snap.norm_H2 * snap.sqrt_det) * imm.grid.cell_volume)
        assert abs(int_H2_sum * imm.grid.cell_volume - ref_int) < 1e-10 * (1 + ref_int)
        assert mindet > 0


class TestPackedPairs:
    def test_second_derivative_pair_layout(self):
        imm = random_fourier_graph(np.random.default_rng(1))
        d2 = second_derivatives(imm)
        assert d2.shape[0] == len(PAIRS[2]) == 3

    def test_mean_curvature_is_trace_of_second_form(self):
        imm = random_fourier_graph(np.random.default_rng(2))
        fr = tangent_frames(imm)
        g, ginv, sdet = induced_metric(fr)
        P = normal_projector(fr, ginv)
        A, H, nA2, nH2 = second_fundamental_form(imm, fr, ginv, P)
        Hre = ginv[..., 0, 0, None] * A[0] + 2 * ginv[..., 0, 1, None] * A[1] \
            + ginv[..., 1, 1, None] * A[2]
        assert np.allclose(H, Hre, atol=1e-14)
