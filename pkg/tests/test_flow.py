"""Flow engine: stepping, termination, singularity classification, audits."""

import math

import numpy as np
import pytest

import mcflab as m
from mcflab.grid import Immersion, ParameterGrid
from mcflab.seriestools import Series

TAU = 2.0 * math.pi


def measured_radius(imm):
    return float(np.mean(np.linalg.norm(imm.points[:, :2], axis=1)))


class TestStepEuler:
    def test_stationary_point_is_fixed(self):
        imm = m.make_torus_graph(np.eye(2)).immersion
        out = m.step_euler(imm, 1e-4)
        assert np.array_equal(out.points, imm.points)
        assert out.t == 1e-4

    def test_circle_radius_decrement_matches_ode(self):
        imm = m.make_circle(1.0, 3, 256).immersion
        dt = 1e-5
        out = m.step_euler(imm, dt)
        # oracle: dr/dt = -1/r; discretization adds O(h^2) to the rate
        assert abs(measured_radius(out) - (1.0 - dt / 1.0)) < 1e-3 * dt

    def test_rejects_nonpositive_dt(self):
        imm = m.make_circle(1.0, 3, 64).immersion
        with pytest.raises(ValueError):
            m.step_euler(imm, 0.0)

    def test_area_nonincreasing_to_first_order(self):
        imm = m.make_circle(1.0, 3, 128).immersion
        snap0 = m.geometry_snapshot(imm)
        out = m.step_euler(imm, 1e-5)
        assert m.geometry_snapshot(out).area <= snap0.area + 1e-10 * 1e-5


class TestRunFlow:
    def test_circle_extinction_estimate(self, circle_traj):
        assert circle_traj.termination.kind == "SingularityDetected"
        assert abs(circle_traj.termination.t0_est - 0.5) < 0.01  # 2% of t0

    def test_identity_graph_converges_immediately(self):
        traj = m.run_flow(m.make_torus_graph(np.eye(2)).immersion,
                          m.StepPolicy(t_max=0.1))
        assert traj.termination.kind == "Converged"
        assert traj.meta["steps"] == 0
        assert len(traj.times) == 1 and traj.times[0] == 0.0

    def test_shear_converges_with_small_terminal_curvature(self, shear64_traj):
        assert shear64_traj.termination.kind == "Converged"
        assert shear64_traj.series["sup_A2"][-1] <= 1e-5

    def test_area_strictly_decreasing_on_nonstationary_run(self, circle_traj):
        a = circle_traj.series["area"]
        assert np.all(np.diff(a) < 1e-12 * a[:-1])

    def test_reached_tmax(self):
        imm = m.make_circle(1.0, 3, 64).immersion
        traj = m.run_flow(imm, m.StepPolicy(t_max=1e-3))
        assert traj.termination.kind == "ReachedTmax"
        assert abs(traj.times[-1] - 1e-3) < 1e-12

    def test_degenerate_grid_recorded_not_raised(self):
        grid = ParameterGrid((16,), (1.0 / 16,))
        imm = Immersion(grid=grid, points=np.ones((16, 2)))
        traj = m.run_flow(imm, m.StepPolicy(t_max=0.1))
        assert traj.termination.kind == "DegenerateGrid"

    def test_snapshot_invariants_at_record_time(self, circle_traj_short):
        for snap in circle_traj_short.snapshots:
            m.geometry_snapshot(snap).validate(tol=1e-12)

    def test_times_strictly_increasing(self, circle_traj):
        assert np.all(np.diff(circle_traj.times) > 0)

    def test_deterministic_reruns_bitwise(self):
        sc = lambda: m.make_circle(1.0, 3, 64).immersion
        pol = m.StepPolicy(t_max=0.05)
        t1 = m.run_flow(sc(), pol)
        t2 = m.run_flow(sc(), pol)
        assert np.array_equal(t1.times, t2.times)
        for key in t1.series:
            assert np.array_equal(t1.series[key], t2.series[key])
        for s1, s2 in zip(t1.snapshots, t2.snapshots):
            assert np.array_equal(s1.points, s2.points)

    def test_codimension_padding_is_inert(self):
        pol = m.StepPolicy(t_max=0.02)
        t2 = m.run_flow(m.make_circle(1.0, 2, 128).immersion, pol)
        t5 = m.run_flow(m.make_circle(1.0, 5, 128).immersion, pol)
        assert np.array_equal(t2.snapshots[-1].points, t5.snapshots[-1].points[:, :2])
        assert np.array_equal(t5.snapshots[-1].points[:, 2:], np.zeros((128, 3)))


class TestDetectSingularity:
    def test_circle_is_type_one(self, circle_traj):
        rep = circle_traj.singularity
        assert rep.kind == "TypeI"
        assert abs(rep.C_est - 0.5) < 0.05
        assert rep.fit_residual < 0.05

    def test_stationary_series_reports_none(self):
        t = np.linspace(0.0, 1.0, 50)
        rep = m.detect_singularity(Series(t, np.full(50, 1e-30)))
        assert rep.kind == "None"

    def test_ellipse_is_type_one(self, ellipse_traj):
        rep = ellipse_traj.singularity
        assert rep.kind == "TypeI"
        assert math.isfinite(rep.C_est)
        assert rep.fit_residual < 0.1

    def test_insufficient_data_raises(self):
        t = np.linspace(0, 1, 30)
        y = 1.0 / (1.0 - 0.9 * t)
        with pytest.raises(m.InsufficientData):
            m.detect_singularity(Series(t, y), min_samples=20)  # window of 8 < 20

    def test_synthetic_type_one_series(self):
        t0, C = 0.8, 0.37
        t = np.linspace(0.0, 0.75, 200)
        rep = m.detect_singularity(Series(t, C / (t0 - t)))
        assert rep.kind == "TypeI"
        assert abs(rep.t0_est - t0) < 1e-9
        assert abs(rep.C_est - C) < 1e-9

    def test_synthetic_type_two_series(self):
        # sup|A|^2 ~ (t0 - t)^{-2}: 1/y is quadratic, the linear fit misses
        t0 = 0.5
        t = np.linspace(0.0, 0.49, 200)
        rep = m.detect_singularity(Series(t, (t0 - t) ** -2))
        assert rep.kind == "TypeII"


class TestAreaDecayResidual:
    def test_circle_first_interval_within_budget(self, circle_traj):
        res = m.area_decay_residual(circle_traj)
        assert res.values[0] <= 1e-3

    def test_stationary_graph_residual_exactly_zero(self):
        imm = m.make_torus_graph(np.eye(2)).immersion
        traj = m.run_flow(imm, m.StepPolicy(t_max=2e-4, convergence_tol=-1.0),
                          snapshot_cadence=4)
        res = m.area_decay_residual(traj)
        assert float(np.max(res.values)) == 0.0

    def test_refinement_halves_residual(self, circle_traj_short, circle_traj_512):
        r256 = m.area_decay_residual(circle_traj_short).values[0]
        r512 = m.area_decay_residual(circle_traj_512).values[0]
        assert r256 / r512 >= 2.0

    def test_needs_two_steps(self):
        imm = m.make_torus_graph(np.eye(2)).immersion
        traj = m.run_flow(imm, m.StepPolicy(t_max=0.1))
        with pytest.raises(m.InsufficientData):
            m.area_decay_residual(traj)


class TestPolicy:
    def test_dt_base_formula(self):
        grid = ParameterGrid((64, 64), (1.0 / 64, 1.0 / 64))
        pol = m.StepPolicy(safety=0.2)
        assert abs(pol.dt_base(grid) - 0.2 * (1 / 64) ** 2 / 4.0) < 1e-18

    def test_rejects_bad_safety(self):
        with pytest.raises(ValueError):
            m.StepPolicy(safety=0.0)
        with pytest.raises(ValueError):
            m.StepPolicy(safety=1.5)

    def test_dt_never_exceeds_base(self, circle_traj):
        dts = circle_traj.step_series["dt"]
        base = circle_traj.meta["dt_base"]
        assert np.nanmax(dts) <= base * (1 + 1e-12)
