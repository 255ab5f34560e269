"""Action grid selection and minimum-jerk planning."""

import math

import numpy as np
import pytest

from gestureflight.control import (
    ActionGrid,
    ControlParams,
    MappedCommand,
    RejectedGesture,
    TrajectorySegment,
    default_action_grid,
    map_gesture_to_command,
    min_jerk_position,
    min_jerk_velocity,
    plan_segment,
    quartile_cells,
    sample_setpoints,
    select_speed,
)


class TestActionGrid:
    def test_default_quartile_speed_sets(self):
        grid = default_action_grid()
        for quartile, want in (("TL", [2, 4, 6, 8]), ("TR", [4, 6, 8, 10]),
                               ("BL", [2, 4, 6, 8]), ("BR", [4, 6, 8, 10])):
            speeds = sorted(grid.speeds[r * grid.n + c] for r, c in quartile_cells(grid, quartile))
            assert speeds == want

    def test_reference_selections(self):
        grid = default_action_grid()
        assert select_speed(grid, "TL", 0.45) is None          # below threshold
        assert select_speed(grid, "TL", 1.0) == 8              # [0.875, 1.0] top range
        assert select_speed(grid, "TL", 0.55) == 2             # [0.5, 0.625) bottom range
        assert select_speed(grid, "TL", 0.625) == 4            # left-closed boundaries
        assert select_speed(grid, "TR", 1.0) == 10

    def test_partition_tiles_threshold_to_one(self):
        grid = default_action_grid()
        # speeds are non-decreasing in confidence and every cell is reachable
        confs = np.linspace(0.5, 1.0, 2001)
        speeds = [select_speed(grid, "TL", float(c)) for c in confs]
        assert all(s is not None for s in speeds)
        assert all(b >= a for a, b in zip(speeds, speeds[1:]))
        assert sorted(set(speeds)) == [2, 4, 6, 8]

    def test_random_grids_property(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.choice([2, 4, 6]))
            speeds = tuple(rng.integers(1, 30, n * n).tolist())
            thr = float(rng.uniform(0.2, 0.8))
            grid = ActionGrid(n=n, speeds=speeds, threshold=thr)
            for quartile in ("TL", "TR", "BL", "BR"):
                cells = sorted(speeds[r * n + c] for r, c in quartile_cells(grid, quartile))
                # below threshold rejected, endpoints hit slowest/fastest cells
                assert select_speed(grid, quartile, thr - 1e-9) is None
                assert select_speed(grid, quartile, thr) == cells[0]
                assert select_speed(grid, quartile, 1.0) == cells[-1]

    def test_grid_validation(self):
        with pytest.raises(ValueError, match="even"):
            ActionGrid(n=3, speeds=tuple(range(1, 10)))
        with pytest.raises(ValueError, match="entries"):
            ActionGrid(n=4, speeds=(1, 2, 3))
        with pytest.raises(ValueError, match="positive"):
            ActionGrid(n=2, speeds=(1, 2, 3, 0))
        with pytest.raises(ValueError, match="threshold"):
            ActionGrid(n=2, speeds=(1, 2, 3, 4), threshold=0.0)

    def test_bad_quartile_and_confidence(self):
        grid = default_action_grid()
        with pytest.raises(ValueError, match="quartile"):
            select_speed(grid, "XX", 0.9)
        with pytest.raises(ValueError, match="confidence"):
            select_speed(grid, "TL", 1.2)


class TestMapping:
    def test_default_table(self):
        for class_id, kind in ((0, "land"), (1, "takeoff"), (2, "forward"),
                               (3, "backward"), (4, "left"), (5, "right"),
                               (6, "up"), (7, "down"), (8, "yaw_left"),
                               (9, "yaw_right")):
            cmd = map_gesture_to_command(class_id, 0.9, "TL")
            assert cmd.kind == kind

    def test_maps_class_and_attaches_speed(self):
        cmd = map_gesture_to_command(2, 1.0, "TL")
        assert isinstance(cmd, MappedCommand)
        assert cmd.kind == "forward"
        assert cmd.speed == 8
        assert cmd.cell == (1, 1)

    def test_rejection_carries_reason(self):
        out = map_gesture_to_command(2, 0.4, "TL")
        assert isinstance(out, RejectedGesture)
        assert "threshold" in out.reason

    def test_unmapped_class_rejected(self):
        with pytest.raises(ValueError, match="mapping"):
            map_gesture_to_command(3, 0.9, "TL", class_commands={0: "takeoff"})


class TestMinJerk:
    def segment(self, xi=(0.0, 0.0, 0.0), xf=(1.0, 0.0, 0.0), d=2.0):
        return TrajectorySegment(np.array(xi), np.array(xf), 0.0, 0.0, d, "forward")

    def test_boundary_conditions_exact(self):
        seg = self.segment(xi=(1.0, -2.0, 3.0), xf=(4.0, 0.5, 3.0), d=1.7)
        np.testing.assert_allclose(min_jerk_position(seg, 0.0), seg.x_i, atol=1e-12)
        np.testing.assert_allclose(min_jerk_position(seg, seg.duration), seg.x_f, atol=1e-12)
        np.testing.assert_allclose(min_jerk_velocity(seg, 0.0), 0.0, atol=1e-12)
        np.testing.assert_allclose(min_jerk_velocity(seg, seg.duration), 0.0, atol=1e-12)

    def test_midpoint_values(self):
        seg = self.segment(d=2.0)
        # midpoint crosses half the displacement at 1.875 * (x_f - x_i) / d
        np.testing.assert_allclose(min_jerk_position(seg, 1.0)[0], 0.5, atol=1e-12)
        np.testing.assert_allclose(min_jerk_velocity(seg, 1.0)[0], 1.875 / 2.0, atol=1e-12)

    def test_velocity_matches_finite_difference(self):
        seg = self.segment(xi=(0.0, 1.0, 2.0), xf=(-2.0, 5.0, 0.5), d=1.3)
        h = 1e-6
        for t in np.linspace(h, seg.duration - h, 23):
            fd = (min_jerk_position(seg, t + h) - min_jerk_position(seg, t - h)) / (2 * h)
            np.testing.assert_allclose(min_jerk_velocity(seg, t), fd, atol=1e-6)

    def test_time_reversal_symmetry(self):
        seg = self.segment(xi=(0.3, 0.0, 1.1), xf=(2.3, -1.0, 0.1), d=0.9)
        for t in np.linspace(0, seg.duration, 11):
            a = min_jerk_position(seg, t)
            b = min_jerk_position(seg, seg.duration - t)
            np.testing.assert_allclose(a + b, seg.x_i + seg.x_f, atol=1e-12)

    def test_time_outside_segment_rejected(self):
        seg = self.segment()
        with pytest.raises(ValueError, match="outside"):
            min_jerk_position(seg, -0.1)
        with pytest.raises(ValueError, match="outside"):
            min_jerk_position(seg, 2.5)

    def test_non_positive_duration_rejected(self):
        seg = self.segment(d=0.0)
        with pytest.raises(ValueError, match="duration"):
            min_jerk_position(seg, 0.0)


class TestPlanSegment:
    def test_speed_sets_duration(self):
        seg = plan_segment((0, 0, 1.5), 0.0, True, "forward", speed=4)
        assert seg.duration == pytest.approx(1.0)  # 1 m / (4 * 0.25 m/s)
        seg = plan_segment((0, 0, 1.5), 0.0, True, "forward", speed=2)
        assert seg.duration == pytest.approx(2.0)

    def test_forward_is_body_frame(self):
        seg = plan_segment((0, 0, 1.5), math.pi / 2, True, "forward", speed=4)
        np.testing.assert_allclose(seg.x_f, [0.0, 1.0, 1.5], atol=1e-12)

    def test_left_right_up_down_directions(self):
        pose = (1.0, 2.0, 1.5)
        left = plan_segment(pose, 0.0, True, "left", speed=4)
        np.testing.assert_allclose(left.x_f, [1.0, 3.0, 1.5], atol=1e-12)
        right = plan_segment(pose, 0.0, True, "right", speed=4)
        np.testing.assert_allclose(right.x_f, [1.0, 1.0, 1.5], atol=1e-12)
        up = plan_segment(pose, 0.0, True, "up", speed=4)
        np.testing.assert_allclose(up.x_f, [1.0, 2.0, 2.5], atol=1e-12)
        down = plan_segment(pose, 0.0, True, "down", speed=4)
        np.testing.assert_allclose(down.x_f, [1.0, 2.0, 0.5], atol=1e-12)

    def test_takeoff_and_land_are_vertical(self):
        takeoff = plan_segment((2, 3, 0), 0.7, False, "takeoff", speed=4)
        np.testing.assert_allclose(takeoff.x_f, [2.0, 3.0, 1.5], atol=1e-12)
        assert takeoff.duration == pytest.approx(1.5)
        land = plan_segment((2, 3, 1.5), 0.7, True, "land", speed=4)
        np.testing.assert_allclose(land.x_f, [2.0, 3.0, 0.0], atol=1e-12)

    def test_yaw_sweeps_quarter_turn(self):
        seg = plan_segment((0, 0, 1.5), 0.1, True, "yaw_left", speed=4)
        assert seg.yaw_f == pytest.approx(0.1 + math.pi / 2)
        np.testing.assert_allclose(seg.x_f, seg.x_i, atol=1e-12)
        seg = plan_segment((0, 0, 1.5), 0.1, True, "yaw_right", speed=4)
        assert seg.yaw_f == pytest.approx(0.1 - math.pi / 2)

    def test_state_errors(self):
        with pytest.raises(ValueError, match="takeoff while airborne"):
            plan_segment((0, 0, 1.5), 0.0, True, "takeoff", speed=4)
        with pytest.raises(ValueError, match="land while landed"):
            plan_segment((0, 0, 0), 0.0, False, "land", speed=4)
        with pytest.raises(ValueError, match="landed"):
            plan_segment((0, 0, 0), 0.0, False, "forward", speed=4)

    def test_down_clamps_at_ground(self):
        seg = plan_segment((0, 0, 0.5), 0.0, True, "down", speed=4)
        assert seg.x_f[2] == 0.0


class TestSampleSetpoints:
    def test_dt_equal_duration_gives_two_rest_samples(self):
        seg = plan_segment((0, 0, 1.5), 0.0, True, "forward", speed=4)
        pts = sample_setpoints(seg, dt=seg.duration)
        assert len(pts) == 2
        np.testing.assert_allclose(pts[0].position, seg.x_i, atol=1e-12)
        np.testing.assert_allclose(pts[0].velocity, 0.0, atol=1e-12)
        np.testing.assert_allclose(pts[1].position, seg.x_f, atol=1e-12)
        np.testing.assert_allclose(pts[1].velocity, 0.0, atol=1e-12)

    def test_final_sample_exactly_at_duration(self):
        seg = plan_segment((0, 0, 1.5), 0.0, True, "forward", speed=6)  # d = 2/3 s
        pts = sample_setpoints(seg, dt=0.05)
        assert pts[-1].t == seg.duration
        assert pts[-2].t < seg.duration
        # uneven tail interval
        assert (pts[-1].t - pts[-2].t) < 0.05

    def test_velocity_profile_is_a_bell(self):
        seg = plan_segment((0, 0, 1.5), 0.0, True, "forward", speed=2)
        v = np.array([p.velocity[0] for p in sample_setpoints(seg, dt=0.05)])
        assert v[0] == pytest.approx(0.0, abs=1e-12)
        assert v[-1] == pytest.approx(0.0, abs=1e-12)
        peak = int(np.argmax(v))
        assert (np.diff(v[:peak + 1]) >= -1e-12).all()
        assert (np.diff(v[peak:]) <= 1e-12).all()

    def test_yaw_segment_sweeps_setpoints(self):
        seg = plan_segment((0, 0, 1.5), 0.0, True, "yaw_left", speed=4)
        pts = sample_setpoints(seg, dt=0.1)
        assert pts[0].yaw == pytest.approx(0.0)
        assert pts[-1].yaw == pytest.approx(math.pi / 2)
        assert all(abs(p.yaw_rate) < 10 for p in pts)

    def test_bad_dt_rejected(self):
        seg = plan_segment((0, 0, 1.5), 0.0, True, "forward", speed=4)
        with pytest.raises(ValueError, match="dt"):
            sample_setpoints(seg, dt=0.0)
