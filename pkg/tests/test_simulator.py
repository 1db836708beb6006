import math
from pathlib import Path

import numpy as np
import pytest

from navintent.planner import compute_fields, euclidean_distance, path_length
from navintent.simulator import (
    IDLE,
    OperatorCommand,
    RecordedPolicy,
    RobotState,
    SimParams,
    TrialEngine,
    TrialLog,
    resolve_scenario,
    run_trial,
    scripted_policy,
    step,
)
from navintent.world import Pose2D, Scenario, load_map, load_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "src" / "navintent" / "scenarios"
SIM = SimParams()


def open_scenario(intent=None, airm=(), map_text=None):
    grid, goals, start = load_map(
        map_text
        or "resolution 0.5\n"
        "............\n"
        "...........b\n"
        "............\n"
        "............\n"
        "a...........\n"
        "S...........\n"
    )
    return Scenario(
        id="open",
        grid=grid,
        goals=goals,
        start=start,
        intent_script=intent or [(0.0, 1)],
        airm_script=list(airm),
    )


class TestStep:
    def test_straight_advance(self):
        grid, _, _ = load_map("resolution 0.5\n...a\nS...\n")
        robot = RobotState(Pose2D(0.25, 0.25, 0.0))
        out = step(robot, OperatorCommand(linear=1.0), grid, SIM, dt=0.1)
        assert out.pose.x == pytest.approx(0.35)
        assert out.pose.y == pytest.approx(0.25)
        assert out.linear_vel == 1.0

    def test_collision_blocks_position_but_not_heading(self):
        grid, _, _ = load_map("resolution 0.5\n.#a\nS..\n")
        robot = RobotState(Pose2D(0.75, 0.75, 0.0))  # facing the wall at (1,1)
        out = step(robot, OperatorCommand(linear=1.0, angular=1.0), grid, SIM, dt=0.1)
        assert (out.pose.x, out.pose.y) == (0.75, 0.75)
        assert out.pose.heading == pytest.approx(0.1)
        assert out.linear_vel == 0.0

    def test_rotation_only(self):
        grid, _, _ = load_map("resolution 1\n..a\nS..\n")
        robot = RobotState(Pose2D(0.5, 0.5, 0.0))
        out = step(robot, OperatorCommand(angular=math.pi), grid, SIM, dt=0.5)
        # pi rad/s exceeds the 1.5 rad/s limit: clamped
        assert out.pose.heading == pytest.approx(1.5 * 0.5)
        out = step(robot, OperatorCommand(angular=1.0), grid, SIM, dt=0.5)
        assert out.pose.heading == pytest.approx(0.5)

    def test_leaving_the_grid_is_blocked(self):
        grid, _, _ = load_map("resolution 0.5\n.a\nS.\n")
        robot = RobotState(Pose2D(0.25, 0.25, math.pi))
        out = step(robot, OperatorCommand(linear=1.0), grid, SIM, dt=0.5)
        assert (out.pose.x, out.pose.y) == (0.25, 0.25)
        assert out.linear_vel == 0.0

    def test_velocity_clamped(self):
        grid, _, _ = load_map("resolution 1\n..a\nS..\n")
        robot = RobotState(Pose2D(0.5, 0.5, 0.0))
        out = step(robot, OperatorCommand(linear=99.0), grid, SIM, dt=0.1)
        assert out.linear_vel == SIM.v_max


class TestScriptedPolicy:
    def test_noise_free_run_monotonically_shrinks_path_length(self):
        scenario = open_scenario(intent=[(0.0, 2)])
        log = run_trial(scenario, scripted_policy(sigma=0.0), ["boir"], seed=0)
        assert log.complete
        fields = compute_fields(scenario.grid, scenario.goals)
        goal = scenario.goal_by_id(2)
        lengths = [path_length(fields[goal.id], r.pose) for r in log.records]
        for a, b in zip(lengths, lengths[1:]):
            assert b <= a + 1e-9
        assert lengths[-1] < lengths[0]

    def test_steers_to_first_goal_then_switch(self):
        scenario = open_scenario(intent=[(0.0, 2), (4.0, 1)])  # b then a
        log = run_trial(scenario, scripted_policy(sigma=0.0), ["boir"], seed=0)
        assert log.complete
        b, a = scenario.goal_by_id(2), scenario.goal_by_id(1)
        at_switch = log.records[39].pose
        assert euclidean_distance(at_switch, b) < euclidean_distance(log.records[0].pose, b)
        assert euclidean_distance(log.records[-1].pose, a) <= SIM.capture_radius

    def test_airm_click_fires_exactly_once(self):
        scenario = open_scenario(intent=[(0.0, 2), (4.0, 1)], airm=[(4.0, 1)])
        log = run_trial(scenario, scripted_policy(sigma=0.0), ["boir", "boir_airm"], seed=3)
        clicks = [(r.tick, r.click) for r in log.records if r.click is not None]
        assert clicks == [(40, 1)]

    def test_unreachable_goal_aborts_with_diagnostic(self):
        scenario = open_scenario(
            map_text="resolution 0.5\n.#a\nb#.\nS#.\n", intent=[(0.0, 1)]
        )
        from navintent.simulator import TrialAbortError

        with pytest.raises(TrialAbortError, match="unreachable"):
            run_trial(scenario, scripted_policy(), ["boir"], seed=0)


class TestRunTrial:
    def test_already_at_final_goal_gives_minimal_log(self):
        scenario = open_scenario(
            map_text="resolution 0.5\naS..\n....\n...b\n", intent=[(0.0, 1)]
        )
        log = run_trial(scenario, scripted_policy(), ["boir"], seed=0)
        assert log.complete
        assert log.tick_count == 1
        assert log.records[0].tick == 0

    def test_determinism_same_seed_byte_identical(self):
        scenario = load_scenario(SCENARIOS / "s2.yaml")
        one = run_trial(scenario, scripted_policy(sigma=0.1), ["boir", "ecf"], seed=11)
        two = run_trial(scenario, scripted_policy(sigma=0.1), ["boir", "ecf"], seed=11)
        assert one.to_jsonl() == two.to_jsonl()

    def test_different_seeds_differ_with_noise(self):
        scenario = load_scenario(SCENARIOS / "s2.yaml")
        one = run_trial(scenario, scripted_policy(sigma=0.1), ["boir"], seed=0)
        two = run_trial(scenario, scripted_policy(sigma=0.1), ["boir"], seed=1)
        assert one.to_jsonl() != two.to_jsonl()

    def test_boir_and_airm_variant_identical_without_clicks(self):
        scenario = open_scenario(intent=[(0.0, 2), (4.0, 1)])
        log = run_trial(scenario, scripted_policy(sigma=0.2), ["boir", "boir_airm"], seed=5)
        for r in log.records:
            assert r.beliefs["boir"] == r.beliefs["boir_airm"]
            assert r.predictions["boir"] == r.predictions["boir_airm"]

    def test_robot_never_in_occupied_cell(self):
        scenario = load_scenario(SCENARIOS / "s2.yaml")
        log = run_trial(scenario, scripted_policy(sigma=0.3), ["boir"], seed=9)
        for r in log.records:
            assert not scenario.grid.is_occupied_point(r.pose.x, r.pose.y)

    def test_ticks_gapless_and_ordered(self):
        scenario = open_scenario()
        log = run_trial(scenario, scripted_policy(), ["boir"], seed=0)
        assert [r.tick for r in log.records] == list(range(log.tick_count))

    def test_budget_exhaustion_marks_incomplete(self):
        scenario = open_scenario(intent=[(0.0, 2)])
        log = run_trial(
            scenario,
            scripted_policy(),
            ["boir"],
            seed=0,
            sim_params=SimParams(tick_budget=3),
        )  # goal b is far: three ticks cannot reach it
        assert not log.complete
        assert log.tick_count == 3

    def test_path_detour_shifts_boir_away_from_euclidean_decoy(self):
        """On the pocket map the decoy stays Euclidean-near: the distance-based
        baseline parks on it while the path-based filter locks the true goal."""
        scenario = load_scenario(SCENARIOS / "s2.yaml")
        log = run_trial(scenario, scripted_policy(sigma=0.1), ["boir", "rbii1"], seed=2)
        c = scenario.goal_by_label("c").id
        b = scenario.goal_by_label("b").id
        boir_on_c = sum(r.predictions["boir"] == c for r in log.records)
        rbii_on_b = sum(r.predictions["rbii1"] == b for r in log.records)
        assert boir_on_c > 0.8 * log.tick_count
        assert rbii_on_b > 0.4 * log.tick_count


class TestRandomPairScenario:
    def test_pair_resolved_from_seed(self):
        scenario = load_scenario(SCENARIOS / "s4.yaml")
        rng = np.random.default_rng(15)
        resolved = resolve_scenario(scenario, rng)
        assert len(resolved.intent_script) == 2
        first, second = resolved.intent_script[0][1], resolved.intent_script[1][1]
        assert first != second
        assert resolved.intent_script[0][0] == 0.0
        # same seed resolves the same pair
        again = resolve_scenario(scenario, np.random.default_rng(15))
        assert again.intent_script == resolved.intent_script

    def test_clicks_derived_at_switches(self):
        scenario = load_scenario(SCENARIOS / "s3.yaml")
        resolved = resolve_scenario(scenario, np.random.default_rng(0))
        assert resolved.airm_script == [(8.0, 2), (18.0, 3)]


class TestTrialLogSerialization:
    def test_roundtrip(self):
        scenario = open_scenario(intent=[(0.0, 2), (4.0, 1)], airm=[(4.0, 1)])
        log = run_trial(scenario, scripted_policy(sigma=0.1), ["boir", "boir_airm"], seed=7)
        parsed = TrialLog.from_jsonl(log.to_jsonl())
        assert parsed.to_jsonl() == log.to_jsonl()
        assert parsed.complete == log.complete
        assert parsed.records[3].beliefs == log.records[3].beliefs

    def test_write_and_read(self, tmp_path):
        scenario = open_scenario()
        log = run_trial(scenario, scripted_policy(), ["boir"], seed=0)
        path = tmp_path / "trial.jsonl"
        log.write(path)
        assert TrialLog.read(path).to_jsonl() == log.to_jsonl()

    def test_rejects_gap_in_ticks(self):
        scenario = open_scenario(intent=[(0.0, 2)])
        log = run_trial(scenario, scripted_policy(), ["boir"], seed=0)
        lines = log.to_jsonl().splitlines()
        del lines[2]
        with pytest.raises(ValueError, match="gapless"):
            TrialLog.from_jsonl("\n".join(lines))

    def test_rejects_missing_header(self):
        with pytest.raises(ValueError, match="header"):
            TrialLog.from_jsonl('{"type":"tick","tick":0}')


class TestReplay:
    def test_recorded_policy_reproduces_the_trial(self):
        scenario = load_scenario(SCENARIOS / "s3.yaml")
        live = run_trial(scenario, scripted_policy(sigma=0.2), ["boir", "boir_airm"], seed=4)
        replayed = run_trial(scenario, RecordedPolicy.factory(live), ["boir", "boir_airm"], seed=4)
        assert replayed.to_jsonl() == live.to_jsonl()

    def test_idle_beyond_recorded_stream(self):
        policy = RecordedPolicy(
            TrialLog(
                scenario_id="x",
                seed=0,
                tick_rate=10.0,
                methods=["boir"],
                params={},
                goals=[],
                intent_script=[(0.0, 1)],
                airm_script=[],
            )
        )
        assert policy.command(None, 5) == IDLE


class TestEngineGuards:
    def test_tick_after_done_raises(self):
        scenario = open_scenario(
            map_text="resolution 0.5\naS..\n....\n...b\n", intent=[(0.0, 1)]
        )
        engine = TrialEngine(scenario, ["boir"], seed=0)
        engine.tick(IDLE)
        assert engine.done
        with pytest.raises(RuntimeError, match="finished"):
            engine.tick(IDLE)
