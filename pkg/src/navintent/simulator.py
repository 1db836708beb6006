"""Deterministic tick-based robot simulation and trial execution.

One trial is a sequential loop: the operator policy emits a command, the
robot integrates unicycle kinematics, the planner supplies per-goal
observations, and every estimation method updates on the identical stream.
Each tick appends one record to the trial log.  Trials are pure functions
of (scenario, policy parameters, seed): rerunning one yields byte-identical
serialized logs.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import EcfParams, RbiiParams
from .estimator import EstimatorParams, ObservationSet, predict_intent
from .methods import BOIR_AIRM, build_methods
from .planner import (
    CostField,
    bearing_angle,
    compute_fields,
    euclidean_distance,
    grid_moves,
    path_length,
)
from .world import OccupancyGrid, Pose2D, Scenario, wrap_angle


class TrialAbortError(RuntimeError):
    """The scripted operator cannot make progress (current goal unreachable)."""


@dataclass(frozen=True)
class SimParams:
    v_max: float = 1.0  # m/s
    w_max: float = 1.5  # rad/s
    capture_radius: float = 0.5  # m
    tick_budget: int = 5000

    def __post_init__(self):
        if not (self.v_max > 0 and self.w_max > 0 and self.capture_radius > 0):
            raise ValueError("kinematic limits and capture radius must be > 0")
        if self.tick_budget < 1:
            raise ValueError("tick budget must be >= 1")

    @classmethod
    def from_dict(cls, overrides: dict) -> "SimParams":
        base = {f: getattr(cls, f) for f in cls.__dataclass_fields__}
        unknown = set(overrides) - set(base)
        if unknown:
            raise ValueError(f"unknown simulator parameters: {sorted(unknown)}")
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class RobotState:
    pose: Pose2D
    linear_vel: float = 0.0
    angular_vel: float = 0.0


@dataclass(frozen=True)
class OperatorCommand:
    linear: float = 0.0
    angular: float = 0.0
    airm_click: int | None = None


IDLE = OperatorCommand()


def step(
    robot: RobotState, command: OperatorCommand, grid: OccupancyGrid, params: SimParams, dt: float
) -> RobotState:
    """One unicycle Euler step; motion into an occupied or out-of-bounds cell
    is rejected (velocity zeroed) while the heading update still applies."""
    v = max(-params.v_max, min(params.v_max, command.linear))
    w = max(-params.w_max, min(params.w_max, command.angular))
    heading = wrap_angle(robot.pose.heading + w * dt)
    nx = robot.pose.x + v * dt * math.cos(heading)
    ny = robot.pose.y + v * dt * math.sin(heading)
    if not grid.in_bounds_point(nx, ny) or grid.is_occupied_point(nx, ny):
        return RobotState(Pose2D(robot.pose.x, robot.pose.y, heading), 0.0, w)
    return RobotState(Pose2D(nx, ny, heading), v, w)


def observe(fields: dict[int, CostField], goals, pose: Pose2D) -> ObservationSet:
    """Per-goal (bearing angle, planner path length) pairs for one tick."""
    phi = np.array([bearing_angle(pose, g) for g in goals])
    lens = np.array([path_length(fields[g.id], pose) for g in goals])
    return ObservationSet(phi=phi, path_len=lens)


@dataclass(frozen=True)
class TickRecord:
    tick: int
    pose: Pose2D
    true_goal: int
    command: tuple[float, float]
    click: int | None
    beliefs: dict[str, list[float]]
    predictions: dict[str, int]


@dataclass
class TrialLog:
    """Line-serializable record of one trial, self-describing via its header."""

    scenario_id: str
    seed: int
    tick_rate: float
    methods: list[str]
    params: dict
    goals: list[dict]
    intent_script: list[tuple[float, int]]
    airm_script: list[tuple[float, int]]
    records: list[TickRecord] = field(default_factory=list)
    complete: bool = False

    @property
    def tick_count(self) -> int:
        return len(self.records)

    def header_dict(self) -> dict:
        return {
            "type": "header",
            "scenario": self.scenario_id,
            "seed": self.seed,
            "tick_rate": self.tick_rate,
            "methods": list(self.methods),
            "params": self.params,
            "goals": self.goals,
            "intent_script": [[t, g] for t, g in self.intent_script],
            "airm_script": [[t, g] for t, g in self.airm_script],
        }

    def to_jsonl(self) -> str:
        lines = [_dump(self.header_dict())]
        for r in self.records:
            lines.append(
                _dump(
                    {
                        "type": "tick",
                        "tick": r.tick,
                        "pose": [r.pose.x, r.pose.y, r.pose.heading],
                        "true_goal": r.true_goal,
                        "command": list(r.command),
                        "click": r.click,
                        "beliefs": r.beliefs,
                        "predictions": r.predictions,
                    }
                )
            )
        lines.append(_dump({"type": "end", "complete": self.complete, "ticks": self.tick_count}))
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path):
        """Atomic write: temp file in the target directory, then rename."""
        path = Path(path)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(self.to_jsonl())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def from_jsonl(cls, text: str) -> "TrialLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty trial log")
        header = json.loads(lines[0])
        if header.get("type") != "header":
            raise ValueError("trial log must start with a header record")
        log = cls(
            scenario_id=header["scenario"],
            seed=header["seed"],
            tick_rate=header["tick_rate"],
            methods=list(header["methods"]),
            params=header["params"],
            goals=header["goals"],
            intent_script=[(float(t), int(g)) for t, g in header["intent_script"]],
            airm_script=[(float(t), int(g)) for t, g in header["airm_script"]],
        )
        expected_tick = 0
        ended = False
        for ln in lines[1:]:
            rec = json.loads(ln)
            if rec.get("type") == "tick":
                if ended:
                    raise ValueError("tick record after end marker")
                if rec["tick"] != expected_tick:
                    raise ValueError(f"tick records must be gapless, expected {expected_tick}")
                expected_tick += 1
                log.records.append(
                    TickRecord(
                        tick=rec["tick"],
                        pose=Pose2D(*rec["pose"]),
                        true_goal=int(rec["true_goal"]),
                        command=(rec["command"][0], rec["command"][1]),
                        click=rec["click"],
                        beliefs=rec["beliefs"],
                        predictions={m: int(p) for m, p in rec["predictions"].items()},
                    )
                )
            elif rec.get("type") == "end":
                log.complete = bool(rec["complete"])
                ended = True
            else:
                raise ValueError(f"unknown log record type {rec.get('type')!r}")
        if not ended:
            raise ValueError("trial log missing end marker")
        return log

    @classmethod
    def read(cls, path: str | Path) -> "TrialLog":
        return cls.from_jsonl(Path(path).read_text())


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def resolve_scenario(scenario: Scenario, rng: np.random.Generator) -> Scenario:
    """Materialize per-trial randomization: the random goal pair (when the
    scenario asks for one) and clicks derived from intent switches."""
    intent = list(scenario.intent_script)
    airm = list(scenario.airm_script)
    if scenario.random_pair_switch is not None:
        ids = [g.id for g in scenario.goals]
        first, second = rng.choice(len(ids), size=2, replace=False)
        intent = [(0.0, ids[first]), (float(scenario.random_pair_switch), ids[second])]
    if scenario.airm_at_switches:
        airm = [(t, gid) for t, gid in intent if t > 0]
    return dataclasses.replace(
        scenario,
        intent_script=intent,
        airm_script=airm,
        random_pair_switch=None,
        airm_at_switches=False,
    )


class TrialEngine:
    """The per-tick pipeline shared by batch trials and interactive sessions.

    Owns robot state, cost fields, method instances, and the growing log.
    Updates must be applied in tick order by a single owner; independent
    engines may run concurrently.
    """

    def __init__(
        self,
        scenario: Scenario,
        method_ids,
        seed: int,
        est_params: EstimatorParams | None = None,
        sim_params: SimParams | None = None,
        rbii_params: RbiiParams | None = None,
        ecf_params: EcfParams | None = None,
        extra_params: dict | None = None,
    ):
        self.est_params = est_params or EstimatorParams()
        self.sim_params = sim_params or SimParams()
        rbii = rbii_params or RbiiParams()
        ecf = ecf_params or EcfParams()
        self.rng = np.random.default_rng(seed)
        self.scenario = resolve_scenario(scenario, self.rng)
        self.fields = compute_fields(self.scenario.grid, self.scenario.goals)
        self.methods = build_methods(method_ids, self.scenario.goals, self.est_params, rbii, ecf)
        self.robot = RobotState(self.scenario.start)
        self.tick_index = 0
        self.complete = False
        params = {
            "estimator": dataclasses.asdict(self.est_params),
            "simulator": dataclasses.asdict(self.sim_params),
            "rbii": dataclasses.asdict(rbii),
            "ecf": dataclasses.asdict(ecf),
        }
        params.update(extra_params or {})
        self.log = TrialLog(
            scenario_id=self.scenario.id,
            seed=seed,
            tick_rate=self.est_params.tick_rate,
            methods=list(self.methods),
            params=params,
            goals=[{"id": g.id, "label": g.label, "x": g.x, "y": g.y} for g in self.scenario.goals],
            intent_script=self.scenario.intent_script,
            airm_script=self.scenario.airm_script,
        )

    @property
    def dt(self) -> float:
        return 1.0 / self.est_params.tick_rate

    @property
    def done(self) -> bool:
        return self.complete or self.tick_index >= self.sim_params.tick_budget

    def tick(self, command: OperatorCommand) -> TickRecord:
        """Advance one tick: step the robot, observe, update every method, log."""
        if self.done:
            raise RuntimeError("trial already finished")
        tick = self.tick_index
        true_goal = self.scenario.intent_at(tick * self.dt)
        self.robot = step(self.robot, command, self.scenario.grid, self.sim_params, self.dt)
        obs = observe(self.fields, self.scenario.goals, self.robot.pose)
        if command.airm_click is not None:
            for method in self.methods.values():
                method.apply_click(command.airm_click, tick)
        beliefs: dict[str, list[float]] = {}
        predictions: dict[str, int] = {}
        for mid, method in self.methods.items():
            belief = method.update(tick, self.robot.pose, obs)
            beliefs[mid] = [float(p) for p in belief]
            predictions[mid] = predict_intent(belief)
        record = TickRecord(
            tick=tick,
            pose=self.robot.pose,
            true_goal=true_goal,
            command=(float(command.linear), float(command.angular)),
            click=command.airm_click,
            beliefs=beliefs,
            predictions=predictions,
        )
        self.log.records.append(record)
        self.tick_index += 1
        final = self.scenario.goal_by_id(self.scenario.final_goal)
        if (
            true_goal == final.id
            and euclidean_distance(self.robot.pose, final) <= self.sim_params.capture_radius
        ):
            self.complete = True
            self.log.complete = True
        return record

    def airm_status(self, tick: int) -> dict:
        """Explicit-intent episode status for the click-enabled filter, if present."""
        method = self.methods.get(BOIR_AIRM)
        if method is None or method.airm is None or not method.airm.active_at(tick):
            return {"active": False}
        return {
            "active": True,
            "goal": method.airm.selected,
            "remaining_s": method.airm_remaining_s(tick),
        }


class ScriptedPolicy:
    """Surrogate operator: descends the current goal's cost field.

    Aims a few cells down the steepest-descent chain (falling back to the
    nearest step when the straight segment would clip an obstacle), turns
    toward the aim point, and slows on approach.  Optional heading noise
    sigma (radians, from the trial RNG) emulates imperfect driving.
    Explicit-intent clicks fire once each at their scripted ticks.
    """

    LOOKAHEAD_CELLS = 3

    def __init__(
        self,
        scenario: Scenario,
        fields: dict[int, CostField],
        rng: np.random.Generator,
        sim_params: SimParams,
        tick_rate: float,
        sigma: float = 0.0,
    ):
        self.scenario = scenario
        self.fields = fields
        self.rng = rng
        self.sim = sim_params
        self.tick_rate = tick_rate
        self.sigma = sigma
        self._click_ticks = {
            int(round(t * tick_rate)): gid for t, gid in scenario.airm_script
        }
        self._fired: set[int] = set()
        self._last_linear = 0.0

    def command(self, robot: RobotState, tick: int) -> OperatorCommand:
        scenario = self.scenario
        goal = scenario.goal_by_id(scenario.intent_at(tick / self.tick_rate))
        fld = self.fields[goal.id]
        pose = robot.pose
        if not math.isfinite(path_length(fld, pose)):
            raise TrialAbortError(
                f"goal {goal.label!r} unreachable from ({pose.x:.2f}, {pose.y:.2f}) at tick {tick}"
            )
        # a rejected step means the turn arc clipped a wall: realign on the
        # adjacent descent cell instead of a far carrot
        blocked = self._last_linear > 1e-9 and robot.linear_vel == 0.0
        aim = self._aim_point(fld, pose, goal, short=blocked)
        desired = math.atan2(aim[1] - pose.y, aim[0] - pose.x)
        if self.sigma > 0:
            desired += self.rng.normal(0.0, self.sigma)
        err = wrap_angle(desired - pose.heading)
        dt = 1.0 / self.tick_rate
        angular = max(-self.sim.w_max, min(self.sim.w_max, err / dt))
        dist_goal = math.hypot(goal.x - pose.x, goal.y - pose.y)
        gate = math.pi / 12 if blocked else math.pi / 3
        if abs(err) > gate:
            linear = 0.0
        else:
            linear = min(self.sim.v_max, dist_goal) * math.cos(err)
        self._last_linear = linear
        click = None
        if tick in self._click_ticks and tick not in self._fired:
            self._fired.add(tick)
            click = self._click_ticks[tick]
        return OperatorCommand(linear=linear, angular=angular, airm_click=click)

    def _aim_point(self, fld: CostField, pose: Pose2D, goal, short: bool = False) -> tuple[float, float]:
        grid = self.scenario.grid
        costs = fld.costs
        cell = grid.cell_of(pose.x, pose.y)
        chain = [cell]
        lookahead = 1 if short else self.LOOKAHEAD_CELLS
        for _ in range(lookahead):
            if costs[chain[-1]] == 0.0:
                break
            r, c = chain[-1]
            nxt = min(
                grid_moves(grid.occupied, r, c),
                key=lambda move: costs[move[0], move[1]],
                default=None,
            )
            if nxt is None or not costs[nxt[0], nxt[1]] < costs[r, c]:
                break
            chain.append((nxt[0], nxt[1]))
        # prefer the farthest chain cell that is both in a clear straight
        # line and roughly ahead, so the turn arc cannot sweep into a wall
        for cell in reversed(chain):
            target = goal.position if costs[cell] == 0.0 else grid.cell_center(*cell)
            if not self._clear_segment(pose, target):
                continue
            bearing = math.atan2(target[1] - pose.y, target[0] - pose.x)
            if cell == chain[1 if len(chain) > 1 else 0] or abs(wrap_angle(bearing - pose.heading)) <= math.pi / 3:
                return target
        return grid.cell_center(*chain[min(1, len(chain) - 1)])

    def _clear_segment(self, pose: Pose2D, target: tuple[float, float]) -> bool:
        grid = self.scenario.grid
        length = math.hypot(target[0] - pose.x, target[1] - pose.y)
        if length < 1e-9:
            return True
        steps = max(2, int(length / (grid.resolution / 4)) + 1)
        for i in range(steps + 1):
            f = i / steps
            x = pose.x + f * (target[0] - pose.x)
            y = pose.y + f * (target[1] - pose.y)
            if not grid.in_bounds_point(x, y) or grid.is_occupied_point(x, y):
                return False
        return True


def scripted_policy(sigma: float = 0.0):
    """Policy factory for run_trial."""

    def factory(scenario, fields, rng, sim_params, est_params):
        return ScriptedPolicy(scenario, fields, rng, sim_params, est_params.tick_rate, sigma=sigma)

    return factory


class RecordedPolicy:
    """Replays the exact command stream of a previous trial log."""

    def __init__(self, log: TrialLog):
        self._commands = [
            OperatorCommand(linear=r.command[0], angular=r.command[1], airm_click=r.click)
            for r in log.records
        ]

    def command(self, robot: RobotState, tick: int) -> OperatorCommand:
        if tick >= len(self._commands):
            return IDLE
        return self._commands[tick]

    @staticmethod
    def factory(log: TrialLog):
        def make(scenario, fields, rng, sim_params, est_params):
            return RecordedPolicy(log)

        return make


def run_trial(
    scenario: Scenario,
    policy_factory,
    method_ids,
    seed: int,
    est_params: EstimatorParams | None = None,
    sim_params: SimParams | None = None,
    rbii_params: RbiiParams | None = None,
    ecf_params: EcfParams | None = None,
    extra_params: dict | None = None,
    max_ticks: int | None = None,
) -> TrialLog:
    """Execute one scripted trial to completion (capture of the final scripted
    goal within the capture radius) or until the tick budget expires, in which
    case the log is marked incomplete."""
    engine = TrialEngine(
        scenario,
        method_ids,
        seed,
        est_params=est_params,
        sim_params=sim_params,
        rbii_params=rbii_params,
        ecf_params=ecf_params,
        extra_params=extra_params,
    )
    policy = policy_factory(
        engine.scenario, engine.fields, engine.rng, engine.sim_params, engine.est_params
    )
    budget = engine.sim_params.tick_budget if max_ticks is None else min(max_ticks, engine.sim_params.tick_budget)
    while not engine.done and engine.tick_index < budget:
        command = policy.command(engine.robot, engine.tick_index)
        engine.tick(command)
    return engine.log
