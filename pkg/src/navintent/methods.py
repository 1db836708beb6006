"""Stateful per-trial wrappers giving every estimator the same tick interface.

Each method object owns its own belief, consumes the identical stream of
(tick, pose, observations), and exposes the previous tick's posterior as the
next prior where applicable.  Explicit intent clicks are delivered to every
method but only the click-enabled filter reacts.
"""

from __future__ import annotations

import numpy as np

from . import baselines, estimator
from .estimator import EstimatorParams, ObservationSet
from .world import Goal, Pose2D

BOIR = "boir"
BOIR_AIRM = "boir_airm"
RBII1 = "rbii1"
ECF = "ecf"
METHOD_IDS = (BOIR, BOIR_AIRM, RBII1, ECF)


def canonical_method_id(name: str) -> str:
    """Normalize a method name ('BOIR-AIRM', 'boir_airm', ...) to its id."""
    mid = name.strip().lower().replace("-", "_")
    if mid not in METHOD_IDS:
        raise ValueError(f"unknown method {name!r}; expected one of {', '.join(METHOD_IDS)}")
    return mid


def display_name(method_id: str) -> str:
    return {BOIR: "BOIR", BOIR_AIRM: "BOIR-AIRM", RBII1: "RBII-1", ECF: "ECF"}[method_id]


class BoirFilter:
    """Recursive geometric filter; optionally accepts explicit intent clicks."""

    def __init__(self, n: int, params: EstimatorParams, accept_clicks: bool = False):
        self.method_id = BOIR_AIRM if accept_clicks else BOIR
        self.params = params
        self.accept_clicks = accept_clicks
        self._n = n
        self.reset()

    def reset(self):
        self.belief = estimator.init_belief(self._n)
        self.airm: estimator.AirmState | None = None

    def apply_click(self, goal_id: int, tick: int):
        if not self.accept_clicks:
            return
        self.belief, self.airm = estimator.airm_activate(self.belief, goal_id, tick, self.params)

    def update(self, tick: int, pose: Pose2D, obs: ObservationSet) -> np.ndarray:
        self.belief = estimator.boir_update(self.belief, obs, self.params, self.airm, tick)
        return self.belief

    def airm_remaining_s(self, tick: int) -> float:
        if self.airm is None:
            return 0.0
        return self.airm.remaining_s(tick, self.params.tick_rate)


class RbiiFilter:
    """Recursive Euclidean-distance baseline."""

    method_id = RBII1

    def __init__(self, goals: list[Goal], params: baselines.RbiiParams):
        self.goals = goals
        self.params = params
        self.reset()

    def reset(self):
        self.belief = estimator.init_belief(len(self.goals))

    def apply_click(self, goal_id: int, tick: int):
        pass

    def update(self, tick: int, pose: Pose2D, obs: ObservationSet) -> np.ndarray:
        self.belief = baselines.rbii_update(self.belief, pose, self.goals, self.params)
        return self.belief


class EcfEstimator:
    """Memoryless confidence baseline; confidences are normalized per tick
    so its outputs are comparable distributions (argmax is unaffected)."""

    method_id = ECF

    def __init__(self, goals: list[Goal], params: baselines.EcfParams):
        self.goals = goals
        self.params = params
        self.reset()

    def reset(self):
        self.belief = estimator.init_belief(len(self.goals))

    def apply_click(self, goal_id: int, tick: int):
        pass

    def update(self, tick: int, pose: Pose2D, obs: ObservationSet) -> np.ndarray:
        confidence = baselines.ecf_confidence(pose, self.goals, self.params)
        self.belief = confidence / confidence.sum()
        return self.belief


def build_methods(
    method_ids,
    goals: list[Goal],
    est_params: EstimatorParams,
    rbii_params: baselines.RbiiParams | None = None,
    ecf_params: baselines.EcfParams | None = None,
) -> dict[str, object]:
    """Instantiate fresh method objects keyed by canonical id, input order kept."""
    rbii_params = rbii_params or baselines.RbiiParams()
    ecf_params = ecf_params or baselines.EcfParams()
    n = len(goals)
    out: dict[str, object] = {}
    for name in method_ids:
        mid = canonical_method_id(name)
        if mid in out:
            raise ValueError(f"method {mid!r} listed twice")
        if mid == BOIR:
            out[mid] = BoirFilter(n, est_params, accept_clicks=False)
        elif mid == BOIR_AIRM:
            out[mid] = BoirFilter(n, est_params, accept_clicks=True)
        elif mid == RBII1:
            out[mid] = RbiiFilter(goals, rbii_params)
        else:
            out[mid] = EcfEstimator(goals, ecf_params)
    if not out:
        raise ValueError("need at least one method")
    return out
