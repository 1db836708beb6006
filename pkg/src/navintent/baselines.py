"""Comparison estimators run on the same tick stream as the main filter.

ECF is memoryless: per tick it scores each goal by the product of two
exponential decays, one in Euclidean distance and one in bearing angle.
RBII-1 is recursive: Euclidean-distance evidence combined with the same
goal-persistence transition as the main filter, but no explicit-intent
channel and no path-length term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import normalize_minmax, transition_predict
from .planner import bearing_angle, euclidean_distance
from .world import Goal, Pose2D


@dataclass(frozen=True)
class EcfParams:
    distance_decay: float = 1.0  # meters
    angle_decay: float = 1.0  # radians

    def __post_init__(self):
        if not (self.distance_decay > 0 and self.angle_decay > 0):
            raise ValueError("decay scales must be > 0")

    @classmethod
    def from_dict(cls, overrides: dict) -> "EcfParams":
        return _from_dict(cls, overrides)


@dataclass(frozen=True)
class RbiiParams:
    distance_scale: float = 0.5
    delta: float = 0.2

    def __post_init__(self):
        if not self.distance_scale > 0:
            raise ValueError("distance scale must be > 0")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    @classmethod
    def from_dict(cls, overrides: dict) -> "RbiiParams":
        return _from_dict(cls, overrides)


def _from_dict(cls, overrides: dict):
    base = {f: getattr(cls, f) for f in cls.__dataclass_fields__}
    unknown = set(overrides) - set(base)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} parameters: {sorted(unknown)}")
    base.update(overrides)
    return cls(**base)


def ecf_confidence(pose: Pose2D, goals: list[Goal], params: EcfParams) -> np.ndarray:
    """Raw per-goal confidences in (0, 1]: exp(-d/scale_d) * exp(-phi/scale_phi).

    Stateless; the prediction is the argmax (lowest goal id on ties).
    """
    d = np.array([euclidean_distance(pose, g) for g in goals])
    phi = np.array([bearing_angle(pose, g) for g in goals])
    return np.exp(-(d / params.distance_decay + phi / params.angle_decay))


def rbii_update(prior: np.ndarray, pose: Pose2D, goals: list[Goal], params: RbiiParams) -> np.ndarray:
    """Recursive update from min-max normalized Euclidean distances.

    likelihood exp(-d_hat/scale) times the goal-persistence prediction,
    then normalized; there is no action channel.
    """
    prior = np.asarray(prior, dtype=float)
    d = np.array([euclidean_distance(pose, g) for g in goals])
    d_hat = normalize_minmax(d)
    likelihood = np.exp(-d_hat / params.distance_scale)
    unnormalized = likelihood * transition_predict(prior, params.delta)
    return unnormalized / unnormalized.sum()
