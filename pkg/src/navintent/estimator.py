"""Recursive Bayesian goal-intent filter with explicit operator-intent boosts.

The filter keeps a belief (probability vector over N goals) and refines it
every tick from three factors:

  * a geometric likelihood built from per-goal bearing angles and planner
    path lengths, each min-max normalized across goals and pushed through
    an exponential decay weighted by w_phi / w_len;
  * a goal-persistence prediction: stay on the same goal with probability
    1 - delta, otherwise switch uniformly to one of the other N - 1 goals;
  * an optional boost for a goal the operator selected explicitly, which
    starts at `activated_belief` and decays linearly to `threshold_belief`
    over a fixed horizon, after which it has no effect.

All belief vectors are plain numpy arrays indexed by goal id - 1; every
function returns a freshly normalized vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNREACHABLE_SUBSTITUTE_FACTOR = 1.5


@dataclass(frozen=True)
class EstimatorParams:
    """Filter parameters. Defaults follow the reference configuration."""

    w_phi: float = 0.6
    w_len: float = 0.4
    delta: float = 0.2
    activated_belief: float = 0.95
    threshold_belief: float = 0.35
    horizon_s: float = 10.0
    tick_rate: float = 10.0

    def __post_init__(self):
        if not (0.0 < self.w_phi < 1.0 and 0.0 < self.w_len < 1.0):
            raise ValueError("observation weights must lie in (0, 1)")
        if abs(self.w_phi + self.w_len - 1.0) > 1e-12:
            raise ValueError("observation weights must sum to 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 < self.threshold_belief < self.activated_belief < 1.0:
            raise ValueError("need 0 < threshold_belief < activated_belief < 1")
        if not self.horizon_s > 0:
            raise ValueError("horizon must be > 0 seconds")
        if not self.tick_rate > 0:
            raise ValueError("tick rate must be > 0 Hz")

    @property
    def horizon_ticks(self) -> int:
        return int(round(self.horizon_s * self.tick_rate))

    @property
    def decay_rate(self) -> float:
        """Per-second decay of the explicit-intent boost."""
        return (self.activated_belief - self.threshold_belief) / self.horizon_s

    @classmethod
    def from_dict(cls, overrides: dict) -> "EstimatorParams":
        base = {f: getattr(cls, f) for f in cls.__dataclass_fields__}
        unknown = set(overrides) - set(base)
        if unknown:
            raise ValueError(f"unknown estimator parameters: {sorted(unknown)}")
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Per-goal (bearing angle, path length) evidence for one tick.

    `phi` in radians within [0, pi]; `path_len` in meters, >= 0 or +inf for
    goals the planner cannot reach.
    """

    phi: np.ndarray
    path_len: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        path_len = np.asarray(self.path_len, dtype=float)
        if phi.shape != path_len.shape or phi.ndim != 1:
            raise ValueError("phi and path_len must be 1-D arrays of equal length")
        if phi.size < 2:
            raise ValueError("need observations for at least 2 goals")
        if np.any(phi < -1e-12) or np.any(phi > np.pi + 1e-12):
            raise ValueError("bearing angles must lie in [0, pi]")
        if np.any(path_len < 0):
            raise ValueError("path lengths must be >= 0")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "path_len", path_len)

    @property
    def n(self) -> int:
        return self.phi.size


@dataclass(frozen=True)
class AirmState:
    """An active explicit-intent episode for one selected goal."""

    selected: int
    activation_tick: int
    horizon_ticks: int
    rate: float

    def active_at(self, tick: int) -> bool:
        return self.activation_tick <= tick < self.activation_tick + self.horizon_ticks

    def remaining_s(self, tick: int, tick_rate: float) -> float:
        """Seconds of boost left at `tick`; 0 outside the episode."""
        if not self.active_at(tick):
            return 0.0
        return (self.activation_tick + self.horizon_ticks - tick) / tick_rate


def init_belief(n: int) -> np.ndarray:
    """Uniform belief over n >= 2 goals."""
    if n < 2:
        raise ValueError("need at least 2 goals")
    return np.full(n, 1.0 / n)


def normalize_minmax(values) -> np.ndarray:
    """Affinely map finite values onto [0, 1]; a constant vector maps to all 0.5."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("min-max normalization needs at least 2 values")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.full(v.shape, 0.5)
    return (v - lo) / (hi - lo)


def normalize_observations(obs: ObservationSet) -> ObservationSet:
    """Min-max normalize each observation type across goals for one tick.

    Unreachable path lengths (+inf) are substituted with 1.5x the largest
    finite value before normalization so they rank last; if every goal is
    unreachable, all normalized lengths are 1.
    """
    phi_hat = normalize_minmax(obs.phi)
    lens = obs.path_len
    finite = np.isfinite(lens)
    if not finite.any():
        len_hat = np.ones(obs.n)
    elif finite.all():
        len_hat = normalize_minmax(lens)
    else:
        max_finite = lens[finite].max()
        substitute = max_finite * UNREACHABLE_SUBSTITUTE_FACTOR if max_finite > 0 else 1.0
        len_hat = normalize_minmax(np.where(finite, lens, substitute))
    return ObservationSet(phi=phi_hat, path_len=len_hat)


def observation_likelihood(norm_obs: ObservationSet, params: EstimatorParams) -> np.ndarray:
    """Per-goal likelihood exp(-phi_hat / w_phi) * exp(-len_hat / w_len).

    Inputs must already be normalized to [0, 1]; outputs are strictly
    positive, so posterior mass can never collapse to zero.
    """
    return np.exp(-(norm_obs.phi / params.w_phi + norm_obs.path_len / params.w_len))


def transition_predict(prior: np.ndarray, delta: float) -> np.ndarray:
    """One goal-persistence prediction step.

    Equivalent to multiplying by the N x N matrix with 1 - delta on the
    diagonal and delta / (N - 1) elsewhere; rows sum to 1 for any N >= 2,
    so the output is a distribution whenever the prior is.
    """
    prior = np.asarray(prior, dtype=float)
    n = prior.size
    return (1.0 - delta) * prior + (delta / (n - 1)) * (1.0 - prior)


def airm_activate(
    belief: np.ndarray, goal_id: int, tick: int, params: EstimatorParams
) -> tuple[np.ndarray, AirmState]:
    """Start an explicit-intent episode for `goal_id` at `tick`.

    Relabels the prior: the selected goal takes `activated_belief` and the
    rest share the remainder equally.  The returned episode replaces any
    previously active one.
    """
    n = np.asarray(belief).size
    if not 1 <= goal_id <= n:
        raise ValueError(f"goal id {goal_id} out of range 1..{n}")
    relabeled = np.full(n, (1.0 - params.activated_belief) / (n - 1))
    relabeled[goal_id - 1] = params.activated_belief
    state = AirmState(
        selected=goal_id,
        activation_tick=tick,
        horizon_ticks=params.horizon_ticks,
        rate=params.decay_rate,
    )
    return relabeled, state


def airm_factor(airm: AirmState | None, tick: int, params: EstimatorParams, n: int) -> np.ndarray:
    """Multiplicative explicit-intent vector for the current tick.

    All ones when no episode is active.  Inside the horizon the vector is a
    distribution over goals: the selected goal's entry decays linearly from
    `activated_belief`, clamped at `threshold_belief`, and the remaining
    goals share the complement equally, so the selected goal enjoys a boost
    ratio that starts large and fades toward parity over the horizon.
    """
    if airm is None or not airm.active_at(tick):
        return np.ones(n)
    tau = (tick - airm.activation_tick) / params.tick_rate
    value = params.activated_belief - airm.rate * tau
    selected_p = max(value, params.threshold_belief)
    factor = np.full(n, (1.0 - selected_p) / (n - 1))
    factor[airm.selected - 1] = selected_p
    return factor


def boir_update(
    prior: np.ndarray,
    obs: ObservationSet,
    params: EstimatorParams,
    airm: AirmState | None = None,
    tick: int = 0,
) -> np.ndarray:
    """One full recursive update: likelihood x prediction x boost, normalized.

    The returned posterior is the next tick's prior.
    """
    prior = np.asarray(prior, dtype=float)
    if prior.size != obs.n:
        raise ValueError("prior and observations disagree on the number of goals")
    norm_obs = normalize_observations(obs)
    likelihood = observation_likelihood(norm_obs, params)
    predicted = transition_predict(prior, params.delta)
    unnormalized = likelihood * predicted * airm_factor(airm, tick, params, prior.size)
    total = unnormalized.sum()
    if not total > 0:
        raise ArithmeticError("posterior mass vanished; inputs must be invalid")
    return unnormalized / total


def predict_intent(belief: np.ndarray) -> int:
    """Goal id with the highest posterior probability; ties go to the lowest id."""
    return int(np.argmax(belief)) + 1


def belief_snapshot(belief: np.ndarray, goals) -> list[dict]:
    """Serialize a belief as an ordered array of {goal, probability} pairs."""
    return [
        {"goal": goal.label, "probability": float(p)}
        for goal, p in zip(goals, np.asarray(belief, dtype=float))
    ]
