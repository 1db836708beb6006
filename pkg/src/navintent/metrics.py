"""Per-trial and aggregate evaluation: accuracy and log-loss per method.

Accuracy is the fraction of ticks whose predicted goal matches the scripted
true goal.  Log-loss is the mean negative natural log of the probability a
method assigned to the true goal, with probabilities renormalized per tick
(a no-op for proper beliefs) and clamped to [1e-12, 1] so a confident wrong
method pays a large but finite penalty.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .simulator import TrialLog

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class TrialScore:
    scenario_id: str
    method: str
    accuracy: float
    log_loss: float
    tick_count: int


@dataclass(frozen=True)
class AggregateRow:
    scenario_id: str
    method: str
    trials: int
    accuracy_mean: float
    accuracy_sd: float
    log_loss_mean: float
    log_loss_sd: float
    degenerate: bool  # single trial: SD reported as 0


def _check_log(log: TrialLog, method: str):
    if not log.records:
        raise ValueError("trial log has no tick records")
    if method not in log.methods:
        raise ValueError(f"method {method!r} not present in log (has {log.methods})")


def accuracy(log: TrialLog, method: str) -> float:
    """Fraction of ticks where the method's prediction equals the true goal."""
    _check_log(log, method)
    correct = sum(1 for r in log.records if r.predictions[method] == r.true_goal)
    return correct / len(log.records)


def log_loss(log: TrialLog, method: str, base: float = math.e) -> float:
    """Mean negative log probability assigned to the true goal.

    0 for a perfect predictor.  `base` defaults to natural log; pass 2 for
    bits.
    """
    _check_log(log, method)
    total = 0.0
    for r in log.records:
        probs = np.asarray(r.beliefs[method], dtype=float)
        probs = probs / probs.sum()
        p = min(max(float(probs[r.true_goal - 1]), PROB_CLAMP), 1.0)
        total -= math.log(p)
    loss = total / len(log.records)
    if base != math.e:
        loss /= math.log(base)
    return loss


def score_trial(log: TrialLog, base: float = math.e) -> list[TrialScore]:
    return [
        TrialScore(
            scenario_id=log.scenario_id,
            method=m,
            accuracy=accuracy(log, m),
            log_loss=log_loss(log, m, base=base),
            tick_count=log.tick_count,
        )
        for m in log.methods
    ]


def aggregate(scores: list[TrialScore]) -> list[AggregateRow]:
    """Sample mean and (n-1) standard deviation per (scenario, method).

    Groups appear in first-seen order; a single-trial group reports SD 0
    and is flagged degenerate.
    """
    if not scores:
        raise ValueError("need at least one trial score")
    groups: dict[tuple[str, str], list[TrialScore]] = {}
    for s in scores:
        groups.setdefault((s.scenario_id, s.method), []).append(s)
    rows = []
    for (scenario_id, method), members in groups.items():
        acc = np.array([m.accuracy for m in members])
        ll = np.array([m.log_loss for m in members])
        single = len(members) == 1
        rows.append(
            AggregateRow(
                scenario_id=scenario_id,
                method=method,
                trials=len(members),
                accuracy_mean=float(acc.mean()),
                accuracy_sd=0.0 if single else float(acc.std(ddof=1)),
                log_loss_mean=float(ll.mean()),
                log_loss_sd=0.0 if single else float(ll.std(ddof=1)),
                degenerate=single,
            )
        )
    return rows


REPORT_COLUMNS = (
    "scenario",
    "method",
    "trials",
    "accuracy_mean",
    "accuracy_sd",
    "log_loss_mean",
    "log_loss_sd",
    "degenerate",
)


def format_report(rows: list[AggregateRow]) -> str:
    """Render aggregate rows as a CSV table (scenario x method)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in sorted(rows, key=lambda r: (r.scenario_id, r.method)):
        writer.writerow(
            [
                r.scenario_id,
                r.method,
                r.trials,
                f"{r.accuracy_mean:.6f}",
                f"{r.accuracy_sd:.6f}",
                f"{r.log_loss_mean:.6f}",
                f"{r.log_loss_sd:.6f}",
                int(r.degenerate),
            ]
        )
    return buf.getvalue()


def write_report(rows: list[AggregateRow], path: str | Path):
    """Atomic report write (temp file + rename)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(format_report(rows))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
