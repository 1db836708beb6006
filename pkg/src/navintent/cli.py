"""Command-line entry point: batch trials, evaluation reports, live sessions.

Exit codes are a stable contract: 0 success, 2 usage/config error,
1 runtime failure.  All randomness flows from --seed; trial k of a batch
uses seed + k, so batches are reproducible and safely parallel (one output
file per trial, written atomically).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .baselines import EcfParams, RbiiParams
from .estimator import EstimatorParams
from .metrics import aggregate, format_report, score_trial, write_report
from .simulator import SimParams, TrialAbortError, TrialLog, run_trial, scripted_policy
from .world import MapFormatError, Scenario, load_scenario

LOG_DIR_ENV = "NAVINTENT_LOG_DIR"
BUNDLED_SCENARIOS = ("s1", "s2", "s3", "s4")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario_path: Path
    methods: list[str]
    seed: int
    trials: int
    out_dir: Path
    sigma: float = 0.0
    workers: int = 1
    est_params: EstimatorParams = field(default_factory=EstimatorParams)
    sim_params: SimParams = field(default_factory=SimParams)
    rbii_params: RbiiParams = field(default_factory=RbiiParams)
    ecf_params: EcfParams = field(default_factory=EcfParams)

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("methods list must be nonempty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")
        if not self.scenario_path.is_file():
            raise ConfigError(f"scenario file not found: {self.scenario_path}")


def resolve_scenario_path(ref: str) -> Path:
    """Accept either a file path or a bundled scenario id (s1..s4)."""
    if ref in BUNDLED_SCENARIOS:
        return Path(str(resources.files("navintent").joinpath(f"scenarios/{ref}.yaml")))
    return Path(ref)


def _merge_params(scenario: Scenario, config_path: str | None):
    """Layered parameters: package defaults < scenario params < --config file."""
    layers = [scenario.params]
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        data = yaml.safe_load(path.read_text()) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must be a key-value document")
        layers.append(data)
    sections = {"estimator": {}, "simulator": {}, "rbii": {}, "ecf": {}, "run": {}}
    for layer in layers:
        unknown = set(layer) - set(sections)
        if unknown:
            raise ConfigError(f"unknown parameter sections: {sorted(unknown)}")
        for name in sections:
            overrides = layer.get(name) or {}
            if not isinstance(overrides, dict):
                raise ConfigError(f"config section {name!r} must be a mapping")
            sections[name].update(overrides)
    try:
        return (
            EstimatorParams.from_dict(sections["estimator"]),
            SimParams.from_dict(sections["simulator"]),
            RbiiParams.from_dict(sections["rbii"]),
            EcfParams.from_dict(sections["ecf"]),
            sections["run"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _trial_filename(scenario_id: str, seed: int) -> str:
    return f"{scenario_id}_seed{seed:05d}.jsonl"


def _run_one(job: tuple) -> str:
    """Worker for one trial; top-level so process pools can pickle it."""
    scenario_path, method_ids, seed, sigma, out_dir, params = job
    scenario = load_scenario(scenario_path)
    log = run_trial(
        scenario,
        scripted_policy(sigma=sigma),
        method_ids,
        seed,
        est_params=EstimatorParams(**params["estimator"]),
        sim_params=SimParams(**params["simulator"]),
        rbii_params=RbiiParams(**params["rbii"]),
        ecf_params=EcfParams(**params["ecf"]),
        extra_params={"sigma": sigma},
    )
    path = Path(out_dir) / _trial_filename(log.scenario_id, seed)
    log.write(path)
    return str(path)


def execute_run(config: RunConfig) -> list[str]:
    import dataclasses

    config.out_dir.mkdir(parents=True, exist_ok=True)
    params = {
        "estimator": dataclasses.asdict(config.est_params),
        "simulator": dataclasses.asdict(config.sim_params),
        "rbii": dataclasses.asdict(config.rbii_params),
        "ecf": dataclasses.asdict(config.ecf_params),
    }
    jobs = [
        (str(config.scenario_path), list(config.methods), config.seed + k, config.sigma,
         str(config.out_dir), params)
        for k in range(config.trials)
    ]
    if config.workers == 1:
        return [_run_one(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_run_one, jobs))


def cmd_run(args) -> int:
    try:
        scenario_path = resolve_scenario_path(args.scenario)
        config = RunConfig(
            scenario_path=scenario_path,
            methods=[m for m in args.methods.split(",") if m],
            seed=args.seed,
            trials=args.trials,
            out_dir=Path(args.out),
            sigma=args.sigma,
            workers=args.workers,
        )
        scenario = load_scenario(config.scenario_path)
        est, sim, rbii, ecf, run_section = _merge_params(scenario, args.config)
        config.est_params, config.sim_params = est, sim
        config.rbii_params, config.ecf_params = rbii, ecf
        if "sigma" in run_section and args.sigma == 0.0:
            config.sigma = float(run_section["sigma"])
        from .methods import canonical_method_id

        config.methods = [canonical_method_id(m) for m in config.methods]
    except (ConfigError, MapFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        paths = execute_run(config)
    except (TrialAbortError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(paths)} trial logs to {config.out_dir}")
    return 0


def cmd_eval(args) -> int:
    log_dir = Path(args.logs)
    if not log_dir.is_dir():
        print(f"error: log directory not found: {log_dir}", file=sys.stderr)
        return 2
    files = sorted(log_dir.glob("*.jsonl"))
    if not files:
        print(f"error: no trial logs in {log_dir}", file=sys.stderr)
        return 2
    base = 2.0 if args.log_base == "2" else math.e
    scores = []
    skipped = 0
    for path in files:
        try:
            log = TrialLog.read(path)
            if not log.complete:
                raise ValueError("log marked incomplete")
            scores.extend(score_trial(log, base=base))
        except (ValueError, KeyError, TypeError) as exc:
            skipped += 1
            print(f"warning: skipping {path.name}: {exc}", file=sys.stderr)
    if not scores:
        print("error: no usable trial logs", file=sys.stderr)
        return 1
    rows = aggregate(scores)
    report_path = Path(args.report) if args.report else log_dir / "report.csv"
    write_report(rows, report_path)
    print(format_report(rows), end="")
    print(f"report written to {report_path}")
    if skipped:
        print(f"({skipped} unreadable logs skipped)", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    try:
        scenario_path = resolve_scenario_path(args.scenario)
        if not scenario_path.is_file():
            raise ConfigError(f"scenario file not found: {scenario_path}")
        scenario = load_scenario(scenario_path)
        est, sim, rbii, ecf, _ = _merge_params(scenario, args.config)
        if args.assets and not Path(args.assets).is_dir():
            raise ConfigError(f"assets directory not found: {args.assets}")
    except (ConfigError, MapFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    from .service import create_app

    app = create_app(
        scenario,
        est_params=est,
        sim_params=sim,
        rbii_params=rbii,
        ecf_params=ecf,
        log_dir=Path(args.log_dir) if args.log_dir else None,
        assets_dir=Path(args.assets) if args.assets else None,
    )
    import uvicorn

    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"error: could not serve on port {args.port}: {exc}", file=sys.stderr)
        return 1
    return 0


def _port(value: str) -> int:
    port = int(value)
    if not 1 <= port <= 65535:
        raise argparse.ArgumentTypeError(f"port {port} out of range 1..65535")
    return port


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="navintent",
        description="Goal-intent inference trials, evaluation, and live teleop sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    default_logs = os.environ.get(LOG_DIR_ENV, "logs")

    run = sub.add_parser("run", help="execute scripted trials and write logs")
    run.add_argument("--scenario", required=True, help="scenario file or bundled id (s1..s4)")
    run.add_argument("--methods", default="boir,boir_airm,rbii1,ecf")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default=default_logs, help=f"output directory (${LOG_DIR_ENV})")
    run.add_argument("--sigma", type=float, default=0.0, help="scripted-operator heading noise (rad)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--config", default=None, help="YAML parameter overrides")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="aggregate trial logs into a report table")
    ev.add_argument("--logs", default=default_logs, help=f"log directory (${LOG_DIR_ENV})")
    ev.add_argument("--report", default=None, help="report path (default <logs>/report.csv)")
    ev.add_argument("--log-base", choices=("e", "2"), default="e", help="log-loss base")
    ev.set_defaults(func=cmd_eval)

    serve = sub.add_parser("serve", help="serve one interactive teleop session")
    serve.add_argument("--scenario", required=True)
    serve.add_argument("--port", type=_port, default=8090)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--assets", default=None, help="static console bundle to serve at /")
    serve.add_argument("--log-dir", default=None, help="directory for session trial logs")
    serve.add_argument("--config", default=None, help="YAML parameter overrides")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
