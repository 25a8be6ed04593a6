"""Experiment harness CLI: parse a config, run campaigns, persist results.

Outputs per run: report.csv (stable schema), report.json (full nested
report with diagnostics) and plotdata/*.dat (4-column text, one file per
metric and mode).

Exit codes: 0 success, 2 config validation, 3 excessive trial failures,
1 unexpected error.
"""

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .bench import CampaignSpec, GridPoint, run_campaign
from .errors import ValidationError
from .model import mixer_kind
from .tomography import TomographyMode

CSV_HEADER = "N,K,M,gamma,epsilon,mode,metric,median,q25,q75,trials,failures"
# Wall-clock medians are not reproducible byte-for-byte, so the timing
# metric lives in report.json and plotdata only.
CSV_METRICS = ("delta_t_max", "delta_f95")

ALL_MODES = (TomographyMode.FULL, TomographyMode.INTENSITY)


@dataclass(frozen=True)
class ExperimentConfig:
    n_modes: int = 10
    n_layers: int = 10
    block_size: int | None = None
    gamma: float = 0.1
    epsilons: tuple = (1e-4, 1e-3, 1e-2)
    modes: tuple = ALL_MODES
    trials: int = 100
    fidelity_samples: int = 1000
    seed: int = 2023
    output_dir: str = "results"
    sizes: tuple = ()
    timing_epsilon: float = 1e-3

    def resolved_block_size(self):
        return self.n_modes if self.block_size is None else self.block_size


_FIELD_BY_KEY = {
    "N": "n_modes",
    "K": "n_layers",
    "M": "block_size",
    "gamma": "gamma",
    "epsilons": "epsilons",
    "modes": "modes",
    "trials": "trials",
    "fidelity_samples": "fidelity_samples",
    "seed": "seed",
    "output_dir": "output_dir",
    "sizes": "sizes",
    "timing_epsilon": "timing_epsilon",
}


def _require(condition, key, message):
    if not condition:
        raise ValidationError(f"{key}: {message}")


def parse_config(document, base=None):
    """Validated :class:`ExperimentConfig` from a JSON-compatible mapping."""
    if not isinstance(document, dict):
        raise ValidationError("document: expected a JSON object")
    config = base or ExperimentConfig()
    updates = {}
    for key, value in document.items():
        if key not in _FIELD_BY_KEY:
            raise ValidationError(f"{key}: unknown field")
        updates[_FIELD_BY_KEY[key]] = value
    if "epsilons" in updates:
        updates["epsilons"] = tuple(float(e) for e in updates["epsilons"])
    if "sizes" in updates:
        updates["sizes"] = tuple(int(s) for s in updates["sizes"])
    if "modes" in updates:
        try:
            updates["modes"] = tuple(TomographyMode(m) for m in updates["modes"])
        except ValueError:
            raise ValidationError("modes: must be a subset of ['full', 'intensity']")
    config = replace(config, **updates)

    _require(isinstance(config.n_modes, int) and config.n_modes >= 2, "N", "must be an integer >= 2")
    _require(isinstance(config.n_layers, int) and config.n_layers >= 1, "K", "must be an integer >= 1")
    m = config.resolved_block_size()
    _require(isinstance(m, int) and 1 <= m <= config.n_modes, "M", "must satisfy 1 <= M <= N")
    _require(config.gamma >= 0.0, "gamma", "must be nonnegative")
    _require(len(config.epsilons) > 0, "epsilons", "must be nonempty")
    _require(all(e >= 0.0 for e in config.epsilons), "epsilons", "entries must be nonnegative")
    _require(len(config.modes) > 0, "modes", "must be nonempty")
    _require(isinstance(config.trials, int) and config.trials >= 1, "trials", "must be an integer >= 1")
    _require(
        isinstance(config.fidelity_samples, int) and config.fidelity_samples >= 20,
        "fidelity_samples",
        "must be an integer >= 20",
    )
    _require(isinstance(config.seed, int), "seed", "must be an integer")
    _require(all(s >= 2 for s in config.sizes), "sizes", "entries must be >= 2")
    _require(config.timing_epsilon >= 0.0, "timing_epsilon", "must be nonnegative")
    return config


def config_to_dict(config):
    return {
        "N": config.n_modes,
        "K": config.n_layers,
        "M": config.resolved_block_size(),
        "gamma": config.gamma,
        "epsilons": list(config.epsilons),
        "modes": [m.value for m in config.modes],
        "trials": config.trials,
        "fidelity_samples": config.fidelity_samples,
        "seed": config.seed,
        "output_dir": config.output_dir,
        "sizes": list(config.sizes),
        "timing_epsilon": config.timing_epsilon,
    }


PRESETS = {
    # Noise sweep at N = 10 plus the N = K timing sweep, full scale.
    "paper": {
        "N": 10,
        "K": 10,
        "M": 10,
        "gamma": 0.1,
        "epsilons": [1e-4, 3.1623e-4, 1e-3, 3.1623e-3, 1e-2],
        "trials": 100,
        "fidelity_samples": 1000,
        "sizes": [5, 10, 15, 20, 25, 30],
        "timing_epsilon": 1e-3,
    },
    # Scaled-down grid that finishes in minutes.
    "desk": {
        "N": 6,
        "K": 6,
        "M": 6,
        "gamma": 0.1,
        "epsilons": [1e-3, 1e-2],
        "trials": 20,
        "fidelity_samples": 200,
        "sizes": [4, 8],
        "timing_epsilon": 1e-3,
    },
}


def build_grid(config):
    points = []
    for mode in config.modes:
        for epsilon in sorted(config.epsilons):
            points.append(
                GridPoint(
                    config.n_modes,
                    config.n_layers,
                    config.resolved_block_size(),
                    config.gamma,
                    epsilon,
                    mode,
                    tag="error",
                )
            )
    for mode in config.modes:
        for size in sorted(config.sizes):
            points.append(
                GridPoint(size, size, size, config.gamma, config.timing_epsilon, mode, tag="timing")
            )
    return tuple(points)


def _fmt(value):
    return format(value, ".17g")


def write_report_csv(report, path):
    lines = [CSV_HEADER]
    for summary in report.summaries:
        p = summary.point
        for metric in CSV_METRICS:
            st = summary.stats[metric]
            lines.append(
                f"{p.n_modes},{p.n_layers},{p.block_size},{_fmt(p.gamma)},"
                f"{_fmt(p.epsilon)},{p.mode.value},{metric},{_fmt(st.median)},"
                f"{_fmt(st.q25)},{_fmt(st.q75)},{summary.trials},{summary.failures}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_report_json(report, config, path):
    doc = {
        "config": config_to_dict(config),
        "metadata": {
            "mixer": {str(n): mixer_kind(n) for n in sorted({s.point.n_modes for s in report.summaries})},
            "seed": report.seed,
            "trials": report.trials,
            "fidelity_samples": report.fidelity_samples,
        },
        "points": [
            {
                "N": s.point.n_modes,
                "K": s.point.n_layers,
                "M": s.point.block_size,
                "gamma": s.point.gamma,
                "epsilon": s.point.epsilon,
                "mode": s.point.mode.value,
                "tag": s.point.tag,
                "trials": s.trials,
                "failures": s.failures,
                "excessive_failures": s.excessive_failures,
                "stats": {
                    metric: {"median": st.median, "q25": st.q25, "q75": st.q75}
                    for metric, st in s.stats.items()
                },
                "outcomes": [
                    {
                        "delta_t_max": o.delta_t_max,
                        "delta_f95": o.delta_f95,
                        "seconds": o.seconds,
                        "seed": o.seed,
                        "failed": o.failed,
                        "failure_reason": o.failure_reason,
                    }
                    for o in s.outcomes
                ],
            }
            for s in report.summaries
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def emit_plotdata(report, path):
    """One whitespace-delimited file per (metric, mode): columns
    ``x median q25 q75`` with x = epsilon for error curves, x = N for timing."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    modes = []
    for s in report.summaries:
        if s.point.mode not in modes:
            modes.append(s.point.mode)
    for mode in modes:
        for metric in ("delta_t_max", "delta_f95"):
            rows = sorted(
                (
                    (s.point.epsilon, s.stats[metric])
                    for s in report.summaries
                    if s.point.mode is mode and s.point.tag == "error"
                ),
                key=lambda row: row[0],
            )
            _write_dat(directory / f"{metric}_{mode.value}.dat", rows)
        timing = [s for s in report.summaries if s.point.mode is mode and s.point.tag == "timing"]
        if not timing:
            timing = [s for s in report.summaries if s.point.mode is mode]
        rows = sorted(
            ((float(s.point.n_modes), s.stats["seconds"]) for s in timing),
            key=lambda row: row[0],
        )
        _write_dat(directory / f"seconds_{mode.value}.dat", rows)


def _write_dat(path, rows):
    if not rows:
        return
    lines = ["# x median q25 q75"]
    for x, st in rows:
        lines.append(f"{_fmt(x)} {_fmt(st.median)} {_fmt(st.q25)} {_fmt(st.q75)}")
    path.write_text("\n".join(lines) + "\n")


def cmd_run(args):
    document = {}
    if args.preset:
        document.update(PRESETS[args.preset])
    if args.config:
        try:
            with open(args.config) as fh:
                document.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    try:
        config = parse_config(document)
    except ValidationError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.output_dir is not None:
        config = replace(config, output_dir=args.output_dir)

    spec = CampaignSpec(
        points=build_grid(config),
        trials=config.trials,
        fidelity_samples=config.fidelity_samples,
        seed=config.seed,
        threads=args.threads,
    )
    print(f"running {len(spec.points)} grid points x {spec.trials} trials", file=sys.stderr)
    report = run_campaign(spec)

    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_report_csv(report, outdir / "report.csv")
    write_report_json(report, config, outdir / "report.json")
    emit_plotdata(report, outdir / "plotdata")
    print(f"wrote {outdir / 'report.csv'}", file=sys.stderr)
    if report.any_excessive_failures:
        print("error: a grid point exceeded the 50% failure threshold", file=sys.stderr)
        return 3
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="meshcal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser("run", help="run a benchmark campaign")
    run_parser.add_argument("--config", metavar="PATH", help="JSON experiment config")
    run_parser.add_argument("--preset", choices=sorted(PRESETS), help="built-in parameterization")
    run_parser.add_argument("--seed", type=int, default=None, help="override the campaign seed")
    run_parser.add_argument("--output-dir", default=None, help="override the output directory")
    run_parser.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return 2


def entrypoint():
    try:
        sys.exit(main())
    except SystemExit:
        raise
    except Exception as exc:  # pragma: no cover - last-resort diagnostics
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
