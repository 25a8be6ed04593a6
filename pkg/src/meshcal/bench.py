"""Benchmark metrics and Monte-Carlo campaign loops.

Metrics follow the reconstruction benchmarks: maximal transmission-
coefficient error over all mixing layers, and the 95th percentile of the
transfer-matrix infidelity maximized over output phases.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ReconstructionError, ZeroMatrix
from .model import random_model, random_phases, transfer_matrix
from .reconstruct import reconstruct
from .tomography import TomographyMode, plan_measurements, simulate_plan

METRICS = ("delta_t_max", "delta_f95", "seconds")


def delta_t_max(true_model, rec_model):
    """Max over layers and ports of the transmission-coefficient error
    | |U_true|^2 - |U_rec|^2 |."""
    if (true_model.n_modes, true_model.n_layers) != (
        rec_model.n_modes,
        rec_model.n_layers,
    ):
        raise DimensionMismatch("models differ in N or K")
    worst = 0.0
    for ut, ur in zip(true_model.layers, rec_model.layers):
        worst = max(worst, float(np.abs(np.abs(ut) ** 2 - np.abs(ur) ** 2).max()))
    return worst


def _fidelity_denominator(v_true, v_pred):
    if v_true.shape != v_pred.shape:
        raise DimensionMismatch(f"shapes {v_true.shape} vs {v_pred.shape}")
    na = float(np.linalg.norm(v_true) ** 2)
    nb = float(np.linalg.norm(v_pred) ** 2)
    if na == 0.0 or nb == 0.0:
        raise ZeroMatrix("fidelity of a zero matrix is undefined")
    return na * nb


def transfer_fidelity(v_true, v_pred):
    """Plain fidelity |Tr(V_true^+ V_pred)|^2 / (Tr(V_true^+ V_true) Tr(V_pred^+ V_pred))."""
    v_true = np.asarray(v_true, dtype=complex)
    v_pred = np.asarray(v_pred, dtype=complex)
    denom = _fidelity_denominator(v_true, v_pred)
    return float(np.abs(np.sum(np.conj(v_true) * v_pred)) ** 2 / denom)


def output_phase_fidelity(v_true, v_pred):
    """Fidelity maximized over output phases (wavefront matching):
    (sum_n |sum_m V_true,nm^* V_pred,nm|)^2 over the same denominator."""
    v_true = np.asarray(v_true, dtype=complex)
    v_pred = np.asarray(v_pred, dtype=complex)
    denom = _fidelity_denominator(v_true, v_pred)
    row_overlaps = np.abs(np.sum(np.conj(v_true) * v_pred, axis=1))
    return float(row_overlaps.sum() ** 2 / denom)


def nearest_rank_percentile(values, percentile):
    """Nearest-rank percentile of a sample (no interpolation)."""
    xs = np.sort(np.asarray(values, dtype=float))
    if xs.size == 0:
        raise ValueError("empty sample")
    rank = max(int(np.ceil(percentile / 100.0 * xs.size)), 1)
    return float(xs[rank - 1])


def fidelity_percentile(true_model, rec_model, samples, rng, percentile=95.0):
    """Percentile of the output-phase infidelity over random configurations."""
    if samples < 20:
        raise ValueError("need at least 20 samples")
    deltas = np.empty(samples)
    for i in range(samples):
        phases = random_phases(true_model.n_modes, true_model.n_layers, rng)
        vt = transfer_matrix(true_model, phases)
        vp = transfer_matrix(rec_model, phases)
        deltas[i] = max(1.0 - output_phase_fidelity(vt, vp), 0.0)
    return nearest_rank_percentile(deltas, percentile)


# --- campaigns --------------------------------------------------------------

@dataclass(frozen=True)
class GridPoint:
    n_modes: int
    n_layers: int
    block_size: int
    gamma: float
    epsilon: float
    mode: TomographyMode
    tag: str = "error"


@dataclass(frozen=True)
class CampaignSpec:
    points: tuple
    trials: int
    fidelity_samples: int
    seed: int
    threads: int = 1


@dataclass(frozen=True)
class TrialOutcome:
    epsilon: float
    mode: TomographyMode
    delta_t_max: float
    delta_f95: float
    seconds: float
    seed: int
    failed: bool = False
    failure_reason: str = ""


@dataclass(frozen=True)
class MetricStats:
    median: float
    q25: float
    q75: float


@dataclass
class PointSummary:
    point: GridPoint
    stats: dict
    trials: int
    failures: int
    outcomes: tuple

    @property
    def excessive_failures(self):
        return self.failures * 2 > self.trials


@dataclass
class BenchmarkReport:
    summaries: tuple
    trials: int
    fidelity_samples: int
    seed: int

    @property
    def any_excessive_failures(self):
        return any(s.excessive_failures for s in self.summaries)


def _substream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def run_trial(point, campaign_seed, point_index, trial_index, fidelity_samples):
    """One complete benchmark trial; only the reconstruct call is timed."""
    trial_seed = int(
        np.random.SeedSequence(
            campaign_seed, spawn_key=(point_index, trial_index)
        ).generate_state(1)[0]
    )
    model = random_model(
        point.n_modes,
        point.n_layers,
        point.gamma,
        _substream(campaign_seed, point_index, trial_index, 0),
    )
    plan = plan_measurements(point.n_modes, point.n_layers, point.block_size, point.mode)
    records = simulate_plan(
        model,
        plan,
        point.epsilon,
        np.random.SeedSequence(campaign_seed, spawn_key=(point_index, trial_index, 1)),
    )
    start = time.perf_counter()
    try:
        result = reconstruct(records, plan)
    except ReconstructionError as exc:
        return TrialOutcome(
            epsilon=point.epsilon,
            mode=point.mode,
            delta_t_max=float("nan"),
            delta_f95=float("nan"),
            seconds=time.perf_counter() - start,
            seed=trial_seed,
            failed=True,
            failure_reason=type(exc).__name__,
        )
    seconds = time.perf_counter() - start
    dt = delta_t_max(model, result.model_estimate)
    df = fidelity_percentile(
        model,
        result.model_estimate,
        fidelity_samples,
        _substream(campaign_seed, point_index, trial_index, 2),
    )
    return TrialOutcome(
        epsilon=point.epsilon,
        mode=point.mode,
        delta_t_max=dt,
        delta_f95=df,
        seconds=seconds,
        seed=trial_seed,
    )


def _summarize(point, outcomes):
    ok = [o for o in outcomes if not o.failed]
    stats = {}
    for metric in METRICS:
        values = [getattr(o, metric) for o in ok]
        if values:
            q25, median, q75 = np.percentile(values, [25.0, 50.0, 75.0])
            stats[metric] = MetricStats(float(median), float(q25), float(q75))
        else:
            nan = float("nan")
            stats[metric] = MetricStats(nan, nan, nan)
    return PointSummary(
        point=point,
        stats=stats,
        trials=len(outcomes),
        failures=len(outcomes) - len(ok),
        outcomes=tuple(outcomes),
    )


def run_campaign(spec):
    """Run every (grid point, trial) pair and aggregate medians/quartiles.

    Trials derive independent substreams from (seed, point, trial), so the
    statistics are identical for any thread count.
    """
    if not spec.points:
        raise ValueError("empty campaign grid")
    if spec.trials < 1:
        raise ValueError("need at least one trial")
    jobs = [
        (pi, ti) for pi in range(len(spec.points)) for ti in range(spec.trials)
    ]
    workers = spec.threads if spec.threads > 0 else (os.cpu_count() or 1)

    def _job(args):
        pi, ti = args
        return run_trial(spec.points[pi], spec.seed, pi, ti, spec.fidelity_samples)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_job, jobs))
    else:
        outcomes = [_job(j) for j in jobs]

    summaries = []
    for pi, point in enumerate(spec.points):
        chunk = outcomes[pi * spec.trials : (pi + 1) * spec.trials]
        summaries.append(_summarize(point, chunk))
    return BenchmarkReport(
        summaries=tuple(summaries),
        trials=spec.trials,
        fidelity_samples=spec.fidelity_samples,
        seed=spec.seed,
    )
