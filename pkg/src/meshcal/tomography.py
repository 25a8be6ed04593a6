"""Measurement planning and the simulated tomography oracle.

A plan lists the phase configurations to program; the oracle returns the
corresponding transfer matrices with tomography noise, optionally with the
output phases stripped (intensity-only measurements).
"""

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import ZeroFirstColumnEntry
from .linalg import TWO_PI, project_unitary, wrap_phase
from .model import matrix_from_pairs, matrix_to_pairs, transfer_matrix

BASELINE_LAYER = 0


class TomographyMode(str, Enum):
    FULL = "full"
    INTENSITY = "intensity"


@dataclass(frozen=True)
class Configuration:
    """One interferometer setting: phases on a single layer's active modes.

    ``layer_index`` 0 is the all-zero baseline. Active modes carry phases
    2*pi*r/(M'+1) by rank r within the active set, negated for the
    conjugate configuration.
    """

    n_modes: int
    n_layers: int
    layer_index: int
    active_modes: tuple = ()
    conjugate: bool = False

    def __post_init__(self):
        if self.layer_index == BASELINE_LAYER:
            if self.active_modes or self.conjugate:
                raise ValueError("baseline configuration takes no active modes")
            return
        if not 2 <= self.layer_index <= self.n_layers:
            raise ValueError(f"layer_index {self.layer_index} outside 2..{self.n_layers}")
        if not self.active_modes:
            raise ValueError("non-baseline configuration needs active modes")
        if len(set(self.active_modes)) != len(self.active_modes):
            raise ValueError("active modes must be distinct")
        if min(self.active_modes) < 1 or max(self.active_modes) > self.n_modes:
            raise ValueError("active mode index outside 1..N")

    @cached_property
    def phase_pattern(self):
        pattern = np.zeros((self.n_layers + 1, self.n_modes))
        if self.layer_index != BASELINE_LAYER:
            mprime = len(self.active_modes)
            for rank, mode in enumerate(self.active_modes, start=1):
                phi = TWO_PI * rank / (mprime + 1)
                pattern[self.layer_index - 1, mode - 1] = -phi if self.conjugate else phi
        pattern = wrap_phase(pattern)
        pattern.flags.writeable = False
        return pattern


@dataclass(frozen=True)
class MeasurementPlan:
    n_modes: int
    n_layers: int
    block_size: int
    mode: TomographyMode
    configurations: tuple

    @property
    def total(self):
        """Total configuration count L, entering the noise scale."""
        return len(self.configurations)


def mode_blocks(n_modes, block_size):
    """Contiguous partition of 1..N into ceil(N/M) blocks."""
    return [
        tuple(range(start + 1, min(start + block_size, n_modes) + 1))
        for start in range(0, n_modes, block_size)
    ]


def plan_measurements(n_modes, n_layers, block_size, mode):
    """Baseline first, then (layer, block[, conjugate]) in lexicographic order."""
    if not 1 <= block_size <= n_modes:
        raise ValueError(f"block_size {block_size} outside 1..{n_modes}")
    if n_layers < 1:
        raise ValueError("need at least one mixing layer")
    mode = TomographyMode(mode)
    configs = [Configuration(n_modes, n_layers, BASELINE_LAYER)]
    for m in range(2, n_layers + 1):
        for block in mode_blocks(n_modes, block_size):
            configs.append(Configuration(n_modes, n_layers, m, block, False))
            if mode is TomographyMode.INTENSITY:
                configs.append(Configuration(n_modes, n_layers, m, block, True))
    return MeasurementPlan(n_modes, n_layers, block_size, mode, tuple(configs))


def strip_output_phases(v, tol=1e-12):
    """Canonical intensity-only form: rotate rows so the first column is
    real nonnegative. Returns (stripped, applied phases)."""
    v = np.asarray(v, dtype=complex)
    col = v[:, 0]
    if np.abs(col).min() < tol:
        raise ZeroFirstColumnEntry("first-column entry below tolerance")
    delta = wrap_phase(-np.angle(col))
    return np.exp(1j * delta)[:, None] * v, delta


def simulate_tomography(v_true, epsilon, total, mode, rng):
    """Noisy tomography of one transfer matrix.

    Applies the unitary projection of v + epsilon*sqrt(L)*G with G complex
    Ginibre; in intensity mode the output phases are stripped afterwards.
    """
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    v = np.asarray(v_true, dtype=complex)
    n = v.shape[0]
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    measured = project_unitary(v + epsilon * np.sqrt(total) * g)
    if TomographyMode(mode) is TomographyMode.INTENSITY:
        measured, _ = strip_output_phases(measured)
    return measured


@dataclass(frozen=True)
class TomographyRecord:
    configuration: Configuration
    measured: np.ndarray
    mode: TomographyMode
    seed: int | None = None

    def __post_init__(self):
        m = np.array(self.measured, dtype=complex)
        m.flags.writeable = False
        object.__setattr__(self, "measured", m)


def simulate_plan(model, plan, epsilon, seed):
    """Measure every configuration of a plan with independent noise substreams.

    ``seed`` may be an integer or a ``numpy.random.SeedSequence``; each
    record gets its own spawned child stream, so results do not depend on
    evaluation order.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(plan.total)
    records = []
    for config, child in zip(plan.configurations, children):
        v = transfer_matrix(model, config.phase_pattern)
        measured = simulate_tomography(v, epsilon, plan.total, plan.mode, np.random.default_rng(child))
        records.append(
            TomographyRecord(config, measured, plan.mode, seed=int(child.generate_state(1)[0]))
        )
    return records


# --- serialization ----------------------------------------------------------

def records_to_dict(records):
    return {
        "records": [
            {
                "n_modes": rec.configuration.n_modes,
                "n_layers": rec.configuration.n_layers,
                "m": rec.configuration.layer_index,
                "active_modes": list(rec.configuration.active_modes),
                "conjugate": rec.configuration.conjugate,
                "mode": rec.mode.value,
                "seed": rec.seed,
                "matrix": matrix_to_pairs(rec.measured),
            }
            for rec in records
        ]
    }


def records_from_dict(doc):
    records = []
    for item in doc["records"]:
        config = Configuration(
            int(item["n_modes"]),
            int(item["n_layers"]),
            int(item["m"]),
            tuple(item["active_modes"]),
            bool(item["conjugate"]),
        )
        records.append(
            TomographyRecord(
                config,
                matrix_from_pairs(item["matrix"]),
                TomographyMode(item["mode"]),
                seed=item.get("seed"),
            )
        )
    return records


def save_records(records, path):
    with open(path, "w") as fh:
        json.dump(records_to_dict(records), fh)


def load_records(path):
    with open(path) as fh:
        return records_from_dict(json.load(fh))
