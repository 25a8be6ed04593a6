"""The two mixing-layer reconstruction algorithms.

Full mode solves V_m C_1^{-1} = C_m Phi C_m^{-1} by eigendecomposition.
Intensity mode first recovers the unknown output-phase diagonals from the
pair of plain/conjugate configurations, then eigen-solves both de-phased
similarity matrices and combines the two estimates.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CombinationDivergence, PlanMismatch, RankDeficient
from .linalg import (
    TWO_PI,
    circular_distance,
    gauge_fix_columns,
    matrix_geometric_mean,
    phase_sorted_eigencolumns,
    project_unitary,
    rank1_phase_factor,
    rank1_phase_residual,
    wrap_phase,
)
from .model import InterferometerModel
from .tomography import TomographyMode

MAX_CONDITION = 1e8


@dataclass(frozen=True)
class CumulativeEstimate:
    """Estimated cumulative matrix C_m with its gauge convention.

    Eigenvector-derived estimates carry a per-column unit-modulus gauge
    freedom, fixed by the unit-norm / real-positive-pivot convention. The
    baseline (m = 1) is measured directly and kept as-is.
    """

    layer_index: int
    matrix: np.ndarray
    gauge_note: str
    condition_number: float

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


@dataclass
class LayerDiagnostics:
    layer_index: int
    eigensort_worst: float = 0.0
    phase_residual: float = 0.0
    combination_disagreement: float = 0.0
    projection_residual: float = 0.0
    condition_number: float = 1.0


@dataclass(frozen=True)
class ReconstructionResult:
    model_estimate: InterferometerModel
    cumulative_estimates: tuple
    diagnostics: tuple
    mode: TomographyMode


def _config_targets(config):
    """(zero-based column, target phase) per active mode; phases are the
    plain (non-conjugate) values, which is what both similarity matrices carry."""
    mprime = len(config.active_modes)
    return [
        (mode - 1, TWO_PI * rank / (mprime + 1))
        for rank, mode in enumerate(config.active_modes, start=1)
    ]


def _inv(a, what):
    try:
        return np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient(f"{what} is singular") from exc


def solve_cumulative_full(v_m_meas, c1_meas, config):
    """Column block of C_m from one full-tomography configuration."""
    x = np.asarray(v_m_meas, dtype=complex) @ _inv(c1_meas, "baseline matrix")
    return phase_sorted_eigencolumns(x, _config_targets(config))


def recover_relative_phases(x, y):
    """Output-phase diagonals relating the two intensity-mode equations.

    Solves arg(x_pq) = u_p + arg(y_pq) + v_q over the joint support with
    uniform weights; the global phase follows the u[0] = 0 convention.
    Modulus weighting would average the phase noise below the single-layer
    level and invert the expected accuracy ordering of the two modes, so
    every supported entry votes equally.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    weights = (np.abs(x) * np.abs(y) > 0.0).astype(float)
    ratio = np.zeros_like(x)
    ok = np.abs(y) > 0.0
    ratio[ok] = x[ok] / y[ok]
    u, v = rank1_phase_factor(ratio, weights)
    return u, v


def _global_phase_correction(z, config, n_modes):
    """Residual global phase left by the u[0] = 0 convention.

    The de-phased similarity matrix equals exp(-ic) * C Phi C^{-1} for an
    unknown c. Since the trace of Phi^(M'+1) is exactly N, the sum of the
    (M'+1)-th powers of the unit-normalized eigenvalues pins c modulo
    2*pi/(M'+1); the remaining candidate is picked by matching the
    eigenvalue phases to the known phase multiset.
    """
    mprime = len(config.active_modes)
    p = mprime + 1
    full_targets = np.zeros(n_modes)
    for rank, mode in enumerate(config.active_modes, start=1):
        full_targets[mode - 1] = TWO_PI * rank / p
    w = np.linalg.eigvals(z)
    theta = np.angle(w)
    c0 = -np.angle(np.sum(np.exp(1j * p * theta))) / p
    best_cost, best_c = np.inf, 0.0
    for t in range(p):
        c = c0 + TWO_PI * t / p
        cost_matrix = circular_distance(
            wrap_phase(theta + c)[:, None], full_targets[None, :]
        )
        rows, cols = linear_sum_assignment(cost_matrix)
        cost = float(cost_matrix[rows, cols].sum())
        if cost < best_cost:
            best_cost, best_c = cost, c
    return best_c


@dataclass(frozen=True)
class IntensityBlockInfo:
    eigensort_worst: float
    phase_residual: float
    combination_disagreement: float


def solve_cumulative_intensity(
    vm_stripped, vmc_stripped, c1_stripped, config, divergence_tol=0.5
):
    """Column block of the dressed cumulative matrix from a plain/conjugate pair.

    Builds X = V_m~ C_1~^{-1} and Y = C_1~ (V_m^c~)^{-1}, recovers the
    relative output phases from X = D Y D', eigen-solves both de-phased
    matrices and combines the two gauge-fixed estimates (matrix geometric
    mean for a full block, column-wise mean otherwise).
    """
    vm = np.asarray(vm_stripped, dtype=complex)
    vmc = np.asarray(vmc_stripped, dtype=complex)
    c1 = np.asarray(c1_stripped, dtype=complex)
    n = c1.shape[0]
    x = vm @ _inv(c1, "baseline matrix")
    y = c1 @ _inv(vmc, "conjugate measurement")
    delta_vm, delta_vmc = recover_relative_phases(x, y)
    ratio = np.where(np.abs(y) > 0.0, x / np.where(np.abs(y) > 0.0, y, 1.0), 0.0)
    support = (np.abs(x) * np.abs(y) > 0.0).astype(float)
    phase_residual = rank1_phase_residual(ratio, support, delta_vm, delta_vmc)
    zx = np.exp(-1j * delta_vm)[:, None] * x
    zy = y * np.exp(1j * delta_vmc)[None, :]
    # The u[0] = 0 convention leaves one residual global phase shared by
    # both de-phased matrices, so estimate it once and apply it to both.
    c = _global_phase_correction(0.5 * (zx + zy), config, n)
    zx = zx * np.exp(1j * c)
    zy = zy * np.exp(1j * c)
    disagreement = float(np.linalg.norm(zx - zy))
    targets = _config_targets(config)
    bx, dx = phase_sorted_eigencolumns(zx, targets)
    by, dy = phase_sorted_eigencolumns(zy, targets)
    # The pivot convention is unstable when column entries have near-equal
    # moduli; align the Y-estimate's residual column phases to the X one.
    overlap = np.sum(np.conj(by) * bx, axis=0)
    by = by * np.exp(1j * np.angle(overlap))[None, :]
    # Disagreement is measured relative to the block norm sqrt(M') so the
    # threshold means the same thing for any block size.
    divergence = float(np.linalg.norm(bx - by)) / np.sqrt(len(targets))
    if divergence > divergence_tol:
        raise CombinationDivergence(f"estimates disagree by {divergence:.3e}")
    if len(config.active_modes) == n:
        combined = gauge_fix_columns(matrix_geometric_mean(bx, by))
    else:
        combined = gauge_fix_columns(0.5 * (bx + by))
    info = IntensityBlockInfo(
        eigensort_worst=max(dx.worst_distance, dy.worst_distance),
        phase_residual=phase_residual,
        combination_disagreement=disagreement,
    )
    return combined, info


def extract_mixing_layers(cumulatives):
    """Mixing layers from cumulative estimates: U_m = P[C_{m+1}^{-1} C_m],
    U_K = P[C_K]."""
    cums = sorted(cumulatives, key=lambda c: c.layer_index)
    if [c.layer_index for c in cums] != list(range(1, len(cums) + 1)):
        raise PlanMismatch("cumulative estimates must cover layers 1..K")
    mats = [c.matrix for c in cums]
    layers = []
    for m in range(len(mats) - 1):
        try:
            q = np.linalg.solve(mats[m + 1], mats[m])
        except np.linalg.LinAlgError as exc:
            raise RankDeficient(f"cumulative estimate {m + 2} is singular") from exc
        layers.append(project_unitary(q))
    layers.append(project_unitary(mats[-1]))
    return layers


def reconstruct(records, plan):
    """Run the full pipeline of the mode encoded in the plan.

    Any block-level failure aborts the whole reconstruction; no partial
    models are returned.
    """
    if len(records) != plan.total:
        raise PlanMismatch(f"{len(records)} records for {plan.total} configurations")
    for rec, config in zip(records, plan.configurations):
        if rec.configuration != config or TomographyMode(rec.mode) is not plan.mode:
            raise PlanMismatch("record does not match its planned configuration")

    n, k = plan.n_modes, plan.n_layers
    baseline_raw = records[0].measured
    c1 = project_unitary(baseline_raw)
    diag1 = LayerDiagnostics(
        layer_index=1,
        projection_residual=float(np.linalg.norm(c1 - baseline_raw)),
        condition_number=float(np.linalg.cond(baseline_raw)),
    )
    cums = [CumulativeEstimate(1, c1, "as-measured", diag1.condition_number)]
    diags = [diag1]

    by_key = {
        (r.configuration.layer_index, r.configuration.active_modes, r.configuration.conjugate): r
        for r in records
    }
    blocks = []
    for config in plan.configurations:
        if config.layer_index == 2 and not config.conjugate:
            blocks.append(config.active_modes)

    for m in range(2, k + 1):
        cm = np.zeros((n, n), dtype=complex)
        ld = LayerDiagnostics(layer_index=m)
        for block in blocks:
            rec = by_key[(m, block, False)]
            if plan.mode is TomographyMode.FULL:
                cols, dg = solve_cumulative_full(rec.measured, c1, rec.configuration)
                ld.eigensort_worst = max(ld.eigensort_worst, dg.worst_distance)
            else:
                rec_c = by_key[(m, block, True)]
                cols, info = solve_cumulative_intensity(
                    rec.measured, rec_c.measured, c1, rec.configuration
                )
                ld.eigensort_worst = max(ld.eigensort_worst, info.eigensort_worst)
                ld.phase_residual = max(ld.phase_residual, info.phase_residual)
                ld.combination_disagreement = max(
                    ld.combination_disagreement, info.combination_disagreement
                )
            cm[:, np.array(block) - 1] = cols
        condition = float(np.linalg.cond(cm))
        if not np.isfinite(condition) or condition > MAX_CONDITION:
            raise RankDeficient(
                f"cumulative estimate {m} has condition number {condition:.3e}"
            )
        projected = project_unitary(cm)
        ld.projection_residual = float(np.linalg.norm(projected - cm))
        ld.condition_number = condition
        cums.append(
            CumulativeEstimate(m, gauge_fix_columns(projected), "eigencolumns", condition)
        )
        diags.append(ld)

    layers = extract_mixing_layers(cums)
    model = InterferometerModel(n, k, tuple(layers))
    return ReconstructionResult(model, tuple(cums), tuple(diags), plan.mode)
