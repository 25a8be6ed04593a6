"""Dense complex-matrix primitives used throughout the reconstruction.

Everything here is a pure function of its arguments; no global state.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    BranchCut,
    DisconnectedSupport,
    RankDeficient,
    SortingAmbiguity,
)

TWO_PI = 2.0 * np.pi


def _check_square(a):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")


def wrap_phase(angles):
    """Reduce angles to the canonical interval [0, 2*pi)."""
    w = np.mod(np.asarray(angles, dtype=float), TWO_PI)
    # np.mod can round a tiny negative input up to exactly 2*pi
    return np.where(w >= TWO_PI, 0.0, w)


def circular_distance(a, b):
    """Distance on the circle: min over k of |a - b + 2*pi*k|, in [0, pi]."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), TWO_PI)
    return np.where(d > np.pi, TWO_PI - d, d)


def project_unitary(a, rank_tol=1e-12):
    """Frobenius-nearest unitary (polar factor) of a full-rank square matrix.

    All singular values are replaced by one, which for full-rank input is
    the unique minimizer of ||a - U|| over unitary U.
    """
    a = np.asarray(a, dtype=complex)
    _check_square(a)
    u, s, vh = np.linalg.svd(a)
    if s[-1] <= rank_tol * s[0]:
        raise RankDeficient(
            f"singular value ratio {s[-1] / s[0]:.3e} below {rank_tol:.0e}"
        )
    return u @ vh


def principal_sqrt(a, branch_tol=1e-10):
    """Principal matrix square root via eigendecomposition.

    Requires every eigenvalue to stay clear of the closed negative real
    axis, where the principal branch of the scalar square root breaks.
    """
    a = np.asarray(a, dtype=complex)
    _check_square(a)
    w, v = np.linalg.eig(a)
    axis_dist = np.where(w.real > 0.0, np.abs(w), np.abs(w.imag))
    if np.any(axis_dist < branch_tol):
        raise BranchCut(
            f"eigenvalue within {branch_tol:.0e} of the negative real axis"
        )
    return (v * np.sqrt(w)) @ np.linalg.inv(v)


def matrix_geometric_mean(a, b):
    """Binary matrix geometric mean a @ (a^-1 b)^(1/2)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_square(a)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    try:
        q = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient("left factor is singular") from exc
    return a @ principal_sqrt(q)


def gauge_fix_columns(block):
    """Normalize each column to unit norm, largest-modulus entry real positive."""
    block = np.array(block, dtype=complex)
    for j in range(block.shape[1]):
        col = block[:, j]
        nrm = np.linalg.norm(col)
        if nrm == 0.0:
            raise RankDeficient(f"column {j} is zero")
        col = col / nrm
        pivot = int(np.argmax(np.abs(col)))
        block[:, j] = col * np.exp(-1j * np.angle(col[pivot]))
    return block


@dataclass(frozen=True)
class EigensortDiagnostics:
    """Matching quality of the eigenvalue-phase assignment."""

    distances: np.ndarray
    worst_distance: float


def default_sort_tolerance(n_targets):
    """Quarter of the target-phase spacing 2*pi/(M+1)."""
    return 0.25 * TWO_PI / (n_targets + 1)


def phase_sorted_eigencolumns(x, targets, eps_sort=None):
    """Eigenvectors of ``x`` matched to target eigenvalue phases.

    Parameters
    ----------
    x : array_like
        Square diagonalizable matrix.
    targets : sequence of (mode_index, target_phase)
        Requested columns; phases must be mutually distinct, and (unless
        all modes are targeted) well separated from the zero-phase cluster.
    eps_sort : float, optional
        Ambiguity tolerance; two eigenvalues within this circular distance
        of the same target and of each other raise :class:`SortingAmbiguity`.

    Returns
    -------
    (block, diagnostics)
        Gauge-fixed eigenvector columns, one per target, and the matched
        circular distances.
    """
    x = np.asarray(x, dtype=complex)
    _check_square(x)
    n = x.shape[0]
    m = len(targets)
    if not 1 <= m <= n:
        raise ValueError(f"need 1..{n} targets, got {m}")
    tphases = wrap_phase([phi for _, phi in targets])
    if eps_sort is None:
        eps_sort = default_sort_tolerance(m)
    pairwise = circular_distance(tphases[:, None], tphases[None, :])
    np.fill_diagonal(pairwise, np.inf)
    if pairwise.min() <= 0.0:
        raise ValueError("target phases must be mutually distinct")
    if m < n and np.any(circular_distance(tphases, 0.0) <= eps_sort):
        raise ValueError("target phase too close to the zero-phase cluster")

    w, vecs = np.linalg.eig(x)
    eigphases = wrap_phase(np.angle(w))
    cost = circular_distance(tphases[:, None], eigphases[None, :])
    for i in range(m):
        close = np.flatnonzero(cost[i] <= eps_sort)
        if close.size >= 2:
            mutual = circular_distance(
                eigphases[close][:, None], eigphases[close][None, :]
            )
            np.fill_diagonal(mutual, np.inf)
            if mutual.min() <= eps_sort:
                raise SortingAmbiguity(
                    f"two eigenvalues within {eps_sort:.3e} of target {i}"
                )
    rows, cols = linear_sum_assignment(cost)
    dists = cost[rows, cols]
    block = gauge_fix_columns(vecs[:, cols])
    return block, EigensortDiagnostics(
        distances=dists, worst_distance=float(dists.max())
    )


def rank1_phase_factor(r, weights, weight_tol=1e-8):
    """Solve arg(r_pq) = u_p + v_q in the weighted least-squares sense.

    Entries of ``r`` are normalized to unit modulus and scaled by their
    weights (entries below ``weight_tol`` of the maximum weight are
    dropped); the leading singular vector pair of the result carries the
    two phase vectors. The global phase is fixed by u[0] = 0.
    """
    r = np.asarray(r, dtype=complex)
    w = np.asarray(weights, dtype=float)
    _check_square(r)
    if w.shape != r.shape:
        raise ValueError(f"weights shape {w.shape} does not match {r.shape}")
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    wmax = w.max()
    if wmax <= 0.0:
        raise DisconnectedSupport("all weights vanish")
    support = (w > weight_tol * wmax) & (np.abs(r) > 0.0)
    if not (support.any(axis=1).all() and support.any(axis=0).all()):
        raise DisconnectedSupport("a row or column has no supported entry")
    n = r.shape[0]
    rows, cols = np.nonzero(support)
    adj = csr_matrix(
        (np.ones(rows.size), (rows, cols + n)), shape=(2 * n, 2 * n)
    )
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp > 1:
        raise DisconnectedSupport("support graph is disconnected")

    m = np.zeros_like(r)
    m[support] = w[support] * r[support] / np.abs(r[support])
    u_, _, vh_ = np.linalg.svd(m)
    left = np.angle(u_[:, 0])
    right = np.angle(vh_[0, :])
    return wrap_phase(left - left[0]), wrap_phase(right + left[0])


def rank1_phase_residual(r, weights, u, v, weight_tol=1e-8):
    """Weighted residual of the rank-1 phase model over the supported entries."""
    r = np.asarray(r, dtype=complex)
    w = np.asarray(weights, dtype=float)
    support = (w > weight_tol * w.max()) & (np.abs(r) > 0.0)
    unit = np.zeros_like(r)
    unit[support] = r[support] / np.abs(r[support])
    fitted = np.exp(1j * (np.asarray(u)[:, None] + np.asarray(v)[None, :]))
    diff = np.where(support, w * (unit - fitted), 0.0)
    return float(np.linalg.norm(diff) / np.linalg.norm(np.where(support, w, 0.0)))
