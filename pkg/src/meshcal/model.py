"""Interferometer architecture: static N-port mixers alternating with phase layers.

The device is V = P_{K+1} U_K P_K ... P_2 U_1 P_1, where U_k are static
N x N unitaries and P_k = diag(exp(i*phi)) are the programmable phase layers.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, RankDeficient
from .linalg import TWO_PI, project_unitary

UNITARITY_TOL = 1e-10


def _locked(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def _unitarity_defect(u):
    n = u.shape[0]
    return float(np.abs(u.conj().T @ u - np.eye(n)).max())


@dataclass(frozen=True)
class InterferometerModel:
    """K mixing-layer unitaries of an N-mode mesh; immutable after construction."""

    n_modes: int
    n_layers: int
    layers: tuple

    def __post_init__(self):
        if self.n_modes < 1 or self.n_layers < 1:
            raise ValueError("n_modes and n_layers must be positive")
        if len(self.layers) != self.n_layers:
            raise DimensionMismatch(
                f"expected {self.n_layers} layers, got {len(self.layers)}"
            )
        locked = []
        for k, layer in enumerate(self.layers):
            u = _locked(layer)
            if u.shape != (self.n_modes, self.n_modes):
                raise DimensionMismatch(f"layer {k + 1} has shape {u.shape}")
            if _unitarity_defect(u) > UNITARITY_TOL:
                raise ValueError(f"layer {k + 1} is not unitary within tolerance")
            locked.append(u)
        object.__setattr__(self, "layers", tuple(locked))


def zero_phases(n_modes, n_layers):
    """The all-zero phase configuration, shape (K+1, N)."""
    return np.zeros((n_layers + 1, n_modes))


def random_phases(n_modes, n_layers, rng):
    """Every phase of every phase layer uniform on [0, 2*pi)."""
    return rng.uniform(0.0, TWO_PI, size=(n_layers + 1, n_modes))


def transfer_matrix(model, phases):
    """End-to-end transfer matrix for the given phase configuration."""
    phases = np.asarray(phases, dtype=float)
    expected = (model.n_layers + 1, model.n_modes)
    if phases.shape != expected:
        raise DimensionMismatch(
            f"phase configuration shape {phases.shape}, expected {expected}"
        )
    if not np.all(np.isfinite(phases)):
        raise ValueError("phases must be finite")
    v = np.diag(np.exp(1j * phases[0]))
    for k, u in enumerate(model.layers):
        v = np.exp(1j * phases[k + 1])[:, None] * (u @ v)
    return v


def cumulative_matrix(model, m):
    """Product U_K ... U_m of mixing layers from layer m to the output."""
    if not 1 <= m <= model.n_layers:
        raise IndexOutOfRange(f"layer index {m} outside 1..{model.n_layers}")
    c = np.eye(model.n_modes, dtype=complex)
    for u in model.layers[m - 1:]:
        c = u @ c
    return c


def standard_mixer(n_modes):
    """Reference mixing unitary: Sylvester-Hadamard when N is a power of
    two, the unitary DFT matrix otherwise."""
    if n_modes < 2:
        raise ValueError("need at least 2 modes")
    if n_modes & (n_modes - 1) == 0:
        h = np.array([[1.0]])
        base = np.array([[1.0, 1.0], [1.0, -1.0]])
        while h.shape[0] < n_modes:
            h = np.kron(base, h)
        return h.astype(complex) / np.sqrt(n_modes)
    j = np.arange(n_modes)
    return np.exp(2j * np.pi * np.outer(j, j) / n_modes) / np.sqrt(n_modes)


def mixer_kind(n_modes):
    """Name of the mixer family used for the given mode count (run metadata)."""
    return "sylvester-hadamard" if n_modes & (n_modes - 1) == 0 else "dft"


def random_model(n_modes, n_layers, gamma, rng):
    """Ground-truth device with manufacturing error gamma.

    Each layer is drawn independently as the unitary projection of
    mixer + gamma * G, with G complex Ginibre (real and imaginary parts
    each standard normal). Deterministic given the generator state.
    """
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    base = standard_mixer(n_modes)
    layers = []
    for _ in range(n_layers):
        u = None
        for _attempt in range(3):
            g = rng.standard_normal((n_modes, n_modes)) + 1j * rng.standard_normal(
                (n_modes, n_modes)
            )
            try:
                u = project_unitary(base + gamma * g)
                break
            except RankDeficient:
                continue
        if u is None:
            raise RankDeficient("repeated degenerate Ginibre draws")
        layers.append(u)
    return InterferometerModel(n_modes, n_layers, tuple(layers))


# --- serialization ----------------------------------------------------------

def matrix_to_pairs(a):
    """Row-major nesting of [re, im] pairs."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a)]


def matrix_from_pairs(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def model_to_dict(model):
    return {
        "N": model.n_modes,
        "K": model.n_layers,
        "layers": [matrix_to_pairs(u) for u in model.layers],
    }


def model_from_dict(doc):
    layers = tuple(matrix_from_pairs(rows) for rows in doc["layers"])
    return InterferometerModel(int(doc["N"]), int(doc["K"]), layers)


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
