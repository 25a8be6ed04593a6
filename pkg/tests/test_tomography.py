import numpy as np
import pytest

from meshcal.errors import ZeroFirstColumnEntry
from meshcal.linalg import TWO_PI, wrap_phase
from meshcal.model import cumulative_matrix, random_model, transfer_matrix
from meshcal.tomography import (
    Configuration,
    TomographyMode,
    load_records,
    mode_blocks,
    plan_measurements,
    records_from_dict,
    records_to_dict,
    save_records,
    simulate_plan,
    simulate_tomography,
    strip_output_phases,
)

from .conftest import random_unitary

FULL = TomographyMode.FULL
INTENSITY = TomographyMode.INTENSITY


# --- planning -----------------------------------------------------------------

def test_plan_counts_full_single_block():
    assert plan_measurements(4, 4, 4, FULL).total == 4


def test_plan_counts_intensity_single_block():
    assert plan_measurements(4, 4, 4, INTENSITY).total == 7  # 2*4 - 1


def test_plan_counts_single_mode_blocks():
    plan = plan_measurements(3, 2, 1, FULL)
    assert plan.total == 4
    layer2 = [c for c in plan.configurations if c.layer_index == 2]
    assert [c.active_modes for c in layer2] == [(1,), (2,), (3,)]


@pytest.mark.parametrize("n,k,m", [(4, 4, 4), (10, 10, 10), (10, 10, 3), (7, 5, 2)])
def test_plan_count_formulas(n, k, m):
    blocks = int(np.ceil(n / m))
    assert plan_measurements(n, k, m, FULL).total == 1 + (k - 1) * blocks
    assert plan_measurements(n, k, m, INTENSITY).total == 1 + 2 * (k - 1) * blocks


def test_mode_blocks_partition():
    blocks = mode_blocks(10, 3)
    assert blocks == [(1, 2, 3), (4, 5, 6), (7, 8, 9), (10,)]
    flat = [m for b in blocks for m in b]
    assert flat == list(range(1, 11))


def test_plan_order_and_pairing():
    plan = plan_measurements(4, 3, 2, INTENSITY)
    configs = plan.configurations
    assert configs[0].layer_index == 0  # baseline first
    rest = configs[1:]
    for plain, conj in zip(rest[0::2], rest[1::2]):
        assert plain.layer_index == conj.layer_index
        assert plain.active_modes == conj.active_modes
        assert not plain.conjugate and conj.conjugate
    layers = [c.layer_index for c in rest]
    assert layers == sorted(layers)


def test_plan_is_pure():
    a = plan_measurements(5, 3, 2, FULL)
    b = plan_measurements(5, 3, 2, FULL)
    assert a == b


def test_configuration_phase_pattern_values():
    config = Configuration(5, 4, 3, (2, 4), False)
    pattern = config.phase_pattern
    assert pattern.shape == (5, 5)
    assert pattern[2, 1] == pytest.approx(TWO_PI / 3)
    assert pattern[2, 3] == pytest.approx(2 * TWO_PI / 3)
    mask = np.ones_like(pattern, dtype=bool)
    mask[2, [1, 3]] = False
    assert np.all(pattern[mask] == 0.0)


def test_conjugate_pattern_negated():
    plain = Configuration(5, 4, 3, (2, 4), False)
    conj = Configuration(5, 4, 3, (2, 4), True)
    total = wrap_phase(plain.phase_pattern + conj.phase_pattern)
    assert np.abs(np.minimum(total, TWO_PI - total)).max() < 1e-12


def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration(4, 3, 1, (1,))  # layer 1 carries no probe phases
    with pytest.raises(ValueError):
        Configuration(4, 3, 2, ())
    with pytest.raises(ValueError):
        Configuration(4, 3, 2, (1, 1))
    with pytest.raises(ValueError):
        Configuration(4, 3, 0, (1,))


# --- stripping ------------------------------------------------------------------

def test_strip_real_positive_column_is_fixed(rng):
    v = random_unitary(4, rng)
    v = np.exp(-1j * np.angle(v[:, 0]))[:, None] * v
    stripped, delta = strip_output_phases(v)
    assert np.abs(stripped - v).max() < 1e-12
    assert np.abs(np.exp(1j * delta) - 1.0).max() < 1e-12


def test_strip_is_canonical_form(rng):
    v = random_unitary(5, rng)
    d = np.exp(1j * rng.uniform(0, TWO_PI, 5))
    a, _ = strip_output_phases(v)
    b, _ = strip_output_phases(d[:, None] * v)
    assert np.abs(a - b).max() < 1e-12


def test_strip_idempotent_and_modulus_preserving(rng):
    for _ in range(100):
        v = random_unitary(4, rng)
        stripped, _ = strip_output_phases(v)
        assert np.all(stripped[:, 0].real >= 0.0)
        assert np.abs(stripped[:, 0].imag).max() < 1e-12
        assert np.abs(np.abs(stripped) - np.abs(v)).max() < 1e-12
        again, delta = strip_output_phases(stripped)
        assert np.abs(again - stripped).max() < 1e-12


def test_strip_zero_first_column_entry():
    v = np.eye(3, dtype=complex)[:, [1, 0, 2]]  # zero in the first column
    with pytest.raises(ZeroFirstColumnEntry):
        strip_output_phases(v)


# --- simulation -----------------------------------------------------------------

def test_simulate_noiseless_full(rng):
    v = random_unitary(5, rng)
    out = simulate_tomography(v, 0.0, 10, FULL, rng)
    assert np.abs(out - v).max() < 1e-12


def test_simulate_noiseless_intensity(rng):
    v = random_unitary(5, rng)
    out = simulate_tomography(v, 0.0, 10, INTENSITY, rng)
    expected, _ = strip_output_phases(v)
    assert np.abs(out - expected).max() < 1e-12


def test_simulate_noise_scale(rng):
    v = random_unitary(10, rng)
    dists = {}
    for eps in (1e-3, 2e-3):
        acc = 0.0
        for _ in range(200):
            acc += np.linalg.norm(simulate_tomography(v, eps, 19, FULL, rng) - v)
        dists[eps] = acc / 200
    ratio = dists[2e-3] / dists[1e-3]
    assert 1.6 < ratio < 2.4


def test_simulate_rejects_negative_epsilon(rng):
    v = random_unitary(3, rng)
    with pytest.raises(ValueError):
        simulate_tomography(v, -1.0, 5, FULL, rng)


def test_noiseless_records_match_cumulative_algebra(rng):
    # with eps = 0 every full-mode record is exactly C_m Phi C_m^{-1} C_1
    n, k = 4, 3
    model = random_model(n, k, 0.1, rng)
    plan = plan_measurements(n, k, n, FULL)
    records = simulate_plan(model, plan, 0.0, 7)
    c1 = cumulative_matrix(model, 1)
    assert np.abs(records[0].measured - c1).max() < 1e-10
    for rec in records[1:]:
        m = rec.configuration.layer_index
        cm = cumulative_matrix(model, m)
        phi = np.diag(np.exp(1j * rec.configuration.phase_pattern[m - 1]))
        expected = cm @ phi @ np.linalg.inv(cm) @ c1
        assert np.abs(rec.measured - expected).max() < 1e-9


def test_simulate_plan_deterministic(rng):
    model = random_model(4, 3, 0.1, rng)
    plan = plan_measurements(4, 3, 4, INTENSITY)
    a = simulate_plan(model, plan, 1e-3, 99)
    b = simulate_plan(model, plan, 1e-3, 99)
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.measured, rb.measured)


def test_intensity_records_are_stripped(rng):
    model = random_model(4, 3, 0.1, rng)
    plan = plan_measurements(4, 3, 4, INTENSITY)
    for rec in simulate_plan(model, plan, 1e-3, 1):
        assert np.all(rec.measured[:, 0].real >= 0.0)
        assert np.abs(rec.measured[:, 0].imag).max() < 1e-12


def test_records_serialization_round_trip(tmp_path, rng):
    model = random_model(4, 3, 0.1, rng)
    plan = plan_measurements(4, 3, 2, INTENSITY)
    records = simulate_plan(model, plan, 1e-3, 3)
    back = records_from_dict(records_to_dict(records))
    assert len(back) == len(records)
    for ra, rb in zip(records, back):
        assert ra.configuration == rb.configuration
        assert ra.mode is rb.mode
        assert np.array_equal(ra.measured, rb.measured)

    path = tmp_path / "records.json"
    save_records(records, path)
    loaded = load_records(path)
    for ra, rb in zip(records, loaded):
        assert np.array_equal(ra.measured, rb.measured)
