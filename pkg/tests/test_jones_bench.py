"""
Tests for the polarization I/Q receiver.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.errors import PolarizationError
from app.modules.jones_bench import (
    BenchParams,
    JonesField,
    JonesMatrix,
    Receiver,
    balanced_detect,
    closed_form_paths,
    hwp,
    pbs_matrices,
    propagate,
    qwp,
)
from app.modules.signal_core import TimeGrid

angles = st.floats(-np.pi, np.pi, allow_nan=False)
amplitudes = st.complex_numbers(max_magnitude=10.0, allow_nan=False, allow_infinity=False)


@pytest.fixture
def grid():
    return TimeGrid(sample_rate=1e3, num_samples=256)


@pytest.fixture
def fields(grid):
    rng = np.random.default_rng(5)
    s = rng.normal(size=256) + 1j * rng.normal(size=256)
    w = np.exp(2j * np.pi * 13 * np.arange(256) / 256) * 1.7
    return s, w


def test_jones_matrix_is_two_by_two():
    with pytest.raises(ValueError):
        JonesMatrix(np.eye(3))


@settings(max_examples=50)
@given(theta=angles)
def test_half_wave_plate_is_an_involution(theta):
    h = hwp(theta)
    np.testing.assert_allclose((h @ h).m, np.eye(2), atol=1e-12)
    assert h.is_unitary()


@settings(max_examples=50)
@given(eta=angles)
def test_normalized_quarter_wave_plate_is_unitary(eta):
    assert qwp(eta).is_unitary()


def test_published_quarter_wave_plate_is_not_unitary():
    q = qwp(np.pi / 4, normalized=False)
    assert not q.is_unitary()
    assert abs(q.m[0, 0]) == pytest.approx(1.0)
    defect = np.max(np.abs(q.dagger.m @ q.m - np.eye(2)))
    assert defect == pytest.approx(1.0)


def test_pbs_splits_polarizations():
    T, R = pbs_matrices(BenchParams())
    assert T.m[1, 1] == 0 and T.m[0, 1] == 0 and T.m[1, 0] == 0
    assert R.m[0, 0] == 0
    assert abs(T.m[0, 0]) == pytest.approx(1.0)
    assert abs(R.m[1, 1]) == pytest.approx(1.0)
    raw_t, _ = pbs_matrices(BenchParams(normalized=False))
    assert abs(raw_t.m[0, 0]) == pytest.approx(np.sqrt(0.5))


@settings(max_examples=40)
@given(s=amplitudes, w=amplitudes, normalized=st.booleans(), sigma=st.floats(0.0, 0.5))
def test_closed_forms_match_propagation(s, w, normalized, sigma):
    grid = TimeGrid(sample_rate=1.0, num_samples=1)
    p = BenchParams(sigma=sigma, normalized=normalized)
    signal = JonesField(np.array([s]), np.array([s]), grid)
    l1, l2, l3, l4 = propagate(signal, JonesField.horizontal_only(np.array([w]), grid), p)
    c1, c2, c3, c4 = closed_form_paths(np.array([s]), np.array([w]), p)
    scale = max(1.0, abs(s), abs(w)) ** 2
    assert l1.vertical[0] == pytest.approx(c1[0], abs=1e-12 * scale)
    assert l2.horizontal[0] == pytest.approx(c2[0], abs=1e-12 * scale)
    assert l3.horizontal[0] == pytest.approx(c3[0], abs=1e-12 * scale)
    assert l4.vertical[0] == pytest.approx(c4[0], abs=1e-12 * scale)
    assert l1.horizontal[0] == 0 and l2.vertical[0] == 0


def test_closed_forms_need_default_plate_angles():
    with pytest.raises(ValueError):
        closed_form_paths(np.zeros(1), np.zeros(1), BenchParams(theta1=0.3))


def test_detectors_give_the_complex_beat(grid, fields):
    s, w = fields
    iq = balanced_detect(*propagate(JonesField.linear45(s, grid), JonesField.horizontal_only(w, grid), BenchParams()))
    np.testing.assert_allclose(iq.i_samples + 1j * iq.q_samples, w * np.conj(s), atol=1e-12)


def test_pbs_loss_scales_the_beat(grid, fields):
    s, w = fields
    sigma = 0.1
    p = BenchParams(sigma=sigma)
    iq = balanced_detect(*propagate(JonesField.linear45(s, grid), JonesField.horizontal_only(w, grid), p))
    np.testing.assert_allclose(iq.i_samples + 1j * iq.q_samples, (1 - sigma) ** 4 * w * np.conj(s), atol=1e-12)


def test_lossless_bench_conserves_power(grid, fields):
    s, w = fields
    paths = propagate(JonesField.linear45(s, grid), JonesField.horizontal_only(w, grid), BenchParams())
    total = sum(path.power for path in paths)
    np.testing.assert_allclose(total, np.abs(w) ** 2 + np.abs(s) ** 2, rtol=1e-12)


def test_self_beat_cancels(grid, fields):
    s, _ = fields
    zero = np.zeros_like(s)
    iq = balanced_detect(*propagate(JonesField.linear45(s, grid), JonesField.horizontal_only(zero, grid), BenchParams()))
    np.testing.assert_allclose(iq.i_samples, 0.0, atol=1e-12)
    np.testing.assert_allclose(iq.q_samples, 0.0, atol=1e-12)


def test_rejects_wrong_launch_states(grid, fields):
    s, w = fields
    reference = JonesField.horizontal_only(w, grid)
    with pytest.raises(PolarizationError):
        propagate(JonesField(s, np.zeros_like(s), grid), reference, BenchParams())
    with pytest.raises(PolarizationError):
        propagate(JonesField.linear45(s, grid), JonesField(w, w, grid), BenchParams())
    other = TimeGrid(sample_rate=2e3, num_samples=256)
    with pytest.raises(PolarizationError):
        propagate(JonesField.linear45(s, other), reference, BenchParams())


def test_chunked_receiver_matches_a_single_pass(grid, fields):
    s, w = fields
    signal, reference = JonesField.linear45(s, grid), JonesField.horizontal_only(w, grid)
    whole = Receiver(BenchParams()).detect(signal, reference)
    chunked = Receiver(BenchParams(), chunk_size=37).detect(signal, reference)
    np.testing.assert_allclose(chunked.i_samples, whole.i_samples, atol=1e-12)
    np.testing.assert_allclose(chunked.q_samples, whole.q_samples, atol=1e-12)
    frame = chunked.to_frame()
    assert list(frame.columns) == ["t", "i", "q"]
    assert len(frame) == grid.num_samples


@pytest.mark.parametrize("kwargs", [{"sigma": 1.0}, {"sigma": -0.1}, {"t_amp": 0.0}, {"r_amp": 1.5}])
def test_bench_params_are_validated(kwargs):
    with pytest.raises(ValueError):
        BenchParams(**kwargs)


def test_bench_default_amplitudes_follow_loss():
    p = BenchParams(sigma=0.2)
    assert p.t_amp == pytest.approx(np.sqrt(0.5) * 0.8)
    assert p.r_amp == p.t_amp


def test_jones_fields_validate_shapes(grid):
    with pytest.raises(ValueError):
        JonesField(np.zeros(3), np.zeros(3), grid)
    a = JonesField.horizontal_only(np.ones(256), grid)
    with pytest.raises(ValueError):
        a + JonesField.horizontal_only(np.ones(256), TimeGrid(sample_rate=2e3, num_samples=256))


def test_quadrature_pair_rejects_the_image_band():
    n, k = 4096, 37
    grid = TimeGrid(sample_rate=1.0, num_samples=n)
    s = np.full(n, 0.8 * np.exp(0.3j))
    w = np.exp(2j * np.pi * k * np.arange(n) / n)
    iq = balanced_detect(*propagate(JonesField.linear45(s, grid), JonesField.horizontal_only(w, grid), BenchParams()))
    i_bin = np.fft.fft(iq.i_samples)[k]
    q_bin = np.fft.fft(iq.q_samples)[k]
    assert np.angle(i_bin / q_bin) == pytest.approx(np.pi / 2, abs=1e-6)
    beat = np.fft.fft(iq.i_samples + 1j * iq.q_samples)
    assert 20 * np.log10(np.abs(beat[k]) / max(np.abs(beat[-k]), 1e-300)) > 60
