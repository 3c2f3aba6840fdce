"""
Tests for the laser phase-noise model.
"""

import numpy as np
import pytest

from app.modules.laser_model import LaserParams, PhaseTrack, apply_phase, jitter_phase, synthesize_phase
from app.modules.signal_core import ComplexEnvelope, TimeGrid, make_grid


@pytest.fixture
def grid():
    return make_grid(1e6, 1e-2, centered=False)


def test_ideal_laser_has_zero_phase(grid):
    params = LaserParams()
    assert params.is_ideal
    track = synthesize_phase(params, grid)
    assert np.all(track.phase == 0.0)


def test_jitter_peaks_at_half_period():
    f_a = 1e3
    t = np.linspace(0.0, 2e-3, 2001)
    phase = jitter_phase(1e3, f_a, t)
    assert phase.max() == pytest.approx(2.0, rel=1e-9)
    assert t[np.argmax(phase)] == pytest.approx(1 / (2 * f_a))
    # oscillation amplitude A_F / f_a around its mean
    assert (phase.max() - phase.min()) / 2 == pytest.approx(1.0, rel=1e-9)


def test_jitter_is_zero_without_amplitude_or_frequency():
    t = np.linspace(0.0, 1.0, 11)
    assert np.all(jitter_phase(0.0, 1e3, t) == 0)
    assert np.all(jitter_phase(1e3, 0.0, t) == 0)


def test_same_seed_same_track(grid):
    params = LaserParams(sigma_fb=1e3, sigma_phic=0.1, seed=11)
    a = synthesize_phase(params, grid)
    b = synthesize_phase(params, grid)
    np.testing.assert_array_equal(a.phase, b.phase)


def test_pulses_draw_from_their_own_seed(grid):
    params = LaserParams(sigma_phic=0.1, seed=5)
    assert params.for_pulse(3).seed == 8
    a = synthesize_phase(params.for_pulse(0), grid)
    b = synthesize_phase(params.for_pulse(1), grid)
    assert not np.array_equal(a.phase, b.phase)


def test_white_phase_has_the_requested_spread(grid):
    track = synthesize_phase(LaserParams(sigma_phic=0.2, seed=1), grid)
    assert np.std(track.phase) == pytest.approx(0.2, rel=0.02)


def test_random_frequency_term_has_the_requested_spread(grid):
    track = synthesize_phase(LaserParams(sigma_fb=1e4, seed=2), grid)
    increments = np.diff(track.phase) * grid.sample_rate / (2 * np.pi)
    assert np.std(increments) == pytest.approx(1e4, rel=0.02)


def test_negative_parameters_are_rejected():
    with pytest.raises(ValueError):
        LaserParams(sigma_phic=-1.0)


def test_apply_phase_multiplies_by_unit_phasor(grid):
    env = ComplexEnvelope(grid, np.full(grid.num_samples, 2.0 + 0j))
    track = PhaseTrack(grid, np.full(grid.num_samples, np.pi / 2))
    out = apply_phase(env, track)
    np.testing.assert_allclose(out.samples, 2j, atol=1e-12)


def test_apply_phase_needs_matching_grids(grid):
    other = TimeGrid(sample_rate=1e6, num_samples=10)
    with pytest.raises(ValueError):
        apply_phase(ComplexEnvelope(other, np.ones(10)), PhaseTrack(grid, np.zeros(grid.num_samples)))


def test_phase_track_validates_shape(grid):
    with pytest.raises(ValueError):
        PhaseTrack(grid, np.zeros(3))
