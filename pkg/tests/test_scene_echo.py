"""
Tests for the strip-map geometry and the echo/reference synthesis.
"""

import numpy as np
import pytest
from scipy import constants

from app.modules.scene_echo import (
    PointTarget,
    PulseSet,
    SceneGeometry,
    beam_weight,
    echo_samples,
    slant_range,
    synthesize_echo,
    synthesize_reference,
    synthesize_scene_echo,
)
from app.modules.signal_core import ComplexEnvelope, TimeGrid


@pytest.fixture
def geometry():
    return SceneGeometry()


@pytest.fixture
def tone():
    grid = TimeGrid(sample_rate=1e9, num_samples=100)
    return ComplexEnvelope(grid, np.ones(100, dtype=complex))


def _offset_for_delay(tau):
    return tau * constants.c / 2


def test_reference_geometry(geometry):
    assert geometry.footprint == pytest.approx(1.0)
    assert geometry.aperture_time == pytest.approx(0.02)
    assert geometry.pulse_count == 400
    assert geometry.azimuth_rate() == pytest.approx(322580.6, rel=1e-6)
    assert geometry.azimuth_rate(5e3) == pytest.approx(2 * geometry.azimuth_rate())
    assert geometry.reference_range == geometry.standoff_range
    assert geometry.carrier_frequency == pytest.approx(constants.c / 1550e-9)


@pytest.mark.parametrize("kwargs", [
    {"wavelength": 0.0},
    {"prf": -1.0},
    {"platform_speed": -1.0},
    {"beam": "cone"},
    {"splitter": 1.0},
    {"reference_range": -5.0},
])
def test_geometry_is_validated(kwargs):
    with pytest.raises(ValueError):
        SceneGeometry(**kwargs)


def test_stationary_platform_has_no_aperture():
    g = SceneGeometry(platform_speed=0.0)
    with pytest.raises(ValueError):
        g.aperture_time


def test_slow_times_center_the_middle_pulse(geometry):
    np.testing.assert_allclose(geometry.slow_times(4), np.array([-2, -1, 0, 1]) / 20e3)
    times = geometry.slow_times()
    assert len(times) == 400
    assert times[200] == 0.0


def test_slant_range(geometry):
    tgt = PointTarget(azimuth_position=0.5, range_offset=0.3)
    assert slant_range(geometry, tgt, 0.0) == pytest.approx(np.hypot(10000.3, 0.5))
    assert slant_range(geometry, tgt, 0.01) == pytest.approx(10000.3)
    np.testing.assert_allclose(slant_range(geometry, tgt, np.array([0.0, 0.01])), [np.hypot(10000.3, 0.5), 10000.3])


def test_beam_weights(geometry):
    tgt = PointTarget(azimuth_position=0.5)
    assert beam_weight(geometry, tgt, 0.0) == 1.0
    assert beam_weight(geometry, PointTarget(azimuth_position=0.51), 0.0) == 0.0
    gaussian = SceneGeometry(beam="gaussian")
    assert beam_weight(gaussian, tgt, 0.0) == pytest.approx(np.sqrt(0.5))
    assert beam_weight(gaussian, PointTarget(), 0.0) == pytest.approx(1.0)


def test_splitter_sets_echo_to_reference_ratio(geometry, tone):
    echo = echo_samples(tone, geometry, PointTarget(), 0.0)
    reference = synthesize_reference(tone, geometry).horizontal
    np.testing.assert_allclose(echo / reference, np.sqrt(99.0), rtol=1e-12)
    assert np.all(synthesize_reference(tone, geometry).vertical == 0)


def test_no_splitter_gives_unit_amplitudes(tone):
    g = SceneGeometry(splitter=None)
    assert g.echo_amplitude == 1.0 and g.reference_amplitude == 1.0
    np.testing.assert_allclose(np.abs(echo_samples(tone, g, PointTarget(), 0.0)), 1.0)


def test_echo_carries_the_carrier_rotation(geometry, tone):
    tau = 5e-9
    tgt = PointTarget(range_offset=_offset_for_delay(tau))
    ratio = echo_samples(tone, geometry, tgt, 0.0) / synthesize_reference(tone, geometry).horizontal
    expected = np.sqrt(99.0) * np.exp(-2j * np.pi * geometry.carrier_frequency * tau)
    np.testing.assert_allclose(ratio[10:], expected, atol=1e-4)


def test_echo_is_gated_to_the_emitted_pulse(geometry, tone):
    tgt = PointTarget(range_offset=_offset_for_delay(5e-9))
    echo = echo_samples(tone, geometry, tgt, 0.0)
    assert np.all(echo[:5] == 0)
    assert np.all(np.abs(echo[6:]) > 0.9)


def test_delay_beyond_the_grid_is_rejected(geometry, tone):
    with pytest.raises(ValueError):
        echo_samples(tone, geometry, PointTarget(range_offset=_offset_for_delay(150e-9)), 0.0)


def test_target_outside_the_footprint_is_silent(geometry, tone):
    assert np.all(echo_samples(tone, geometry, PointTarget(azimuth_position=5.0), 0.0) == 0)
    assert np.all(echo_samples(tone, geometry, PointTarget(reflectivity=0.0), 0.0) == 0)


def test_scene_echo_is_a_coherent_sum(geometry, tone):
    a = PointTarget(range_offset=0.3)
    b = PointTarget(azimuth_position=0.2, reflectivity=0.5j)
    field = synthesize_scene_echo(tone, geometry, [a, b], 0.001)
    total = echo_samples(tone, geometry, a, 0.001) + echo_samples(tone, geometry, b, 0.001)
    np.testing.assert_allclose(field.horizontal, total * np.sqrt(0.5), atol=1e-12)
    np.testing.assert_allclose(field.vertical, field.horizontal)
    single = synthesize_echo(tone, geometry, a, 0.001)
    np.testing.assert_allclose(single.horizontal, echo_samples(tone, geometry, a, 0.001) * np.sqrt(0.5))


@pytest.mark.parametrize("workers", [1, 2])
def test_pulse_set_keeps_pulse_order(geometry, tone, workers):
    calls = []

    def transmit(index):
        calls.append(index)
        return tone

    pulses = PulseSet(transmit, geometry, [PointTarget()], count=8)
    assert len(pulses) == 8
    results = pulses.map(lambda p: (p.index, p.t_m), workers=workers)
    assert [r[0] for r in results] == list(range(8))
    np.testing.assert_allclose([r[1] for r in results], geometry.slow_times(8))
    assert sorted(calls) == list(range(8))


def test_pulse_set_iterates_lazily(geometry, tone):
    pulses = PulseSet(lambda index: tone, geometry, [PointTarget()], count=3)
    first = next(iter(pulses))
    assert first.index == 0
    assert first.t_m == pytest.approx(-1 / 20e3)
    assert first.echo.grid == tone.grid
