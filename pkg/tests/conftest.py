"""
tests/conftest.py

Shared fixtures: scaled presets, a focused three-point image and a small
scene-receiver-dechirp chain used by the beat-frequency tests.
"""

from typing import Callable

import numpy as np
import pytest

from app.config import load_preset, scale_config
from app.modules.dechirp_imager import DechirpConfig, RangeDopplerMatrix, assemble_beat, range_compress, rvp_correct
from app.modules.jones_bench import BenchParams, Receiver
from app.modules.scene_echo import PointTarget, SceneGeometry, synthesize_echo, synthesize_reference
from app.modules.signal_core import ComplexEnvelope, make_grid
from app.simulator import SalSimulator

# Frequency-plan reduction used by every end-to-end test
TEST_SCALE = 100


@pytest.fixture(scope="session", autouse=True)
def isolated_output(tmp_path_factory):
    """Keep runs out of the working tree."""
    with pytest.MonkeyPatch.context() as mp:
        mp.setenv("SAL_OUTPUT_DIR", str(tmp_path_factory.mktemp("outputs")))
        yield


@pytest.fixture(scope="session")
def scale():
    return TEST_SCALE


@pytest.fixture(scope="session")
def fig5_config():
    return scale_config(load_preset("fig5"), TEST_SCALE)


@pytest.fixture(scope="session")
def fig5_image(fig5_config):
    """Simulator and focused image of the three-point scene (one full aperture)."""
    simulator = SalSimulator(fig5_config)
    _, image = simulator.form_image()
    return simulator, image


@pytest.fixture
def chirp_envelope():
    """Baseband chirp, 1 GS/s, 1 us, 200 MHz sweep."""
    grid = make_grid(1e9, 1e-6)
    return ComplexEnvelope(grid, np.exp(1j * np.pi * 2e14 * grid.times ** 2))


@pytest.fixture
def dechirp_chain() -> Callable[[float], RangeDopplerMatrix]:
    """
    Range profile of one stationary target displaced by r_delta from the reference range.

    Baseband chirp with gamma = 2e14 Hz/s over 10 us, sampled at 8 GHz, detected by the
    default bench and decimated by 400.
    """
    gamma, tp = 2e14, 10e-6
    grid = make_grid(4 * gamma * tp, tp)
    tx = ComplexEnvelope(grid, np.exp(1j * np.pi * gamma * grid.times ** 2))
    geometry = SceneGeometry(platform_speed=0.0, splitter=None)
    cfg = DechirpConfig(gamma=gamma, f_center=geometry.carrier_frequency, decimation=400, range_oversample=8)
    receiver = Receiver(BenchParams())

    def run(r_delta: float) -> RangeDopplerMatrix:
        echo = synthesize_echo(tx, geometry, PointTarget(range_offset=r_delta), 0.0)
        iq = receiver.detect(echo, synthesize_reference(tx, geometry))
        return range_compress([rvp_correct(assemble_beat(iq, cfg), cfg)], cfg)

    return run
