import dataclasses
import os

import numpy as np
import pytest

from spherecue.scene import SensorPair, default_scene


@pytest.fixture(scope="session")
def scene_default():
    """Water/tissue scene with the shipped asymmetric sensors."""
    return default_scene()


@pytest.fixture(scope="session")
def scene_symmetric():
    """Symmetric equatorial sensors for the mirror-symmetry checks."""
    return default_scene().with_sensors(
        SensorPair(left=(np.pi / 2, np.pi), right=(np.pi / 2, 0.0))
    )


@pytest.fixture(scope="session")
def scene_small(scene_default):
    """Few-bin variant keeping solver work light in unit tests."""
    return dataclasses.replace(scene_default, freq_count=5)


def fib_sphere(n, radius, center=(0.0, 0.0, 0.0)):
    """Deterministic quasi-uniform points on a sphere surface."""
    idx = np.arange(n) + 0.5
    th = np.arccos(1 - 2 * idx / n)
    ph = np.pi * (1 + 5**0.5) * idx
    pts = np.stack(
        [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1
    )
    return np.asarray(center) + radius * pts


def config_path(name):
    """Absolute path of a shipped scene config, independent of the cwd."""
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    return os.path.join(root, "configs", f"{name}.json")
