"""spherecue: binaural cues from a layered-sphere acoustic scattering model.

Analytical multipole forward model for a semi-transparent sphere enclosing
two rigid spheres, with binaural cue synthesis (HRTF/ILD/ITD), gradient
based source localization, matched-filter beamforming metrics, and EKF
tracking built on top of it.
"""

__version__ = "0.1.0"

from .field import CueSpectrum, CueSynthesizer, cue_spectrum
from .kernels import BACKEND
from .localize import LocalizationResult, OptimizerConfig, sweep
from .scene import SceneConfig, SensorPair, default_scene, load_config
from .solver import Geometry, Media, ModalSolution, solve_scattering

__all__ = [
    "BACKEND",
    "CueSpectrum",
    "CueSynthesizer",
    "Geometry",
    "LocalizationResult",
    "Media",
    "ModalSolution",
    "OptimizerConfig",
    "SceneConfig",
    "SensorPair",
    "__version__",
    "cue_spectrum",
    "default_scene",
    "load_config",
    "solve_scattering",
    "sweep",
]
