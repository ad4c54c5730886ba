"""Scene configuration: the full physical setup plus its strict file schema.

A scene combines media properties, sphere geometry, the two sensor
positions on the outer sphere, the analysis frequency grid, an optional
truncation override and the master seed.  Configs are stored as JSON with a
strict schema (unknown keys rejected); shipped examples live in
``configs/``.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .solver import Geometry, Media, validate_geometry


class ConfigError(ValueError):
    """Configuration file missing keys, carrying unknown keys, or invalid."""


@dataclass(frozen=True)
class SensorPair:
    """Left/right sensor angular positions on the S1 surface (radians)."""

    left: tuple
    right: tuple

    def positions(self, a1):
        """Cartesian sensor positions for outer radius a1."""
        return a1 * _unit(*self.left), a1 * _unit(*self.right)


def _unit(theta, phi):
    st = np.sin(theta)
    return np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


#: Symmetric sensor placement used for the cue-map figures.
SENSORS_SYMMETRIC = SensorPair(left=(np.pi / 2, np.pi), right=(np.pi / 2, 0.0))

#: Slightly asymmetric placement breaking front-back ambiguity; the default
#: for localization, beamforming and tracking.
SENSORS_ASYMMETRIC = SensorPair(
    left=(np.pi / 2 - 0.12, np.deg2rad(175.0)), right=(np.pi / 2, 0.0)
)


@dataclass(frozen=True)
class SceneConfig:
    media: Media = Media(rho_o=1000.0, c_o=1500.0, rho_i=920.0, c_i=1420.0)
    geometry: Geometry = Geometry(a1=0.2, a2=0.05, a3=0.05, offset3_z=0.12)
    sensors: SensorPair = field(default_factory=lambda: SENSORS_ASYMMETRIC)
    freq_min: float = 200.0
    freq_max: float = 2000.0
    freq_count: int = 41
    truncation_override: int | None = None
    seed: int = 0

    @property
    def frequencies(self):
        return np.linspace(self.freq_min, self.freq_max, self.freq_count)

    def with_sensors(self, sensors):
        return replace(self, sensors=sensors)

    def validate(self):
        """List of violations (empty when admissible)."""
        out = validate_geometry(self.geometry, self.media)
        if not self.freq_min < self.freq_max:
            out.append(f"freq min {self.freq_min} must be < max {self.freq_max}")
        if self.freq_count < 2:
            out.append(f"freq count {self.freq_count} must be >= 2")
        if self.freq_min <= 0:
            out.append(f"freq min {self.freq_min} must be > 0")
        if tuple(self.sensors.left) == tuple(self.sensors.right):
            out.append("sensor positions must differ")
        if self.truncation_override is not None and self.truncation_override < 4:
            out.append(f"truncation_override {self.truncation_override} must be >= 4")
        return out


def default_scene():
    return SceneConfig()


_SCHEMA = {
    "media": {"rho_o", "c_o", "rho_i", "c_i"},
    "geometry": {"a1", "a2", "a3", "offset3_z"},
    "sensors": {"left", "right"},
    "freqs": {"min_hz", "max_hz", "count"},
}
_TOP_REQUIRED = {"media", "geometry", "sensors", "freqs"}
_TOP_OPTIONAL = {"truncation_override", "seed"}


def _check_keys(name, mapping, allowed, required=None):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(sorted(unknown))}")
    for key in required if required is not None else allowed:
        if key not in mapping:
            raise ConfigError(f"missing key '{key}' in {name}")


def _angles(name, mapping):
    _check_keys(name, mapping, {"theta", "phi"})
    return (float(mapping["theta"]), float(mapping["phi"]))


def load_config(path):
    """Parse and fully validate a scene configuration file."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    _check_keys("config", raw, _TOP_REQUIRED | _TOP_OPTIONAL, required=_TOP_REQUIRED)
    for section in _TOP_REQUIRED:
        _check_keys(section, raw[section], _SCHEMA[section])

    media = Media(
        rho_o=float(raw["media"]["rho_o"]),
        c_o=float(raw["media"]["c_o"]),
        rho_i=float(raw["media"]["rho_i"]),
        c_i=float(raw["media"]["c_i"]),
    )
    geometry = Geometry(
        a1=float(raw["geometry"]["a1"]),
        a2=float(raw["geometry"]["a2"]),
        a3=float(raw["geometry"]["a3"]),
        offset3_z=float(raw["geometry"]["offset3_z"]),
    )
    sensors = SensorPair(
        left=_angles("sensors.left", raw["sensors"]["left"]),
        right=_angles("sensors.right", raw["sensors"]["right"]),
    )
    override = raw.get("truncation_override")
    cfg = SceneConfig(
        media=media,
        geometry=geometry,
        sensors=sensors,
        freq_min=float(raw["freqs"]["min_hz"]),
        freq_max=float(raw["freqs"]["max_hz"]),
        freq_count=int(raw["freqs"]["count"]),
        truncation_override=None if override is None else int(override),
        seed=int(raw.get("seed", 0)),
    )
    violations = cfg.validate()
    if violations:
        raise ConfigError(f"{path}: invalid scene: " + "; ".join(violations))
    return cfg


def dump_config(cfg, path):
    """Write a SceneConfig back to the JSON schema (used by tooling/tests)."""
    doc = {
        "media": {
            "rho_o": cfg.media.rho_o, "c_o": cfg.media.c_o,
            "rho_i": cfg.media.rho_i, "c_i": cfg.media.c_i,
        },
        "geometry": {
            "a1": cfg.geometry.a1, "a2": cfg.geometry.a2,
            "a3": cfg.geometry.a3, "offset3_z": cfg.geometry.offset3_z,
        },
        "sensors": {
            "left": {"theta": cfg.sensors.left[0], "phi": cfg.sensors.left[1]},
            "right": {"theta": cfg.sensors.right[0], "phi": cfg.sensors.right[1]},
        },
        "freqs": {"min_hz": cfg.freq_min, "max_hz": cfg.freq_max, "count": cfg.freq_count},
        "truncation_override": cfg.truncation_override,
        "seed": cfg.seed,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
