"""Matched-filter beamforming metrics on the two-sensor steering vectors.

Steering vectors are raw HRTF pairs from the scattering model.  The
matched filter w = h0 / (h0^H h0) is distortionless in the look direction;
white noise gain and directivity follow the classical definitions, with
the spherical average discretized on an icosphere grid with Voronoi-area
weights.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import SphericalVoronoi

from .field import CueSynthesizer


class DegenerateSteeringError(ValueError):
    """Steering vector with vanishing norm."""


@dataclass(frozen=True)
class SteeringVector:
    f: float
    h: np.ndarray  # complex 2-vector (H_L, H_R)


@dataclass(frozen=True)
class DirectionGrid:
    """Spherical quadrature grid with positive weights summing to 4 pi."""

    directions: np.ndarray  # (N, 2) of (theta, phi)
    weights: np.ndarray     # (N,)


def matched_weights(h0):
    """w = h0 / (h0^H h0); satisfies w^H h0 = 1 up to machine epsilon."""
    h0 = np.asarray(h0, dtype=np.complex128)
    nrm = np.real(np.vdot(h0, h0))
    if nrm == 0:
        raise DegenerateSteeringError("zero steering vector")
    return h0 / nrm


def wng(w):
    """White noise gain 10 log10(1 / (w^H w)) in dB."""
    w = np.asarray(w, dtype=np.complex128)
    return float(10.0 * np.log10(1.0 / np.real(np.vdot(w, w))))


def _subdivide(verts, faces):
    verts = list(verts)
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = verts[i] + verts[j]
            m /= np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(m)
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
    return verts, out


def _icosphere(level):
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v for v in verts]
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    return np.array(verts)


def make_grid(n):
    """Icosphere direction grid with Voronoi-area weights.

    Reachable counts are the icosphere vertex totals 12, 42, 162, 642,
    2562; other requests snap to the nearest level with a warning.
    """
    if n < 12:
        raise ValueError(f"grid size {n} must be >= 12")
    counts = [10 * 4**lvl + 2 for lvl in range(5)]
    level = int(np.argmin([abs(c - n) for c in counts]))
    if counts[level] != n:
        warnings.warn(
            f"direction count {n} not an icosphere size; using {counts[level]}",
            stacklevel=2,
        )
    verts = _icosphere(level)
    sv = SphericalVoronoi(verts, radius=1.0)
    sv.sort_vertices_of_regions()
    weights = sv.calculate_areas()
    theta = np.arccos(np.clip(verts[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(verts[:, 1], verts[:, 0]), 2.0 * np.pi)
    return DirectionGrid(np.column_stack([theta, phi]), weights)


class SteeringField:
    """Steering vectors over the band for every grid direction (cached)."""

    def __init__(self, scene, grid):
        self.synth = scene if isinstance(scene, CueSynthesizer) else CueSynthesizer(scene)
        self.grid = grid
        self.freqs = self.synth.freqs
        H = np.zeros((len(grid.directions), len(self.freqs), 2), dtype=np.complex128)
        for i, (th, ph) in enumerate(grid.directions):
            hl, hr = self.synth.hrtf_pair(th, ph)
            H[i, :, 0] = hl
            H[i, :, 1] = hr
        self.H = H  # (N, F, 2)

    def steering(self, direction):
        hl, hr = self.synth.hrtf_pair(*direction)
        return np.column_stack([hl, hr])  # (F, 2)


def directivity(w, f, scene, grid, look):
    """(DF, DI) of weight vector w at frequency f for the given look."""
    field = scene if hasattr(scene, "H") else SteeringField(scene, grid)
    fi = int(np.argmin(np.abs(field.freqs - f)))
    h0 = field.steering(look)[fi]
    num = np.abs(np.vdot(w, h0)) ** 2
    beam = np.abs(field.H[:, fi, :] @ np.conj(w)) ** 2
    avg = float(np.sum(grid.weights * beam) / (4.0 * np.pi))
    df = float(num / avg)
    return df, float(10.0 * np.log10(df))


def band_metrics(scene, look, grid):
    """Per-frequency matched-filter metrics for the look direction.

    Returns (freqs, wng_db, df, di_db) arrays; drives the WNG/DI-versus-
    frequency table.
    """
    field = scene if hasattr(scene, "H") else SteeringField(scene, grid)
    h_look = field.steering(look)  # (F, 2)
    F = len(field.freqs)
    wng_db = np.zeros(F)
    df = np.zeros(F)
    for fi in range(F):
        w = matched_weights(h_look[fi])
        wng_db[fi] = wng(w)
        beam = np.abs(field.H[:, fi, :] @ np.conj(w)) ** 2
        avg = float(np.sum(grid.weights * beam) / (4.0 * np.pi))
        df[fi] = np.abs(np.vdot(w, h_look[fi])) ** 2 / avg
    return field.freqs.copy(), wng_db, df, 10.0 * np.log10(df)
