"""Field evaluation and binaural cue synthesis (HRTF, ILD, ITD).

Exterior and interior total fields are evaluated from a ModalSolution;
HRTFs at the two sensors follow by normalizing with the free-field
reference pressure.  ``CueSynthesizer`` precomputes, per frequency and
sensor, a transfer row mapping incident-field coefficients to the sensor
pressure, which makes repeated cue and cue-gradient evaluations (the inner
loop of localization and tracking) a handful of small dot products.
"""

from dataclasses import dataclass

import numpy as np

from . import specfun
from .solver import (
    direction_unit,
    plane_wave_from_source,
    solution_operator,
    truncation_degree,
)

#: Relative slack on the region checks so surface points and tiny
#: finite-difference stencils straddling a surface stay admissible.
REGION_TOL = 1e-4

LOG10 = np.log(10.0)


class RegionError(ValueError):
    """Evaluation point outside the validity region of an expansion."""


class DegenerateCueError(ValueError):
    """Cue undefined (vanishing reference magnitude or flat spectrum)."""


def _spherical(point):
    r = np.linalg.norm(point)
    theta = np.arccos(np.clip(point[2] / r, -1.0, 1.0))
    phi = np.arctan2(point[1], point[0])
    return r, theta, phi


def _series(coeffs, p, radial, point, k):
    """Sum of coeffs[l,s] * f_l(k r) * Y_l^s over the truncated index set."""
    r, theta, phi = _spherical(point)
    rad, _ = radial(p - 1, k * r)
    Y = specfun.harmonic_row(p - 1, theta, phi)
    ls = np.concatenate([[l] * (2 * l + 1) for l in range(p)])
    return np.dot(coeffs * rad[ls], Y)


def evaluate_exterior(sol, incident, point):
    """Total exterior pressure psi_in + sum B_l^s S_l^s at |r| >= a1."""
    point = np.asarray(point, dtype=float)
    a1 = sol.geometry.a1
    if np.linalg.norm(point) < a1 * (1.0 - REGION_TOL):
        raise RegionError(f"point at radius {np.linalg.norm(point)} lies inside S1")
    k_o, _ = sol.media.wavenumbers(sol.frequency)
    scat = _series(sol.B, sol.p, specfun.hankel_h1_arr, point, k_o)
    return incident.psi_in(point) + scat


def evaluate_interior(sol, point):
    """Total interior pressure at points inside S1, outside S2 and S3."""
    point = np.asarray(point, dtype=float)
    g = sol.geometry
    r1 = np.linalg.norm(point)
    p3 = point - np.array([0.0, 0.0, g.offset3_z])
    r3 = np.linalg.norm(p3)
    if r1 > g.a1 * (1.0 + REGION_TOL):
        raise RegionError(f"point at radius {r1} lies outside S1")
    if r1 < g.a2 * (1.0 - REGION_TOL):
        raise RegionError(f"point at radius {r1} lies inside S2")
    if r3 < g.a3 * (1.0 - REGION_TOL):
        raise RegionError(f"point at distance {r3} from O3 lies inside S3")
    _, k_i = sol.media.wavenumbers(sol.frequency)
    val = _series(sol.A, sol.p, specfun.bessel_j_arr, point, k_i)
    val += _series(sol.C, sol.p, specfun.hankel_h1_arr, point, k_i)
    val += _series(sol.D, sol.p, specfun.hankel_h1_arr, p3, k_i)
    return val


def hrtf(sol, incident, sensor_point, reference="center"):
    """Exterior pressure at a sensor on S1 over the free-field reference.

    The default center reference keeps the interaural propagation delay in
    the HRTF phase (the binaural cues live there); ``reference="sensor"``
    normalizes by the free field at the sensor point instead.
    """
    ref = incident.psi_ref(sensor_point, reference)
    if ref == 0:
        raise DegenerateCueError("free-field reference pressure vanishes at sensor")
    return evaluate_exterior(sol, incident, sensor_point) / ref


def ild(h_left, h_right):
    """Interaural level difference 20 log10(|H_R| / |H_L|) in dB."""
    h_left = np.asarray(h_left)
    h_right = np.asarray(h_right)
    if np.any(np.abs(h_left) == 0):
        raise DegenerateCueError("left HRTF magnitude vanishes; ILD undefined")
    return 20.0 * np.log10(np.abs(h_right) / np.abs(h_left))


def itd(phase_left, phase_right, freqs):
    """Frequency-dependent ITD from per-channel unwrapped phases, seconds."""
    freqs = np.asarray(freqs, dtype=float)
    if np.any(freqs <= 0):
        raise DegenerateCueError("ITD undefined for f <= 0")
    return (np.asarray(phase_right) - np.asarray(phase_left)) / (2.0 * np.pi * freqs)


@dataclass(frozen=True)
class CueSpectrum:
    """Per-frequency HRTF pair and the derived ILD (dB) / ITD (s)."""

    freqs: np.ndarray
    H_L: np.ndarray
    H_R: np.ndarray
    ild: np.ndarray
    itd: np.ndarray


class CueSynthesizer:
    """Precomputed per-frequency transfer rows for the two scene sensors.

    The sensor pressure is linear in the incident coefficients, so for each
    frequency and sensor a single row ``g`` gives pressure = g . E.  The
    cue evaluation for a source direction then costs one harmonic-row
    evaluation plus two dot products per frequency.
    """

    def __init__(self, config, s1_coupling="interior", reference="center"):
        self.config = config
        self.reference = reference
        self.freqs = config.frequencies
        self.media = config.media
        self.geometry = config.geometry
        m_left, m_right = config.sensors.positions(config.geometry.a1)
        self.sensor_points = (m_left, m_right)
        self._rows = []     # per frequency: (p, G) with G shape (2, p*p)
        k_list = []
        for f in self.freqs:
            p = truncation_degree(self.media, self.geometry, f, config.truncation_override)
            ops = solution_operator(self.media, self.geometry, f, p, s1_coupling)
            k_o, _ = self.media.wavenumbers(f)
            G = np.zeros((2, p * p), dtype=np.complex128)
            for mi, mpos in enumerate(self.sensor_points):
                G[mi] = self._transfer_row(ops, p, k_o, mpos)
            self._rows.append((p, G))
            k_list.append(k_o)
        self._k_o = np.array(k_list)
        self.p_max = max(p for p, _ in self._rows)
        # group frequencies sharing a truncation so evaluations batch
        self._groups = []
        by_p = {}
        for fi, (p, G) in enumerate(self._rows):
            by_p.setdefault(p, []).append(fi)
        for p, idx in sorted(by_p.items()):
            stack = np.stack([self._rows[fi][1] for fi in idx])  # (Fg, 2, p*p)
            self._groups.append((p, np.array(idx), stack))

    def _transfer_row(self, ops, p, k_o, mpos):
        r, theta, phi = _spherical(mpos)
        jr, _ = specfun.bessel_j_arr(p - 1, k_o * r)
        hr, _ = specfun.hankel_h1_arr(p - 1, k_o * r)
        Y = specfun.harmonic_row(p - 1, theta, phi)
        row = np.zeros(p * p, dtype=np.complex128)
        for s in range(-(p - 1), p):
            ls = np.arange(abs(s), p)
            idx = ls * (ls + 1) + s
            reg = jr[ls] * Y[idx]
            sing = hr[ls] * Y[idx]
            op_b = ops[abs(s)][0]          # maps E^s -> B^s
            row[idx] = reg + op_b.T @ sing
        return row

    def _incident_rows(self, theta, phi, grad=False):
        """Incident coefficient rows (and angle derivatives) at p_max."""
        tp, pp = np.pi - theta, phi + np.pi  # propagation direction (antipode)
        lmax = self.p_max - 1
        ls = np.concatenate([[l] * (2 * l + 1) for l in range(self.p_max)])
        il = 1j ** (ls % 4)
        if not grad:
            Y = specfun.harmonic_row(lmax, tp, pp)
            return 4.0 * np.pi * il * np.conj(Y), None, None
        Y, Yt, Yp = specfun.harmonic_row_grad(lmax, tp, pp)
        E = 4.0 * np.pi * il * np.conj(Y)
        dE_dtheta = -4.0 * np.pi * il * np.conj(Yt)  # d(pi - theta)/dtheta = -1
        dE_dphi = 4.0 * np.pi * il * np.conj(Yp)
        return E, dE_dtheta, dE_dphi

    def _reference(self, theta, phi, grad=False):
        """Free-field reference pressure at both sensors, per frequency."""
        F = len(self.freqs)
        if self.reference == "center":
            ref = np.ones((F, 2), dtype=np.complex128)
            zero = np.zeros((F, 2), dtype=np.complex128)
            return (ref, zero, zero) if grad else (ref, None, None)
        u = direction_unit(theta, phi)
        kdir = -u  # wave arrives from the source direction
        proj = np.array([np.dot(kdir, m) for m in self.sensor_points])  # (2,)
        phase = np.outer(self._k_o, proj)                               # (F, 2)
        ref = np.exp(1j * phase)
        if not grad:
            return ref, None, None
        st, ct = np.sin(theta), np.cos(theta)
        du_dth = np.array([ct * np.cos(phi), ct * np.sin(phi), -st])
        du_dph = np.array([-st * np.sin(phi), st * np.cos(phi), 0.0])
        dproj_t = np.array([np.dot(-du_dth, m) for m in self.sensor_points])
        dproj_p = np.array([np.dot(-du_dph, m) for m in self.sensor_points])
        dref_t = ref * 1j * np.outer(self._k_o, dproj_t)
        dref_p = ref * 1j * np.outer(self._k_o, dproj_p)
        return ref, dref_t, dref_p

    def hrtf_pair(self, theta, phi):
        """(H_L, H_R) arrays over the frequency grid for a source direction."""
        E, _, _ = self._incident_rows(theta, phi)
        ref, _, _ = self._reference(theta, phi)
        H = np.zeros((len(self.freqs), 2), dtype=np.complex128)
        for p, idx, G in self._groups:
            H[idx] = np.einsum("fmi,i->fm", G, E[: p * p])
        H /= ref
        return H[:, 0], H[:, 1]

    def cues(self, theta, phi):
        """CueSpectrum at a source direction (deterministic).

        Cue values follow the exact computational path of
        ``cues_and_grad`` so that observations generated here make the
        loss and its gradient vanish identically at the true direction.
        """
        h_l, h_r = self.hrtf_pair(theta, phi)
        ild_v = (20.0 / LOG10) * (np.log(np.abs(h_r)) - np.log(np.abs(h_l)))
        ph_l = np.unwrap(np.angle(h_l))
        ph_r = np.unwrap(np.angle(h_r))
        itd_v = (ph_r - ph_l) / (2.0 * np.pi * self.freqs)
        return CueSpectrum(
            freqs=self.freqs.copy(),
            H_L=h_l,
            H_R=h_r,
            ild=ild_v,
            itd=itd_v,
        )

    def cues_and_grad(self, theta, phi):
        """ILD/ITD plus their analytic angle gradients.

        Returns (ild, itd, d_ild, d_itd) where the gradient arrays have
        shape (F, 2) ordered (d/dtheta, d/dphi).
        """
        E, Et, Ep = self._incident_rows(theta, phi, grad=True)
        ref, reft, refp = self._reference(theta, phi, grad=True)
        F = len(self.freqs)
        H = np.zeros((F, 2), dtype=np.complex128)
        dlog = np.zeros((F, 2, 2), dtype=np.complex128)  # dlogH/d(theta,phi)
        for p, idx, G in self._groups:
            num = np.einsum("fmi,i->fm", G, E[: p * p])
            dnum_t = np.einsum("fmi,i->fm", G, Et[: p * p])
            dnum_p = np.einsum("fmi,i->fm", G, Ep[: p * p])
            H[idx] = num / ref[idx]
            dlog[idx, :, 0] = dnum_t / num - (reft[idx] / ref[idx])
            dlog[idx, :, 1] = dnum_p / num - (refp[idx] / ref[idx])
        ild_v = (20.0 / LOG10) * (np.log(np.abs(H[:, 1])) - np.log(np.abs(H[:, 0])))
        d_ild = (20.0 / LOG10) * (dlog[:, 1, :].real - dlog[:, 0, :].real)
        ph_l = np.unwrap(np.angle(H[:, 0]))
        ph_r = np.unwrap(np.angle(H[:, 1]))
        two_pi_f = 2.0 * np.pi * self.freqs
        itd_v = (ph_r - ph_l) / two_pi_f
        d_itd = (dlog[:, 1, :].imag - dlog[:, 0, :].imag) / two_pi_f[:, None]
        return ild_v, itd_v, d_ild, d_itd


def cue_spectrum(config, source_dir, s1_coupling="interior"):
    """CueSpectrum for a scene and source direction (theta, phi) in radians."""
    synth = CueSynthesizer(config, s1_coupling)
    return synth.cues(*source_dir)


def incident_for_scene(config, source_dir, f):
    """Plane-wave incident field arriving from ``source_dir`` at frequency f."""
    p = truncation_degree(config.media, config.geometry, f, config.truncation_override)
    k_o, _ = config.media.wavenumbers(f)
    return plane_wave_from_source(source_dir[0], source_dir[1], k_o, p)
