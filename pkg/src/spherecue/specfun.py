"""Complex spherical special functions used by every field expansion.

Spherical Bessel/Hankel functions with derivatives (with respect to the
dimensionless argument), associated Legendre functions, and orthonormal
spherical harmonics

    Y_l^s(theta, phi) = sqrt((2l+1)/4pi) sqrt((l-|s|)!/(l+|s|)!)
                        * P_l^|s|(cos theta) * exp(i s phi),

with the Legendre part taken positive (no Condon-Shortley factor).  Under
this normalization conj(Y_l^s) = Y_l^(-s).
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

#: Hard degree cap; guards recurrence overflow far above any truncation
#: degree reached at desk-scale frequencies.
MAX_DEGREE = 200


class DomainError(ValueError):
    """Argument outside the supported domain of a special function."""


@dataclass(frozen=True)
class DegreeOrder:
    """Degree/order pair (l, s) with l >= 0 and |s| <= l."""

    l: int
    s: int

    def __post_init__(self):
        if self.l < 0:
            raise DomainError(f"degree l={self.l} must be >= 0")
        if abs(self.s) > self.l:
            raise DomainError(f"order s={self.s} exceeds degree l={self.l}")


@dataclass(frozen=True)
class RadialPair:
    """Value and derivative (w.r.t. the dimensionless argument) of a radial function."""

    value: complex
    derivative: complex


def _check_degree(l):
    if l < 0:
        raise DomainError(f"degree l={l} must be >= 0")
    if l > MAX_DEGREE:
        raise DomainError(f"degree l={l} exceeds cap {MAX_DEGREE}")


def spherical_bessel_j(l, x):
    """j_l(x) with derivative; x >= 0 (x = 0 gives the limiting values)."""
    _check_degree(l)
    if x < 0:
        raise DomainError(f"argument x={x} must be >= 0")
    j, jp = kernels.sph_jn_arr(l, float(x))
    return RadialPair(complex(j[l]), complex(jp[l]))


def spherical_hankel_h1(l, x):
    """h_l(x) = j_l(x) + i y_l(x) with derivative; x > 0 strictly."""
    _check_degree(l)
    if x <= 0:
        raise DomainError(f"argument x={x} must be > 0 (singular at origin)")
    j, jp = kernels.sph_jn_arr(l, float(x))
    y, yp = kernels.sph_yn_arr(l, float(x))
    return RadialPair(complex(j[l] + 1j * y[l]), complex(jp[l] + 1j * yp[l]))


def hankel_h1_arr(lmax, x):
    """Arrays h_l(x), h_l'(x) for l = 0..lmax; x > 0."""
    _check_degree(lmax)
    if x <= 0:
        raise DomainError(f"argument x={x} must be > 0 (singular at origin)")
    j, jp = kernels.sph_jn_arr(lmax, float(x))
    y, yp = kernels.sph_yn_arr(lmax, float(x))
    return j + 1j * y, jp + 1j * yp


def bessel_j_arr(lmax, x):
    """Arrays j_l(x), j_l'(x) for l = 0..lmax; x >= 0."""
    _check_degree(lmax)
    if x < 0:
        raise DomainError(f"argument x={x} must be >= 0")
    return kernels.sph_jn_arr(lmax, float(x))


def legendre_p(l, m, x):
    """Associated Legendre P_l^m(x), positive convention, |x| <= 1, 0 <= m <= l."""
    _check_degree(l)
    if m < 0 or m > l:
        raise DomainError(f"order m={m} outside [0, {l}]")
    if abs(x) > 1.0:
        raise DomainError(f"argument x={x} outside [-1, 1]")
    s = np.sqrt(max(1.0 - x * x, 0.0))
    pmm = 1.0
    for i in range(1, m + 1):
        pmm *= (2 * i - 1) * s
    if l == m:
        return pmm
    pm1 = x * (2 * m + 1) * pmm
    if l == m + 1:
        return pm1
    for ll in range(m + 2, l + 1):
        pm2, pm1 = pm1, ((2 * ll - 1) * x * pm1 - (ll + m - 1) * pmm) / (ll - m)
        pmm = pm2
    return pm1


def spherical_harmonic(lo, theta, phi):
    """Y_l^s(theta, phi) per the module normalization; 0 <= theta <= pi."""
    if not isinstance(lo, DegreeOrder):
        lo = DegreeOrder(*lo)
    _check_degree(lo.l)
    if theta < 0 or theta > np.pi:
        raise DomainError(f"theta={theta} outside [0, pi]")
    T, _ = kernels.norm_legendre_grad(lo.l, np.cos(theta), np.sin(theta))
    return complex(T[lo.l, abs(lo.s)] * np.exp(1j * lo.s * phi))


def harmonic_row(lmax, theta, phi):
    """All Y_l^s for l <= lmax as a flat array indexed l*(l+1)+s."""
    _check_degree(lmax)
    return kernels.harm_row(lmax, float(theta), float(phi))


def harmonic_row_grad(lmax, theta, phi):
    """(Y, dY/dtheta, dY/dphi) flat arrays for l <= lmax."""
    _check_degree(lmax)
    return kernels.harm_row_grad(lmax, float(theta), float(phi))


def flat_index(l, s):
    """Position of (l, s) in a flat harmonic row."""
    return l * (l + 1) + s
