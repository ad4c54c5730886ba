"""Independent reference implementations used only by the test suite.

Each oracle follows a different computational route from the production
code: power series for Bessel functions, exact rational Rodrigues
differentiation for Legendre functions, and separately assembled linear
systems for the reduced scattering problems.
"""

from fractions import Fraction

import numpy as np

from spherecue import specfun, translation


def bessel_j_series(l, x, terms=60):
    """j_l(x) = x^l/(2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)...(2l+2k+1))."""
    lead = 1.0
    for i in range(1, l + 1):
        lead *= x / (2 * i + 1)
    term = 1.0
    total = 1.0
    for k in range(1, terms):
        term *= -0.5 * x * x / (k * (2 * l + 2 * k + 1))
        total += term
        if abs(term) < 1e-20 * abs(total):
            break
    return lead * total


def legendre_rodrigues(l, m, x_frac):
    """Associated Legendre P_l^m (positive convention) by exact Rodrigues.

    P_l(x) = d^l/dx^l (x^2-1)^l / (2^l l!), differentiated m more times in
    exact rational arithmetic, then multiplied by (1-x^2)^(m/2).
    """
    # coefficients of (x^2 - 1)^l
    coeffs = {0: Fraction(1)}
    for _ in range(l):
        new = {}
        for pw, c in coeffs.items():
            new[pw + 2] = new.get(pw + 2, Fraction(0)) + c
            new[pw] = new.get(pw, Fraction(0)) - c
        coeffs = new
    # differentiate l + m times
    for _ in range(l + m):
        new = {}
        for pw, c in coeffs.items():
            if pw > 0:
                new[pw - 1] = new.get(pw - 1, Fraction(0)) + c * pw
        coeffs = new
    scale = Fraction(1)
    for i in range(1, l + 1):
        scale *= 2 * i
    x = Fraction(x_frac)
    poly = sum(c * x**pw for pw, c in coeffs.items())
    value = poly / scale
    return float(value) * (1.0 - float(x) ** 2) ** (m / 2.0)


def two_rigid_spheres(k, geometry, incident, p):
    """Free-field scattering from the two rigid spheres alone.

    Solves the per-order Neumann system for (C about O1, D about O3) with
    the incident field of the full problem; returns flat coefficient
    arrays.  Exterior-field evaluation happens in the caller.
    """
    tau31, tau13 = -geometry.offset3_z, geometry.offset3_z
    C = np.zeros(p * p, complex)
    D = np.zeros(p * p, complex)
    _, dji2 = specfun.bessel_j_arr(p - 1, k * geometry.a2)
    _, dhi2 = specfun.hankel_h1_arr(p - 1, k * geometry.a2)
    _, dji3 = specfun.bessel_j_arr(p - 1, k * geometry.a3)
    _, dhi3 = specfun.hankel_h1_arr(p - 1, k * geometry.a3)
    for s in range(-(p - 1), p):
        n = p - abs(s)
        sl = slice(abs(s), p)
        lam2 = (dji2 / dhi2)[sl]
        lam3 = (dji3 / dhi3)[sl]
        rr13 = translation.coaxial_rr(s, k, tau13, p).entries.T
        sr13 = translation.coaxial_sr(s, k, tau13, p).entries.T
        sr31 = translation.coaxial_sr(s, k, tau31, p).entries.T
        E = incident.order_coeffs(s)
        M = np.block([
            [np.eye(n), lam2[:, None] * sr31],
            [lam3[:, None] * sr13, np.eye(n)],
        ])
        rhs = np.concatenate([-lam2 * E, -lam3 * (rr13 @ E)])
        sol = np.linalg.solve(M, rhs)
        ls = np.arange(abs(s), p)
        idx = ls * (ls + 1) + s
        C[idx] = sol[:n]
        D[idx] = sol[n:]
    return C, D


def concentric_shell_core(media, geometry, incident, f, p):
    """Separable transmission solution: penetrable shell S1 + rigid core S2.

    No translations involved; returns the flat exterior-scattered
    coefficient array B.
    """
    k_o, k_i = media.wavenumbers(f)
    jo, djo = specfun.bessel_j_arr(p - 1, k_o * geometry.a1)
    ho, dho = specfun.hankel_h1_arr(p - 1, k_o * geometry.a1)
    ji1, dji1 = specfun.bessel_j_arr(p - 1, k_i * geometry.a1)
    hi1, dhi1 = specfun.hankel_h1_arr(p - 1, k_i * geometry.a1)
    _, dji2 = specfun.bessel_j_arr(p - 1, k_i * geometry.a2)
    _, dhi2 = specfun.hankel_h1_arr(p - 1, k_i * geometry.a2)
    lam2 = dji2 / dhi2
    d = media.density_ratio
    beta = np.zeros(p, complex)
    for l in range(p):
        M = np.array([
            [d * (ji1[l] - lam2[l] * hi1[l]), -ho[l]],
            [k_i * (dji1[l] - lam2[l] * dhi1[l]), -k_o * dho[l]],
        ])
        _, b = np.linalg.solve(M, np.array([jo[l], k_o * djo[l]]))
        beta[l] = b
    B = np.zeros(p * p, complex)
    for l in range(p):
        for s in range(-l, l + 1):
            B[l * (l + 1) + s] = beta[l] * incident.coeffs[l * (l + 1) + s]
    return B


def eval_expansion(coeffs, p, kind, k, point, center=(0.0, 0.0, 0.0)):
    """Direct summation of a flat-coefficient expansion at one point."""
    pt = np.asarray(point, float) - np.asarray(center, float)
    r = np.linalg.norm(pt)
    th = np.arccos(np.clip(pt[2] / r, -1, 1))
    ph = np.arctan2(pt[1], pt[0])
    rad, _ = (specfun.bessel_j_arr if kind == "R" else specfun.hankel_h1_arr)(p - 1, k * r)
    Y = specfun.harmonic_row(p - 1, th, ph)
    ls = np.concatenate([[l] * (2 * l + 1) for l in range(p)])
    return complex(np.dot(coeffs * rad[ls], Y))
