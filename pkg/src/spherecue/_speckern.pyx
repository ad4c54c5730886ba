# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of ``_kernels_py``: spherical Bessel and normalized
Legendre/harmonic recurrence kernels.

Operation order mirrors the pure NumPy implementation so both backends
produce identical floating-point results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, sin, sqrt

cnp.import_array()

BACKEND = "compiled"

cdef double _SMALL_X = 1e-2
cdef double _RESCALE = 1e250


def sph_jn_arr(int lmax, double x):
    """Spherical Bessel j_l(x) and j_l'(x) for l = 0..lmax, x >= 0."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] j = np.zeros(lmax + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] jp = np.zeros(lmax + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tail
    cdef int l, m, m_start
    cdef double up, cur, down, scale, j0, j1
    if x == 0.0:
        j[0] = 1.0
        if lmax >= 1:
            jp[1] = 1.0 / 3.0
        return j, jp
    if x < _SMALL_X:
        for l in range(lmax + 1):
            j[l] = _j_series(l, x)
        jp[0] = -(j[1] if lmax >= 1 else _j_series(1, x))
        for l in range(1, lmax + 1):
            jp[l] = j[l - 1] - (l + 1) / x * j[l]
        return j, jp

    m_start = <int>(max(lmax, x)) + 26 + <int>(2.0 * sqrt(max(<double>lmax, x)))
    tail = np.zeros(lmax + 2)
    up = 0.0
    cur = 1e-30
    m = m_start
    if m <= lmax + 1:
        tail[m] = cur
    while m > 0:
        down = (2 * m + 1) / x * cur - up
        up = cur
        cur = down
        m -= 1
        if fabs(cur) > _RESCALE:
            cur *= 1e-250
            up *= 1e-250
            for l in range(lmax + 2):
                tail[l] *= 1e-250
        if m <= lmax + 1:
            tail[m] = cur
    j0 = sin(x) / x
    j1 = sin(x) / (x * x) - cos(x) / x
    if fabs(tail[0]) >= fabs(tail[1]):
        scale = j0 / tail[0]
    else:
        scale = j1 / tail[1]
    for l in range(lmax + 1):
        j[l] = tail[l] * scale
    if lmax == 0:
        jp[0] = (x * cos(x) - sin(x)) / (x * x)
    else:
        jp[0] = -j[1]
        for l in range(1, lmax + 1):
            jp[l] = j[l - 1] - (l + 1) / x * j[l]
    return j, jp


cdef double _j_series(int l, double x):
    cdef double lead = 1.0
    cdef double term = 1.0
    cdef double total = 1.0
    cdef int i, k
    for i in range(1, l + 1):
        lead *= x / (2 * i + 1)
    for k in range(1, 12):
        term *= -0.5 * x * x / (k * (2 * l + 2 * k + 1))
        total += term
        if fabs(term) < 1e-18 * fabs(total):
            break
    return lead * total


def sph_yn_arr(int lmax, double x):
    """Spherical Bessel y_l(x) and y_l'(x) for l = 0..lmax, x > 0."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.zeros(lmax + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yp = np.zeros(lmax + 1)
    cdef double sx = sin(x)
    cdef double cx = cos(x)
    cdef int l
    y[0] = -cx / x
    yp[0] = sx / x + cx / (x * x)
    if lmax == 0:
        return y, yp
    y[1] = -cx / (x * x) - sx / x
    for l in range(1, lmax):
        y[l + 1] = (2 * l + 1) / x * y[l] - y[l - 1]
    for l in range(1, lmax + 1):
        yp[l] = y[l - 1] - (l + 1) / x * y[l]
    return y, yp


def norm_legendre_grad(int lmax, double ct, double st):
    """Orthonormalized Legendre table and theta derivative, [l, m] layout."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] T = np.zeros((lmax + 1, lmax + 1))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dT = np.zeros((lmax + 1, lmax + 1))
    cdef int l, m
    cdef double a, b, t
    T[0, 0] = 0.28209479177387814
    for m in range(1, lmax + 1):
        T[m, m] = T[m - 1, m - 1] * st * sqrt((2 * m + 1) / (2.0 * m))
    for m in range(0, lmax):
        T[m + 1, m] = ct * sqrt(2 * m + 3.0) * T[m, m]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = sqrt((2 * l - 1.0) * (2 * l + 1.0) / ((l - m) * (l + m)))
            b = sqrt(
                (2 * l + 1.0) * (l - 1 - m) * (l - 1 + m)
                / ((2 * l - 3.0) * (l - m) * (l + m))
            )
            T[l, m] = a * ct * T[l - 1, m] - b * T[l - 2, m]
    for l in range(1, lmax + 1):
        dT[l, 0] = -sqrt(l * (l + 1.0)) * T[l, 1]
        for m in range(1, l + 1):
            t = sqrt((l + m) * (l - m + 1.0)) * T[l, m - 1]
            if m + 1 <= l:
                t -= sqrt((l - m) * (l + m + 1.0)) * T[l, m + 1]
            dT[l, m] = 0.5 * t
    return T, dT


def harm_row(int lmax, double theta, double phi):
    """Flat array of Y_l^s(theta, phi) for l <= lmax, index l*(l+1)+s."""
    return harm_row_grad(lmax, theta, phi)[0]


def harm_row_grad(int lmax, double theta, double phi):
    """Harmonic row plus theta and phi derivatives (three flat arrays)."""
    cdef double ct = cos(theta)
    cdef double st = sin(theta)
    T_, dT_ = norm_legendre_grad(lmax, ct, st)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] T = T_
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dT = dT_
    cdef int n = (lmax + 1) * (lmax + 1)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] Y = np.zeros(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] Yt = np.zeros(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] Yp = np.zeros(n, dtype=np.complex128)
    cdef int l, s, m, base
    cdef double complex e
    for l in range(lmax + 1):
        base = l * (l + 1)
        for s in range(-l, l + 1):
            e = cos(s * phi) + 1j * sin(s * phi)
            m = s if s >= 0 else -s
            Y[base + s] = T[l, m] * e
            Yt[base + s] = dT[l, m] * e
            Yp[base + s] = 1j * s * T[l, m] * e
    return Y, Yt, Yp
