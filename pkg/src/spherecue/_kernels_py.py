"""Pure NumPy implementations of the recurrence kernels.

Interface twin of the compiled ``_speckern`` extension; selected by
``spherecue.kernels`` when the extension is unavailable (or forced via
``SPHERECUE_PURE_PYTHON=1``).

Conventions: spherical harmonics are orthonormal with the Legendre part
taken positive (no Condon-Shortley factor); flat harmonic index is
``l*(l+1) + s``.
"""

import numpy as np

BACKEND = "python"

# Below this argument the downward Bessel recurrence is replaced by the
# ascending series to avoid cancellation.
_SMALL_X = 1e-2
_RESCALE = 1e250


def sph_jn_arr(lmax, x):
    """Spherical Bessel j_l(x) and j_l'(x) for l = 0..lmax, x >= 0."""
    j = np.zeros(lmax + 1)
    jp = np.zeros(lmax + 1)
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

    # Downward recurrence from a start order safely inside the decaying
    # regime; renormalize against the larger of j_0, j_1 (they have no
    # common zero).
    m_start = int(max(lmax, x)) + 26 + int(2.0 * np.sqrt(max(lmax, x)))
    tail = np.zeros(lmax + 2)
    up = 0.0      # unnormalized value at order m+1
    cur = 1e-30   # unnormalized value at order m
    m = m_start
    if m <= lmax + 1:
        tail[m] = cur
    while m > 0:
        down = (2 * m + 1) / x * cur - up
        up = cur
        cur = down
        m -= 1
        if abs(cur) > _RESCALE:
            cur *= 1e-250
            up *= 1e-250
            tail *= 1e-250
        if m <= lmax + 1:
            tail[m] = cur
    j0 = np.sin(x) / x
    j1 = np.sin(x) / (x * x) - np.cos(x) / x
    if abs(tail[0]) >= abs(tail[1]):
        scale = j0 / tail[0]
    else:
        scale = j1 / tail[1]
    j[:] = tail[: lmax + 1] * scale
    if lmax == 0:
        jp[0] = (x * np.cos(x) - np.sin(x)) / (x * x)
    else:
        jp[0] = -j[1]
        for l in range(1, lmax + 1):
            jp[l] = j[l - 1] - (l + 1) / x * j[l]
    return j, jp


def _j_series(l, x):
    # j_l(x) = x^l/(2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)..(2l+2k+1))
    lead = 1.0
    for i in range(1, l + 1):
        lead *= x / (2 * i + 1)
    term = 1.0
    total = 1.0
    for k in range(1, 12):
        term *= -0.5 * x * x / (k * (2 * l + 2 * k + 1))
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return lead * total


def sph_yn_arr(lmax, x):
    """Spherical Bessel y_l(x) and y_l'(x) for l = 0..lmax, x > 0."""
    y = np.zeros(lmax + 1)
    yp = np.zeros(lmax + 1)
    sx, cx = np.sin(x), np.cos(x)
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


def norm_legendre_grad(lmax, ct, st):
    """Orthonormalized Legendre table and its theta derivative.

    Returns (T, dT), each of shape (lmax+1, lmax+1) indexed [l, m] with
    m <= l, where T[l, m] * exp(i m phi) is the spherical harmonic of
    nonnegative order m.  No Condon-Shortley factor.
    """
    T = np.zeros((lmax + 1, lmax + 1))
    dT = np.zeros((lmax + 1, lmax + 1))
    T[0, 0] = 0.28209479177387814  # 1/sqrt(4 pi)
    for m in range(1, lmax + 1):
        T[m, m] = T[m - 1, m - 1] * st * np.sqrt((2 * m + 1) / (2.0 * m))
    for m in range(0, lmax):
        T[m + 1, m] = ct * np.sqrt(2 * m + 3.0) * T[m, m]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((2 * l - 1.0) * (2 * l + 1.0) / ((l - m) * (l + m)))
            b = np.sqrt(
                (2 * l + 1.0) * (l - 1 - m) * (l - 1 + m)
                / ((2 * l - 3.0) * (l - m) * (l + m))
            )
            T[l, m] = a * ct * T[l - 1, m] - b * T[l - 2, m]
    for l in range(1, lmax + 1):
        dT[l, 0] = -np.sqrt(l * (l + 1.0)) * T[l, 1]
        for m in range(1, l + 1):
            t = np.sqrt((l + m) * (l - m + 1.0)) * T[l, m - 1]
            if m + 1 <= l:
                t -= np.sqrt((l - m) * (l + m + 1.0)) * T[l, m + 1]
            dT[l, m] = 0.5 * t
    return T, dT


def harm_row(lmax, theta, phi):
    """Flat array of Y_l^s(theta, phi) for l <= lmax, index l*(l+1)+s."""
    return harm_row_grad(lmax, theta, phi)[0]


def harm_row_grad(lmax, theta, phi):
    """Harmonic row plus theta and phi derivatives (three flat arrays)."""
    ct, st = np.cos(theta), np.sin(theta)
    T, dT = norm_legendre_grad(lmax, ct, st)
    n = (lmax + 1) * (lmax + 1)
    Y = np.zeros(n, dtype=np.complex128)
    Yt = np.zeros(n, dtype=np.complex128)
    Yp = np.zeros(n, dtype=np.complex128)
    for l in range(lmax + 1):
        base = l * (l + 1)
        for s in range(-l, l + 1):
            e = np.exp(1j * s * phi)
            m = abs(s)
            Y[base + s] = T[l, m] * e
            Yt[base + s] = dT[l, m] * e
            Yp[base + s] = 1j * s * T[l, m] * e
    return Y, Yt, Yp
