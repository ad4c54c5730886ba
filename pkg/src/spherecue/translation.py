"""Coaxial multipole re-expansion (translation) matrices.

For a translation by ``t = tau * zhat`` the coefficients defined here satisfy

    X_m^s(y + t) = sum_l  C[m, l]  R_l^s(y),

where ``X`` is the regular basis ``R_l^s = j_l(kr) Y_l^s`` (valid for all y,
the R|R kind) or the singular basis ``S_l^s = h_l(kr) Y_l^s`` (valid for
|y| < |tau|, the S|R kind).  Orders decouple, and the coefficients are
identical for orders +s and -s.

Construction is by the Gegenbauer linearization

    C^s_{m,l} = i^(l-m) sum_q i^q (2q+1) f_q(k|tau|) (+-1)^q g^s_{q,m,l},

with f = j (R|R) or h (S|R), the sign (-1)^q for translations along -z, and
g^s_{q,m,l} the Legendre-harmonic linearization integrals evaluated by exact
Gauss-Legendre quadrature with q restricted to |m-l| <= q <= m+l and
q + m + l even.  Every coefficient is dominated by a single q term (the
smallest surviving q for the regular kind, the largest for the singular
kind), so each entry carries full relative accuracy at any table size.  The
classic seed-plus-degree-recurrence construction loses exactly that
property once the table extends far beyond degree k|tau|, and the solver's
elimination products amplify those entry errors catastrophically; the
linearization sum is used for both kinds instead.  Correctness is anchored
to the addition-theorem field oracle in the test suite.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import kernels, specfun

#: Extra degrees carried by callers that square translation blocks against
#: each other; entries themselves are exact at any size.
PAD = 4


@dataclass(frozen=True)
class TranslationMatrix:
    """Dense per-order coaxial re-expansion block.

    ``entries[i, j]`` holds the coefficient coupling source degree
    ``|s| + i`` to target degree ``|s| + j``; ``apply`` maps source-side
    coefficient vectors to target-side ones.
    """

    order_s: int
    entries: np.ndarray
    kind: str            # "SR" or "RR"
    kt: float            # k * |tau|, dimensionless
    direction_sign: int  # +1 for translation along +z, -1 along -z

    def apply(self, coeffs):
        """Target coefficients for source-side ``coeffs`` (length p - |s|)."""
        return self.entries.T @ coeffs

    @property
    def size(self):
        return self.entries.shape[0]


class _GegenbauerTables:
    """Shared node tables plus lazily-built per-order blocks."""

    def __init__(self, kind, k, tau, p):
        lmax = p - 1
        qmax = 2 * lmax
        x = abs(k * tau)
        if kind == "RR":
            rad, _ = specfun.bessel_j_arr(qmax, x)
            rad = rad.astype(np.complex128)
        else:
            rad, _ = specfun.hankel_h1_arr(qmax, x)
        qs = np.arange(qmax + 1)
        qsign = np.where(qs % 2 == 1, -1.0, 1.0) if tau < 0 else np.ones(qmax + 1)
        self._fq = (1j ** (qs % 4)) * (2.0 * qs + 1.0) * rad * qsign
        self._qs = qs
        self._p = p

        nodes, w = leggauss(2 * p + 2)
        st = np.sqrt(1.0 - nodes * nodes)
        self._Tn = np.stack(
            [kernels.norm_legendre_grad(lmax, c, s)[0] for c, s in zip(nodes, st)]
        )
        Pq = np.zeros((len(nodes), qmax + 1))
        Pq[:, 0] = 1.0
        if qmax >= 1:
            Pq[:, 1] = nodes
        for q in range(1, qmax):
            Pq[:, q + 1] = ((2 * q + 1) * nodes * Pq[:, q] - q * Pq[:, q - 1]) / (q + 1)
        self._wPq = (w[:, None] * Pq).T  # (q, nodes)
        self._blocks = {}

    def order(self, s):
        if s not in self._blocks:
            deg = np.arange(s, self._p)
            B = self._Tn[:, deg, s]  # (nodes, n)
            prod = B[:, :, None] * B[:, None, :]
            G = 2.0 * np.pi * np.einsum("qi,iml->qml", self._wPq, prod)
            msum = deg[:, None] + deg[None, :]
            mdiff = np.abs(deg[:, None] - deg[None, :])
            qgrid = self._qs[:, None, None]
            mask = (
                (qgrid >= mdiff[None])
                & (qgrid <= msum[None])
                & ((qgrid + msum[None]) % 2 == 0)
            )
            C = np.einsum("q,qml->ml", self._fq, np.where(mask, G, 0.0))
            C = C * 1j ** ((deg[None, :] - deg[:, None]) % 4)
            self._blocks[s] = np.ascontiguousarray(C)
        return self._blocks[s]


@lru_cache(maxsize=256)
def _cached_tables(kind, k, tau, p):
    return _GegenbauerTables(kind, float(k), float(tau), int(p))


def coaxial_rr(s, k, t_z, p):
    """Regular-to-regular coaxial block for order s at truncation p."""
    _check(s, p)
    if t_z == 0.0:
        ent = np.eye(p - abs(s), dtype=np.complex128)
        return TranslationMatrix(s, ent, "RR", 0.0, 1)
    ent = _cached_tables("RR", k, t_z, p).order(abs(s))
    return TranslationMatrix(s, ent, "RR", abs(k * t_z), 1 if t_z > 0 else -1)


def coaxial_sr(s, k, t_z, p):
    """Singular-to-regular coaxial block for order s at truncation p.

    Valid for evaluation points with |r| < |t_z| about the target center;
    singular at zero translation.
    """
    _check(s, p)
    if t_z == 0.0:
        raise ValueError("singular-to-regular translation undefined for t_z = 0")
    ent = _cached_tables("SR", k, t_z, p).order(abs(s))
    return TranslationMatrix(s, ent, "SR", abs(k * t_z), 1 if t_z > 0 else -1)


def _check(s, p):
    if p < abs(s) + 1:
        raise ValueError(f"truncation p={p} must be >= |s|+1 = {abs(s) + 1}")
