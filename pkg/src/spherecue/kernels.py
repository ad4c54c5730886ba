"""Kernel backend selection.

Imports the compiled extension ``spherecue._speckern`` when present and
falls back to the pure NumPy twin otherwise.  Set ``SPHERECUE_PURE_PYTHON=1``
to force the fallback (used by the parity tests and the benchmark).
"""

import os

if os.environ.get("SPHERECUE_PURE_PYTHON", "") == "1":
    from . import _kernels_py as impl
else:
    try:
        from . import _speckern as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as impl

BACKEND = impl.BACKEND

sph_jn_arr = impl.sph_jn_arr
sph_yn_arr = impl.sph_yn_arr
norm_legendre_grad = impl.norm_legendre_grad
harm_row = impl.harm_row
harm_row_grad = impl.harm_row_grad
