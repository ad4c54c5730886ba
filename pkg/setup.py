"""Build the optional compiled kernel extension.

The package is fully functional without it (a pure NumPy twin is selected
at import time); when Cython and a C compiler are available the hot
recurrence kernels compile to ``spherecue._speckern``.
"""

import numpy
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/spherecue/_speckern.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(
    ext_modules=ext_modules,
    include_dirs=[numpy.get_include()],
)
