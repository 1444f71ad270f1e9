"""Build script for the compiled agglomeration kernel.

The package works without the extension (a NumPy fallback is selected at
import time); set TREEMIMIC_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("TREEMIMIC_NO_EXT") != "1":
    ext = Extension(
        "treemimic._ward_cy",
        ["src/treemimic/_ward_cy.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off: the fallback kernel must stay bit-identical, so
        # the compiler may not fuse multiply-adds the NumPy path cannot fuse.
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
