"""Build script: compiles the optional fast kernels when Cython is available.

The package works without the extension (a numpy fallback is selected at
import time), so the build degrades gracefully on machines without a
compiler or Cython.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("UAVHMMA_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "uavhmma.kernels._core",
                    sources=["src/uavhmma/kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
