"""Builds the optional witness-scan extension.

The package works without the extension: relshap.kernels selects the
pure-Python fallback at import time when the compiled module is missing
(or when RELSHAP_PURE is set).  Set RELSHAP_NO_EXT=1 to skip the build.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RELSHAP_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "relshap._evalcore",
                    ["src/relshap/_evalcore.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
