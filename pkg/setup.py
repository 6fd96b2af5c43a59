"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time); set KGP_SKIP_EXT=1 to force a pure-Python build.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("KGP_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "kgprune._kernels._fastops",
                    ["src/kgprune/_kernels/_fastops.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
