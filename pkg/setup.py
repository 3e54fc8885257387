"""Build script for the optional compiled kernels.

The package is fully functional without the extension (a pure-Python
backend is selected at import time); building it just makes the Monte
Carlo sweeps and exact enumerations which dominate runtime fast.

    pip install -e . --no-build-isolation
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/tc3d/kernels/_fast.pyx",
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
