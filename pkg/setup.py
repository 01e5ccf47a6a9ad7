"""Build script: compiles the optional GRU kernel extension when Cython is available.

A plain `pip install .` without Cython (or without a C compiler) still produces a
working package; the numpy kernel backend is selected at import time instead.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "songwriter.nn._kernels",
                ["src/songwriter/nn/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
