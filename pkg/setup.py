"""Build script: compiles the optional trajectory-sampling extension.

The package works without the extension (a pure-Python twin is selected at
import time); building it just makes bulk protocol statistics much faster.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/anyonsim/_trajkernel.pyx"],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
