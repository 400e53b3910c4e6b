"""Build script: compiles the optional tracking-kernel extension.

The compiled kernel is an accelerator only; if Cython or a C compiler is
unavailable the package installs anyway and falls back to the pure-Python
implementation at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("reordernet._tracker_cy", ["src/reordernet/_tracker_cy.pyx"])],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
