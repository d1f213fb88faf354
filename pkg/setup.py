"""Build script: compiles the optional Cython block-assembly kernel.

The package works without the extension (a numpy fallback is selected at
import time); the Extension is marked optional so a missing compiler does
not break installation.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "emc._kernels._block_cy",
                ["src/emc/_kernels/_block_cy.pyx"],
                include_dirs=[numpy.get_include()],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
