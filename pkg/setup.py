import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the numpy
# implementations in hexastyle.nn.kernels when the extension is missing.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "hexastyle.nn._kernels_cy",
                ["src/hexastyle/nn/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
