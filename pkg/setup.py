import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "microshear._kernels._radon_cy",
                ["src/microshear/_kernels/_radon_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # no Cython: install pure-python only, the kernel shim falls back at import
    ext_modules = []

setup(ext_modules=ext_modules)
