import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "ksns._kernels._cykernels",
                ["src/ksns/_kernels/_cykernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # Pure-NumPy fallback backend is selected at import time when the
    # compiled core is unavailable.
    extensions = []

setup(ext_modules=extensions)
