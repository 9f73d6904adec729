import os

import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: without Cython (or with
# INTERCONVERT_NO_EXT=1) the package installs pure-Python and falls back
# to the numpy implementations at import time.
ext_modules = []
if not os.environ.get("INTERCONVERT_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "interconvert._kernels",
                    ["src/interconvert/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
