import os

import numpy as np
from setuptools import Extension, setup

# Cython is optional at build time: without it the package installs and
# runs on the numpy fallback.
ext_modules = []
if not os.environ.get("RKHS_SEP_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "rkhs_sep._speedups",
                    ["src/rkhs_sep/_speedups.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
