"""Build the optional compiled kernel core.

If Cython or a C compiler is unavailable the package still installs and
falls back to the numpy kernels at import time.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("AGGFLOW_NO_EXT", "0") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "aggflow._ckernels",
                    ["src/aggflow/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
