"""Build script for the optional compiled split-search kernel.

The package works without the extension: cropshift.classify falls back to a
pure-numpy kernel at import time if the compiled module is missing.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "cropshift.classify._split_fast",
                ["src/cropshift/classify/_split_fast.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
