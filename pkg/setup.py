import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    ext_modules = cythonize(
        [Extension("heavytail_ph._kernels",
                   ["src/heavytail_ph/_kernels.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API",
                                   "NPY_1_7_API_VERSION")])],
        language_level=3,
    )
except ImportError:
    # Pure-Python fallback kernels are used when Cython is unavailable.
    ext_modules = []

setup(ext_modules=ext_modules)
