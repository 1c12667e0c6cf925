from setuptools import setup, Extension

import numpy as np
from Cython.Build import cythonize

kernels = Extension(
    "gwmc._kernels",
    sources=["src/gwmc/_kernels.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([kernels], language_level=3))
