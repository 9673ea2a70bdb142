"""Build script: compiles the optional Cython kernels.

The package works without the compiled extension (a pure-numpy fallback is
selected at import time), so the extension is marked optional and any
compilation failure is non-fatal.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "sgmnse.kernels._accel",
                ["src/sgmnse/kernels/_accel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
