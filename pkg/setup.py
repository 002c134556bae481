"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a vectorized NumPy
fallback is selected at import time), so any failure here degrades the
build to pure Python instead of aborting it.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "exodisk._kernels",
                ["src/exodisk/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    import sys

    print(f"exodisk: skipping Cython extension ({exc}); pure-Python build", file=sys.stderr)
    ext_modules = []

setup(ext_modules=ext_modules)
