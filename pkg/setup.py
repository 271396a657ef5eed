"""Build script for the optional compiled kernels.

The package is fully functional without the extension: cptquit._kernels
falls back to pure-Python implementations when the compiled module is
missing, so any build failure here is demoted to a warning.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise continue without it."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"compiled kernels skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernels skipped for {ext.name}: {exc}")


def extensions():
    import os

    if not os.path.exists("src/cptquit/_kernels/_core.pyx"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; using pure-Python kernels")
        return []
    try:
        import numpy
    except ImportError:
        warnings.warn("numpy headers not available; using pure-Python kernels")
        return []
    ext = Extension(
        "cptquit._kernels._core",
        sources=["src/cptquit/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        libraries=["m"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
