"""Build script for the compiled nearest-neighbor kernel.

The extension is optional: if it fails to build (or was never built), the
package falls back to a numpy implementation selected at import time in
``oridist.kernels``.
"""
import numpy
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"WARNING: compiled kernel not built ({exc}); "
                  "using numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "using numpy fallback")


ext = Extension(
    "oridist._kernels",
    sources=["src/oridist/_kernels.pyx"],
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3", "-fopenmp"],
    extra_link_args=["-fopenmp"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

try:
    from Cython.Build import cythonize
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    print("WARNING: Cython not available; using numpy fallback")
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
