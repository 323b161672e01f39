"""Optional compiled-kernel build.

The package is pure Python by default; when Cython and a C compiler are
available the hot Monte Carlo kernels compile to an extension module that
the package picks up automatically at import.  Build in place with:

    python3 setup.py build_ext --inplace

Build failures degrade gracefully to the numpy implementations.
"""
import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler and friends
            warnings.warn(f"compiled kernels skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel {ext.name} skipped: {exc}")


ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/sigpole/_accel/_ckernels.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
