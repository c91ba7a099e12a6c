"""Builds the optional compiled denotation kernel.

If Cython or a C++ compiler is missing the package installs without it and
falls back to the pure-Python kernel at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: native kernel not built ({exc}); using the Python kernel")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: {ext.name} not built ({exc}); using the Python kernel")


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("hdrsafe._denote_ext", ["src/hdrsafe/_denote_ext.pyx"], language="c++")],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
