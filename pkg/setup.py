"""Build script for the optional compiled group-arithmetic kernel.

The package is fully functional without the extension (a pure-Python
kernel is selected at import time), so a failed compile downgrades to a
warning instead of aborting the install.  Set FLAGLESS_SKIP_EXT=1 to
skip the extension build entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain, ...
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        print(
            "WARNING: could not build the compiled ed25519 kernel "
            f"({exc!r}); falling back to the pure-Python kernel",
            file=sys.stderr,
        )


ext_modules = []
cmdclass = {}
if not os.environ.get("FLAGLESS_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "flagless._ed25519_ckernel",
                    ["src/flagless/_ed25519_ckernel.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
        cmdclass["build_ext"] = optional_build_ext
    except ImportError:
        print(
            "WARNING: Cython not available; installing with the pure-Python "
            "ed25519 kernel only",
            file=sys.stderr,
        )

setup(ext_modules=ext_modules, cmdclass=cmdclass)
