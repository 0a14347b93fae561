"""Build script.

The package is pure Python except for one optional Cython extension,
qpersuade._simcore, which accelerates the discrete-event simulation loop.
If Cython or a C compiler is unavailable the build falls back to the pure
Python kernel (qpersuade._simcore_py) with identical numerical behavior.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    import os

    if not os.path.exists("src/qpersuade/_simcore.pyx"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    ext = Extension(
        "qpersuade._simcore",
        sources=["src/qpersuade/_simcore.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


class optional_build_ext(build_ext):
    """Build the extension if possible; never fail the install over it."""

    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:  # missing compiler, broken toolchain
            print(f"warning: skipping C extension build ({exc}); "
                  "the pure Python simulation kernel will be used",
                  file=sys.stderr)

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); "
                  "the pure Python simulation kernel will be used",
                  file=sys.stderr)


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
