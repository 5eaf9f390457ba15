"""Build script: compiles the fused elementwise kernels when a C toolchain
is available. The package falls back to pure-numpy kernels at import time,
so a failed extension build only costs speed, never functionality."""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Make the compiled core optional: warn instead of failing the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, cythonize failure, ...
            print(
                f"WARNING: building the compiled kernel core failed ({exc}); "
                "falling back to the pure-numpy backend.",
                file=sys.stderr,
            )

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(
                f"WARNING: extension {ext.name} failed to build ({exc}); "
                "falling back to the pure-numpy backend.",
                file=sys.stderr,
            )


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "relunmd._backend._fused",
        sources=["src/relunmd/_backend/_fused.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
