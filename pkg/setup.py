"""Build the optional compiled simulation kernel.

The extension is skipped (pure-Python fallback) when Cython or a C compiler
is unavailable. ``-ffp-contract=off`` forbids fused multiply-add so the
compiled kernel reproduces the Python kernel bit for bit.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("VSSLAB_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("vsslab.sim._kernel", ["src/vsslab/sim/_kernel.pyx"],
                       extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
