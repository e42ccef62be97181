import sys

from setuptools import setup

# The compiled kernel is optional: if Cython or a C toolchain is missing the
# package still installs and falls back to the numpy kernels at import time.
ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    compile_args = ["-O3"]
    if not sys.platform.startswith("win"):
        # fp-contract must stay off so the compiled kernels are bit-identical
        # to the numpy fallback (no fused multiply-add).
        compile_args += ["-ffp-contract=off"]

    ext_modules = cythonize(
        [
            Extension(
                "knncert._kernels._core",
                ["src/knncert/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=compile_args,
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover
    print(f"knncert: skipping compiled kernels ({exc}); using numpy fallback",
          file=sys.stderr)

setup(ext_modules=ext_modules)
