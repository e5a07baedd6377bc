"""Build script.

The compiled quaternion/su(2) kernel extension is optional: if Cython or a
C compiler is unavailable the package installs anyway and falls back to the
pure-numpy kernels at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "gwlab._kernels_c",
                ["src/gwlab/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"gwlab: skipping compiled kernels ({exc}); pure-python fallback will be used")

setup(ext_modules=ext_modules)
