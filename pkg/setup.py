"""Build the optional compiled core.

The package works without it: ``privfeat._backend`` falls back to the
numpy implementations in ``privfeat._pure`` when the extension is absent.
"""
import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("PRIVFEAT_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "privfeat._core",
        ["src/privfeat/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=_extensions())
