import numpy
from setuptools import setup
from setuptools.extension import Extension

# The compiled scan kernel is optional: the package falls back to the numpy
# implementation in lrpe.kernels when the extension is missing.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "lrpe.kernels._scan",
                ["src/lrpe/kernels/_scan.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
    for ext in extensions:
        ext.optional = True
except ImportError:
    extensions = []

setup(ext_modules=extensions)
