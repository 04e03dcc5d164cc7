import numpy
from setuptools import setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize(
        "src/urbantier/_kernels/_hist.pyx",
        compiler_directives={"language_level": 3},
    ),
    include_dirs=[numpy.get_include()],
)
