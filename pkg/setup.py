import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "asyncrank.kernels._ckernels",
        ["src/asyncrank/kernels/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        # no FMA contraction: keeps results bitwise equal to the numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
