import os

import numpy as np
from setuptools import Extension, setup

# CLONAL_RECUR_PURE=1 skips the compiled kernel; the pure-Python one is used instead.
ext_modules = []
if not os.environ.get("CLONAL_RECUR_PURE"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "clonal_recur.simulate._ckernel",
                ["src/clonal_recur/simulate/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: results must match the pure-Python kernel bit for bit
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
