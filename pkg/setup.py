"""Optional build of the compiled kernel core.

The package is fully functional without it (a numpy/scipy fallback is
selected at import); when Cython, numpy headers and a C compiler are
available the extension is built, either transparently during install or
in place via

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from setuptools import Extension
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension(
            "cnls._kernels._native",
            ["src/cnls/_kernels/_native.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
