from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # numpy fallback only
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("wernerwit._kernels", ["src/wernerwit/_kernels.pyx"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
