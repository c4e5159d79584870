"""Build script: compiles the routing hot kernel with Cython when possible.

The kernel source (src/anycastte/routing/_kernel.py) is plain Python and is
cythonized as-is; the compiled module shadows the .py at import time.  If
Cython or a C compiler is unavailable the package still works, just slower.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/anycastte/routing/_kernel.py"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
