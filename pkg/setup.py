"""Build script: compiles the optional Cython kernel core.

The package is fully functional without the extension; ``hypcert.kernels``
falls back to the pure-Python twin when the compiled module is absent.
"""

from setuptools import Extension, setup


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "hypcert._kernels_cy",
        sources=["src/hypcert/_kernels_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # fp-contract off: fused multiply-adds would break the last-ulp
        # agreement contract with the pure-Python twin.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    try:
        return cythonize([ext], language_level=3)
    except Exception:
        # A broken toolchain must not make the pure-Python install fail.
        return []


setup(ext_modules=extensions())
