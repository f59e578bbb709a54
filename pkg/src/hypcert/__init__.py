"""Numerical certification of uniform expansion and hyperbolicity."""

__version__ = "0.1.0"

from hypcert.kernels import BACKEND, backend

__all__ = ["BACKEND", "backend", "__version__"]
