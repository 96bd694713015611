"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise, or when the
environment variable ``IHARDS_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy kernels are used. Both expose the same four functions.
"""

import os

from . import _numpy_kernels

numpy_kernels = _numpy_kernels

try:
    from . import _kernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None


def _select():
    if os.environ.get("IHARDS_PURE_PYTHON", "") not in ("", "0") or compiled_kernels is None:
        return "numpy", numpy_kernels
    return "cython", compiled_kernels


BACKEND, kernels = _select()


def available():
    names = ["numpy"]
    if compiled_kernels is not None:
        names.append("cython")
    return names


def get(name):
    if name == "numpy":
        return numpy_kernels
    if name == "cython":
        if compiled_kernels is None:
            raise ImportError("the compiled kernels are not built")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")
