"""
Kernel selection. The compiled extension is used when importable; setting
``QWPLANE_BACKEND=python`` forces the numpy fallback.
"""
import os

from . import _kernels_py

kernels = _kernels_py
name = "python"

if os.environ.get("QWPLANE_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as kernels  # noqa: F811
        name = "cython"
    except ImportError:
        pass


def get(backend=None):
    """Return the kernel module for ``backend`` (``None`` = the active default)."""
    if backend is None:
        return kernels
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {backend!r}")
