"""Backend selection for the hot kernels.

The compiled extension is preferred.  Setting ``RADIALCONE_PURE_PYTHON=1``
forces the numpy fallback; profiles without a kernel code always use it.
"""
import os

from . import _pykernels

python_backend = _pykernels

try:
    if os.environ.get("RADIALCONE_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _ckernels as compiled_backend
except ImportError:
    compiled_backend = None

BACKEND = "cython" if compiled_backend is not None else "python"


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return python_backend
    if name == "cython":
        if compiled_backend is None:
            raise ImportError("compiled kernels are not built")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")


def backend_for(profile, name=None):
    if profile.kernel_code < 0:
        return python_backend
    return get_backend(name)
