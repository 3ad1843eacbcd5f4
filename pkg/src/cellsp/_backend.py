"""Import-time selection between compiled and pure-Python kernels.

Set ``CELLSP_BACKEND=python`` to force the fallback even when the extension
is importable.
"""
import os

from . import _pykernels as python_kernels

try:
    if os.environ.get("CELLSP_BACKEND", "").lower() == "python":
        raise ImportError("fallback requested")
    from . import _ckernels as kernels

    BACKEND = "cython"
except ImportError:
    kernels = python_kernels
    BACKEND = "python"


def available_backends():
    """Return a name -> module mapping of every importable kernel set."""
    out = {"python": python_kernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


simple_cycles = kernels.simple_cycles
harmonic_loop = kernels.harmonic_loop
