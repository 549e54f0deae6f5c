"""Kernel backend selection.

The compiled extension is used when it imports; setting
``JUNCTIONSIM_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

if os.environ.get("JUNCTIONSIM_PURE_PYTHON") or _ckernels is None:
    kernels = _pykernels
else:
    kernels = _ckernels

BACKEND = kernels.NAME


def available():
    return sorted(_BACKENDS)


def get(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available()}") from None
