"""Backend selection for the sequence kernels.

The compiled extension is used when importable; ``GDRB_PURE_PYTHON=1``
forces the numpy fallback.  Both expose ``survival_batch`` and
``enumerate_average`` with identical arguments.
"""
import os

from . import _pykernels
from .errors import ValidationError

try:
    if os.environ.get("GDRB_PURE_PYTHON", "").strip() not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _ckernels
except ImportError:
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

DEFAULT_BACKEND = "cython" if _ckernels is not None else "python"


def get_backend(name=None):
    name = name or DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValidationError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
