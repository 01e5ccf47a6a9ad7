"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; set
SONGWRITER_PURE_PYTHON=1 to force the numpy fallback. `use_backend` swaps the
active backend in-process (used by the parity tests and the benchmark); it is
not thread-safe and should be called before any model work starts.
"""

from __future__ import annotations

import os

from . import _kernels_np

_compiled = None
if os.environ.get("SONGWRITER_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None

_active = _compiled if _compiled is not None else _kernels_np


def available_backends() -> list[str]:
    names = ["numpy"]
    if _compiled is not None:
        names.append("compiled")
    return names


def backend_name() -> str:
    return _active.BACKEND


def use_backend(name: str):
    """Select "numpy" or "compiled"; returns the module that is now active."""
    global _active
    if name == "numpy":
        _active = _kernels_np
    elif name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel extension is not available")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _active


def get_backend(name: str | None = None):
    """Return a backend module without changing the active selection."""
    if name is None:
        return _active
    if name == "numpy":
        return _kernels_np
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel extension is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def gru_forward(*args):
    return _active.gru_forward(*args)


def gru_backward(*args):
    return _active.gru_backward(*args)
