"""Backend selection for the ADMM hot loop.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
fallback. Setting ``SIGNEDGL_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _fallback

_FORCE_PURE = os.environ.get("SIGNEDGL_PURE_PYTHON", "") not in ("", "0")

try:
    if _FORCE_PURE:
        raise ImportError("pure-python backend requested")
    from . import _core as _backend
    BACKEND = "compiled"
except ImportError:
    _backend = _fallback
    BACKEND = "python"

KERNEL_NAMES = ("q_apply", "qt_apply", "woodbury_combine", "z_project", "dual_step", "p_norm_sq")


def get_backend(name=None):
    """Return the kernel module for ``name`` ("compiled", "python" or None for active)."""
    if name is None:
        return _backend
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")


q_apply = _backend.q_apply
qt_apply = _backend.qt_apply
woodbury_combine = _backend.woodbury_combine
z_project = _backend.z_project
dual_step = _backend.dual_step
p_norm_sq = _backend.p_norm_sq
