"""Backend selection for the hot numerical loops.

The compiled ``_speedups`` extension is preferred; the numpy versions in
``_pure`` are used when it is missing or when ``RKHS_SEP_PURE`` is set to
a non-empty value other than ``0``.
"""
import os

from . import _pure

_force_pure = os.environ.get("RKHS_SEP_PURE", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure backend requested")
    from . import _speedups as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _pure
    BACKEND = "python"

moment_logs = _impl.moment_logs
bergman_values = _impl.bergman_values

__all__ = ["BACKEND", "moment_logs", "bergman_values"]
