"""Backend selection for the numerical kernels.

The compiled extension is used when importable; otherwise the pure-Python
mirror is used. Set ``MEDALCAST_KERNELS=python`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("MEDALCAST_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback

css_residuals = _impl.css_residuals
css_sse = _impl.css_sse
css_nelder_mead = _impl.css_nelder_mead
jacobi_eigh = _impl.jacobi_eigh


def get_backend(name):
    """Return the kernel module for ``"python"`` or ``"compiled"``."""
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")

__all__ = ["BACKEND", "css_residuals", "css_sse", "css_nelder_mead", "jacobi_eigh", "get_backend"]
