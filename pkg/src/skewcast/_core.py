"""Selects the compiled filter recursion, falling back to pure NumPy.

Set the environment variable ``SKEWCAST_PURE_PYTHON=1`` to force the
fallback even when the extension built.
"""

import os

from . import _recursion_py

try:
    from . import _recursion as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None


def _env_forces_python() -> bool:
    return os.environ.get("SKEWCAST_PURE_PYTHON", "").lower() in ("1", "true", "yes")


HAVE_COMPILED = _compiled is not None
USE_COMPILED = HAVE_COMPILED and not _env_forces_python()


def get_filter_core(force_python=None):
    """Return the active filter_core callable."""
    if force_python is None:
        force_python = not USE_COMPILED
    if force_python or _compiled is None:
        return _recursion_py.filter_core
    return _compiled.filter_core
