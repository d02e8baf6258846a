"""Kernel backend selection.

The compiled extension is used when built; otherwise (or when RELSHAP_PURE
is set to a non-empty value other than "0") the pure-Python fallback runs.
Both backends produce bit-identical results; only throughput differs.
"""

from __future__ import annotations

import os

from . import _evalcore_py

try:
    from . import _evalcore  # type: ignore[attr-defined]
except ImportError:
    _evalcore = None

_FORCE_PURE = os.environ.get("RELSHAP_PURE", "") not in ("", "0")

BACKEND = "python" if (_FORCE_PURE or _evalcore is None) else "c"


def active_backend() -> str:
    return BACKEND


def compiled_available() -> bool:
    return _evalcore is not None


def compiled_module():
    return _evalcore


def python_module():
    return _evalcore_py
