"""Kernel backend selection.

The compiled extension is used when importable; set ``CCFBETA_PURE_PYTHON=1``
to force the numpy fallback. Both backends produce identical Monte Carlo
counts and agree on exact probabilities to rounding.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS: dict[str, ModuleType] = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("CCFBETA_PURE_PYTHON", "") not in ("1", "true"):
    DEFAULT = "compiled"
else:
    DEFAULT = "python"


def get_backend(name: str | None = None) -> ModuleType:
    name = name or DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"kernel backend {name!r} unavailable (have: {', '.join(sorted(BACKENDS))})"
        ) from None
