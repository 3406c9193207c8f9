"""Pick the kernel implementation once, at import time.

The compiled ``_core`` extension is used when it was built; otherwise (or
when ``PRIVFEAT_PURE_PYTHON=1`` is set) the numpy versions in ``_pure``
are used. Both expose the same functions.
"""
import os

from . import _pure

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_forced_pure = os.environ.get("PRIVFEAT_PURE_PYTHON", "") in ("1", "true", "yes")
kernels = _pure if _core is None or _forced_pure else _core
BACKEND = "python" if kernels is _pure else "compiled"

nccf_track = kernels.nccf_track
dwt_step = kernels.dwt_step
knapsack_bb = kernels.knapsack_bb


def available():
    """Map of backend name to kernel module, for tests and benchmarks."""
    out = {"python": _pure}
    if _core is not None:
        out["compiled"] = _core
    return out
