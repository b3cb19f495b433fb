"""Kernel backend selection.

Hot inner loops (the event-driven simulator and the trace-level policy
machines) exist twice: a numba @njit kernel and a line-for-line pure Python
twin.  Both consume the same numpy arrays and the same counter-seeded PRNG,
so they produce identical results; only speed differs.

Selection order:
  * CACHEQN_BACKEND=python  forces the pure Python lane
  * CACHEQN_BACKEND=numba   requires numba (raises if unavailable)
  * unset / auto            numba when importable, otherwise Python
"""

from __future__ import annotations

import os

ENV_VAR = "CACHEQN_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def selected_backend() -> str:
    """Return 'numba' or 'python' according to the environment."""
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAS_NUMBA else "python"
    if choice == "numba":
        if not HAS_NUMBA:
            raise RuntimeError(
                "CACHEQN_BACKEND=numba but numba is not importable"
            )
        return "numba"
    if choice == "python":
        return "python"
    raise ValueError(f"unknown {ENV_VAR}={choice!r} (use numba|python|auto)")


def use_numba() -> bool:
    return selected_backend() == "numba"
