"""Worker pool sizing shared by the solvers and the bench harness."""

from __future__ import annotations

import os


def pool_size(requested: int) -> int:
    """Clamp a requested worker count by the FORGE_THREADS env cap."""
    if requested < 1:
        raise ValueError("worker count must be positive")
    cap = os.environ.get("FORGE_THREADS")
    if cap is None:
        return requested
    return max(1, min(requested, int(cap)))
