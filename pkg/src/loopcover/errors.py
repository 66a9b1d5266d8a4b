from __future__ import annotations


class InfeasibleError(RuntimeError):
    """Request exceeds a documented desk-scale cap (DP width, bridge length)."""
