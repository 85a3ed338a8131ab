"""Exception types shared across the package."""

from __future__ import annotations


class NumericalError(RuntimeError):
    """A computation left its validated regime (overflow guard, failed
    convergence, stability bound).  Distinct from ValueError so the CLI can
    map input problems and numerical failures to different exit codes."""
