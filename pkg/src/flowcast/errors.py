"""Error type shared by every flowcast module.

Operations signal contract violations with a short machine-readable code
(e.g. ``insufficient-data``, ``bad-parameter``) so callers and the CLI can
branch on the failure class without parsing messages.
"""

from __future__ import annotations


class FlowcastError(Exception):
    """Raised when an operation's precondition or contract is violated."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


# Codes that indicate a bad knob/argument rather than bad input data.
# The CLI maps these to usage errors (exit 1); everything else is a data
# error (exit 2).
USAGE_CODES = frozenset(
    {"bad-parameter", "bad-window", "non-finite-grid", "bad-config"}
)
