from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class CheckReport:
    """Outcome of a single numerical check.

    ``value`` is the headline number (a constant, a max ratio, a residual);
    ``details`` holds whatever else the check wants to expose.
    """

    name: str
    value: float
    passed: bool
    details: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def __bool__(self) -> bool:
        return bool(self.passed)
