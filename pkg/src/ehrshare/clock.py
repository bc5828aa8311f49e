"""Injectable time source so expiry logic is testable without sleeping."""

from __future__ import annotations

import time
from typing import Callable

Clock = Callable[[], float]


def system_clock() -> float:
    return time.time()
