"""Injectable randomness for the engine.

Every randomized operation takes an ``EntropySource`` so tests can pin
byte streams. The default source wraps ``secrets`` and is safe to share
across threads (it has no state of its own).
"""

from __future__ import annotations

import secrets
from typing import Protocol, runtime_checkable

from .errors import EntropyError

# Scalars are sampled by rejection so the distribution over [1, order) is
# uniform and a zero draw is provably re-drawn rather than remapped.
_MAX_REJECTION_ROUNDS = 1024


@runtime_checkable
class EntropySource(Protocol):
    def random_bytes(self, n: int) -> bytes:
        """Return ``n`` cryptographically secure random bytes."""
        ...


class SystemEntropy:
    """OS-backed entropy (``secrets.token_bytes``)."""

    def random_bytes(self, n: int) -> bytes:
        return secrets.token_bytes(n)


DEFAULT_ENTROPY = SystemEntropy()


def draw_bytes(entropy: EntropySource, n: int) -> bytes:
    try:
        data = entropy.random_bytes(n)
    except Exception as exc:  # entropy failure is unrecoverable by contract
        raise EntropyError(f"entropy source failed: {exc}") from exc
    if not isinstance(data, bytes) or len(data) != n:
        raise EntropyError("entropy source returned malformed output")
    return data


def random_scalar(entropy: EntropySource, order: int) -> int:
    """Sample a uniform nonzero scalar below ``order`` by rejection."""
    size = (order.bit_length() + 7) // 8
    for _ in range(_MAX_REJECTION_ROUNDS):
        candidate = int.from_bytes(draw_bytes(entropy, size), "big")
        if 0 < candidate < order:
            return candidate
    raise EntropyError("entropy source failed to produce a valid scalar")
