"""Injectable randomness sources.

Everything that consumes randomness takes an object with ``token_bytes`` and
``randbelow``.  Seeded runs use :class:`DeterministicRng`, a counter-mode
generator over SHA-256, so a seed fully determines every key, nonce and
dictionary position drawn from it.
"""

from __future__ import annotations

import hashlib
import secrets
from typing import Protocol


class RandomSource(Protocol):
    def token_bytes(self, n: int) -> bytes: ...

    def randbelow(self, n: int) -> int: ...


class DeterministicRng:
    """Counter-based generator: block i is SHA-256(seed || i)."""

    def __init__(self, seed: int | bytes | str):
        if isinstance(seed, int):
            seed = seed.to_bytes((max(seed.bit_length(), 1) + 7) // 8, "big", signed=False)
        elif isinstance(seed, str):
            seed = seed.encode("utf-8")
        self._seed = bytes(seed)
        self._counter = 0
        self._buffer = b""

    def _block(self) -> bytes:
        h = hashlib.sha256(self._seed + self._counter.to_bytes(8, "big"))
        self._counter += 1
        return h.digest()

    def token_bytes(self, n: int) -> bytes:
        while len(self._buffer) < n:
            self._buffer += self._block()
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("upper bound must be positive")
        nbytes = (n.bit_length() + 7) // 8
        excess = 8 * nbytes - n.bit_length()
        while True:
            v = int.from_bytes(self.token_bytes(nbytes), "big") >> excess
            if v < n:
                return v

    def fork(self, label: str) -> "DeterministicRng":
        """Independent child stream, derived without consuming this one."""
        return DeterministicRng(self._seed + b"/" + label.encode("utf-8"))


class SystemRng:
    """OS entropy, for unseeded CLI runs."""

    def token_bytes(self, n: int) -> bytes:
        return secrets.token_bytes(n)

    def randbelow(self, n: int) -> int:
        return secrets.randbelow(n)
