"""Proof-of-work ceiling on ``hash_uuid``.

An identity's unique identifier is ``seed || nonce`` where the seed is the
master key hash. Registration is admissible only when
``sha256(seed || nonce)``, read as a big-endian 256-bit integer, does not
exceed the configured threshold. Mining costs about ``2**256 / threshold``
hashes; verifying costs one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .codec import sha256
from .errors import Exhausted

MAX_THRESHOLD = 2**256 - 1
DEFAULT_DIFFICULTY_BITS = 4
NONCE_LEN = 8


@dataclass(frozen=True)
class PowThreshold:
    threshold: int

    def __post_init__(self):
        if not 0 < self.threshold <= MAX_THRESHOLD:
            raise ValueError("threshold must lie in (0, 2**256 - 1]")

    @classmethod
    def from_difficulty_bits(cls, bits: int) -> "PowThreshold":
        """Threshold ``2**(256 - bits)``: a random hash passes with odds 2**-bits."""
        if not 0 <= bits <= 255:
            raise ValueError("difficulty bits must lie in [0, 255]")
        return cls(min(2 ** (256 - bits), MAX_THRESHOLD))


DEFAULT_THRESHOLD = PowThreshold.from_difficulty_bits(DEFAULT_DIFFICULTY_BITS)


def encode_nonce(nonce: int) -> bytes:
    return nonce.to_bytes(NONCE_LEN, "big")


def uuid_bytes(seed: bytes, nonce: int) -> bytes:
    return bytes(seed) + encode_nonce(nonce)


def uuid_hash(seed: bytes, nonce: int) -> bytes:
    return sha256(uuid_bytes(seed, nonce))


def hash_value(digest: bytes) -> int:
    return int.from_bytes(digest, "big")


def _as_int(threshold) -> int:
    return threshold.threshold if isinstance(threshold, PowThreshold) else int(threshold)


def mine_uuid(seed: bytes, threshold, max_iters: int = 1 << 20) -> tuple[bytes, int]:
    """Return ``(uuid, nonce)`` for the smallest admissible nonce.

    Nonces are tried in the order 0, 1, 2, ... and at most ``max_iters``
    hashes are computed. Raises :class:`Exhausted` when none passes; the
    caller may retry with a different seed. ``threshold`` may be a
    :class:`PowThreshold` or a plain non-negative integer.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    limit = _as_int(threshold)
    for nonce in range(max_iters):
        if hash_value(uuid_hash(seed, nonce)) <= limit:
            return uuid_bytes(seed, nonce), nonce
    raise Exhausted(f"no admissible nonce in {max_iters} iterations")


def verify_uuid(identity, nonce: int, threshold) -> bool:
    """One-hash check that ``identity.hash_uuid`` is the mined hash for ``nonce``."""
    if not 0 <= nonce < 2 ** (8 * NONCE_LEN):
        return False
    digest = uuid_hash(identity.hash_m, nonce)
    return digest == identity.hash_uuid and hash_value(digest) <= _as_int(threshold)
