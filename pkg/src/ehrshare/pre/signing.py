"""Deterministic ECDSA over the engine's curve (RFC 6979 nonces, SHA-256).

Signatures are 64 bytes: r and s as 32-byte big-endian integers. Verification
is strict about ranges but deliberately returns a plain boolean; malformed
*containers* (wrong length) are the only decode-level failure.
"""

from __future__ import annotations

import hashlib
import hmac

from .curve import GENERATOR, ORDER, Point, SCALAR_SIZE

SIGNATURE_SIZE = 2 * SCALAR_SIZE


def _bits2int(data: bytes) -> int:
    value = int.from_bytes(data, "big")
    excess = len(data) * 8 - ORDER.bit_length()
    if excess > 0:
        value >>= excess
    return value


def _rfc6979_nonce(secret: int, digest: bytes) -> int:
    holder = b"\x01" * 32
    key = b"\x00" * 32
    secret_bytes = secret.to_bytes(32, "big")
    bits = (_bits2int(digest) % ORDER).to_bytes(32, "big")
    key = hmac.new(key, holder + b"\x00" + secret_bytes + bits, hashlib.sha256).digest()
    holder = hmac.new(key, holder, hashlib.sha256).digest()
    key = hmac.new(key, holder + b"\x01" + secret_bytes + bits, hashlib.sha256).digest()
    holder = hmac.new(key, holder, hashlib.sha256).digest()
    while True:
        holder = hmac.new(key, holder, hashlib.sha256).digest()
        candidate = _bits2int(holder)
        if 1 <= candidate < ORDER:
            yield candidate
        key = hmac.new(key, holder + b"\x00", hashlib.sha256).digest()
        holder = hmac.new(key, holder, hashlib.sha256).digest()


def sign(secret: int, message: bytes) -> bytes:
    """Sign a message; deterministic for a fixed (secret, message) pair."""
    digest = hashlib.sha256(message).digest()
    z = _bits2int(digest) % ORDER
    for k in _rfc6979_nonce(secret, digest):
        r = (k * GENERATOR).x % ORDER
        if r == 0:
            continue
        s = (z + r * secret) * pow(k, -1, ORDER) % ORDER
        if s == 0:
            continue
        return r.to_bytes(32, "big") + s.to_bytes(32, "big")
    raise AssertionError("unreachable: RFC 6979 stream exhausted")


def verify(verifying: Point, message: bytes, signature: bytes) -> bool:
    if len(signature) != SIGNATURE_SIZE or verifying.is_identity:
        return False
    r = int.from_bytes(signature[:32], "big")
    s = int.from_bytes(signature[32:], "big")
    if not (1 <= r < ORDER and 1 <= s < ORDER):
        return False
    z = _bits2int(hashlib.sha256(message).digest()) % ORDER
    w = pow(s, -1, ORDER)
    candidate = (z * w % ORDER) * GENERATOR + (r * w % ORDER) * verifying
    if candidate.is_identity:
        return False
    return candidate.x % ORDER == r
