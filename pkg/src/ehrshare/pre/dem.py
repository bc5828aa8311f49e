"""Payload encryption: ChaCha20-Poly1305 bound to the capsule bytes.

The serialized capsule rides along as associated data, so a ciphertext
only ever opens under the exact (key, capsule) pair it was sealed with;
swapping capsules between records is an authentication failure, not a
wrong-plaintext hazard.
"""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from .entropy import DEFAULT_ENTROPY, EntropySource, draw_bytes
from .errors import DecryptionError, DeserializationError, MessageTooLargeError
from .kem import Capsule, SymmetricKey

NONCE_SIZE = 12
DEFAULT_MAX_PLAINTEXT = 64 * 1024 * 1024


@dataclass(frozen=True)
class Ciphertext:
    """AEAD envelope; ``associated_data`` is the serialized capsule."""

    nonce: bytes
    body: bytes
    associated_data: bytes

    def to_bytes(self) -> bytes:
        return (
            self.nonce
            + len(self.associated_data).to_bytes(4, "big")
            + self.associated_data
            + self.body
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ciphertext":
        if len(data) < NONCE_SIZE + 4:
            raise DeserializationError("ciphertext too short")
        nonce = data[:NONCE_SIZE]
        aad_len = int.from_bytes(data[NONCE_SIZE : NONCE_SIZE + 4], "big")
        aad_end = NONCE_SIZE + 4 + aad_len
        if len(data) < aad_end:
            raise DeserializationError("ciphertext associated data truncated")
        return cls(nonce=nonce, body=data[aad_end:], associated_data=data[NONCE_SIZE + 4 : aad_end])


def dem_encrypt(
    key: SymmetricKey,
    plaintext: bytes,
    capsule: Capsule,
    entropy: EntropySource = DEFAULT_ENTROPY,
    max_plaintext: int = DEFAULT_MAX_PLAINTEXT,
) -> Ciphertext:
    if len(plaintext) > max_plaintext:
        raise MessageTooLargeError(
            f"plaintext of {len(plaintext)} bytes exceeds the {max_plaintext}-byte limit"
        )
    nonce = draw_bytes(entropy, NONCE_SIZE)
    associated_data = capsule.to_bytes()
    body = ChaCha20Poly1305(key.data).encrypt(nonce, plaintext, associated_data)
    return Ciphertext(nonce=nonce, body=body, associated_data=associated_data)


def dem_decrypt(key: SymmetricKey, ciphertext: Ciphertext) -> bytes:
    try:
        return ChaCha20Poly1305(key.data).decrypt(
            ciphertext.nonce, ciphertext.body, ciphertext.associated_data
        )
    except InvalidTag as exc:
        # Wrong key, foreign capsule, and tampered body are indistinguishable.
        raise DecryptionError("payload authentication failed") from exc
