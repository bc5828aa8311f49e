"""Domain-separated hashing into the scalar field, plus the KEM's KDF."""

from __future__ import annotations

import hashlib

from cryptography.hazmat.primitives.hashes import SHA256
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .curve import ORDER

TAG_CAPSULE_CHECK = b"ehrshare/pre/capsule-check/v1"
TAG_NON_INTERACTIVE = b"ehrshare/pre/non-interactive/v1"
TAG_SHARE_INDEX = b"ehrshare/pre/share-index/v1"
TAG_FRAGMENT_PROOF = b"ehrshare/pre/fragment-proof/v1"
TAG_KFRAG_SIGNATURE = b"ehrshare/pre/kfrag-signature/v1"
_KDF_INFO = b"ehrshare/pre/kem-kdf/v1"

SYMMETRIC_KEY_SIZE = 32


def hash_to_scalar(tag: bytes, *parts: bytes) -> int:
    """Map length-prefixed inputs to a nonzero scalar.

    A 512-bit digest reduced mod (order - 1) keeps the bias below 2^-256.
    """
    hasher = hashlib.sha512()
    hasher.update(len(tag).to_bytes(4, "big"))
    hasher.update(tag)
    for part in parts:
        hasher.update(len(part).to_bytes(4, "big"))
        hasher.update(part)
    return int.from_bytes(hasher.digest(), "big") % (ORDER - 1) + 1


def derive_symmetric_key(shared_point_bytes: bytes) -> bytes:
    """HKDF-SHA256 over the compressed shared-secret point."""
    hkdf = HKDF(algorithm=SHA256(), length=SYMMETRIC_KEY_SIZE, salt=None, info=_KDF_INFO)
    return hkdf.derive(shared_point_bytes)
