"""Minimal HMAC-SHA256 JWT codec (RFC 7519 registered claims + extras).

Decoding is strict: every segment must be *canonical* base64url. Re-encoding
the decoded bytes must reproduce the presented segment, which closes the
lenient-decoder loophole where two distinct encodings share a decoding and
a flipped trailing character would otherwise slip past signature checks.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import hmac
import json
from typing import Any

from ..errors import TokenExpired, TokenMalformed, TokenSignatureInvalid

_HEADER_SEGMENT = base64.urlsafe_b64encode(
    json.dumps({"alg": "HS256", "typ": "JWT"}, separators=(",", ":")).encode()
).rstrip(b"=").decode()


def _b64url_encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode()


def _b64url_decode_strict(segment: str) -> bytes:
    padding = "=" * (-len(segment) % 4)
    try:
        decoded = base64.urlsafe_b64decode(segment + padding)
    except (binascii.Error, ValueError) as exc:
        raise TokenMalformed(f"invalid base64url segment: {exc}") from exc
    if _b64url_encode(decoded) != segment:
        raise TokenMalformed("non-canonical base64url segment")
    return decoded


def _signature(signing_input: bytes, key: bytes) -> bytes:
    return hmac.new(key, signing_input, hashlib.sha256).digest()


def encode_jwt(claims: dict[str, Any], key: bytes) -> str:
    payload_segment = _b64url_encode(json.dumps(claims, separators=(",", ":")).encode())
    signing_input = f"{_HEADER_SEGMENT}.{payload_segment}".encode()
    return f"{_HEADER_SEGMENT}.{payload_segment}.{_b64url_encode(_signature(signing_input, key))}"


def decode_jwt(
    token: str, key: bytes, now: float, verify_exp: bool = True
) -> dict[str, Any]:
    parts = token.split(".")
    if len(parts) != 3:
        raise TokenMalformed("token must have exactly three segments")
    header_segment, payload_segment, signature_segment = parts

    header_bytes = _b64url_decode_strict(header_segment)
    payload_bytes = _b64url_decode_strict(payload_segment)
    signature = _b64url_decode_strict(signature_segment)

    try:
        header = json.loads(header_bytes)
    except ValueError as exc:
        raise TokenMalformed("header is not valid JSON") from exc
    if header.get("alg") != "HS256":
        raise TokenMalformed("unsupported algorithm")

    signing_input = f"{header_segment}.{payload_segment}".encode()
    if not hmac.compare_digest(signature, _signature(signing_input, key)):
        raise TokenSignatureInvalid("signature mismatch")

    try:
        claims = json.loads(payload_bytes)
    except ValueError as exc:
        raise TokenMalformed("payload is not valid JSON") from exc
    if not isinstance(claims, dict):
        raise TokenMalformed("payload must be a JSON object")

    if verify_exp:
        expiry = claims.get("exp")
        if not isinstance(expiry, (int, float)):
            raise TokenMalformed("missing exp claim")
        if now >= expiry:
            raise TokenExpired("token expired")
    return claims
