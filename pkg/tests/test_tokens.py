from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehrshare.auth.tokens import decode_jwt, encode_jwt
from ehrshare.errors import TokenExpired, TokenMalformed, TokenSignatureInvalid

KEY = b"k" * 32
NOW = 1_700_000_000.0


def _claims(**overrides):
    claims = {"sub": "user-1", "roles": ["patient"], "iat": NOW, "exp": NOW + 900, "jti": "abc"}
    claims.update(overrides)
    return claims


def test_round_trip():
    token = encode_jwt(_claims(), KEY)
    assert decode_jwt(token, KEY, now=NOW) == _claims()


def test_expired_token_rejected():
    token = encode_jwt(_claims(), KEY)
    with pytest.raises(TokenExpired):
        decode_jwt(token, KEY, now=NOW + 901)


def test_expiry_boundary_is_exclusive():
    token = encode_jwt(_claims(), KEY)
    with pytest.raises(TokenExpired):
        decode_jwt(token, KEY, now=NOW + 900)
    assert decode_jwt(token, KEY, now=NOW + 899.999)


def test_wrong_key_rejected():
    token = encode_jwt(_claims(), KEY)
    with pytest.raises(TokenSignatureInvalid):
        decode_jwt(token, b"x" * 32, now=NOW)


def test_missing_exp_is_malformed():
    token = encode_jwt({"sub": "u"}, KEY)
    with pytest.raises(TokenMalformed):
        decode_jwt(token, KEY, now=NOW)
    assert decode_jwt(token, KEY, now=NOW, verify_exp=False) == {"sub": "u"}


@pytest.mark.parametrize("garbage", ["", "a.b", "a.b.c.d", "!!!.@@@.###", "only-one-segment"])
def test_garbage_tokens_are_malformed(garbage):
    with pytest.raises(TokenMalformed):
        decode_jwt(garbage, KEY, now=NOW)


def test_full_single_byte_corruption_sweep():
    """Every byte flip anywhere in the token must be rejected.

    The canonical-segment rule is what closes the base64 trailing-bit
    aliases; this sweep would catch any regression there.
    """
    token = encode_jwt(_claims(), KEY)
    raw = token.encode()
    for position in range(len(raw)):
        for mask in (0x01, 0x80):
            corrupted = bytearray(raw)
            corrupted[position] ^= mask
            try:
                mangled = corrupted.decode()
            except UnicodeDecodeError:
                continue  # not even a string: transport would reject it
            with pytest.raises((TokenMalformed, TokenSignatureInvalid, TokenExpired)):
                decode_jwt(mangled, KEY, now=NOW)


@settings(max_examples=50, deadline=None)
@given(
    st.dictionaries(
        st.text(min_size=1, max_size=10),
        st.one_of(st.text(max_size=20), st.integers(), st.floats(allow_nan=False)),
        max_size=5,
    )
)
def test_arbitrary_claims_round_trip(claims):
    claims["exp"] = NOW + 100
    token = encode_jwt(claims, KEY)
    assert decode_jwt(token, KEY, now=NOW) == claims
