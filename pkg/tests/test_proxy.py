from __future__ import annotations

import base64

import pytest
from fastapi.testclient import TestClient

from ehrshare import pre
from ehrshare.auth.service import AuthConfig, TokenAuthority
from ehrshare.errors import ConflictError, NotFoundError, ValidationFailure
from ehrshare.proxy.http import create_proxy_app
from ehrshare.proxy.service import KfragVault
from ehrshare.storage import DocumentStore

SECRET = b"test-signing-secret-0123456789ab"


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


@pytest.fixture
def delegation():
    alice = pre.generate_keypair()
    alice_signing = pre.generate_signing_keypair()
    bob = pre.generate_keypair()
    key, capsule = pre.encapsulate(alice.public)
    kfrags = pre.generate_kfrags(alice, alice_signing, bob.public, 2, 3)
    return alice, alice_signing, bob, key, capsule, kfrags


@pytest.fixture
def vault():
    return KfragVault(DocumentStore())


def test_store_then_reencapsulate(vault, delegation):
    alice, alice_signing, bob, key, capsule, kfrags = delegation
    vault.store_kfrags("share-1", [_b64(kf.to_bytes()) for kf in kfrags], 2, 3)
    cfrags_b64 = vault.reencapsulate_for_share("share-1", _b64(capsule.to_bytes()))
    assert len(cfrags_b64) == 3  # all shares returned, not just threshold
    cfrags = [pre.CapsuleFragment.from_bytes(base64.b64decode(encoded)) for encoded in cfrags_b64]
    for cfrag in cfrags:
        assert pre.verify_cfrag(cfrag, capsule, alice_signing.verifying, alice.public, bob.public)
    recovered = pre.decapsulate_reencrypted(
        bob, alice.public, alice_signing.verifying, capsule, cfrags
    )
    assert recovered == key


def test_identical_store_is_idempotent(vault, delegation):
    *_, kfrags = delegation
    payload = [_b64(kf.to_bytes()) for kf in kfrags]
    vault.store_kfrags("share-1", payload, 2, 3)
    vault.store_kfrags("share-1", payload, 2, 3)  # no error


def test_different_payload_for_same_share_conflicts(vault, delegation):
    alice, alice_signing, bob, _, _, kfrags = delegation
    vault.store_kfrags("share-1", [_b64(kf.to_bytes()) for kf in kfrags], 2, 3)
    other = pre.generate_kfrags(alice, alice_signing, bob.public, 2, 3)
    with pytest.raises(ConflictError):
        vault.store_kfrags("share-1", [_b64(kf.to_bytes()) for kf in other], 2, 3)


def test_share_count_mismatch_rejected(vault, delegation):
    *_, kfrags = delegation
    with pytest.raises(ValidationFailure):
        vault.store_kfrags("share-1", [_b64(kf.to_bytes()) for kf in kfrags[:2]], 2, 3)


def test_malformed_kfrag_rejected(vault):
    with pytest.raises(ValidationFailure):
        vault.store_kfrags("share-1", [_b64(b"\x00" * pre.KFRAG_SIZE)], 1, 1)


def test_unknown_share_is_not_found(vault, delegation):
    _, _, _, _, capsule, _ = delegation
    with pytest.raises(NotFoundError):
        vault.reencapsulate_for_share("ghost", _b64(capsule.to_bytes()))


def test_delete_then_reencapsulate_not_found(vault, delegation):
    _, _, _, _, capsule, kfrags = delegation
    vault.store_kfrags("share-1", [_b64(kf.to_bytes()) for kf in kfrags], 2, 3)
    vault.delete_kfrags("share-1")
    with pytest.raises(NotFoundError):
        vault.reencapsulate_for_share("share-1", _b64(capsule.to_bytes()))


def test_double_delete_and_unknown_delete_acknowledge(vault):
    vault.delete_kfrags("share-1")
    vault.delete_kfrags("share-1")
    vault.delete_kfrags("never-existed")


def test_invalid_capsule_rejected(vault, delegation):
    *_, kfrags = delegation
    vault.store_kfrags("share-1", [_b64(kf.to_bytes()) for kf in kfrags], 2, 3)
    with pytest.raises(ValidationFailure):
        vault.reencapsulate_for_share("share-1", _b64(b"\x01" * pre.CAPSULE_SIZE))


def test_cross_record_capsule_reencapsulates_but_yields_foreign_key(vault, delegation):
    """A capsule from another record of the same owner transforms fine, but
    the delegatee ends up with that record's key, not the target's."""
    alice, alice_signing, bob, key_one, capsule_one, kfrags = delegation
    key_two, capsule_two = pre.encapsulate(alice.public)
    ciphertext_one = pre.dem_encrypt(key_one, b"record one", capsule_one)

    vault.store_kfrags("share-1", [_b64(kf.to_bytes()) for kf in kfrags], 2, 3)
    cfrags_b64 = vault.reencapsulate_for_share("share-1", _b64(capsule_two.to_bytes()))
    cfrags = [pre.CapsuleFragment.from_bytes(base64.b64decode(encoded)) for encoded in cfrags_b64]
    recovered = pre.decapsulate_reencrypted(
        bob, alice.public, alice_signing.verifying, capsule_two, cfrags
    )
    assert recovered == key_two
    with pytest.raises(pre.DecryptionError):
        pre.dem_decrypt(recovered, ciphertext_one)


# --- HTTP surface ---


@pytest.fixture
def proxy_http(vault, clock):
    authority = TokenAuthority(SECRET, clock, AuthConfig())
    client = TestClient(create_proxy_app(vault, authority))
    service_token = authority.mint_access("resource-service", ["service"])
    user_token = authority.mint_access("some-user", ["patient"])
    return client, service_token, user_token


def test_http_requires_service_role(proxy_http, delegation):
    client, service_token, user_token = proxy_http
    *_, kfrags = delegation
    payload = {
        "share_id": "s1",
        "kfrags": [_b64(kf.to_bytes()) for kf in kfrags],
        "threshold": 2,
        "shares": 3,
    }
    assert client.post("/kfrags", json=payload).status_code == 401
    assert (
        client.post(
            "/kfrags", json=payload, headers={"Authorization": f"Bearer {user_token}"}
        ).status_code
        == 403
    )
    assert (
        client.post(
            "/kfrags", json=payload, headers={"Authorization": f"Bearer {service_token}"}
        ).status_code
        == 201
    )


def test_http_reencapsulate_and_delete_flow(proxy_http, delegation):
    client, service_token, _ = proxy_http
    alice, alice_signing, bob, key, capsule, kfrags = delegation
    headers = {"Authorization": f"Bearer {service_token}"}
    client.post(
        "/kfrags",
        json={
            "share_id": "s1",
            "kfrags": [_b64(kf.to_bytes()) for kf in kfrags],
            "threshold": 2,
            "shares": 3,
        },
        headers=headers,
    )
    response = client.post(
        "/reencapsulate",
        json={"share_id": "s1", "capsule": _b64(capsule.to_bytes())},
        headers=headers,
    )
    assert response.status_code == 200
    assert len(response.json()["cfrags"]) == 3

    assert client.delete("/kfrags/s1", headers=headers).status_code == 200
    gone = client.post(
        "/reencapsulate",
        json={"share_id": "s1", "capsule": _b64(capsule.to_bytes())},
        headers=headers,
    )
    assert gone.status_code == 404
    assert gone.json()["detail"]["code"] == "not_found"


def test_http_surface_has_no_plaintext_or_secret_fields(proxy_http):
    """Structural ignorance: the proxy's schemas cannot transport payload
    plaintext, ciphertext bodies, symmetric keys, or secret keys."""
    client, _, _ = proxy_http
    openapi = client.app.openapi()
    schema_fields = set()
    for schema in openapi.get("components", {}).get("schemas", {}).values():
        schema_fields.update(schema.get("properties", {}).keys())
    forbidden = {"plaintext", "ciphertext", "body", "symmetric_key", "secret_key", "signing_key"}
    assert schema_fields.isdisjoint(forbidden)
    assert schema_fields >= {"share_id", "kfrags", "threshold", "shares", "capsule"}
