from __future__ import annotations

import base64
import secrets
from dataclasses import dataclass

import pytest

from ehrshare import pre
from ehrshare.auth.service import AuthConfig, AuthService, TokenAuthority
from ehrshare.errors import UpstreamError
from ehrshare.proxy.service import KfragVault
from ehrshare.resource.proxyclient import LocalProxyClient
from ehrshare.resource.service import ResourceConfig, ResourceService
from ehrshare.storage import DocumentStore, TtlStore

TOKEN_SECRET = b"test-signing-secret-0123456789ab"


class ScriptedEntropy:
    """Entropy stub: serves queued byte strings first, then real randomness."""

    def __init__(self, *queued: bytes):
        self.queued = list(queued)
        self.draws: list[bytes] = []

    def random_bytes(self, n: int) -> bytes:
        if self.queued:
            data = self.queued.pop(0)
        else:
            data = secrets.token_bytes(n)
        if len(data) != n:
            data = data[:n].ljust(n, b"\x00")
        self.draws.append(data)
        return data


class ManualClock:
    """Deterministic time source for expiry paths."""

    def __init__(self, start: float = 1_700_000_000.0):
        self.value = start

    def now(self) -> float:
        return self.value

    def advance(self, seconds: float) -> None:
        self.value += seconds

    def __call__(self) -> float:
        return self.value


@pytest.fixture
def clock() -> ManualClock:
    return ManualClock()


class CountingProxy:
    """LocalProxyClient wrapper that counts and optionally fails calls."""

    def __init__(self, inner):
        self.inner = inner
        self.reencapsulations = 0
        self.stores = 0
        self.deletes = 0
        self.fail_stores = False
        self.fail_deletes = False
        self.seen_request_bodies: list[dict] = []

    def store_kfrags(self, share_id, kfrags, threshold, shares):
        if self.fail_stores:
            raise UpstreamError("injected proxy outage")
        self.stores += 1
        self.seen_request_bodies.append(
            {"share_id": share_id, "kfrags": list(kfrags), "threshold": threshold, "shares": shares}
        )
        self.inner.store_kfrags(share_id, kfrags, threshold, shares)

    def reencapsulate(self, share_id, capsule_b64):
        self.reencapsulations += 1
        self.seen_request_bodies.append({"share_id": share_id, "capsule": capsule_b64})
        return self.inner.reencapsulate(share_id, capsule_b64)

    def delete_kfrags(self, share_id):
        if self.fail_deletes:
            raise UpstreamError("injected proxy outage")
        self.deletes += 1
        self.inner.delete_kfrags(share_id)


@dataclass
class Actor:
    user_id: str
    keypair: pre.KeyPair
    signing: pre.SigningKeyPair

    @property
    def secret_b64(self) -> str:
        return base64.b64encode(self.keypair.secret_bytes()).decode()

    @property
    def signing_b64(self) -> str:
        return base64.b64encode(self.signing.secret_bytes()).decode()


class Platform:
    """Fully wired in-process platform over memory stores and a manual clock."""

    def __init__(self, clock: ManualClock, with_trusted_entity: bool = True):
        self.clock = clock
        self.users = DocumentStore()
        self.records = DocumentStore()
        self.vault_store = DocumentStore()
        self.authority = TokenAuthority(TOKEN_SECRET, clock, AuthConfig())
        self.auth = AuthService(self.users, TtlStore(clock), self.authority, clock)
        self.vault = KfragVault(self.vault_store, clock)
        self.proxy = CountingProxy(LocalProxyClient(self.vault))
        self.resource = ResourceService(
            self.records, self.auth.directory, self.proxy, clock, ResourceConfig()
        )
        self._serial = 0
        self.trusted = (
            self.make_actor("trusted", ["trusted_entity"]) if with_trusted_entity else None
        )

    def make_actor(self, name: str, roles: list[str]) -> Actor:
        self._serial += 1
        keypair = pre.generate_keypair()
        signing = pre.generate_signing_keypair()
        user = self.auth.register(
            name=name,
            email=f"{name}-{self._serial}@example.test",
            password="a strong password",
            public_key=base64.b64encode(keypair.public.to_bytes()).decode(),
            verifying_key=base64.b64encode(signing.verifying.to_bytes()).decode(),
            roles=roles,
        )
        return Actor(user.user_id, keypair, signing)

    def upload(self, owner: Actor, data: bytes, filename="scan.pdf", media_type="pdf") -> str:
        meta = self.resource.upload_ehr(
            owner.user_id, data, filename, media_type, owner.secret_b64, owner.signing_b64
        )
        return meta["resource_id"]

    def grant(self, owner: Actor, delegatee: Actor, resource_id: str, expiry=None,
              threshold=1, shares=1) -> str:
        share = self.resource.request_share(delegatee.user_id, resource_id)
        self.resource.answer_share(
            owner.user_id, share["share_id"], "accept",
            owner.secret_b64, owner.signing_b64, expiry, threshold, shares,
        )
        return share["share_id"]

    def retrieve(self, caller: Actor, resource_id: str) -> bytes:
        plaintext, _ = self.resource.retrieve_ehr(caller.user_id, resource_id, caller.secret_b64)
        return plaintext
