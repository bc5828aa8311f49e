"""Resource server: record custody, consent state machine, break-glass.

Records are immutable once written; every sharing, revocation, and expiry
operation happens around them, never inside them. Consent lives in share
requests (pending -> accepted/declined, accepted -> revoked/expired), with
the accepted->* transitions guarded by an atomic compare-and-swap so a
racing revoke and sweep cannot both win.

Secret keys arrive per request, are used in memory for the single
operation that needs them, and are never persisted.
"""

from __future__ import annotations

import base64
import uuid
from dataclasses import dataclass
from typing import Any

from ..auth.service import UserDirectory, UserView
from ..clock import Clock, system_clock
from ..errors import (
    BusinessRuleViolation,
    ConfigurationError,
    ConflictError,
    ForbiddenError,
    IntegrityError,
    NotFoundError,
    ServiceError,
    StateError,
    UpstreamError,
    ValidationFailure,
)
from ..pre import (
    Capsule,
    CapsuleFragment,
    Ciphertext,
    DEFAULT_ENTROPY,
    DeserializationError,
    EntropySource,
    KeyPair,
    ParameterError,
    Point,
    PreError,
    SigningKeyPair,
    ThresholdError,
    decapsulate_original,
    decapsulate_reencrypted,
    dem_decrypt,
    dem_encrypt,
    encapsulate,
    generate_kfrags,
    verify_cfrag,
)
from ..storage import DocumentStore
from .proxyclient import ProxyTransport

RECORDS_COLLECTION = "ehr_records"
SHARES_COLLECTION = "share_requests"

MEDIA_CONTENT_TYPES = {
    "pdf": "application/pdf",
    "png": "image/png",
    "jpeg": "image/jpeg",
}


class ThresholdNotMet(ServiceError):
    http_status = 502
    code = "threshold_not_met"


@dataclass(frozen=True)
class ResourceConfig:
    max_upload_bytes: int = 50 * 1024 * 1024
    allowed_media_types: tuple[str, ...] = ("pdf", "png", "jpeg")
    break_glass_threshold: int = 1
    break_glass_shares: int = 1
    sweep_interval_seconds: float = 60.0


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def _unb64(encoded: str) -> bytes:
    return base64.b64decode(encoded)


class ResourceService:
    def __init__(
        self,
        store: DocumentStore,
        directory: UserDirectory,
        proxy: ProxyTransport,
        clock: Clock = system_clock,
        config: ResourceConfig = ResourceConfig(),
        entropy: EntropySource = DEFAULT_ENTROPY,
    ):
        self._store = store
        self._directory = directory
        self._proxy = proxy
        self._clock = clock
        self._config = config
        self._entropy = entropy

    # -- key material helpers --

    def _user_or_fail(self, user_id: str) -> UserView:
        user = self._directory.get(user_id)
        if user is None:
            raise NotFoundError("unknown user")
        return user

    @staticmethod
    def _keypair_for(user: UserView, secret_key_b64: str) -> KeyPair:
        try:
            keypair = KeyPair.from_secret_bytes(_unb64(secret_key_b64))
        except (DeserializationError, ValueError) as exc:
            raise ValidationFailure(f"secret key does not decode: {exc}")
        if keypair.public.to_bytes() != _unb64(user.public_key):
            raise ValidationFailure("secret key does not match the registered public key")
        return keypair

    @staticmethod
    def _signing_keypair_for(user: UserView, signing_key_b64: str) -> SigningKeyPair:
        try:
            keypair = SigningKeyPair.from_secret_bytes(_unb64(signing_key_b64))
        except (DeserializationError, ValueError) as exc:
            raise ValidationFailure(f"signing key does not decode: {exc}")
        if keypair.verifying.to_bytes() != _unb64(user.verifying_key):
            raise ValidationFailure("signing key does not match the registered verifying key")
        return keypair

    # -- upload & break-glass --

    def upload_ehr(
        self,
        owner_id: str,
        file_bytes: bytes,
        filename: str,
        media_type: str,
        owner_secret_key_b64: str,
        owner_signing_key_b64: str,
    ) -> dict[str, Any]:
        if media_type not in self._config.allowed_media_types:
            raise ValidationFailure(
                f"media type {media_type!r} not in {self._config.allowed_media_types}"
            )
        if len(file_bytes) > self._config.max_upload_bytes:
            raise ValidationFailure(
                f"file of {len(file_bytes)} bytes exceeds the "
                f"{self._config.max_upload_bytes}-byte limit"
            )
        owner = self._user_or_fail(owner_id)
        trusted = self._directory.trusted_entity()
        if trusted is None:
            raise ConfigurationError(
                "no trusted entity account exists; uploads would not be break-glass reachable"
            )
        owner_keys = self._keypair_for(owner, owner_secret_key_b64)
        owner_signing = self._signing_keypair_for(owner, owner_signing_key_b64)

        key, capsule = encapsulate(owner_keys.public, self._entropy)
        ciphertext = dem_encrypt(
            key, file_bytes, capsule, self._entropy, max_plaintext=self._config.max_upload_bytes
        )
        resource_id = uuid.uuid4().hex
        record = {
            "resource_id": resource_id,
            "owner_id": owner_id,
            "filename": filename,
            "media_type": media_type,
            "size_bytes": len(file_bytes),
            "created_at": self._clock(),
            "capsule": _b64(capsule.to_bytes()),
            "nonce": _b64(ciphertext.nonce),
            "body": _b64(ciphertext.body),
        }
        self._store.put(RECORDS_COLLECTION, resource_id, record)

        if trusted.user_id != owner_id:
            try:
                self._break_glass_bootstrap(record, owner_keys, owner_signing, trusted)
            except ServiceError:
                # Every stored record must be break-glass reachable; roll back.
                self._store.delete(RECORDS_COLLECTION, resource_id)
                raise
        return self._record_meta(record)

    def _break_glass_bootstrap(
        self,
        record: dict[str, Any],
        owner_keys: KeyPair,
        owner_signing: SigningKeyPair,
        trusted: UserView,
    ) -> None:
        """Accepted, non-expiring share for the trusted entity, no consent step."""
        share_id = uuid.uuid4().hex
        trusted_pk = Point.from_bytes(_unb64(trusted.public_key))
        kfrags = generate_kfrags(
            owner_keys,
            owner_signing,
            trusted_pk,
            self._config.break_glass_threshold,
            self._config.break_glass_shares,
            self._entropy,
        )
        self._proxy.store_kfrags(
            share_id,
            [_b64(kfrag.to_bytes()) for kfrag in kfrags],
            self._config.break_glass_threshold,
            self._config.break_glass_shares,
        )
        now = self._clock()
        self._store.put(
            SHARES_COLLECTION,
            share_id,
            {
                "share_id": share_id,
                "resource_id": record["resource_id"],
                "delegator_id": record["owner_id"],
                "delegatee_id": trusted.user_id,
                "status": "accepted",
                "expiry": None,
                "break_glass": True,
                "threshold": self._config.break_glass_threshold,
                "shares": self._config.break_glass_shares,
                "created_at": now,
                "updated_at": now,
            },
        )

    # -- consent state machine --

    def request_share(self, delegatee_id: str, resource_id: str) -> dict[str, Any]:
        record = self._store.get(RECORDS_COLLECTION, resource_id)
        if record is None:
            raise NotFoundError("unknown resource")
        self._user_or_fail(delegatee_id)
        if record["owner_id"] == delegatee_id:
            raise BusinessRuleViolation("owners cannot request a share of their own record")
        live = self._store.query(
            SHARES_COLLECTION,
            {"resource_id": resource_id, "delegatee_id": delegatee_id},
            where=lambda doc: doc["status"] in ("pending", "accepted"),
        )
        if live:
            raise ConflictError("a pending or accepted share already exists for this pair")
        share_id = uuid.uuid4().hex
        now = self._clock()
        share = {
            "share_id": share_id,
            "resource_id": resource_id,
            "delegator_id": record["owner_id"],
            "delegatee_id": delegatee_id,
            "status": "pending",
            "expiry": None,
            "break_glass": False,
            "threshold": None,
            "shares": None,
            "created_at": now,
            "updated_at": now,
        }
        self._store.put(SHARES_COLLECTION, share_id, share)
        return share

    def answer_share(
        self,
        delegator_id: str,
        share_id: str,
        decision: str,
        delegator_secret_key_b64: str | None = None,
        delegator_signing_key_b64: str | None = None,
        expiry: float | None = None,
        threshold: int = 1,
        shares: int = 1,
    ) -> dict[str, Any]:
        share = self._store.get(SHARES_COLLECTION, share_id)
        if share is None:
            raise NotFoundError("unknown share request")
        if share["delegator_id"] != delegator_id:
            raise ForbiddenError("only the record owner may answer this request")
        if decision not in ("accept", "decline"):
            raise ValidationFailure("decision must be 'accept' or 'decline'")
        if share["status"] != "pending":
            raise StateError(f"share is {share['status']}, not pending")
        now = self._clock()

        if decision == "decline":
            if not self._store.compare_and_swap(
                SHARES_COLLECTION, share_id, "status", "pending", "declined",
                also_set={"updated_at": now},
            ):
                raise StateError("share left the pending state concurrently")
            return self._store.get(SHARES_COLLECTION, share_id)

        if delegator_secret_key_b64 is None or delegator_signing_key_b64 is None:
            raise ValidationFailure("accepting requires the delegator's secret and signing keys")
        if expiry is not None and expiry <= now:
            raise ValidationFailure("expiry must be in the future")
        delegator = self._user_or_fail(delegator_id)
        delegatee = self._user_or_fail(share["delegatee_id"])
        delegator_keys = self._keypair_for(delegator, delegator_secret_key_b64)
        delegator_signing = self._signing_keypair_for(delegator, delegator_signing_key_b64)
        delegatee_pk = Point.from_bytes(_unb64(delegatee.public_key))

        try:
            kfrags = generate_kfrags(
                delegator_keys, delegator_signing, delegatee_pk, threshold, shares, self._entropy
            )
        except ParameterError as exc:
            raise ValidationFailure(str(exc))

        # Vault first, then flip the status: a proxy failure leaves the share
        # pending, and a lost status race is compensated by deleting the vault
        # entry again.
        self._proxy.store_kfrags(
            share_id, [_b64(kfrag.to_bytes()) for kfrag in kfrags], threshold, shares
        )
        flipped = self._store.compare_and_swap(
            SHARES_COLLECTION, share_id, "status", "pending", "accepted",
            also_set={
                "expiry": expiry,
                "threshold": threshold,
                "shares": shares,
                "updated_at": now,
            },
        )
        if not flipped:
            self._proxy.delete_kfrags(share_id)
            raise StateError("share left the pending state concurrently")
        return self._store.get(SHARES_COLLECTION, share_id)

    def revoke_share(self, delegator_id: str, share_id: str) -> dict[str, Any]:
        share = self._store.get(SHARES_COLLECTION, share_id)
        if share is None:
            raise NotFoundError("unknown share request")
        if share["delegator_id"] != delegator_id:
            raise ForbiddenError("only the record owner may revoke this share")
        if share["break_glass"]:
            raise ForbiddenError("break-glass shares cannot be revoked")
        if share["status"] != "accepted":
            raise StateError(f"share is {share['status']}, not accepted")
        if not self._store.compare_and_swap(
            SHARES_COLLECTION, share_id, "status", "accepted", "revoked",
            also_set={"updated_at": self._clock()},
        ):
            raise StateError("share left the accepted state concurrently")
        # Synchronous vault deletion: the proxy-side enforcement point dies
        # with the consent. Resource-side status checks block retrieval even
        # if this call fails, so a raise here leaves no access window.
        self._proxy.delete_kfrags(share_id)
        return self._store.get(SHARES_COLLECTION, share_id)

    def sweep_expired(self, now: float | None = None) -> int:
        """Cron body: expire accepted shares whose time has passed."""
        now = self._clock() if now is None else now
        expired = self._store.query(
            SHARES_COLLECTION,
            {"status": "accepted"},
            where=lambda doc: doc["expiry"] is not None and doc["expiry"] < now,
        )
        transitioned = 0
        for share in expired:
            try:
                self._proxy.delete_kfrags(share["share_id"])
            except UpstreamError:
                continue  # stays accepted; retried on the next sweep
            if self._store.compare_and_swap(
                SHARES_COLLECTION, share["share_id"], "status", "accepted", "expired",
                also_set={"updated_at": now},
            ):
                transitioned += 1
        return transitioned

    # -- retrieval --

    def _live_share_for(self, resource_id: str, delegatee_id: str) -> dict[str, Any] | None:
        now = self._clock()
        live = self._store.query(
            SHARES_COLLECTION,
            {"resource_id": resource_id, "delegatee_id": delegatee_id, "status": "accepted"},
            # Read-time expiry check: the sweep interval must not open a window.
            where=lambda doc: doc["expiry"] is None or doc["expiry"] > now,
        )
        return live[0] if live else None

    def retrieve_ehr(
        self, caller_id: str, resource_id: str, caller_secret_key_b64: str
    ) -> tuple[bytes, dict[str, Any]]:
        record = self._store.get(RECORDS_COLLECTION, resource_id)
        if record is None:
            raise NotFoundError("unknown resource")
        caller = self._user_or_fail(caller_id)
        caller_keys = self._keypair_for(caller, caller_secret_key_b64)
        capsule = Capsule.from_bytes(_unb64(record["capsule"]))
        ciphertext = Ciphertext(
            nonce=_unb64(record["nonce"]),
            body=_unb64(record["body"]),
            associated_data=_unb64(record["capsule"]),
        )

        if record["owner_id"] == caller_id:
            key = decapsulate_original(caller_keys.secret, capsule)
            return dem_decrypt(key, ciphertext), self._record_meta(record)

        share = self._live_share_for(resource_id, caller_id)
        if share is None:
            raise ForbiddenError("no live consent for this record")

        delegator = self._user_or_fail(record["owner_id"])
        delegator_pk = Point.from_bytes(_unb64(delegator.public_key))
        delegator_vk = Point.from_bytes(_unb64(delegator.verifying_key))

        try:
            cfrags_b64 = self._proxy.reencapsulate(share["share_id"], record["capsule"])
        except NotFoundError:
            # Vault entry already gone: consent died between checks.
            raise ForbiddenError("no live consent for this record")

        cfrags: list[CapsuleFragment] = []
        for index, encoded in enumerate(cfrags_b64):
            try:
                cfrags.append(CapsuleFragment.from_bytes(_unb64(encoded)))
            except (DeserializationError, ValueError):
                raise IntegrityError(f"proxy returned a malformed fragment at index {index}")
        verified = [
            cfrag
            for cfrag in cfrags
            if verify_cfrag(cfrag, capsule, delegator_vk, delegator_pk, caller_keys.public)
        ]
        if len(verified) < len(cfrags):
            raise IntegrityError("capsule fragment failed signature verification (proxy suspected)")
        threshold = share["threshold"] or 1
        if len({cfrag.fragment_id for cfrag in verified}) < threshold:
            raise ThresholdNotMet(
                f"{len(verified)} fragments returned, {threshold} required"
            )
        try:
            key = decapsulate_reencrypted(
                caller_keys, delegator_pk, delegator_vk, capsule, verified
            )
        except ThresholdError as exc:
            raise ThresholdNotMet(str(exc))
        except PreError as exc:
            raise IntegrityError(f"decapsulation failed: {exc}")
        return dem_decrypt(key, ciphertext), self._record_meta(record)

    # -- listings --

    @staticmethod
    def _record_meta(record: dict[str, Any]) -> dict[str, Any]:
        return {
            "resource_id": record["resource_id"],
            "owner_id": record["owner_id"],
            "filename": record["filename"],
            "media_type": record["media_type"],
            "size_bytes": record["size_bytes"],
            "created_at": record["created_at"],
        }

    def list_ehrs(self, caller_id: str) -> dict[str, list[dict[str, Any]]]:
        owned = [
            self._record_meta(record)
            for record in self._store.query(RECORDS_COLLECTION, {"owner_id": caller_id})
        ]
        owned.sort(key=lambda meta: meta["created_at"])
        now = self._clock()
        shared = []
        for share in self._store.query(
            SHARES_COLLECTION,
            {"delegatee_id": caller_id, "status": "accepted"},
            where=lambda doc: doc["expiry"] is None or doc["expiry"] > now,
        ):
            record = self._store.get(RECORDS_COLLECTION, share["resource_id"])
            if record is None:
                continue
            meta = self._record_meta(record)
            meta["share_id"] = share["share_id"]
            meta["expiry"] = share["expiry"]
            shared.append(meta)
        shared.sort(key=lambda meta: meta["created_at"])
        return {"owned": owned, "shared": shared}

    def list_share_requests(self, caller_id: str, direction: str) -> list[dict[str, Any]]:
        if direction == "incoming":
            shares = self._store.query(SHARES_COLLECTION, {"delegator_id": caller_id})
        elif direction == "outgoing":
            shares = self._store.query(SHARES_COLLECTION, {"delegatee_id": caller_id})
        else:
            raise ValidationFailure("direction must be 'incoming' or 'outgoing'")
        caller = self._user_or_fail(caller_id)
        if "trusted_entity" not in caller.roles:
            # Break-glass shares are system artifacts, not consent records.
            shares = [share for share in shares if not share["break_glass"]]
        shares.sort(key=lambda share: share["created_at"])
        return shares
