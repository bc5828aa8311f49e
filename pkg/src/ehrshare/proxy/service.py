"""Semi-trusted proxy: stores key fragments, re-encapsulates on request.

Deliberately blind: it never sees plaintext, ciphertext bodies, symmetric
keys, or anyone's secret keys. Fragment signatures are *not* checked here
(the proxy lacks the key-triple context); the resource server verifies
fragments at generation time and capsule fragments at retrieval time.

Existence of a vault entry is the live-consent test: deleting the entry is
a complete revocation, no record mutation required.
"""

from __future__ import annotations

import base64

from ..clock import Clock, system_clock
from ..errors import ConflictError, NotFoundError, ValidationFailure
from ..pre import (
    Capsule,
    CapsuleIntegrityError,
    DeserializationError,
    EntropySource,
    KeyFragment,
    DEFAULT_ENTROPY,
    reencapsulate,
)
from ..storage import DocumentStore

VAULT_COLLECTION = "kfrag_vault"


class KfragVault:
    def __init__(
        self,
        store: DocumentStore,
        clock: Clock = system_clock,
        entropy: EntropySource = DEFAULT_ENTROPY,
    ):
        self._store = store
        self._clock = clock
        self._entropy = entropy

    def store_kfrags(
        self, share_id: str, kfrags_b64: list[str], threshold: int, shares: int
    ) -> None:
        if threshold < 1 or shares < 1 or threshold > shares:
            raise ValidationFailure("threshold and shares must satisfy 1 <= threshold <= shares")
        if len(kfrags_b64) != shares:
            raise ValidationFailure(
                f"expected {shares} fragments, received {len(kfrags_b64)}"
            )
        for index, encoded in enumerate(kfrags_b64):
            try:
                KeyFragment.from_bytes(base64.b64decode(encoded, validate=True))
            except (DeserializationError, ValueError) as exc:
                raise ValidationFailure(f"fragment {index} does not decode: {exc}")

        entry = {
            "share_id": share_id,
            "kfrags": list(kfrags_b64),
            "threshold": threshold,
            "shares": shares,
        }
        existing = self._store.get(VAULT_COLLECTION, share_id)
        if existing is not None:
            unchanged = {k: existing.get(k) for k in entry}
            if unchanged == entry:
                return  # idempotent retry
            raise ConflictError("share already holds a different fragment set")
        entry["stored_at"] = self._clock()
        self._store.put(VAULT_COLLECTION, share_id, entry)

    def reencapsulate_for_share(self, share_id: str, capsule_b64: str) -> list[str]:
        """Transform the capsule under every stored fragment.

        Returning all `shares` fragments (not just `threshold`) lets the
        verifier discard any bad one and still reach the threshold.
        """
        entry = self._store.get(VAULT_COLLECTION, share_id)
        if entry is None:
            raise NotFoundError("no live delegation for this share")
        try:
            capsule = Capsule.from_bytes(base64.b64decode(capsule_b64, validate=True))
        except (DeserializationError, ValueError) as exc:
            raise ValidationFailure(f"capsule does not decode: {exc}")
        if not capsule.verify():
            raise ValidationFailure("capsule self-check failed")

        results = []
        for encoded in entry["kfrags"]:
            kfrag = KeyFragment.from_bytes(base64.b64decode(encoded))
            try:
                cfrag = reencapsulate(kfrag, capsule, self._entropy)
            except CapsuleIntegrityError as exc:  # verified above; defensive
                raise ValidationFailure(str(exc))
            results.append(base64.b64encode(cfrag.to_bytes()).decode())
        return results

    def delete_kfrags(self, share_id: str) -> None:
        self._store.delete(VAULT_COLLECTION, share_id)

    def has_kfrags(self, share_id: str) -> bool:
        return self._store.get(VAULT_COLLECTION, share_id) is not None
