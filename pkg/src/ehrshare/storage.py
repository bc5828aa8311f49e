"""Persistence backing the services.

Two stores, two interchangeable backends each:

* ``DocumentStore`` — per-collection documents with equality indexes and an
  atomic per-document compare-and-swap. Memory backend for tests and
  benchmarks; file backend (one JSON file per document, atomic rename)
  for deployments that must survive restarts.
* ``TtlStore`` — expiring key/value entries with compare-and-swap, backing
  refresh-token families.

CAS is the only cross-request synchronization primitive the services rely
on; both implementations serialize it under a lock.
"""

from __future__ import annotations

import copy
import json
import os
import threading
from pathlib import Path
from typing import Any, Callable, Iterable

from .clock import Clock, system_clock

Document = dict[str, Any]

DEFAULT_INDEXED_FIELDS = (
    "owner_id",
    "delegator_id",
    "delegatee_id",
    "status",
    "resource_id",
    "email",
)


class DocumentStore:
    """In-memory document collections with equality indexes and CAS."""

    def __init__(self, indexed_fields: Iterable[str] = DEFAULT_INDEXED_FIELDS):
        self._indexed_fields = tuple(indexed_fields)
        self._collections: dict[str, dict[str, Document]] = {}
        self._indexes: dict[str, dict[str, dict[Any, set[str]]]] = {}
        self._lock = threading.RLock()

    # -- internal index maintenance (called with the lock held) --

    def _unindex(self, collection: str, doc_id: str, document: Document) -> None:
        for field in self._indexed_fields:
            if field in document:
                bucket = self._indexes[collection][field].get(document[field])
                if bucket is not None:
                    bucket.discard(doc_id)

    def _index(self, collection: str, doc_id: str, document: Document) -> None:
        for field in self._indexed_fields:
            if field in document:
                self._indexes[collection][field].setdefault(document[field], set()).add(doc_id)

    def _ensure_collection(self, collection: str) -> dict[str, Document]:
        if collection not in self._collections:
            self._collections[collection] = {}
            self._indexes[collection] = {field: {} for field in self._indexed_fields}
        return self._collections[collection]

    def _persist(self, collection: str, doc_id: str, document: Document | None) -> None:
        """Hook for durable backends; no-op in memory."""

    # -- public API --

    def put(self, collection: str, doc_id: str, document: Document) -> None:
        with self._lock:
            docs = self._ensure_collection(collection)
            previous = docs.get(doc_id)
            if previous is not None:
                self._unindex(collection, doc_id, previous)
            stored = copy.deepcopy(document)
            docs[doc_id] = stored
            self._index(collection, doc_id, stored)
            self._persist(collection, doc_id, stored)

    def get(self, collection: str, doc_id: str) -> Document | None:
        with self._lock:
            document = self._ensure_collection(collection).get(doc_id)
            return copy.deepcopy(document) if document is not None else None

    def delete(self, collection: str, doc_id: str) -> None:
        with self._lock:
            docs = self._ensure_collection(collection)
            document = docs.pop(doc_id, None)
            if document is not None:
                self._unindex(collection, doc_id, document)
                self._persist(collection, doc_id, None)

    def query(
        self,
        collection: str,
        equals: Document | None = None,
        where: Callable[[Document], bool] | None = None,
    ) -> list[Document]:
        """Equality filters (index-accelerated) plus an optional predicate."""
        equals = equals or {}
        with self._lock:
            docs = self._ensure_collection(collection)
            candidate_ids: set[str] | None = None
            for field, value in equals.items():
                if field in self._indexed_fields:
                    bucket = self._indexes[collection][field].get(value, set())
                    candidate_ids = (
                        set(bucket) if candidate_ids is None else candidate_ids & bucket
                    )
            if candidate_ids is None:
                candidate_ids = set(docs)
            results = []
            for doc_id in candidate_ids:
                document = docs[doc_id]
                if all(document.get(field) == value for field, value in equals.items()):
                    if where is None or where(document):
                        results.append(copy.deepcopy(document))
            return results

    def compare_and_swap(
        self,
        collection: str,
        doc_id: str,
        field: str,
        expected: Any,
        new: Any,
        also_set: Document | None = None,
    ) -> bool:
        """Atomically replace ``field`` iff it currently equals ``expected``."""
        with self._lock:
            docs = self._ensure_collection(collection)
            document = docs.get(doc_id)
            if document is None or document.get(field) != expected:
                return False
            self._unindex(collection, doc_id, document)
            document[field] = new
            for extra_field, value in (also_set or {}).items():
                document[extra_field] = value
            self._index(collection, doc_id, document)
            self._persist(collection, doc_id, document)
            return True

    def collections(self) -> list[str]:
        with self._lock:
            return list(self._collections)

    def dump(self) -> dict[str, dict[str, Document]]:
        """Full snapshot; used by hygiene scans in tests."""
        with self._lock:
            return copy.deepcopy(self._collections)


class FileDocumentStore(DocumentStore):
    """Durable backend: one JSON file per document, atomic rename on write."""

    def __init__(self, root: str | Path, indexed_fields: Iterable[str] = DEFAULT_INDEXED_FIELDS):
        super().__init__(indexed_fields)
        self._root = Path(root)
        self._root.mkdir(parents=True, exist_ok=True)
        self._load()

    def _collection_dir(self, collection: str) -> Path:
        return self._root / collection

    def _load(self) -> None:
        for collection_dir in sorted(self._root.iterdir()):
            if not collection_dir.is_dir():
                continue
            collection = collection_dir.name
            docs = self._ensure_collection(collection)
            for doc_path in sorted(collection_dir.glob("*.json")):
                document = json.loads(doc_path.read_text(encoding="utf-8"))
                doc_id = doc_path.stem
                docs[doc_id] = document
                self._index(collection, doc_id, document)

    def _persist(self, collection: str, doc_id: str, document: Document | None) -> None:
        directory = self._collection_dir(collection)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{doc_id}.json"
        if document is None:
            path.unlink(missing_ok=True)
            return
        tmp_path = path.with_suffix(".json.tmp")
        tmp_path.write_text(json.dumps(document), encoding="utf-8")
        os.replace(tmp_path, path)


class TtlStore:
    """Expiring key/value entries with CAS; lazy expiry via injected clock."""

    def __init__(self, clock: Clock = system_clock):
        self._clock = clock
        self._entries: dict[str, tuple[bytes, float]] = {}
        self._lock = threading.RLock()

    def _live(self, key: str) -> bytes | None:
        entry = self._entries.get(key)
        if entry is None:
            return None
        value, expires_at = entry
        if self._clock() >= expires_at:
            del self._entries[key]
            self._persist(key, None, 0.0)
            return None
        return value

    def _persist(self, key: str, value: bytes | None, expires_at: float) -> None:
        """Hook for durable backends."""

    def set(self, key: str, value: bytes, ttl_seconds: float) -> None:
        with self._lock:
            expires_at = self._clock() + ttl_seconds
            self._entries[key] = (value, expires_at)
            self._persist(key, value, expires_at)

    def get(self, key: str) -> bytes | None:
        with self._lock:
            return self._live(key)

    def compare_and_swap(self, key: str, expected: bytes, new: bytes) -> bool:
        """Swap the value iff it matches; the remaining TTL is preserved."""
        with self._lock:
            current = self._live(key)
            if current != expected:
                return False
            _, expires_at = self._entries[key]
            self._entries[key] = (new, expires_at)
            self._persist(key, new, expires_at)
            return True

    def touch(self, key: str, ttl_seconds: float) -> None:
        """Extend the entry's lifetime without changing its value."""
        with self._lock:
            value = self._live(key)
            if value is not None:
                expires_at = self._clock() + ttl_seconds
                self._entries[key] = (value, expires_at)
                self._persist(key, value, expires_at)

    def dump(self) -> dict[str, bytes]:
        with self._lock:
            return {key: value for key, (value, _) in self._entries.items() if self._live(key)}


class FileTtlStore(TtlStore):
    """Durable TTL entries in a single JSON file (small volume: one per family)."""

    def __init__(self, path: str | Path, clock: Clock = system_clock):
        super().__init__(clock)
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)
        if self._path.exists():
            raw = json.loads(self._path.read_text(encoding="utf-8"))
            for key, (value_hex, expires_at) in raw.items():
                self._entries[key] = (bytes.fromhex(value_hex), expires_at)

    def _persist(self, key: str, value: bytes | None, expires_at: float) -> None:
        snapshot = {
            k: (v.hex(), exp) for k, (v, exp) in self._entries.items()
        }
        tmp_path = self._path.with_suffix(".tmp")
        tmp_path.write_text(json.dumps(snapshot), encoding="utf-8")
        os.replace(tmp_path, self._path)
