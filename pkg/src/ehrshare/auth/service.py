"""Authorization service: accounts, signed tokens, refresh rotation.

Refresh tokens form *families*: one family per login, exactly one live
token per family at any instant. Rotation swaps the live token atomically
(CAS against the TTL store); presenting any superseded member of a family
permanently revokes the whole family, newest token included.

Access tokens are self-contained and never persisted; verification is
purely cryptographic. No operation here ever touches a user's
re-encryption secret key.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import secrets
import uuid
from dataclasses import dataclass
from typing import Any

from ..clock import Clock, system_clock
from ..errors import (
    AuthenticationFailure,
    ConflictError,
    CsrfFailure,
    FamilyRevoked,
    ValidationFailure,
)
from ..pre import DeserializationError, Point
from ..storage import DocumentStore, TtlStore
from .tokens import decode_jwt, encode_jwt

USERS_COLLECTION = "users"
KNOWN_ROLES = frozenset({"patient", "practitioner", "trusted_entity"})

MIN_PASSWORD_LENGTH = 10

# scrypt cost parameters, pinned; n is deliberately modest so the test
# suite stays fast while the hash remains salted and memory-hard.
SCRYPT_N = 2**14
SCRYPT_R = 8
SCRYPT_P = 1
_SCRYPT_MAXMEM = 64 * 1024 * 1024


@dataclass(frozen=True)
class AuthConfig:
    access_ttl_seconds: float = 15 * 60
    refresh_ttl_seconds: float = 7 * 24 * 3600


@dataclass(frozen=True)
class TokenPair:
    access_token: str
    refresh_token: str
    csrf_token: str
    access_expires_in: float
    refresh_expires_in: float


@dataclass(frozen=True)
class UserView:
    user_id: str
    name: str
    email: str
    public_key: str
    verifying_key: str
    roles: tuple[str, ...]


def hash_password(password: str, salt: bytes | None = None) -> str:
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.scrypt(
        password.encode(), salt=salt, n=SCRYPT_N, r=SCRYPT_R, p=SCRYPT_P, maxmem=_SCRYPT_MAXMEM
    )
    return f"scrypt${SCRYPT_N}${SCRYPT_R}${SCRYPT_P}${salt.hex()}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, n, r, p, salt_hex, digest_hex = stored.split("$")
        if scheme != "scrypt":
            return False
        digest = hashlib.scrypt(
            password.encode(),
            salt=bytes.fromhex(salt_hex),
            n=int(n),
            r=int(r),
            p=int(p),
            maxmem=_SCRYPT_MAXMEM,
        )
        return hmac.compare_digest(digest, bytes.fromhex(digest_hex))
    except (ValueError, TypeError):
        return False


# Hashed once at import; keeps the unknown-email path in the same timing
# class as the wrong-password path.
_DUMMY_HASH = hash_password("timing-equalizer")


class TokenAuthority:
    """Mints and verifies the platform's HMAC-SHA256 JWTs."""

    def __init__(self, secret: bytes, clock: Clock = system_clock, config: AuthConfig = AuthConfig()):
        if len(secret) < 32:
            raise ValidationFailure("token signing secret must be at least 32 bytes")
        self._secret = secret
        self._clock = clock
        self.config = config

    def mint_access(self, subject: str, roles: list[str], ttl: float | None = None) -> str:
        now = self._clock()
        claims = {
            "sub": subject,
            "roles": list(roles),
            "iat": now,
            "exp": now + (ttl if ttl is not None else self.config.access_ttl_seconds),
            "jti": uuid.uuid4().hex,
            "use": "access",
        }
        return encode_jwt(claims, self._secret)

    def mint_refresh(self, subject: str, family_id: str, token_id: str) -> str:
        now = self._clock()
        claims = {
            "sub": subject,
            "iat": now,
            "exp": now + self.config.refresh_ttl_seconds,
            "jti": token_id,
            "fam": family_id,
            "use": "refresh",
        }
        return encode_jwt(claims, self._secret)

    def verify_access(self, token: str) -> dict[str, Any]:
        claims = decode_jwt(token, self._secret, now=self._clock())
        if claims.get("use") != "access":
            raise AuthenticationFailure("not an access token")
        return claims

    def verify_refresh(self, token: str, verify_exp: bool = True) -> dict[str, Any]:
        claims = decode_jwt(token, self._secret, now=self._clock(), verify_exp=verify_exp)
        if claims.get("use") != "refresh":
            raise AuthenticationFailure("not a refresh token")
        return claims


class UserDirectory:
    """Read-side view of the user registry (public material only)."""

    def __init__(self, store: DocumentStore):
        self._store = store

    @staticmethod
    def _view(document: dict[str, Any]) -> UserView:
        return UserView(
            user_id=document["user_id"],
            name=document["name"],
            email=document["email"],
            public_key=document["public_key"],
            verifying_key=document["verifying_key"],
            roles=tuple(document["roles"]),
        )

    def get(self, user_id: str) -> UserView | None:
        document = self._store.get(USERS_COLLECTION, user_id)
        return self._view(document) if document else None

    def by_email(self, email: str) -> UserView | None:
        matches = self._store.query(USERS_COLLECTION, {"email": email})
        return self._view(matches[0]) if matches else None

    def trusted_entity(self) -> UserView | None:
        matches = self._store.query(
            USERS_COLLECTION, where=lambda doc: "trusted_entity" in doc["roles"]
        )
        return self._view(matches[0]) if matches else None


@dataclass
class _FamilyRecord:
    current: str
    revoked: bool
    csrf: str

    def to_bytes(self) -> bytes:
        return json.dumps(
            {"current": self.current, "revoked": self.revoked, "csrf": self.csrf},
            sort_keys=True,
        ).encode()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "_FamilyRecord":
        data = json.loads(raw)
        return cls(current=data["current"], revoked=data["revoked"], csrf=data["csrf"])


class AuthService:
    def __init__(
        self,
        users: DocumentStore,
        families: TtlStore,
        authority: TokenAuthority,
        clock: Clock = system_clock,
    ):
        self._users = users
        self._families = families
        self.authority = authority
        self._clock = clock
        self.directory = UserDirectory(users)

    # -- registration --

    def register(
        self,
        name: str,
        email: str,
        password: str,
        public_key: str,
        verifying_key: str,
        roles: list[str],
    ) -> UserView:
        if len(password) < MIN_PASSWORD_LENGTH:
            raise ValidationFailure(
                f"password must be at least {MIN_PASSWORD_LENGTH} characters"
            )
        role_set = set(roles)
        if not role_set or not role_set <= KNOWN_ROLES:
            raise ValidationFailure(f"roles must be a non-empty subset of {sorted(KNOWN_ROLES)}")
        for label, encoded in (("public_key", public_key), ("verifying_key", verifying_key)):
            try:
                Point.from_bytes(_decode_key(encoded))
            except (DeserializationError, ValueError) as exc:
                raise ValidationFailure(f"{label} does not decode to a group element: {exc}")

        if self._users.query(USERS_COLLECTION, {"email": email}):
            raise ConflictError("email already registered")
        if "trusted_entity" in role_set and self.directory.trusted_entity() is not None:
            raise ConflictError("a trusted entity account already exists")

        user_id = uuid.uuid4().hex
        document = {
            "user_id": user_id,
            "name": name,
            "email": email,
            "password_hash": hash_password(password),
            "public_key": public_key,
            "verifying_key": verifying_key,
            "roles": sorted(role_set),
            "created_at": self._clock(),
        }
        self._users.put(USERS_COLLECTION, user_id, document)
        return self.directory.get(user_id)  # type: ignore[return-value]

    # -- session lifecycle --

    def login(self, email: str, password: str) -> tuple[TokenPair, UserView]:
        matches = self._users.query(USERS_COLLECTION, {"email": email})
        if not matches:
            verify_password(password, _DUMMY_HASH)
            raise AuthenticationFailure("invalid credentials")
        account = matches[0]
        if not verify_password(password, account["password_hash"]):
            raise AuthenticationFailure("invalid credentials")

        family_id = uuid.uuid4().hex
        token_id = uuid.uuid4().hex
        csrf = secrets.token_urlsafe(32)
        record = _FamilyRecord(current=token_id, revoked=False, csrf=csrf)
        self._families.set(
            f"fam:{family_id}", record.to_bytes(), self.authority.config.refresh_ttl_seconds
        )
        pair = TokenPair(
            access_token=self.authority.mint_access(account["user_id"], account["roles"]),
            refresh_token=self.authority.mint_refresh(account["user_id"], family_id, token_id),
            csrf_token=csrf,
            access_expires_in=self.authority.config.access_ttl_seconds,
            refresh_expires_in=self.authority.config.refresh_ttl_seconds,
        )
        return pair, self.directory._view(account)

    def _revoke_family(self, family_id: str, last_record: _FamilyRecord) -> None:
        # CAS loop: whatever the concurrent interleaving, the family ends revoked.
        key = f"fam:{family_id}"
        record = last_record
        while not record.revoked:
            tombstone = _FamilyRecord(current=record.current, revoked=True, csrf=record.csrf)
            if self._families.compare_and_swap(key, record.to_bytes(), tombstone.to_bytes()):
                # Tombstone must outlive every outstanding token of the family.
                self._families.touch(key, self.authority.config.refresh_ttl_seconds)
                return
            raw = self._families.get(key)
            if raw is None:
                return
            record = _FamilyRecord.from_bytes(raw)

    def refresh(
        self,
        refresh_token: str,
        csrf_token: str | None = None,
        require_csrf: bool = False,
    ) -> TokenPair:
        claims = self.authority.verify_refresh(refresh_token)
        family_id, token_id, subject = claims["fam"], claims["jti"], claims["sub"]
        key = f"fam:{family_id}"

        raw = self._families.get(key)
        if raw is None:
            raise AuthenticationFailure("unknown or expired token family")
        record = _FamilyRecord.from_bytes(raw)
        if record.revoked:
            raise FamilyRevoked("token family has been revoked")
        if require_csrf and csrf_token != record.csrf:
            raise CsrfFailure("missing or stale CSRF token")

        if record.current != token_id:
            # Reuse of a superseded token: burn the whole family.
            self._revoke_family(family_id, record)
            raise FamilyRevoked("refresh token reuse detected; family revoked")

        new_token_id = uuid.uuid4().hex
        new_csrf = secrets.token_urlsafe(32)
        rotated = _FamilyRecord(current=new_token_id, revoked=False, csrf=new_csrf)
        if not self._families.compare_and_swap(key, record.to_bytes(), rotated.to_bytes()):
            # Lost the race: some other request already rotated this token.
            raw = self._families.get(key)
            record = _FamilyRecord.from_bytes(raw) if raw else record
            self._revoke_family(family_id, record)
            raise FamilyRevoked("refresh token reuse detected; family revoked")
        self._families.touch(key, self.authority.config.refresh_ttl_seconds)

        account = self._users.get(USERS_COLLECTION, subject)
        roles = account["roles"] if account else []
        return TokenPair(
            access_token=self.authority.mint_access(subject, roles),
            refresh_token=self.authority.mint_refresh(subject, family_id, new_token_id),
            csrf_token=new_csrf,
            access_expires_in=self.authority.config.access_ttl_seconds,
            refresh_expires_in=self.authority.config.refresh_ttl_seconds,
        )

    def logout(
        self,
        refresh_token: str,
        csrf_token: str | None = None,
        require_csrf: bool = False,
    ) -> None:
        """Revoke the token's family; idempotent, works on expired tokens."""
        claims = self.authority.verify_refresh(refresh_token, verify_exp=False)
        key = f"fam:{claims['fam']}"
        raw = self._families.get(key)
        if raw is None:
            return
        record = _FamilyRecord.from_bytes(raw)
        if require_csrf and csrf_token != record.csrf:
            raise CsrfFailure("missing or stale CSRF token")
        self._revoke_family(claims["fam"], record)

    def verify_access(self, token: str) -> dict[str, Any]:
        return self.authority.verify_access(token)


def _decode_key(encoded: str) -> bytes:
    try:
        return base64.b64decode(encoded, validate=True)
    except Exception as exc:
        raise ValidationFailure(f"invalid base64 key encoding: {exc}") from exc
