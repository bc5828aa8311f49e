"""Key encapsulation and threshold re-encryption over capsules.

The pipeline:

1. ``encapsulate`` derives a fresh symmetric key for a recipient's public
   key and emits a *capsule* — a publicly checkable (E, V, s) triple that
   is the only object ever re-encrypted.
2. ``generate_kfrags`` splits a delegation key into n signed shares
   (key fragments) such that any t of them suffice downstream. Only the
   delegatee's *public* key enters this step (non-interactive), and the
   share indices are blinded behind a DH secret so the fragment holder
   cannot interpolate the delegation key on its own.
3. ``reencapsulate`` transforms a capsule under one key fragment into a
   capsule fragment carrying a proof of correct transformation that anyone
   holding the delegator's verifying key can check.
4. ``decapsulate_reencrypted`` recombines at least t verified capsule
   fragments with the delegatee's secret key and recovers the exact
   symmetric key produced in step 1. ``decapsulate_original`` is the
   owner's direct path; no fragments involved.

All objects are immutable, serialize to fixed widths, and round-trip
bit-exactly. The functions are pure apart from the injected entropy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import signing
from .curve import (
    GENERATOR,
    IDENTITY,
    ORDER,
    POINT_SIZE,
    SCALAR_SIZE,
    SECOND_GENERATOR,
    Point,
    scalar_from_bytes,
    scalar_to_bytes,
)
from .entropy import DEFAULT_ENTROPY, EntropySource, draw_bytes, random_scalar
from .errors import (
    CapsuleIntegrityError,
    DeserializationError,
    FragmentVerificationError,
    ParameterError,
    ThresholdError,
)
from .hashing import (
    SYMMETRIC_KEY_SIZE,
    TAG_CAPSULE_CHECK,
    TAG_FRAGMENT_PROOF,
    TAG_KFRAG_SIGNATURE,
    TAG_NON_INTERACTIVE,
    TAG_SHARE_INDEX,
    derive_symmetric_key,
    hash_to_scalar,
)

FRAGMENT_ID_SIZE = 32

CAPSULE_SIZE = 2 * POINT_SIZE + SCALAR_SIZE
KFRAG_SIZE = FRAGMENT_ID_SIZE + SCALAR_SIZE + 2 * POINT_SIZE + signing.SIGNATURE_SIZE
CFRAG_SIZE = (
    FRAGMENT_ID_SIZE + 3 * POINT_SIZE  # id, E1, V1, precursor
    + 4 * POINT_SIZE + SCALAR_SIZE + signing.SIGNATURE_SIZE  # proof
)


@dataclass(frozen=True)
class KeyPair:
    """A delegation keypair: secret scalar and its public group element."""

    secret: int
    public: Point

    @classmethod
    def generate(cls, entropy: EntropySource = DEFAULT_ENTROPY) -> "KeyPair":
        secret = random_scalar(entropy, ORDER)
        return cls(secret=secret, public=secret * GENERATOR)

    @classmethod
    def from_secret_bytes(cls, data: bytes) -> "KeyPair":
        secret = scalar_from_bytes(data)
        if secret == 0:
            raise DeserializationError("secret scalar must be nonzero")
        return cls(secret=secret, public=secret * GENERATOR)

    def secret_bytes(self) -> bytes:
        return scalar_to_bytes(self.secret)


@dataclass(frozen=True)
class SigningKeyPair:
    """Signature keypair used to authenticate fragments."""

    signing: int
    verifying: Point

    @classmethod
    def generate(cls, entropy: EntropySource = DEFAULT_ENTROPY) -> "SigningKeyPair":
        secret = random_scalar(entropy, ORDER)
        return cls(signing=secret, verifying=secret * GENERATOR)

    @classmethod
    def from_secret_bytes(cls, data: bytes) -> "SigningKeyPair":
        secret = scalar_from_bytes(data)
        if secret == 0:
            raise DeserializationError("signing scalar must be nonzero")
        return cls(signing=secret, verifying=secret * GENERATOR)

    def secret_bytes(self) -> bytes:
        return scalar_to_bytes(self.signing)

    def sign(self, message: bytes) -> bytes:
        return signing.sign(self.signing, message)


@dataclass(frozen=True)
class SymmetricKey:
    """32 bytes of KDF output; never leaves the process that derived it."""

    data: bytes

    def __post_init__(self):
        if len(self.data) != SYMMETRIC_KEY_SIZE:
            raise ParameterError("symmetric key must be exactly 32 bytes")


@dataclass(frozen=True)
class Capsule:
    """KEM output (E, V, s); validity is checkable without any secret."""

    point_e: Point
    point_v: Point
    signature_scalar: int

    def verify(self) -> bool:
        """Self-check: s·G == V + H(E, V)·E."""
        try:
            challenge = hash_to_scalar(
                TAG_CAPSULE_CHECK, self.point_e.to_bytes(), self.point_v.to_bytes()
            )
        except ValueError:
            return False
        return self.signature_scalar * GENERATOR == self.point_v + challenge * self.point_e

    def to_bytes(self) -> bytes:
        return (
            self.point_e.to_bytes()
            + self.point_v.to_bytes()
            + scalar_to_bytes(self.signature_scalar)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Capsule":
        if len(data) != CAPSULE_SIZE:
            raise DeserializationError(f"capsule must be exactly {CAPSULE_SIZE} bytes")
        return cls(
            point_e=Point.from_bytes(data[:POINT_SIZE]),
            point_v=Point.from_bytes(data[POINT_SIZE : 2 * POINT_SIZE]),
            signature_scalar=scalar_from_bytes(data[2 * POINT_SIZE :]),
        )


@dataclass(frozen=True)
class KeyFragment:
    """One signed share of a re-encryption key.

    The signature binds (id, commitment, precursor, delegator pk,
    delegatee pk) under the delegator's signing key; the commitment binds
    the share value itself, so every serialized byte is covered by
    ``verify``.
    """

    fragment_id: bytes
    rekey_share: int
    precursor: Point
    commitment: Point
    signature: bytes

    def to_bytes(self) -> bytes:
        return (
            self.fragment_id
            + scalar_to_bytes(self.rekey_share)
            + self.precursor.to_bytes()
            + self.commitment.to_bytes()
            + self.signature
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyFragment":
        if len(data) != KFRAG_SIZE:
            raise DeserializationError(f"key fragment must be exactly {KFRAG_SIZE} bytes")
        offset = 0
        fragment_id = data[offset : offset + FRAGMENT_ID_SIZE]
        offset += FRAGMENT_ID_SIZE
        rekey_share = scalar_from_bytes(data[offset : offset + SCALAR_SIZE])
        if rekey_share == 0:
            raise DeserializationError("re-encryption share must be nonzero")
        offset += SCALAR_SIZE
        precursor = Point.from_bytes(data[offset : offset + POINT_SIZE])
        offset += POINT_SIZE
        commitment = Point.from_bytes(data[offset : offset + POINT_SIZE])
        offset += POINT_SIZE
        return cls(fragment_id, rekey_share, precursor, commitment, data[offset:])

    def verify(self, delegator_vk: Point, delegator_pk: Point, delegatee_pk: Point) -> bool:
        if self.commitment != self.rekey_share * SECOND_GENERATOR:
            return False
        message = _kfrag_signed_message(
            self.fragment_id, self.commitment, self.precursor, delegator_pk, delegatee_pk
        )
        return signing.verify(delegator_vk, message, self.signature)


@dataclass(frozen=True)
class FragmentProof:
    """Discrete-log-equality proof plus the originating fragment signature."""

    point_e2: Point
    point_v2: Point
    point_u2: Point
    commitment: Point
    response: int
    kfrag_signature: bytes

    def to_bytes(self) -> bytes:
        return (
            self.point_e2.to_bytes()
            + self.point_v2.to_bytes()
            + self.point_u2.to_bytes()
            + self.commitment.to_bytes()
            + scalar_to_bytes(self.response)
            + self.kfrag_signature
        )


@dataclass(frozen=True)
class CapsuleFragment:
    """A capsule transformed under one key fragment, with its proof."""

    fragment_id: bytes
    point_e1: Point
    point_v1: Point
    precursor: Point
    proof: FragmentProof

    def to_bytes(self) -> bytes:
        return (
            self.fragment_id
            + self.point_e1.to_bytes()
            + self.point_v1.to_bytes()
            + self.precursor.to_bytes()
            + self.proof.to_bytes()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "CapsuleFragment":
        if len(data) != CFRAG_SIZE:
            raise DeserializationError(f"capsule fragment must be exactly {CFRAG_SIZE} bytes")
        offset = 0
        fragment_id = data[offset : offset + FRAGMENT_ID_SIZE]
        offset += FRAGMENT_ID_SIZE
        points = []
        for _ in range(6):  # E1, V1, precursor, E2, V2, U2
            points.append(Point.from_bytes(data[offset : offset + POINT_SIZE]))
            offset += POINT_SIZE
        commitment = Point.from_bytes(data[offset : offset + POINT_SIZE])
        offset += POINT_SIZE
        response = scalar_from_bytes(data[offset : offset + SCALAR_SIZE])
        offset += SCALAR_SIZE
        proof = FragmentProof(points[3], points[4], points[5], commitment, response, data[offset:])
        return cls(fragment_id, points[0], points[1], points[2], proof)

    def verify(
        self,
        capsule: Capsule,
        delegator_vk: Point,
        delegator_pk: Point,
        delegatee_pk: Point,
    ) -> bool:
        if not capsule.verify():
            return False
        proof = self.proof
        challenge = _proof_challenge(capsule, self)
        rho = proof.response
        if rho * capsule.point_e != proof.point_e2 + challenge * self.point_e1:
            return False
        if rho * capsule.point_v != proof.point_v2 + challenge * self.point_v1:
            return False
        if rho * SECOND_GENERATOR != proof.point_u2 + challenge * proof.commitment:
            return False
        message = _kfrag_signed_message(
            self.fragment_id, proof.commitment, self.precursor, delegator_pk, delegatee_pk
        )
        return signing.verify(delegator_vk, message, proof.kfrag_signature)


def _kfrag_signed_message(
    fragment_id: bytes,
    commitment: Point,
    precursor: Point,
    delegator_pk: Point,
    delegatee_pk: Point,
) -> bytes:
    return (
        TAG_KFRAG_SIGNATURE
        + fragment_id
        + commitment.to_bytes()
        + precursor.to_bytes()
        + delegator_pk.to_bytes()
        + delegatee_pk.to_bytes()
    )


def _proof_challenge(capsule: Capsule, cfrag: CapsuleFragment) -> int:
    proof = cfrag.proof
    return hash_to_scalar(
        TAG_FRAGMENT_PROOF,
        capsule.point_e.to_bytes(),
        cfrag.point_e1.to_bytes(),
        proof.point_e2.to_bytes(),
        capsule.point_v.to_bytes(),
        cfrag.point_v1.to_bytes(),
        proof.point_v2.to_bytes(),
        SECOND_GENERATOR.to_bytes(),
        proof.commitment.to_bytes(),
        proof.point_u2.to_bytes(),
        cfrag.fragment_id,
        cfrag.precursor.to_bytes(),
    )


def generate_keypair(entropy: EntropySource = DEFAULT_ENTROPY) -> KeyPair:
    return KeyPair.generate(entropy)


def generate_signing_keypair(entropy: EntropySource = DEFAULT_ENTROPY) -> SigningKeyPair:
    return SigningKeyPair.generate(entropy)


def encapsulate(
    recipient_pk: Point, entropy: EntropySource = DEFAULT_ENTROPY
) -> tuple[SymmetricKey, Capsule]:
    """Derive a fresh symmetric key for ``recipient_pk`` and its capsule."""
    if recipient_pk.is_identity:
        raise ParameterError("recipient public key must not be the identity")
    r = random_scalar(entropy, ORDER)
    u = random_scalar(entropy, ORDER)
    while (r + u) % ORDER == 0:  # shared secret must be a usable point
        u = random_scalar(entropy, ORDER)
    point_e = r * GENERATOR
    point_v = u * GENERATOR
    challenge = hash_to_scalar(TAG_CAPSULE_CHECK, point_e.to_bytes(), point_v.to_bytes())
    signature_scalar = (u + r * challenge) % ORDER
    shared = ((r + u) % ORDER) * recipient_pk
    key = SymmetricKey(derive_symmetric_key(shared.to_bytes()))
    return key, Capsule(point_e, point_v, signature_scalar)


def decapsulate_original(owner_secret: int, capsule: Capsule) -> SymmetricKey:
    """Owner-path decapsulation; no re-encryption involved."""
    if not 0 < owner_secret < ORDER:
        raise ParameterError("secret scalar out of range")
    if not capsule.verify():
        raise CapsuleIntegrityError("capsule self-check failed")
    shared = owner_secret * (capsule.point_e + capsule.point_v)
    if shared.is_identity:
        raise CapsuleIntegrityError("capsule produces a degenerate shared secret")
    return SymmetricKey(derive_symmetric_key(shared.to_bytes()))


def generate_kfrags(
    delegator: KeyPair,
    delegator_signing: SigningKeyPair,
    delegatee_pk: Point,
    threshold: int,
    shares: int,
    entropy: EntropySource = DEFAULT_ENTROPY,
) -> list[KeyFragment]:
    """Split the delegation key for ``delegator -> delegatee_pk`` into shares.

    Non-interactive: only the delegatee's public key is accepted. The share
    index of each fragment is derived from a DH secret the fragment holder
    cannot compute, which is what keeps a t-subset of fragments useless
    without the delegatee.
    """
    if threshold < 1 or shares < 1 or threshold > shares:
        raise ParameterError("threshold and shares must satisfy 1 <= threshold <= shares")
    if delegatee_pk.is_identity:
        raise ParameterError("delegatee public key must not be the identity")

    precursor_secret = random_scalar(entropy, ORDER)
    precursor = precursor_secret * GENERATOR
    dh_point = precursor_secret * delegatee_pk
    if dh_point.is_identity:
        raise ParameterError("degenerate delegatee public key")

    d = hash_to_scalar(
        TAG_NON_INTERACTIVE, precursor.to_bytes(), delegatee_pk.to_bytes(), dh_point.to_bytes()
    )
    coefficients = [delegator.secret * pow(d, -1, ORDER) % ORDER]
    coefficients.extend(random_scalar(entropy, ORDER) for _ in range(threshold - 1))

    fragments: list[KeyFragment] = []
    seen_ids: set[bytes] = set()
    while len(fragments) < shares:
        fragment_id = draw_bytes(entropy, FRAGMENT_ID_SIZE)
        if fragment_id in seen_ids:
            continue
        share_index = hash_to_scalar(
            TAG_SHARE_INDEX,
            precursor.to_bytes(),
            delegatee_pk.to_bytes(),
            dh_point.to_bytes(),
            fragment_id,
        )
        rekey_share = _poly_eval(coefficients, share_index)
        if rekey_share == 0:  # zero share has no commitment; pick a fresh id
            continue
        seen_ids.add(fragment_id)
        commitment = rekey_share * SECOND_GENERATOR
        message = _kfrag_signed_message(
            fragment_id, commitment, precursor, delegator.public, delegatee_pk
        )
        fragments.append(
            KeyFragment(
                fragment_id=fragment_id,
                rekey_share=rekey_share,
                precursor=precursor,
                commitment=commitment,
                signature=delegator_signing.sign(message),
            )
        )
    return fragments


def verify_kfrag(
    kfrag: KeyFragment, delegator_vk: Point, delegator_pk: Point, delegatee_pk: Point
) -> bool:
    return kfrag.verify(delegator_vk, delegator_pk, delegatee_pk)


def reencapsulate(
    kfrag: KeyFragment, capsule: Capsule, entropy: EntropySource = DEFAULT_ENTROPY
) -> CapsuleFragment:
    """Transform a capsule under one key fragment. Takes no ciphertext."""
    if not capsule.verify():
        raise CapsuleIntegrityError("capsule self-check failed")
    rk = kfrag.rekey_share
    point_e1 = rk * capsule.point_e
    point_v1 = rk * capsule.point_v
    tau = random_scalar(entropy, ORDER)
    pending_proof = FragmentProof(
        point_e2=tau * capsule.point_e,
        point_v2=tau * capsule.point_v,
        point_u2=tau * SECOND_GENERATOR,
        commitment=kfrag.commitment,
        response=0,
        kfrag_signature=kfrag.signature,
    )
    cfrag = CapsuleFragment(kfrag.fragment_id, point_e1, point_v1, kfrag.precursor, pending_proof)
    challenge = _proof_challenge(capsule, cfrag)
    response = (tau + challenge * rk) % ORDER
    proof = FragmentProof(
        pending_proof.point_e2,
        pending_proof.point_v2,
        pending_proof.point_u2,
        pending_proof.commitment,
        response,
        pending_proof.kfrag_signature,
    )
    return CapsuleFragment(kfrag.fragment_id, point_e1, point_v1, kfrag.precursor, proof)


def verify_cfrag(
    cfrag: CapsuleFragment,
    capsule: Capsule,
    delegator_vk: Point,
    delegator_pk: Point,
    delegatee_pk: Point,
) -> bool:
    return cfrag.verify(capsule, delegator_vk, delegator_pk, delegatee_pk)


def decapsulate_reencrypted(
    delegatee: KeyPair,
    delegator_pk: Point,
    delegator_vk: Point,
    capsule: Capsule,
    cfrags: Sequence[CapsuleFragment],
) -> SymmetricKey:
    """Recombine capsule fragments and recover the encapsulated key.

    Every fragment is re-verified here; a bad one is reported by index.
    Fragments with duplicate ids collapse to one share, so a duplicate
    cannot substitute for a missing share. An interpolation over fewer
    than threshold distinct shares fails the reconstruction check and
    raises ``ThresholdError``.
    """
    if not cfrags:
        raise ThresholdError("no capsule fragments supplied")
    if not capsule.verify():
        raise CapsuleIntegrityError("capsule self-check failed")
    for index, cfrag in enumerate(cfrags):
        if not cfrag.verify(capsule, delegator_vk, delegator_pk, delegatee.public):
            raise FragmentVerificationError(
                f"capsule fragment {index} failed verification", fragment_index=index
            )
    precursor = cfrags[0].precursor
    for index, cfrag in enumerate(cfrags):
        if cfrag.precursor != precursor:
            raise FragmentVerificationError(
                f"capsule fragment {index} belongs to a different delegation",
                fragment_index=index,
            )

    distinct: dict[bytes, CapsuleFragment] = {}
    for cfrag in cfrags:
        distinct.setdefault(cfrag.fragment_id, cfrag)

    dh_point = delegatee.secret * precursor
    pk_bytes = delegatee.public.to_bytes()
    d = hash_to_scalar(
        TAG_NON_INTERACTIVE, precursor.to_bytes(), pk_bytes, dh_point.to_bytes()
    )
    indices = [
        hash_to_scalar(
            TAG_SHARE_INDEX, precursor.to_bytes(), pk_bytes, dh_point.to_bytes(), fragment_id
        )
        for fragment_id in distinct
    ]
    lambdas = _lagrange_at_zero(indices)

    e_prime = IDENTITY
    v_prime = IDENTITY
    for lam, cfrag in zip(lambdas, distinct.values()):
        e_prime = e_prime + lam * cfrag.point_e1
        v_prime = v_prime + lam * cfrag.point_v1

    challenge = hash_to_scalar(
        TAG_CAPSULE_CHECK, capsule.point_e.to_bytes(), capsule.point_v.to_bytes()
    )
    d_inv = pow(d, -1, ORDER)
    expected = (capsule.signature_scalar * d_inv % ORDER) * delegator_pk
    if expected != v_prime + challenge * e_prime:
        raise ThresholdError(
            "fragment set does not reconstruct the delegation "
            "(below threshold or inconsistent fragments)"
        )
    shared = d * (e_prime + v_prime)
    if shared.is_identity:
        raise CapsuleIntegrityError("capsule produces a degenerate shared secret")
    return SymmetricKey(derive_symmetric_key(shared.to_bytes()))


def _poly_eval(coefficients: list[int], x: int) -> int:
    # Horner evaluation over the scalar field, highest degree first.
    acc = 0
    for coefficient in reversed(coefficients):
        acc = (acc * x + coefficient) % ORDER
    return acc


def _lagrange_at_zero(indices: list[int]) -> list[int]:
    lambdas = []
    for i, x_i in enumerate(indices):
        numerator, denominator = 1, 1
        for j, x_j in enumerate(indices):
            if i == j:
                continue
            numerator = numerator * x_j % ORDER
            denominator = denominator * (x_j - x_i) % ORDER
        lambdas.append(numerator * pow(denominator, -1, ORDER) % ORDER)
    return lambdas
