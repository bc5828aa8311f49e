"""Threshold proxy re-encryption engine.

Stateless and pure: every operation is a function of its inputs plus the
injected entropy source. See ``kem`` for the pipeline walkthrough.
"""

from .curve import GENERATOR, ORDER, POINT_SIZE, SCALAR_SIZE, SECOND_GENERATOR, Point
from .dem import (
    DEFAULT_MAX_PLAINTEXT,
    NONCE_SIZE,
    Ciphertext,
    dem_decrypt,
    dem_encrypt,
)
from .entropy import DEFAULT_ENTROPY, EntropySource, SystemEntropy
from .errors import (
    CapsuleIntegrityError,
    DecryptionError,
    DeserializationError,
    EntropyError,
    FragmentVerificationError,
    MessageTooLargeError,
    ParameterError,
    PreError,
    ThresholdError,
)
from .kem import (
    CAPSULE_SIZE,
    CFRAG_SIZE,
    FRAGMENT_ID_SIZE,
    KFRAG_SIZE,
    Capsule,
    CapsuleFragment,
    FragmentProof,
    KeyFragment,
    KeyPair,
    SigningKeyPair,
    SymmetricKey,
    decapsulate_original,
    decapsulate_reencrypted,
    encapsulate,
    generate_keypair,
    generate_kfrags,
    generate_signing_keypair,
    reencapsulate,
    verify_cfrag,
    verify_kfrag,
)
from .signing import SIGNATURE_SIZE, sign, verify

__all__ = [
    "CAPSULE_SIZE",
    "CFRAG_SIZE",
    "DEFAULT_ENTROPY",
    "DEFAULT_MAX_PLAINTEXT",
    "FRAGMENT_ID_SIZE",
    "GENERATOR",
    "KFRAG_SIZE",
    "NONCE_SIZE",
    "ORDER",
    "POINT_SIZE",
    "SCALAR_SIZE",
    "SECOND_GENERATOR",
    "SIGNATURE_SIZE",
    "Capsule",
    "CapsuleFragment",
    "CapsuleIntegrityError",
    "Ciphertext",
    "DecryptionError",
    "DeserializationError",
    "EntropyError",
    "EntropySource",
    "FragmentProof",
    "FragmentVerificationError",
    "KeyFragment",
    "KeyPair",
    "MessageTooLargeError",
    "ParameterError",
    "Point",
    "PreError",
    "SigningKeyPair",
    "SymmetricKey",
    "SystemEntropy",
    "ThresholdError",
    "dem_decrypt",
    "dem_encrypt",
    "decapsulate_original",
    "decapsulate_reencrypted",
    "encapsulate",
    "generate_keypair",
    "generate_kfrags",
    "generate_signing_keypair",
    "reencapsulate",
    "sign",
    "verify",
    "verify_cfrag",
    "verify_kfrag",
]
