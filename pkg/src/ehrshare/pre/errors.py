"""Exception types raised by the re-encryption engine."""


class PreError(Exception):
    """Base class for all engine failures."""


class EntropyError(PreError):
    """The injected entropy source failed or returned malformed output."""


class ParameterError(PreError):
    """Caller supplied arguments outside the scheme's domain."""


class DeserializationError(PreError):
    """A byte string does not decode to a valid engine object."""


class CapsuleIntegrityError(PreError):
    """The capsule self-check equation does not hold."""


class FragmentVerificationError(PreError):
    """A capsule fragment failed verification during decapsulation.

    `fragment_index` identifies the offending fragment within the
    sequence the caller supplied.
    """

    def __init__(self, message: str, fragment_index: int | None = None):
        super().__init__(message)
        self.fragment_index = fragment_index


class ThresholdError(PreError):
    """Too few distinct fragments to reconstruct the encapsulated key."""


class MessageTooLargeError(PreError):
    """Plaintext exceeds the configured maximum payload size."""


class DecryptionError(PreError):
    """AEAD authentication failed (wrong key, capsule, or tampered body)."""
