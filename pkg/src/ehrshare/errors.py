"""Service-level error taxonomy, mapped onto HTTP statuses at the edge."""

from __future__ import annotations


class ServiceError(Exception):
    http_status = 500
    code = "internal_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


class ValidationFailure(ServiceError):
    http_status = 422
    code = "validation_error"


class BusinessRuleViolation(ServiceError):
    http_status = 422
    code = "business_rule_violation"


class NotFoundError(ServiceError):
    http_status = 404
    code = "not_found"


class ConflictError(ServiceError):
    http_status = 409
    code = "conflict"


class StateError(ServiceError):
    http_status = 409
    code = "invalid_state"


class ForbiddenError(ServiceError):
    http_status = 403
    code = "forbidden"


class AuthenticationFailure(ServiceError):
    http_status = 401
    code = "authentication_failed"


class TokenMalformed(AuthenticationFailure):
    code = "token_malformed"


class TokenSignatureInvalid(AuthenticationFailure):
    code = "token_signature_invalid"


class TokenExpired(AuthenticationFailure):
    code = "token_expired"


class FamilyRevoked(AuthenticationFailure):
    code = "refresh_family_revoked"


class CsrfFailure(ForbiddenError):
    code = "csrf_check_failed"


class ConfigurationError(ServiceError):
    http_status = 500
    code = "configuration_error"


class UpstreamError(ServiceError):
    http_status = 502
    code = "upstream_unavailable"


class IntegrityError(ServiceError):
    http_status = 502
    code = "fragment_integrity_failure"
