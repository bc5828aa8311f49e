"""Shared FastAPI plumbing: error translation and bearer-token guards."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .auth.service import TokenAuthority
from .errors import AuthenticationFailure, ForbiddenError, ServiceError


def install_error_handler(app: FastAPI) -> None:
    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.http_status,
            content={"detail": {"code": exc.code, "message": exc.message}},
        )


def bearer_claims(request: Request, authority: TokenAuthority) -> dict:
    header = request.headers.get("Authorization", "")
    if not header.startswith("Bearer "):
        raise AuthenticationFailure("missing bearer token")
    return authority.verify_access(header[len("Bearer ") :])


def require_role(claims: dict, role: str) -> None:
    if role not in claims.get("roles", []):
        raise ForbiddenError(f"requires role {role}")
