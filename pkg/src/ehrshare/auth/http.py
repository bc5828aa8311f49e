"""HTTP surface of the authorization server.

The refresh token travels in an http-only cookie for browser clients;
cookie-borne refresh and logout calls must present the CSRF header.
Non-browser clients may instead send the token in the JSON body, which
requires no CSRF (possession of the token itself is the proof).
"""

from __future__ import annotations

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict

from ..errors import TokenMalformed
from ..http_common import bearer_claims, install_error_handler
from .service import AuthService, TokenPair

REFRESH_COOKIE = "refresh_token"
CSRF_HEADER = "X-CSRF-Token"

# Browser portal origins; cookie credentials rule out a wildcard.
DEFAULT_CORS_ORIGINS = ("http://127.0.0.1:8080", "http://localhost:8080")


class RegisterRequest(BaseModel):
    # extra="forbid": a payload smuggling any unexpected field (for example
    # a secret key) is rejected wholesale.
    model_config = ConfigDict(extra="forbid")

    name: str
    email: str
    password: str
    public_key: str
    verifying_key: str
    roles: list[str]


class LoginRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    email: str
    password: str


class RefreshRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    refresh_token: str | None = None


def create_auth_app(
    service: AuthService,
    cookie_secure: bool = True,
    cors_origins: tuple[str, ...] = DEFAULT_CORS_ORIGINS,
) -> FastAPI:
    app = FastAPI(title="ehrshare-auth", docs_url=None, redoc_url=None)
    install_error_handler(app)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _set_refresh_cookie(response: Response, pair: TokenPair) -> None:
        response.set_cookie(
            REFRESH_COOKIE,
            pair.refresh_token,
            max_age=int(pair.refresh_expires_in),
            httponly=True,
            secure=cookie_secure,
            samesite="strict",
            path="/auth",
        )

    def _pair_body(pair: TokenPair, user=None) -> dict:
        body = {
            "access_token": pair.access_token,
            "token_type": "bearer",
            "expires_in": pair.access_expires_in,
            "csrf_token": pair.csrf_token,
        }
        if user is not None:
            body["user"] = {
                "user_id": user.user_id,
                "name": user.name,
                "email": user.email,
                "public_key": user.public_key,
                "verifying_key": user.verifying_key,
                "roles": list(user.roles),
            }
        return body

    @app.post("/auth/register", status_code=201)
    def register(payload: RegisterRequest) -> dict:
        user = service.register(
            name=payload.name,
            email=payload.email,
            password=payload.password,
            public_key=payload.public_key,
            verifying_key=payload.verifying_key,
            roles=payload.roles,
        )
        return {
            "user_id": user.user_id,
            "name": user.name,
            "email": user.email,
            "public_key": user.public_key,
            "verifying_key": user.verifying_key,
            "roles": list(user.roles),
        }

    @app.post("/auth/login")
    def login(payload: LoginRequest, response: Response) -> dict:
        pair, user = service.login(payload.email, payload.password)
        _set_refresh_cookie(response, pair)
        return _pair_body(pair, user)

    def _presented_refresh_token(request: Request, payload: RefreshRequest | None) -> tuple[str, bool]:
        """Returns (token, came_from_cookie)."""
        if payload is not None and payload.refresh_token:
            return payload.refresh_token, False
        cookie = request.cookies.get(REFRESH_COOKIE)
        if cookie:
            return cookie, True
        raise TokenMalformed("no refresh token presented")

    @app.post("/auth/refresh")
    def refresh(request: Request, response: Response, payload: RefreshRequest | None = None) -> dict:
        token, from_cookie = _presented_refresh_token(request, payload)
        pair = service.refresh(
            token,
            csrf_token=request.headers.get(CSRF_HEADER),
            require_csrf=from_cookie,
        )
        _set_refresh_cookie(response, pair)
        return _pair_body(pair)

    @app.post("/auth/logout")
    def logout(request: Request, response: Response, payload: RefreshRequest | None = None) -> dict:
        token, from_cookie = _presented_refresh_token(request, payload)
        service.logout(
            token,
            csrf_token=request.headers.get(CSRF_HEADER),
            require_csrf=from_cookie,
        )
        response.delete_cookie(REFRESH_COOKIE, path="/auth")
        return {"status": "logged_out"}

    @app.get("/auth/verify")
    def verify(request: Request) -> dict:
        claims = bearer_claims(request, service.authority)
        return {
            "sub": claims["sub"],
            "roles": claims["roles"],
            "exp": claims["exp"],
            "iat": claims["iat"],
            "jti": claims["jti"],
        }

    return app
