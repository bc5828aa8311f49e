"""HTTP surface of the resource server.

Callers authenticate with bearer access tokens. Secret key material rides
in dedicated header fields (`X-Pre-Secret-Key`, `X-Pre-Signing-Key`) on
upload and download, and in dedicated body fields on share acceptance;
deployments terminate TLS in front of this service.
"""

from __future__ import annotations

from fastapi import FastAPI, File, Form, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict

from ..auth.http import DEFAULT_CORS_ORIGINS
from ..auth.service import TokenAuthority
from ..errors import ValidationFailure
from ..http_common import bearer_claims, install_error_handler
from .service import MEDIA_CONTENT_TYPES, ResourceService

SECRET_KEY_HEADER = "X-Pre-Secret-Key"
SIGNING_KEY_HEADER = "X-Pre-Signing-Key"

_CONTENT_TYPE_TO_MEDIA = {value: key for key, value in MEDIA_CONTENT_TYPES.items()}


class ShareRequestBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    resource_id: str


class AnswerBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    decision: str
    expiry_epoch_s: float | None = None
    threshold: int = 1
    shares: int = 1
    secret_key: str | None = None
    signing_key: str | None = None


def create_resource_app(
    service: ResourceService,
    authority: TokenAuthority,
    cors_origins: tuple[str, ...] = DEFAULT_CORS_ORIGINS,
) -> FastAPI:
    app = FastAPI(title="ehrshare-resource", docs_url=None, redoc_url=None)
    install_error_handler(app)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Resource-Id", "X-Filename", "Content-Disposition"],
    )

    def _caller(request: Request) -> str:
        return bearer_claims(request, authority)["sub"]

    def _required_header(request: Request, name: str) -> str:
        value = request.headers.get(name)
        if not value:
            raise ValidationFailure(f"missing required header {name}")
        return value

    @app.post("/ehr", status_code=201)
    async def upload(
        request: Request,
        file: UploadFile = File(...),
        media_type: str | None = Form(default=None),
    ) -> dict:
        caller_id = _caller(request)
        body = await file.read()
        resolved = media_type or _CONTENT_TYPE_TO_MEDIA.get(file.content_type or "", "")
        return service.upload_ehr(
            owner_id=caller_id,
            file_bytes=body,
            filename=file.filename or "unnamed",
            media_type=resolved,
            owner_secret_key_b64=_required_header(request, SECRET_KEY_HEADER),
            owner_signing_key_b64=_required_header(request, SIGNING_KEY_HEADER),
        )

    @app.get("/ehr")
    def list_ehrs(request: Request) -> dict:
        return service.list_ehrs(_caller(request))

    @app.get("/ehr/{resource_id}")
    def download(resource_id: str, request: Request) -> Response:
        caller_id = _caller(request)
        secret_key = _required_header(request, SECRET_KEY_HEADER)
        plaintext, meta = service.retrieve_ehr(caller_id, resource_id, secret_key)
        return Response(
            content=plaintext,
            media_type=MEDIA_CONTENT_TYPES[meta["media_type"]],
            headers={
                "X-Resource-Id": meta["resource_id"],
                "X-Filename": meta["filename"],
                "Content-Disposition": f'attachment; filename="{meta["filename"]}"',
            },
        )

    @app.post("/shares", status_code=201)
    def request_share(payload: ShareRequestBody, request: Request) -> dict:
        return service.request_share(_caller(request), payload.resource_id)

    @app.post("/shares/{share_id}/answer")
    def answer_share(share_id: str, payload: AnswerBody, request: Request) -> dict:
        return service.answer_share(
            delegator_id=_caller(request),
            share_id=share_id,
            decision=payload.decision,
            delegator_secret_key_b64=payload.secret_key,
            delegator_signing_key_b64=payload.signing_key,
            expiry=payload.expiry_epoch_s,
            threshold=payload.threshold,
            shares=payload.shares,
        )

    @app.post("/shares/{share_id}/revoke")
    def revoke_share(share_id: str, request: Request) -> dict:
        return service.revoke_share(_caller(request), share_id)

    @app.get("/shares")
    def list_shares(request: Request, direction: str = "incoming") -> list[dict]:
        return service.list_share_requests(_caller(request), direction)

    return app
