"""HTTP surface of the proxy. Service-to-service bearer tokens only.

Request and response schemas carry share ids and base64 fragment/capsule
blobs exclusively — no plaintext, ciphertext body, symmetric key, or
secret key field exists anywhere on this surface.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from pydantic import BaseModel, ConfigDict

from ..auth.service import TokenAuthority
from ..http_common import bearer_claims, install_error_handler, require_role
from .service import KfragVault

SERVICE_ROLE = "service"


class StoreKfragsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    share_id: str
    kfrags: list[str]
    threshold: int
    shares: int


class ReencapsulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    share_id: str
    capsule: str


def create_proxy_app(vault: KfragVault, authority: TokenAuthority) -> FastAPI:
    app = FastAPI(title="ehrshare-proxy", docs_url=None, redoc_url=None)
    install_error_handler(app)

    def _authorize(request: Request) -> None:
        require_role(bearer_claims(request, authority), SERVICE_ROLE)

    @app.post("/kfrags", status_code=201)
    def store_kfrags(payload: StoreKfragsRequest, request: Request) -> dict:
        _authorize(request)
        vault.store_kfrags(payload.share_id, payload.kfrags, payload.threshold, payload.shares)
        return {"status": "stored", "share_id": payload.share_id}

    @app.post("/reencapsulate")
    def reencapsulate(payload: ReencapsulateRequest, request: Request) -> dict:
        _authorize(request)
        cfrags = vault.reencapsulate_for_share(payload.share_id, payload.capsule)
        return {"share_id": payload.share_id, "cfrags": cfrags}

    @app.delete("/kfrags/{share_id}")
    def delete_kfrags(share_id: str, request: Request) -> dict:
        _authorize(request)
        vault.delete_kfrags(share_id)
        return {"status": "deleted", "share_id": share_id}

    return app
