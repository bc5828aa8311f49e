"""Transports the resource server uses to reach the proxy."""

from __future__ import annotations

from typing import Callable, Protocol

import httpx

from ..errors import ConflictError, NotFoundError, UpstreamError, ValidationFailure
from ..proxy.service import KfragVault


class ProxyTransport(Protocol):
    def store_kfrags(
        self, share_id: str, kfrags: list[str], threshold: int, shares: int
    ) -> None: ...

    def reencapsulate(self, share_id: str, capsule_b64: str) -> list[str]: ...

    def delete_kfrags(self, share_id: str) -> None: ...


class LocalProxyClient:
    """Direct in-process calls; used by unit tests and single-process stacks."""

    def __init__(self, vault: KfragVault):
        self._vault = vault

    def store_kfrags(self, share_id: str, kfrags: list[str], threshold: int, shares: int) -> None:
        self._vault.store_kfrags(share_id, kfrags, threshold, shares)

    def reencapsulate(self, share_id: str, capsule_b64: str) -> list[str]:
        return self._vault.reencapsulate_for_share(share_id, capsule_b64)

    def delete_kfrags(self, share_id: str) -> None:
        self._vault.delete_kfrags(share_id)


class HttpProxyClient:
    """Speaks the proxy's HTTP+JSON API with a fresh service token per call."""

    def __init__(self, http: httpx.Client, token_source: Callable[[], str], base_url: str = ""):
        self._http = http
        self._token_source = token_source
        self._base = base_url.rstrip("/")

    def _headers(self) -> dict[str, str]:
        return {"Authorization": f"Bearer {self._token_source()}"}

    def _raise_for(self, response: httpx.Response) -> None:
        if response.status_code < 400:
            return
        try:
            code = response.json()["detail"]["code"]
        except Exception:
            code = "unknown"
        if response.status_code == 404:
            raise NotFoundError(f"proxy: {code}")
        if response.status_code == 409:
            raise ConflictError(f"proxy: {code}")
        if response.status_code == 422:
            raise ValidationFailure(f"proxy: {code}")
        raise UpstreamError(f"proxy returned {response.status_code} ({code})")

    def store_kfrags(self, share_id: str, kfrags: list[str], threshold: int, shares: int) -> None:
        try:
            response = self._http.post(
                f"{self._base}/kfrags",
                json={
                    "share_id": share_id,
                    "kfrags": kfrags,
                    "threshold": threshold,
                    "shares": shares,
                },
                headers=self._headers(),
            )
        except httpx.HTTPError as exc:
            raise UpstreamError(f"proxy unreachable: {exc}") from exc
        self._raise_for(response)

    def reencapsulate(self, share_id: str, capsule_b64: str) -> list[str]:
        try:
            response = self._http.post(
                f"{self._base}/reencapsulate",
                json={"share_id": share_id, "capsule": capsule_b64},
                headers=self._headers(),
            )
        except httpx.HTTPError as exc:
            raise UpstreamError(f"proxy unreachable: {exc}") from exc
        self._raise_for(response)
        return response.json()["cfrags"]

    def delete_kfrags(self, share_id: str) -> None:
        try:
            response = self._http.delete(
                f"{self._base}/kfrags/{share_id}", headers=self._headers()
            )
        except httpx.HTTPError as exc:
            raise UpstreamError(f"proxy unreachable: {exc}") from exc
        self._raise_for(response)
