"""Composition root: wires stores, services, and HTTP apps together.

``build_stack`` produces the three FastAPI apps sharing one token
authority. In a single process the resource server can talk to the proxy
directly (``LocalProxyClient``); behind real sockets it uses
``HttpProxyClient`` with short-lived service tokens.

The ``ehrshare-stack`` CLI runs all three servers on localhost ports,
which is what the benchmark harness and the web client target.
"""

from __future__ import annotations

import secrets
import socket
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import click
import httpx
import uvicorn
from fastapi import FastAPI

from .auth.http import create_auth_app
from .auth.service import AuthConfig, AuthService, TokenAuthority
from .clock import Clock, system_clock
from .pre import DEFAULT_ENTROPY, EntropySource
from .proxy.http import create_proxy_app
from .proxy.service import KfragVault
from .resource.http import create_resource_app
from .resource.proxyclient import HttpProxyClient, LocalProxyClient, ProxyTransport
from .resource.service import ResourceConfig, ResourceService
from .storage import DocumentStore, FileDocumentStore, FileTtlStore, TtlStore

SERVICE_TOKEN_TTL = 300.0


@dataclass
class Stack:
    authority: TokenAuthority
    auth_service: AuthService
    vault: KfragVault
    resource_service: ResourceService
    auth_app: FastAPI
    proxy_app: FastAPI
    resource_app: FastAPI
    users_store: DocumentStore
    records_store: DocumentStore
    vault_store: DocumentStore
    families: TtlStore

    def service_token(self) -> str:
        return self.authority.mint_access("resource-service", ["service"], ttl=SERVICE_TOKEN_TTL)


def build_stack(
    token_secret: bytes | None = None,
    clock: Clock = system_clock,
    backend: str = "memory",
    data_dir: str | Path | None = None,
    cookie_secure: bool = True,
    proxy_transport: ProxyTransport | None = None,
    auth_config: AuthConfig = AuthConfig(),
    resource_config: ResourceConfig = ResourceConfig(),
    entropy: EntropySource = DEFAULT_ENTROPY,
) -> Stack:
    token_secret = token_secret or secrets.token_bytes(32)

    if backend == "memory":
        users_store = DocumentStore()
        records_store = DocumentStore()
        vault_store = DocumentStore()
        families: TtlStore = TtlStore(clock)
    elif backend == "file":
        if data_dir is None:
            raise ValueError("file backend requires data_dir")
        root = Path(data_dir)
        users_store = FileDocumentStore(root / "auth")
        records_store = FileDocumentStore(root / "resource")
        vault_store = FileDocumentStore(root / "proxy")
        families = FileTtlStore(root / "families.json", clock)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    authority = TokenAuthority(token_secret, clock, auth_config)
    auth_service = AuthService(users_store, families, authority, clock)
    vault = KfragVault(vault_store, clock, entropy)
    transport = proxy_transport or LocalProxyClient(vault)
    resource_service = ResourceService(
        records_store, auth_service.directory, transport, clock, resource_config, entropy
    )
    return Stack(
        authority=authority,
        auth_service=auth_service,
        vault=vault,
        resource_service=resource_service,
        auth_app=create_auth_app(auth_service, cookie_secure=cookie_secure),
        proxy_app=create_proxy_app(vault, authority),
        resource_app=create_resource_app(resource_service, authority),
        users_store=users_store,
        records_store=records_store,
        vault_store=vault_store,
        families=families,
    )


class ServerThread:
    """A uvicorn server on a daemon thread, joinable and stoppable."""

    def __init__(self, app: FastAPI, port: int, host: str = "127.0.0.1"):
        self.host = host
        self.port = port
        config = uvicorn.Config(app, host=host, port=port, log_level="warning", access_log=False)
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self, timeout: float = 15.0) -> None:
        self._thread.start()
        deadline = time.monotonic() + timeout
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError(f"server on port {self.port} failed to start")
            time.sleep(0.01)

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@dataclass
class RunningStack:
    stack: Stack
    auth: ServerThread
    proxy: ServerThread
    resource: ServerThread
    _proxy_http: httpx.Client

    @property
    def auth_url(self) -> str:
        return self.auth.base_url

    @property
    def resource_url(self) -> str:
        return self.resource.base_url

    @property
    def proxy_url(self) -> str:
        return self.proxy.base_url

    def stop(self) -> None:
        self.resource.stop()
        self.proxy.stop()
        self.auth.stop()
        self._proxy_http.close()


def launch_stack(
    auth_port: int | None = None,
    proxy_port: int | None = None,
    resource_port: int | None = None,
    backend: str = "memory",
    data_dir: str | Path | None = None,
    cookie_secure: bool = False,
    token_secret: bytes | None = None,
) -> RunningStack:
    """Start the three services on localhost with real HTTP between them."""
    auth_port = auth_port or free_port()
    proxy_port = proxy_port or free_port()
    resource_port = resource_port or free_port()

    proxy_http = httpx.Client(base_url=f"http://127.0.0.1:{proxy_port}", timeout=30.0)
    holder: dict[str, Stack] = {}
    transport = HttpProxyClient(proxy_http, lambda: holder["stack"].service_token())
    stack = build_stack(
        token_secret=token_secret,
        backend=backend,
        data_dir=data_dir,
        cookie_secure=cookie_secure,
        proxy_transport=transport,
    )
    holder["stack"] = stack

    auth_server = ServerThread(stack.auth_app, auth_port)
    proxy_server = ServerThread(stack.proxy_app, proxy_port)
    resource_server = ServerThread(stack.resource_app, resource_port)
    auth_server.start()
    proxy_server.start()
    resource_server.start()
    return RunningStack(stack, auth_server, proxy_server, resource_server, proxy_http)


@click.command()
@click.option("--auth-port", default=8001, show_default=True, type=int)
@click.option("--proxy-port", default=8002, show_default=True, type=int)
@click.option("--resource-port", default=8003, show_default=True, type=int)
@click.option("--backend", default="memory", show_default=True, type=click.Choice(["memory", "file"]))
@click.option("--data-dir", default=None, type=click.Path(), help="Required for the file backend.")
@click.option(
    "--secure-cookies/--insecure-cookies",
    default=False,
    show_default=True,
    help="Mark the refresh cookie Secure (needs HTTPS termination in front).",
)
def cli(auth_port, proxy_port, resource_port, backend, data_dir, secure_cookies):
    """Run the auth, proxy, and resource servers on localhost."""
    running = launch_stack(
        auth_port=auth_port,
        proxy_port=proxy_port,
        resource_port=resource_port,
        backend=backend,
        data_dir=data_dir,
        cookie_secure=secure_cookies,
    )
    click.echo(f"auth:     {running.auth_url}")
    click.echo(f"proxy:    {running.proxy_url}")
    click.echo(f"resource: {running.resource_url}")
    click.echo("Ctrl-C to stop.")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        running.stop()
