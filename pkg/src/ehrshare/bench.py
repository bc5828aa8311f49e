"""Latency harness for the platform's three PRE-bearing operations.

Reproduces the published methodology — twenty serial client-observed runs
per scenario at 1 MB and 10 MB, fresh fixtures per run, warm-up requests
excluded — against whatever stack the base URLs point at. The published
absolute numbers came from a specific shared cloud tier and are carried
only as a reference column; the meaningful local check is that the
re-encryption overhead (delegatee retrieval minus owner retrieval) is
about the same at both file sizes, because re-encryption touches the
capsule, never the file.
"""

from __future__ import annotations

import base64
import json
import os
import random
import statistics
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import click
import httpx

from .pre import generate_keypair, generate_signing_keypair

SIZES = {"1m": 1_048_576, "10m": 10_485_760}
SCENARIOS = ("upload", "accept_share", "retrieve_owner", "retrieve_pre")

# Reference means (milliseconds) reported for the original cloud deployment.
PAPER_REFERENCE_MS = {
    ("upload", "1m"): 1154.0,
    ("upload", "10m"): 3870.0,
    ("accept_share", None): 869.0,
    ("retrieve_owner", "1m"): 903.0,
    ("retrieve_owner", "10m"): 2529.0,
    ("retrieve_pre", "1m"): 1245.0,
    ("retrieve_pre", "10m"): 2877.0,
}
PAPER_REFERENCE_OVERHEAD_MS = {"1m": 342.0, "10m": 348.0}
PAPER_REFERENCE_ACCEPT_STDDEV_MS = 188.0

DEFAULT_RUNS = 20
DEFAULT_WARMUP = 3


def fixture_bytes(size: int, seed: int) -> bytes:
    """Deterministic pseudo-random payload; content varies with the seed."""
    return random.Random(seed).randbytes(size)


@dataclass(frozen=True)
class BenchScenario:
    name: str
    file_size_bytes: int | None  # None where size is irrelevant
    runs: int = DEFAULT_RUNS
    warmup: int = DEFAULT_WARMUP

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.name!r}")
        if self.runs < 2:
            raise ValueError("runs must be >= 2")

    @property
    def size_label(self) -> str | None:
        if self.file_size_bytes is None:
            return None
        for label, size in SIZES.items():
            if size == self.file_size_bytes:
                return label
        return str(self.file_size_bytes)


@dataclass
class ScenarioResult:
    scenario: str
    size_label: str | None
    samples_ms: list[float] = field(default_factory=list)
    failed: bool = False
    error: str | None = None


def compute_stats(samples: list[float]) -> dict[str, float]:
    return {
        "mean_ms": statistics.fmean(samples),
        "stddev_ms": statistics.stdev(samples),
        "min_ms": min(samples),
        "max_ms": max(samples),
    }


def build_report(results: list[ScenarioResult]) -> dict:
    """Aggregate scenario results; derived values stay recomputable from samples."""
    if not results:
        raise ValueError("cannot build a report from zero scenario results")
    scenarios = []
    means: dict[tuple[str, str | None], float] = {}
    for result in results:
        entry: dict = {
            "scenario": result.scenario,
            "size": result.size_label,
            "runs": len(result.samples_ms),
            "samples_ms": list(result.samples_ms),
            "paper_reference_ms": PAPER_REFERENCE_MS.get((result.scenario, result.size_label)),
            "failed": result.failed,
        }
        if result.failed:
            entry["error"] = result.error
            entry["partial"] = True
        if len(result.samples_ms) >= 2:
            entry.update(compute_stats(result.samples_ms))
            means[(result.scenario, result.size_label)] = entry["mean_ms"]
        scenarios.append(entry)

    derived: dict = {}
    overheads = {}
    for label in SIZES:
        owner = means.get(("retrieve_owner", label))
        delegated = means.get(("retrieve_pre", label))
        if owner is not None and delegated is not None:
            overheads[label] = delegated - owner
    if overheads:
        derived["pre_overhead_ms"] = overheads
        derived["paper_reference_overhead_ms"] = dict(PAPER_REFERENCE_OVERHEAD_MS)
    if len(overheads) == 2:
        gap = abs(overheads["1m"] - overheads["10m"])
        scale = max(abs(overheads["1m"]), abs(overheads["10m"]))
        derived["overhead_relative_gap"] = gap / scale if scale else 0.0
    return {"scenarios": scenarios, "derived": derived}


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def render_csv(report: dict) -> str:
    lines = ["scenario,size,runs,mean_ms,stddev_ms,min_ms,max_ms,paper_reference_ms,failed"]
    for entry in report["scenarios"]:
        lines.append(
            ",".join(
                str(entry.get(column, "")) if entry.get(column) is not None else ""
                for column in (
                    "scenario",
                    "size",
                    "runs",
                    "mean_ms",
                    "stddev_ms",
                    "min_ms",
                    "max_ms",
                    "paper_reference_ms",
                    "failed",
                )
            )
        )
    return "\n".join(lines) + "\n"


def render_table(report: dict) -> str:
    header = f"{'scenario':<16}{'size':<6}{'runs':>5}{'mean ms':>10}{'stddev':>9}{'min':>9}{'max':>9}{'paper ms':>10}"
    lines = [header, "-" * len(header)]
    for entry in report["scenarios"]:
        reference = entry.get("paper_reference_ms")
        lines.append(
            f"{entry['scenario']:<16}"
            f"{entry['size'] or '-':<6}"
            f"{entry['runs']:>5}"
            f"{entry.get('mean_ms', float('nan')):>10.1f}"
            f"{entry.get('stddev_ms', float('nan')):>9.1f}"
            f"{entry.get('min_ms', float('nan')):>9.1f}"
            f"{entry.get('max_ms', float('nan')):>9.1f}"
            f"{reference if reference is not None else '-':>10}"
        )
    derived = report.get("derived", {})
    if "pre_overhead_ms" in derived:
        lines.append("")
        for label, value in derived["pre_overhead_ms"].items():
            reference = derived["paper_reference_overhead_ms"].get(label)
            lines.append(
                f"pre overhead @{label}: {value:.1f} ms (paper reference {reference} ms)"
            )
    if "overhead_relative_gap" in derived:
        lines.append(f"overhead relative gap across sizes: {derived['overhead_relative_gap']:.3f}")
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "csv":
        return render_csv(report)
    if fmt == "table":
        return render_table(report)
    raise ValueError(f"unknown format {fmt!r}")


# --- the harness itself -------------------------------------------------------


@dataclass
class _Account:
    label: str
    email: str
    password: str
    user_id: str = ""
    secret_key_b64: str = ""
    signing_key_b64: str = ""
    access_token: str = ""


class BenchHarness:
    """Drives the live stack through its public HTTP APIs, exactly as a client."""

    def __init__(
        self,
        auth_url: str,
        resource_url: str,
        threshold: int = 2,
        shares: int = 3,
        seed: int = 7,
    ):
        self._auth = auth_url.rstrip("/")
        self._resource = resource_url.rstrip("/")
        self._http = httpx.Client(timeout=300.0)
        self._threshold = threshold
        self._shares = shares
        self._seed = seed
        self.owner = self._account("owner", ["patient"])
        self.delegatee = self._account("delegatee", ["practitioner"])
        self._ensure_trusted_entity()
        self._login(self.owner)
        self._login(self.delegatee)

    def close(self) -> None:
        self._http.close()

    # -- accounts --

    def _env(self, label: str, field_name: str) -> str | None:
        return os.environ.get(f"EHRSHARE_BENCH_{label.upper()}_{field_name.upper()}")

    def _account(self, label: str, roles: list[str]) -> _Account:
        suffix = uuid.uuid4().hex[:8]
        account = _Account(
            label=label,
            email=self._env(label, "email") or f"bench-{label}-{suffix}@example.test",
            password=self._env(label, "password") or f"bench-password-{suffix}",
        )
        env_secret = self._env(label, "secret_key")
        env_signing = self._env(label, "signing_key")
        if env_secret and env_signing:
            account.secret_key_b64 = env_secret
            account.signing_key_b64 = env_signing
        else:
            keypair = generate_keypair()
            signing = generate_signing_keypair()
            account.secret_key_b64 = base64.b64encode(keypair.secret_bytes()).decode()
            account.signing_key_b64 = base64.b64encode(signing.secret_bytes()).decode()
            self._register(account, roles, keypair.public.to_bytes(), signing.verifying.to_bytes())
        return account

    def _register(self, account: _Account, roles: list[str], public: bytes, verifying: bytes):
        response = self._http.post(
            f"{self._auth}/auth/register",
            json={
                "name": f"bench {account.label}",
                "email": account.email,
                "password": account.password,
                "public_key": base64.b64encode(public).decode(),
                "verifying_key": base64.b64encode(verifying).decode(),
                "roles": roles,
            },
        )
        if response.status_code not in (201, 409):
            raise RuntimeError(f"registration failed: {response.status_code} {response.text}")

    def _ensure_trusted_entity(self) -> None:
        trusted = _Account(
            label="trusted",
            email=self._env("trusted", "email") or f"bench-trusted-{uuid.uuid4().hex[:8]}@example.test",
            password=self._env("trusted", "password") or "bench-trusted-password",
        )
        keypair = generate_keypair()
        signing = generate_signing_keypair()
        self._register(
            trusted, ["trusted_entity"], keypair.public.to_bytes(), signing.verifying.to_bytes()
        )  # 409 means one already exists, which is all we need

    def _login(self, account: _Account) -> None:
        response = self._http.post(
            f"{self._auth}/auth/login",
            json={"email": account.email, "password": account.password},
        )
        if response.status_code != 200:
            raise RuntimeError(f"login failed for {account.label}: {response.text}")
        body = response.json()
        account.access_token = body["access_token"]
        account.user_id = body["user"]["user_id"]

    def _headers(self, account: _Account, with_keys: bool = False) -> dict[str, str]:
        headers = {"Authorization": f"Bearer {account.access_token}"}
        if with_keys:
            headers["X-Pre-Secret-Key"] = account.secret_key_b64
            headers["X-Pre-Signing-Key"] = account.signing_key_b64
        return headers

    # -- building blocks --

    def upload(self, content: bytes, run_tag: str) -> str:
        response = self._http.post(
            f"{self._resource}/ehr",
            files={"file": (f"bench-{run_tag}.pdf", content, "application/pdf")},
            headers=self._headers(self.owner, with_keys=True),
        )
        response.raise_for_status()
        return response.json()["resource_id"]

    def request_share(self, resource_id: str) -> str:
        response = self._http.post(
            f"{self._resource}/shares",
            json={"resource_id": resource_id},
            headers=self._headers(self.delegatee),
        )
        response.raise_for_status()
        return response.json()["share_id"]

    def accept_share(self, share_id: str) -> None:
        response = self._http.post(
            f"{self._resource}/shares/{share_id}/answer",
            json={
                "decision": "accept",
                "threshold": self._threshold,
                "shares": self._shares,
                "secret_key": self.owner.secret_key_b64,
                "signing_key": self.owner.signing_key_b64,
            },
            headers=self._headers(self.owner),
        )
        response.raise_for_status()

    def download(self, resource_id: str, account: _Account) -> bytes:
        response = self._http.get(
            f"{self._resource}/ehr/{resource_id}",
            headers={
                **self._headers(account),
                "X-Pre-Secret-Key": account.secret_key_b64,
            },
        )
        response.raise_for_status()
        return response.content

    # -- scenarios --

    def run_scenario(self, scenario: BenchScenario) -> ScenarioResult:
        result = ScenarioResult(scenario.name, scenario.size_label)
        runner = getattr(self, f"_scenario_{scenario.name}")
        try:
            runner(scenario, result)
        except Exception as exc:  # partial-report marker, nonzero exit upstream
            result.failed = True
            result.error = f"{type(exc).__name__}: {exc}"
        return result

    def _timed(self, result: ScenarioResult, warmup_remaining: list[int], call) -> None:
        start = time.perf_counter()
        call()
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        if warmup_remaining[0] > 0:
            warmup_remaining[0] -= 1
        else:
            result.samples_ms.append(elapsed_ms)

    def _scenario_upload(self, scenario: BenchScenario, result: ScenarioResult) -> None:
        warmup = [scenario.warmup]
        for run in range(scenario.warmup + scenario.runs):
            content = fixture_bytes(scenario.file_size_bytes, seed=self._seed * 10_000 + run)
            self._timed(result, warmup, lambda: self.upload(content, f"up-{run}"))

    def _scenario_accept_share(self, scenario: BenchScenario, result: ScenarioResult) -> None:
        warmup = [scenario.warmup]
        for run in range(scenario.warmup + scenario.runs):
            # fresh record + fresh pending share per run; only the accept is timed
            resource_id = self.upload(fixture_bytes(1024, seed=run), f"acc-{run}")
            share_id = self.request_share(resource_id)
            self._timed(result, warmup, lambda: self.accept_share(share_id))

    def _scenario_retrieve_owner(self, scenario: BenchScenario, result: ScenarioResult) -> None:
        content = fixture_bytes(scenario.file_size_bytes, seed=self._seed)
        resource_id = self.upload(content, "ro-fixture")
        warmup = [scenario.warmup]
        for _ in range(scenario.warmup + scenario.runs):
            self._timed(result, warmup, lambda: self.download(resource_id, self.owner))

    def _scenario_retrieve_pre(self, scenario: BenchScenario, result: ScenarioResult) -> None:
        content = fixture_bytes(scenario.file_size_bytes, seed=self._seed)
        resource_id = self.upload(content, "rp-fixture")
        share_id = self.request_share(resource_id)
        self.accept_share(share_id)
        warmup = [scenario.warmup]
        for _ in range(scenario.warmup + scenario.runs):
            self._timed(result, warmup, lambda: self.download(resource_id, self.delegatee))


# --- CLI -----------------------------------------------------------------------


@click.group()
def cli():
    """Latency benchmarks against a running stack."""


@cli.command("run")
@click.option("--scenario", "scenario_names", multiple=True, type=click.Choice(SCENARIOS),
              help="Repeatable; defaults to all scenarios.")
@click.option("--size", "size_labels", multiple=True, type=click.Choice(sorted(SIZES)),
              help="Repeatable; defaults to 1m and 10m.")
@click.option("--runs", default=DEFAULT_RUNS, show_default=True, type=int)
@click.option("--warmup", default=DEFAULT_WARMUP, show_default=True, type=int)
@click.option("--base-url", default="http://127.0.0.1", show_default=True,
              help="Host root of an ehrshare-stack with default ports.")
@click.option("--auth-url", default=None, help="Overrides --base-url for the auth service.")
@click.option("--resource-url", default=None, help="Overrides --base-url for the resource service.")
@click.option("--auth-port", default=8001, show_default=True, type=int)
@click.option("--resource-port", default=8003, show_default=True, type=int)
@click.option("--threshold", default=2, show_default=True, type=int)
@click.option("--shares", default=3, show_default=True, type=int)
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", default="table", show_default=True,
              type=click.Choice(["table", "json", "csv"]))
def run_command(scenario_names, size_labels, runs, warmup, base_url, auth_url, resource_url,
                auth_port, resource_port, threshold, shares, seed, out, fmt):
    """Execute scenarios and render a report."""
    scenario_names = scenario_names or SCENARIOS
    size_labels = size_labels or tuple(sorted(SIZES))
    auth_url = auth_url or f"{base_url.rstrip('/')}:{auth_port}"
    resource_url = resource_url or f"{base_url.rstrip('/')}:{resource_port}"

    harness = BenchHarness(auth_url, resource_url, threshold=threshold, shares=shares, seed=seed)
    results = []
    try:
        for name in scenario_names:
            if name == "accept_share":
                results.append(harness.run_scenario(BenchScenario(name, None, runs, warmup)))
                continue
            for label in size_labels:
                results.append(
                    harness.run_scenario(BenchScenario(name, SIZES[label], runs, warmup))
                )
    finally:
        harness.close()

    report = build_report(results)
    rendered = render(report, fmt)
    if out:
        Path(out).write_text(render_json(report), encoding="utf-8")
    click.echo(rendered, nl=False)
    if any(result.failed for result in results):
        raise SystemExit(1)
