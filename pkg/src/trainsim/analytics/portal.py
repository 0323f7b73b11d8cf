"""Portal upload client.

Reports POST to the configured portal endpoint with a bearer token.  Network
failures queue the report to a directory for retry on the next session; 4xx
responses are recorded as permanent failures and never retried.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass
from pathlib import Path

import httpx

from ..errors import ConfigurationError
from .report import SessionReport

UPLOAD_TIMEOUT_S = 5.0


@dataclass
class PortalConfig:
    portal_url: str
    portal_token: str
    queue_dir: str

    @classmethod
    def from_mapping(cls, mapping: dict) -> "PortalConfig":
        missing = [k for k in ("portal_url", "portal_token", "queue_dir") if not mapping.get(k)]
        if missing:
            raise ConfigurationError(f"portal config missing keys: {missing}")
        return cls(mapping["portal_url"], mapping["portal_token"], mapping["queue_dir"])


@dataclass
class UploadResult:
    status: str  # "ack" | "queued" | "permanent-failure"
    detail: str = ""
    queued_path: str | None = None


def _queue(report_text: str, config: PortalConfig) -> str:
    queue_dir = Path(config.queue_dir)
    queue_dir.mkdir(parents=True, exist_ok=True)
    path = queue_dir / f"report-{uuid.uuid4().hex}.json"
    path.write_text(report_text)
    return str(path)


def _record_permanent_failure(report_text: str, config: PortalConfig, detail: str) -> None:
    queue_dir = Path(config.queue_dir)
    queue_dir.mkdir(parents=True, exist_ok=True)
    path = queue_dir / f"failed-{uuid.uuid4().hex}.json"
    path.write_text(json.dumps({"detail": detail, "report": json.loads(report_text)}))


def upload_report(
    report: SessionReport, config: PortalConfig, client: httpx.Client | None = None
) -> UploadResult:
    text = report.dumps()
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=UPLOAD_TIMEOUT_S)
    try:
        response = client.post(
            config.portal_url,
            content=text,
            headers={
                "Authorization": f"Bearer {config.portal_token}",
                "Content-Type": "application/json",
            },
        )
    except httpx.HTTPError as exc:
        return UploadResult("queued", str(exc), _queue(text, config))
    finally:
        if own_client:
            client.close()
    if 200 <= response.status_code < 300:
        return UploadResult("ack", f"HTTP {response.status_code}")
    if 400 <= response.status_code < 500:
        detail = f"HTTP {response.status_code}"
        _record_permanent_failure(text, config, detail)
        return UploadResult("permanent-failure", detail)
    return UploadResult("queued", f"HTTP {response.status_code}", _queue(text, config))


def retry_queued(config: PortalConfig, client: httpx.Client | None = None) -> list[UploadResult]:
    """Re-send reports queued by earlier failed sessions."""
    queue_dir = Path(config.queue_dir)
    if not queue_dir.exists():
        return []
    results = []
    for path in sorted(queue_dir.glob("report-*.json")):
        report = SessionReport.loads(path.read_text())
        result = upload_report(report, config, client=client)
        if result.status == "ack":
            path.unlink()
        results.append(result)
    return results
