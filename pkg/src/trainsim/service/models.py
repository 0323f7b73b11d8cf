"""Pydantic request/response models for the service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ValidateRequest(BaseModel):
    document: dict


class ValidateResponse(BaseModel):
    code: int  # 0 ok, 2 schema error, 3 cycle
    messages: list[str] = []


class ScaffoldRequest(BaseModel):
    name: str
    prototype: str
    objects: list[str] = []


class RunRequest(BaseModel):
    scenario: dict
    clients: int = 1
    seed: int = 0
    latency_ms: float = 20.0
    jitter_ms: float = 5.0
    loss_prob: float = 0.01
    record: bool = False
    output_dir: str = "."
    physics: str = "off"
    physics_address: Optional[str] = None
    injections: list[str] = Field(default_factory=list)
    total_mode: str = "mean"
    resume_recording: Optional[str] = None
    resume_at_us: Optional[int] = None


class RunResponse(BaseModel):
    exit_code: int
    report: dict
    report_path: Optional[str]
    metrics_path: Optional[str]
    recording_path: Optional[str]
    ticks: int
    net_summary: dict


class ReplayRequest(BaseModel):
    recording: str
    from_us: int = 0


class ReplayResponse(BaseModel):
    frames: int
    duration_us: int
    objects: int
    events: int
    keyframes: int


class BenchRequest(BaseModel):
    params: dict[str, Any] = Field(default_factory=dict)


class BenchResponse(BaseModel):
    kind: str
    rows: list[dict]
    csv: str


class PortalAck(BaseModel):
    accepted: bool
    report_id: str
