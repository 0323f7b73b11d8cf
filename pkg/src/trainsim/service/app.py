"""The engine service.

Wraps scenario validation, session runs, replay inspection and benches as
HTTP endpoints, and doubles as the analytics portal that session reports are
uploaded to (bearer-token protected, in-memory store).  The CLI is a thin
client of this app; tests drive the same surface.
"""

from __future__ import annotations

import json
import uuid

from fastapi import Depends, FastAPI, Header, HTTPException

from .. import __version__
from ..errors import ConfigurationError, InputError, TrainsimError
from ..harness import RunConfig, run_session
from ..harness.bench import run_bench
from ..recorder import read_recording
from ..scenegraph import scaffold_action, validate_document
from .models import (
    BenchRequest,
    BenchResponse,
    PortalAck,
    ReplayRequest,
    ReplayResponse,
    RunRequest,
    RunResponse,
    ScaffoldRequest,
    ValidateRequest,
    ValidateResponse,
)

DEFAULT_PORTAL_TOKEN = "dev-token"


def create_app(portal_token: str = DEFAULT_PORTAL_TOKEN) -> FastAPI:
    app = FastAPI(title="trainsim", version=__version__)
    app.state.portal_token = portal_token
    app.state.portal_reports = {}

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/scenarios/validate", response_model=ValidateResponse)
    def validate(request: ValidateRequest):
        code, messages = validate_document(request.document)
        return ValidateResponse(code=code, messages=messages)

    @app.post("/scenarios/scaffold")
    def scaffold(request: ScaffoldRequest):
        try:
            return scaffold_action(request.name, request.prototype, request.objects)
        except TrainsimError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/sessions/run", response_model=RunResponse)
    def run(request: RunRequest):
        code, messages = validate_document(request.scenario)
        if code != 0:
            raise HTTPException(status_code=422, detail={"code": code, "messages": messages})
        config = RunConfig(
            scenario=request.scenario,
            clients=request.clients,
            seed=request.seed,
            latency_ms=request.latency_ms,
            jitter_ms=request.jitter_ms,
            loss_prob=request.loss_prob,
            record=request.record,
            output_dir=request.output_dir,
            physics=request.physics,
            physics_address=request.physics_address,
            injections=request.injections,
            total_mode=request.total_mode,
            resume_recording=request.resume_recording,
            resume_at_us=request.resume_at_us,
        )
        try:
            result = run_session(config)
        except ConfigurationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return RunResponse(
            exit_code=result.exit_code,
            report=result.report.to_json(),
            report_path=result.report_path,
            metrics_path=result.metrics_path,
            recording_path=result.recording_path,
            ticks=result.ticks,
            net_summary=result.net_summary,
        )

    @app.post("/sessions/replay", response_model=ReplayResponse)
    def replay_info(request: ReplayRequest):
        try:
            rec = read_recording(request.recording)
        except (OSError, TrainsimError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        from ..recorder import replay as replay_stream

        frames = 0
        objects = set()
        events = 0
        for _, scene, evs in replay_stream(rec, request.from_us):
            frames += 1
            objects.update(scene)
            events += len(evs)
        return ReplayResponse(
            frames=frames,
            duration_us=rec.duration_us,
            objects=len(objects),
            events=events,
            keyframes=len(rec.keyframe_indices()),
        )

    @app.post("/bench/{kind}", response_model=BenchResponse)
    def bench(kind: str, request: BenchRequest):
        try:
            rows, csv_text = run_bench(kind, **request.params)
        except (InputError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return BenchResponse(kind=kind, rows=rows, csv=csv_text)

    def _check_token(authorization: str | None = Header(default=None)):
        expected = f"Bearer {app.state.portal_token}"
        if authorization != expected:
            raise HTTPException(status_code=401, detail="bad portal token")

    @app.post("/portal/reports", response_model=PortalAck, dependencies=[Depends(_check_token)])
    def portal_upload(report: dict):
        report_id = str(uuid.uuid5(uuid.NAMESPACE_OID, json.dumps(report, sort_keys=True)))
        app.state.portal_reports[report_id] = report
        return PortalAck(accepted=True, report_id=report_id)

    @app.get("/portal/reports", dependencies=[Depends(_check_token)])
    def portal_list():
        return {"reports": sorted(app.state.portal_reports)}

    @app.get("/portal/reports/{report_id}", dependencies=[Depends(_check_token)])
    def portal_get(report_id: str):
        if report_id not in app.state.portal_reports:
            raise HTTPException(status_code=404, detail="unknown report")
        return app.state.portal_reports[report_id]

    return app
