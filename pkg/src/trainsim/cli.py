"""Command-line harness.

A thin client over the HTTP service: without --server the commands drive an
in-process instance of the same app (deterministic, no sockets); with
--server they talk to a remote one.  `physics-server` and `serve` start the
long-running processes themselves.

Exit codes: 0 ok, 2 scenario schema error, 3 scenario cycle, 4 physics
server unreachable, 1 anything else.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import TrainsimError


class ServiceClient:
    """HTTP client bound either to a remote base URL or the in-process app."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from starlette.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict):
        response = self._client.post(path, json=payload)
        if response.status_code >= 400:
            raise TrainsimError(f"{path}: HTTP {response.status_code}: {response.text}")
        return response.json()


def _load_scenario(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise click.ClickException(f"cannot read scenario: {exc}")
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"scenario is not valid JSON: {exc}")


def _run_payload(scenario, clients, seed, latency, jitter, loss, record, output_dir,
                 physics, physics_address, inject, total_mode):
    return {
        "scenario": scenario,
        "clients": clients,
        "seed": seed,
        "latency_ms": latency,
        "jitter_ms": jitter,
        "loss_prob": loss,
        "record": record,
        "output_dir": output_dir,
        "physics": physics,
        "physics_address": physics_address,
        "injections": list(inject),
        "total_mode": total_mode,
    }


run_options = [
    click.option("--clients", default=1, show_default=True),
    click.option("--seed", default=0, show_default=True),
    click.option("--latency", default=20.0, show_default=True, help="link latency ms"),
    click.option("--jitter", default=5.0, show_default=True, help="link jitter half-width ms"),
    click.option("--loss", default=0.01, show_default=True, help="packet loss probability"),
    click.option("--record/--no-record", default=False, show_default=True),
    click.option("--output-dir", default=".", show_default=True),
    click.option("--physics", default="off", type=click.Choice(["off", "in-process", "dissected"])),
    click.option("--physics-address", default=None, help="host:port of a physics server"),
    click.option("--inject", multiple=True, help="node:kind[:amount] error injection"),
    click.option("--total-mode", default="mean", type=click.Choice(["mean", "weighted"])),
]


def add_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@click.group()
@click.option("--server", default=None, help="base URL of a running service; default in-process")
@click.pass_context
def main(ctx, server):
    """Collaborative training-simulation harness."""
    ctx.obj = {"server": server}


@main.command()
@click.argument("scenario_path")
@add_options(run_options)
@click.option("--config", "config_path", default=None, help="key=value file with portal settings")
@click.pass_context
def run(ctx, scenario_path, clients, seed, latency, jitter, loss, record, output_dir,
        physics, physics_address, inject, total_mode, config_path):
    """Run a scripted multi-client session from a scenario document."""
    scenario = _load_scenario(scenario_path)
    client = ServiceClient(ctx.obj["server"])
    code = _validate_against(client, scenario)
    if code != 0:
        sys.exit(code)
    payload = _run_payload(scenario, clients, seed, latency, jitter, loss, record,
                           output_dir, physics, physics_address, inject, total_mode)
    try:
        out = client.post("/sessions/run", payload)
    except TrainsimError as exc:
        if "unreachable" in str(exc):
            click.echo(f"error: {exc}", err=True)
            sys.exit(4)
        raise click.ClickException(str(exc))
    click.echo(json.dumps(out["report"], indent=2, sort_keys=True))
    click.echo(f"report: {out['report_path']}", err=True)
    click.echo(f"metrics: {out['metrics_path']}", err=True)
    if out.get("recording_path"):
        click.echo(f"recording: {out['recording_path']}", err=True)
    if config_path:
        _upload(config_path, out["report"])


def _validate_against(client: ServiceClient, scenario: dict) -> int:
    result = client.post("/scenarios/validate", {"document": scenario})
    for message in result["messages"]:
        click.echo(f"error: {message}", err=True)
    return result["code"]


def _upload(config_path: str, report: dict) -> None:
    from .analytics import PortalConfig, SessionReport, upload_report
    from .analytics.portal import retry_queued
    from .harness import load_config_file

    config = PortalConfig.from_mapping(load_config_file(config_path))
    retry_queued(config)
    result = upload_report(SessionReport.from_json(report), config)
    click.echo(f"portal upload: {result.status} {result.detail}", err=True)


@main.command()
@click.argument("scenario_path")
@click.pass_context
def validate(ctx, scenario_path):
    """Validate a scenario document. Exit 0 ok, 2 schema error, 3 cycle."""
    scenario = _load_scenario(scenario_path)
    client = ServiceClient(ctx.obj["server"])
    code = _validate_against(client, scenario)
    if code == 0:
        click.echo("ok")
    sys.exit(code)


@main.command("scaffold-action")
@click.argument("name")
@click.option("--prototype", default="insert", show_default=True,
              type=click.Choice(["insert", "remove", "use", "question"]))
@click.option("--objects", multiple=True, help="physical object names involved in the task")
@click.option("--out", "out_path", default=None, help="write the node JSON here instead of stdout")
@click.pass_context
def scaffold_action_cmd(ctx, name, prototype, objects, out_path):
    """Emit a skeleton Action node (empty scoring spec) from object names."""
    client = ServiceClient(ctx.obj["server"])
    node = client.post("/scenarios/scaffold", {"name": name, "prototype": prototype,
                                               "objects": list(objects)})
    text = json.dumps(node, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(text)
        click.echo(f"wrote {out_path}", err=True)
    else:
        click.echo(text)


@main.command()
@click.argument("recording_path")
@click.option("--from-s", default=0.0, show_default=True, help="replay start, seconds")
@click.pass_context
def replay(ctx, recording_path, from_s):
    """Inspect a recording: frame/event counts from a deterministic replay."""
    client = ServiceClient(ctx.obj["server"])
    out = client.post("/sessions/replay", {"recording": recording_path,
                                           "from_us": int(from_s * 1e6)})
    click.echo(json.dumps(out, indent=2, sort_keys=True))


@main.command()
@click.argument("scenario_path")
@click.argument("recording_path")
@click.option("--at-s", required=True, type=float, help="resume point, seconds from start")
@add_options(run_options)
@click.pass_context
def resume(ctx, scenario_path, recording_path, at_s, clients, seed, latency, jitter, loss,
           record, output_dir, physics, physics_address, inject, total_mode):
    """Resume a recorded session from a point in time and run it to completion."""
    scenario = _load_scenario(scenario_path)
    client = ServiceClient(ctx.obj["server"])
    payload = _run_payload(scenario, clients, seed, latency, jitter, loss, record,
                           output_dir, physics, physics_address, inject, total_mode)
    payload["resume_recording"] = recording_path
    payload["resume_at_us"] = int(at_s * 1e6)
    out = client.post("/sessions/run", payload)
    click.echo(json.dumps(out["report"], indent=2, sort_keys=True))


@main.command()
@click.argument("kind", type=click.Choice(["softbody", "cut", "tear", "net", "recorder", "physics"]))
@click.option("--param", "params", multiple=True, help="name=value bench parameter")
@click.option("--out", "out_path", default=None, help="write the CSV here")
@click.pass_context
def bench(ctx, kind, params, out_path):
    """Run a benchmark and emit its CSV table."""
    parsed = {}
    for item in params:
        if "=" not in item:
            raise click.ClickException(f"--param needs name=value, got '{item}'")
        key, value = item.split("=", 1)
        try:
            parsed[key] = json.loads(value)
        except json.JSONDecodeError:
            parsed[key] = value
    client = ServiceClient(ctx.obj["server"])
    out = client.post(f"/bench/{kind}", {"params": parsed})
    if out_path:
        Path(out_path).write_text(out["csv"])
        click.echo(f"wrote {out_path}", err=True)
    else:
        click.echo(out["csv"], nl=False)


@main.command("physics-server")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=7801, show_default=True)
@click.option("--dt", default=1.0 / 60.0, show_default=True)
@click.option("--metrics-csv", default=None, help="write per-step timing CSV here on shutdown")
def physics_server(host, port, dt, metrics_csv):
    """Run the standalone physics server (binary protocol over TCP)."""
    from .physsplit import serve_tcp

    tcp, physics, bound = serve_tcp(host=host, port=port, dt=dt)
    click.echo(f"physics server listening on {host}:{bound} (dt={dt:.6f})", err=True)
    try:
        import threading

        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        tcp.shutdown()
        if metrics_csv:
            Path(metrics_csv).write_text(physics.metrics_csv())
            click.echo(f"wrote {metrics_csv}", err=True)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=7800, show_default=True)
@click.option("--portal-token", default="dev-token", show_default=True)
def serve(host, port, portal_token):
    """Serve the HTTP API (sessions, validation, benches, report portal)."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(portal_token=portal_token), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
