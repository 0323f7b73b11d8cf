"""Deterministic session pipeline.

One logical clock drives everything at 20 Hz: scripted clients move their
tools (authoritative writes are applied through the relay, which owns
ordering), action events advance the scenegraph and finalize scoring factors,
the recorder captures the authoritative scene, and the lossy emulated network
only sits on the relay fan-out to client replicas, where it belongs.

Because the analytics pipeline is a pure function of the per-tick
(scene, events) stream, and the recording reproduces that stream exactly
(f32-quantized motors, change thresholds matched to publishing), resuming
from a recording mid-session and finishing the same schedule produces the
identical final report.
"""

from __future__ import annotations

import io
import json
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..analytics import (
    FactorState,
    ScoringFactorSpec,
    factor_finalize,
    factor_update,
    make_factor,
)
from ..analytics.report import ActionScore, FactorScore, SessionReport
from ..errors import ConfigurationError
from ..motor import Motor, Pose, motor_from_pose, motor_translation
from ..netsync import InterpBuffer, NetProfile, Relay, SessionState, UpdatePacket, UpdateRecord
from ..netsync.codec import quantize_motor_f32
from ..netsync.emulator import LinkEmulator
from ..recorder import EVENT_ACTION, SessionRecorder, read_recording, write_recording
from ..recorder.record import moved_enough
from ..scenegraph import ActionEvent, Prototype, load_scenario, perform_action
from .config import TICK_HZ, TICK_US, RunConfig, substream_seed
from .script import Injection, ScheduledAction, plan_schedule

TOOL_BASE_ID = 1000
PHYS_BASE_ID = 2000
DRAIN_TICKS = 10


@dataclass
class RunResult:
    report: SessionReport
    report_path: str | None
    metrics_path: str | None
    recording_path: str | None
    ticks: int
    steps_per_second: float
    net_summary: dict
    exit_code: int = 0


class _Analytics:
    """Per-action factor states driven by the (tick, scene, events) stream."""

    def __init__(self, graph, schedule: list[ScheduledAction]):
        self.graph = graph
        self.schedule = schedule
        self.by_node = {s.node_id: s for s in schedule}
        self.factors: dict[str, list[tuple[ScoringFactorSpec, FactorState]]] = {}
        self.scores: dict[str, ActionScore] = {}
        self.prev_scene: dict[int, Motor] = {}

    def specs_for(self, node) -> list[ScoringFactorSpec]:
        specs = [ScoringFactorSpec(s.kind, s.weight, s.params) for s in node.scoring]
        if node.prototype == Prototype.QUESTION and not any(s.kind == "question" for s in specs):
            specs.append(ScoringFactorSpec("question", 1.0, {"correct": node.params["correct"]}))
        return specs

    def ensure_states(self, node_id: str):
        if node_id in self.factors:
            return self.factors[node_id]
        node = self.graph.nodes[node_id]
        states = [(spec, make_factor(spec)) for spec in self.specs_for(node)]
        self.factors[node_id] = states
        return states

    def on_tick(self, scene: dict[int, Motor], tick: int) -> None:
        """Motion-driven samples for active scheduled actions."""
        for sched in self.schedule:
            if not (sched.start_tick < tick <= sched.end_tick):
                continue
            node = self.graph.nodes.get(sched.node_id)
            if node is None or sched.node_id in self.scores:
                continue
            tool = TOOL_BASE_ID + sched.client
            now = scene.get(tool)
            if now is None:
                continue
            states = self.ensure_states(sched.node_id)
            prev = self.prev_scene.get(tool)
            for spec, state in states:
                if spec.kind == "velocity" and prev is not None:
                    speed = float(
                        np.linalg.norm(motor_translation(now) - motor_translation(prev))
                    ) * TICK_HZ
                    factor_update(state, {"dt": 1.0 / TICK_HZ, "speed": speed})
                elif spec.kind == "error_collider":
                    factor_update(state, {"position": motor_translation(now).tolist()})
        self.prev_scene = dict(scene)

    def on_event(self, ev: ActionEvent, completed: bool) -> None:
        states = self.ensure_states(ev.node_id)
        for spec, state in states:
            if spec.kind == "angle" and "pose" in ev.payload:
                factor_update(state, {"orientation": ev.payload["pose"]["orientation"]})
            elif spec.kind == "question" and "chosen" in ev.payload:
                factor_update(state, {"chosen": ev.payload["chosen"]})
        if completed and ev.node_id not in self.scores:
            factor_scores = [
                FactorScore(spec.kind, spec.weight, factor_finalize(state), state.no_data)
                for spec, state in states
            ]
            if factor_scores:
                score = ActionScore.from_factors(ev.node_id, factor_scores, ev.timestamp_us)
            else:
                # no factors assigned: completion alone scores full marks
                score = ActionScore(ev.node_id, [], 100.0, ev.timestamp_us)
            self.scores[ev.node_id] = score

    def final_actions(self) -> list[ActionScore]:
        return [self.scores[nid] for nid in sorted(self.scores)]


def _physics_setup(config: RunConfig):
    if config.physics == "off":
        return None
    from ..physsplit import Collider, Host, InProcessTransport, PhysicsDescriptor, PhysicsServer, TcpTransport

    if config.physics == "in-process":
        transport = InProcessTransport(PhysicsServer(dt=1.0 / 60.0))
    elif config.physics == "dissected":
        if not config.physics_address:
            raise ConfigurationError("dissected physics needs physics_address host:port")
        host_addr, port = config.physics_address.rsplit(":", 1)
        try:
            transport = TcpTransport(host_addr, int(port))
        except OSError as exc:
            raise ConfigurationError(f"physics server unreachable: {exc}") from exc
    else:
        raise ConfigurationError(f"unknown physics mode '{config.physics}'")
    host = Host(session_id=1, transport=transport)
    for k in range(3):
        host.register(
            PhysicsDescriptor(PHYS_BASE_ID + k, Collider.SPHERE, (0.05, 0, 0), 1.0, 0.5, 0.3),
            position=[0.3 * k - 0.3, 1.0 + 0.2 * k, 0.5],
        )
    return host


def run_session(config: RunConfig) -> RunResult:
    """Run (or resume) a scripted multi-client session; writes output files."""
    t_wall0 = time.perf_counter()
    graph = load_scenario(config.scenario)
    injections = [i if isinstance(i, Injection) else Injection.parse(i) for i in config.injections]
    schedule = plan_schedule(
        config.scenario, config.clients, injections, config.seed, config.action_ticks
    )
    total_ticks = (max(s.end_tick for s in schedule) if schedule else 0) + DRAIN_TICKS

    # relay session: every client owns its tool
    session = SessionState(session_id=1)
    for c in range(1, config.clients + 1):
        session.add_client(c)
        session.assign_object(TOOL_BASE_ID + c, c)
    relay = Relay(session)

    # downlinks: lossy emulated network into per-client replicas
    downlinks = {
        c: LinkEmulator(
            NetProfile(
                latency_ms=config.latency_ms,
                jitter_ms=config.jitter_ms,
                loss_prob=config.loss_prob,
                seed=substream_seed(config.seed, f"downlink-{c}"),
            )
        )
        for c in range(1, config.clients + 1)
    }
    buffers = {c: InterpBuffer() for c in range(1, config.clients + 1)}
    inflight: list[tuple[float, int, UpdatePacket]] = []
    net_delivered = 0
    net_dropped = 0

    analytics = _Analytics(graph, schedule)
    session_uuid = uuid.UUID(int=config.seed & ((1 << 128) - 1))
    recorder = SessionRecorder(session_uuid.bytes, TICK_HZ, config.clients) if config.record else None

    scene: dict[int, Motor] = {}
    for c in range(1, config.clients + 1):
        pose = Pose(np.array([0.2 * c, 0.3, -0.5]), np.array([1.0, 0, 0, 0]))
        scene[TOOL_BASE_ID + c] = quantize_motor_f32(motor_from_pose(pose))
    physics = _physics_setup(config)

    last_published: dict[int, Motor] = {}
    start_tick = 0
    if config.resume_recording is not None:
        if config.resume_at_us is None:
            raise ConfigurationError("resume needs resume_at_us")
        loaded = read_recording(config.resume_recording)
        start_tick = _replay_into(
            loaded, config.resume_at_us, graph, analytics, scene, recorder
        )

    for tick in range(start_tick + 1, total_ticks + 1):
        now_us = tick * TICK_US
        # 1. scripted motion -> authoritative writes (relay-applied, reliable)
        packets = []
        acting = {}
        for sched in schedule:
            if sched.start_tick < tick <= sched.end_tick:
                acting[sched.client] = sched
        for client in range(1, config.clients + 1):
            sched = acting.get(client)
            if sched is not None:
                pos, rot = sched.tool_pose_at(tick)
            else:
                pos, rot = _idle_pose(schedule, client, tick)
            motor = quantize_motor_f32(motor_from_pose(Pose(pos, rot)))
            # changed-only publishing, same thresholds as the recorder
            if not moved_enough(last_published.get(client), motor):
                continue
            last_published[client] = motor
            packets.append(
                UpdatePacket(
                    1, client, tick, records=[UpdateRecord(TOOL_BASE_ID + client, motor)]
                )
            )
        outgoing = relay.tick(packets)
        scene.update({r.object_id: r.motor for p in packets for r in p.records})

        # physics props
        if physics is not None:
            for _ in range(3):  # 60 Hz substeps inside a 20 Hz tick
                state = physics.step()
            for oid, motor in physics.scene.items():
                scene[oid] = quantize_motor_f32(motor)

        # 2. fan-out through the lossy links into client replicas
        now_s = now_us / 1e6
        for client, pkts in outgoing.items():
            for pkt in pkts:
                d = downlinks[client].send(now_s, pkt, size=pkt.size)
                if d.dropped:
                    net_dropped += 1
                else:
                    inflight.append((d.arrival_time * 1000.0, client, pkt))
        still = []
        for arrival_ms, client, pkt in inflight:
            if arrival_ms <= now_us / 1000.0:
                for rec in pkt.records:
                    buffers[client].push(rec.object_id, arrival_ms, rec.motor)
                net_delivered += 1
            else:
                still.append((arrival_ms, client, pkt))
        inflight = still
        # client-side view: every replica samples its interpolated scene once
        # per tick (the engine's per-frame render prep)
        now_ms = now_us / 1000.0
        for c in range(1, config.clients + 1):
            buffers[c].sample_all(now_ms)
            if tick % TICK_HZ == 0:
                buffers[c].prune(now_ms - 500.0)

        # 3. scheduled action completions
        events_this_tick = []
        for sched in schedule:
            if sched.end_tick == tick and sched.node_id in graph.nodes:
                events_this_tick.append(ActionEvent(sched.node_id, sched.payload, now_us))

        # 4. analytics motion samples, then event application
        analytics.on_tick(scene, tick)
        for ev in events_this_tick:
            graph, outcome = perform_action(graph, ev)
            analytics.on_event(ev, outcome.completed)

        # 5. recording
        if recorder is not None:
            encoded = [SessionRecorder.encode_action_event(ev) for ev in events_this_tick]
            recorder.record_frame(scene, encoded, now_us)

    wall = time.perf_counter() - t_wall0
    ticks_run = total_ticks - start_tick
    report = SessionReport(
        session_id=str(session_uuid),
        scenario=config.scenario.get("name", ""),
        actions=analytics.final_actions(),
        started_us=0,
        finished_us=total_ticks * TICK_US,
        total_mode=config.total_mode,
    )

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    report_path.write_text(report.dumps())
    metrics_path = out_dir / "metrics.csv"
    net_summary = {
        "delivered_packets": net_delivered,
        "dropped_packets": net_dropped,
        "accepted_records": relay.counters.accepted,
        "fanned_out": relay.counters.fanned_out,
        "ticks": ticks_run,
    }
    metrics_path.write_text(_metrics_csv(net_summary, ticks_run))
    recording_path = None
    if recorder is not None:
        recording_path = out_dir / "session.mrec"
        write_recording(recorder.recording, recording_path)

    return RunResult(
        report=report,
        report_path=str(report_path),
        metrics_path=str(metrics_path),
        recording_path=str(recording_path) if recording_path else None,
        ticks=ticks_run,
        steps_per_second=ticks_run / wall if wall > 0 else 0.0,
        net_summary=net_summary,
    )


IDLE_SWAY_M = 0.006
IDLE_SWAY_RAD_PER_TICK = 0.15


def _idle_pose(schedule, client: int, tick: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic hand sway while the client is not acting.

    Pure function of (schedule, client, tick): a resumed run recomputes the
    same poses the recording holds, keeping resume byte-exact.
    """
    base = np.array([0.2 * client, 0.3, -0.5])
    rot = np.array([1.0, 0, 0, 0])
    for sched in schedule:
        if sched.client == client and sched.end_tick <= tick:
            base = sched.path_to
            rot = sched.orient_to
    phase = IDLE_SWAY_RAD_PER_TICK * tick + client
    sway = IDLE_SWAY_M * np.array([np.sin(phase), np.cos(1.3 * phase), 0.0])
    return base + sway, rot


def _replay_into(loaded, resume_at_us, graph, analytics, scene, recorder) -> int:
    """Rebuild pipeline state from recorded frames at/below the resume point."""
    last_tick = 0
    for frame in loaded.frames:
        if frame.timestamp_us > resume_at_us:
            break
        for oid, motor in frame.transforms:
            scene[oid] = motor
        tick = frame.timestamp_us // TICK_US
        last_tick = max(last_tick, int(tick))
        analytics.on_tick(scene, int(tick))
        for etype, data in frame.events:
            if etype != EVENT_ACTION:
                continue
            ev = ActionEvent.from_json(json.loads(data))
            g, outcome = perform_action(analytics.graph, ev)
            analytics.on_event(ev, outcome.completed)
        if recorder is not None:
            recorder.record_frame(scene, list(frame.events), frame.timestamp_us)
    return last_tick


def _metrics_csv(net_summary: dict, ticks: int) -> str:
    out = io.StringIO()
    out.write("metric,value\n")
    for key in sorted(net_summary):
        out.write(f"{key},{net_summary[key]}\n")
    out.write(f"sim_seconds,{ticks / TICK_HZ}\n")
    return out.getvalue()
