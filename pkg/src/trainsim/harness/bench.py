"""Benchmarks.

Each bench returns (rows, csv_text).  The cut/tear benches mirror the organ
timing table (model, vertices, triangles, particles, op, phase, ms,
fps-equivalent); the recorder bench mirrors the with/without-recording FPS
table (average/min/max rows); the net bench reports relay throughput and
post-quiescence convergence for large sessions.
"""

from __future__ import annotations

import io
import time
import statistics

import numpy as np

from ..errors import InputError
from ..motor import Pose, motor_from_pose
from ..netsync import InterpBuffer, NetProfile, Relay, SessionState, UpdatePacket, UpdateRecord
from ..netsync.codec import quantize_motor_f32
from ..netsync.emulator import LinkEmulator
from ..softbody import SoftBodyParams, build_softbody, poisson_sample, sample_to_count, shapes
from .config import substream_seed


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0].keys())
    out = io.StringIO()
    out.write(",".join(keys) + "\n")
    for row in rows:
        out.write(",".join(_fmt(row.get(k, "")) for k in keys) + "\n")
    return out.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _bench_mesh(model: str, seed: int):
    if model == "liver":
        mesh = shapes.liver_mesh()
        anchors, radius = sample_to_count(mesh, 191, seed=seed)
    elif model == "heart":
        mesh = shapes.heart_mesh()
        anchors, radius = sample_to_count(mesh, 179, seed=seed)
    else:
        raise InputError(f"unknown bench model '{model}' (expected liver or heart)")
    sb = build_softbody(mesh, anchors, SoftBodyParams(radius=radius))
    return sb, radius


def bench_softbody(model: str = "liver", seed: int = 0, repeats: int = 5):
    rows = []
    mesh_fn = shapes.liver_mesh if model == "liver" else shapes.heart_mesh
    target = 191 if model == "liver" else 179

    def timed(fn):
        samples = []
        result = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            result = fn()
            samples.append((time.perf_counter() - t0) * 1000.0)
        return result, samples

    mesh = mesh_fn()
    anchors, radius = sample_to_count(mesh, target, seed=seed)
    _, t_sample = timed(lambda: poisson_sample(mesh, radius, seed))
    sb, t_build = timed(lambda: build_softbody(mesh_fn(), anchors, SoftBodyParams(radius=radius)))
    from ..softbody import displace_particle, step

    _, t_disp = timed(lambda: displace_particle(sb, 0, [0.001, 0, 0]))
    _, t_step = timed(lambda: step(sb, 1.0 / 90.0))
    base = {
        "model": model,
        "vertices": len(mesh.vertices),
        "triangles": len(mesh.triangles),
        "particles": len(anchors),
        "op": "softbody",
    }
    for phase, samples in (
        ("poisson_sample", t_sample),
        ("build", t_build),
        ("displace", t_disp),
        ("step", t_step),
    ):
        ms = statistics.median(samples)
        rows.append({**base, "phase": phase, "ms": ms, "fps_equivalent": 1000.0 / ms if ms > 0 else 0.0})
    return rows, rows_to_csv(rows)


def bench_cut(model: str = "liver", seed: int = 0):
    from ..cuttear import CutPath, cut

    sb, radius = _bench_mesh(model, seed)
    base = {
        "model": model,
        "vertices": len(sb.mesh.vertices),
        "triangles": len(sb.mesh.triangles),
        "particles": sb.particle_count,
        "op": "cut",
    }
    path = CutPath.full_plane(sb.mesh, normal=[1.0, 0.0, 0.0], offset=0.0)
    bodies, stats = cut(sb, path)
    rows = [
        {**base, "phase": "intersection_points", "ms": "", "fps_equivalent": "",
         "value": stats.intersection_point_count},
        {**base, "phase": "perform", "ms": stats.perform_ms,
         "fps_equivalent": 1000.0 / max(stats.perform_ms, 1e-9), "value": ""},
        {**base, "phase": "update_particles", "ms": stats.update_particles_ms,
         "fps_equivalent": 1000.0 / max(stats.update_particles_ms, 1e-9), "value": ""},
        {**base, "phase": "total", "ms": stats.total_ms,
         "fps_equivalent": 1000.0 / max(stats.total_ms, 1e-9), "value": len(bodies)},
    ]
    return rows, rows_to_csv(rows)


def bench_tear(model: str = "liver", seed: int = 0, segments: int = 8):
    from ..cuttear import begin_tear, tear_segment
    from ..errors import InvalidTearError
    from ..geom3 import closest_point_on_mesh, triangle_basis

    sb, radius = _bench_mesh(model, seed)
    base = {
        "model": model,
        "vertices": len(sb.mesh.vertices),
        "triangles": len(sb.mesh.triangles),
        "particles": sb.particle_count,
        "op": "tear",
    }
    start = sb.mesh.vertices[sb.mesh.triangles[len(sb.mesh.triangles) // 2][0]]
    front = begin_tear(sb, start + np.array([1e-5, 1e-5, 0.0]))
    perform, update, total = [], [], []
    rng = np.random.default_rng(substream_seed(seed, "tear-bench"))
    heading = float(rng.uniform(0, 2 * np.pi))
    for k in range(segments):
        tip = np.asarray(front.tip, dtype=float)
        _, ti, _ = closest_point_on_mesh(tip, sb.mesh.vertices, sb.mesh.triangles)
        tri = sb.mesh.triangles[ti]
        _, _, n = triangle_basis(*(sb.mesh.vertices[v] for v in tri))
        direction = np.array([np.cos(heading + 0.25 * k), np.sin(heading + 0.25 * k), 0.1])
        direction -= (direction @ n) * n
        norm = np.linalg.norm(direction)
        if norm < 1e-9:
            continue
        try:
            sb, front, stats = tear_segment(sb, front, tip + 0.01 * direction / norm)
        except InvalidTearError:
            heading += 1.3
            continue
        perform.append(stats.perform_ms)
        update.append(stats.update_particles_ms)
        total.append(stats.total_ms)
    rows = []
    for phase, samples in (("perform_tear", perform), ("update_particles", update), ("total", total)):
        if not samples:
            continue
        rows.append(
            {**base, "phase": phase, "ms": statistics.median(samples),
             "ms_min": min(samples), "ms_max": max(samples),
             "fps_equivalent": 1000.0 / max(statistics.median(samples), 1e-9),
             "segments": len(samples)}
        )
    return rows, rows_to_csv(rows)


def bench_net(
    clients: int = 300,
    updates_per_s: int = 10,
    sim_seconds: float = 60.0,
    latency_ms: float = 20.0,
    jitter_ms: float = 5.0,
    loss_prob: float = 0.01,
    seed: int = 0,
    quiesce_at_s: float | None = None,
):
    """Relay fan-out at scale over the lossy emulator, with convergence check."""
    session = SessionState(session_id=1)
    for c in range(1, clients + 1):
        session.add_client(c)
        session.assign_object(c, c)
    relay = Relay(session)
    links = {
        c: LinkEmulator(
            NetProfile(latency_ms=latency_ms, jitter_ms=jitter_ms, loss_prob=loss_prob,
                       seed=substream_seed(seed, f"bench-net-{c}"))
        )
        for c in range(1, clients + 1)
    }
    buffers = {c: InterpBuffer() for c in range(1, clients + 1)}
    inflight: list[tuple[float, int, UpdatePacket]] = []
    quiesce_at = sim_seconds - 5.0 if quiesce_at_s is None else quiesce_at_s
    keepalive_ticks = updates_per_s  # re-publish the final state once a second

    dt = 1.0 / updates_per_s
    ticks = int(round(sim_seconds * updates_per_s))
    max_queue = 0
    t_wall = time.perf_counter()
    final_motor = {}
    for tick in range(1, ticks + 1):
        now = tick * dt
        packets = []
        for c in range(1, clients + 1):
            if now <= quiesce_at:
                pose = Pose(
                    np.array([np.sin(now + c * 0.1), 0.01 * c, np.cos(now * 0.7 + c)]),
                    np.array([1.0, 0, 0, 0]),
                )
                motor = quantize_motor_f32(motor_from_pose(pose))
                final_motor[c] = motor
            else:
                if tick % keepalive_ticks != 0:
                    continue
                motor = final_motor[c]  # keepalive republish of the final state
            packets.append(UpdatePacket(1, c, tick, records=[UpdateRecord(c, motor)]))
        outgoing = relay.tick(packets)
        max_queue = max(max_queue, len(inflight))
        for client, pkts in outgoing.items():
            for pkt in pkts:
                d = links[client].send(now, pkt, size=pkt.size)
                if not d.dropped:
                    inflight.append((d.arrival_time * 1000.0, client, pkt))
        still = []
        now_ms = now * 1000.0
        for arrival_ms, client, pkt in inflight:
            if arrival_ms <= now_ms:
                buf = buffers[client]
                for rec in pkt.records:
                    buf.push(rec.object_id, arrival_ms, rec.motor)
            else:
                still.append((arrival_ms, client, pkt))
        inflight = still
        if tick % updates_per_s == 0:
            for buf in buffers.values():
                buf.prune(now_ms - 500.0)
    # drain
    final_ms = (sim_seconds + 1.0) * 1000.0
    for arrival_ms, client, pkt in inflight:
        for rec in pkt.records:
            buffers[client].push(rec.object_id, arrival_ms, rec.motor)
    wall = time.perf_counter() - t_wall

    worst = 0.0
    converged = 0
    comparisons = 0
    for c in range(1, clients + 1):
        buf = buffers[c]
        for oid, auth in session.authoritative.items():
            if oid == c:
                continue
            comparisons += 1
            got = buf.sample(oid, final_ms)
            err = float(np.max(np.abs(got.coefficients() - auth.coefficients())))
            worst = max(worst, err)
            if err < 1e-5:
                converged += 1
    rows = [
        {"metric": "clients", "value": clients},
        {"metric": "updates_per_s", "value": updates_per_s},
        {"metric": "sim_seconds", "value": sim_seconds},
        {"metric": "accepted_records", "value": relay.counters.accepted},
        {"metric": "fanned_out_records", "value": relay.counters.fanned_out},
        {"metric": "records_per_wall_second", "value": relay.counters.fanned_out / max(wall, 1e-9)},
        {"metric": "max_inflight_packets", "value": max_queue},
        {"metric": "wall_seconds", "value": wall},
        {"metric": "replica_comparisons", "value": comparisons},
        {"metric": "replicas_converged", "value": converged},
        {"metric": "worst_replica_error", "value": worst},
    ]
    return rows, rows_to_csv(rows)


def reference_scenario(actions: int = 5) -> dict:
    """Reference session: 10 clients (10 concurrently moving tools), 5 events/s."""
    return {
        "version": 1,
        "name": "recorder-reference",
        "actions": [
            {
                "id": f"s{i}",
                "prototype": "insert",
                "params": {
                    "target_position": [0.05 * i, 0.5, 0.2],
                    "target_orientation": [1, 0, 0, 0],
                    "position_tolerance": 0.01,
                    "angle_tolerance": 5.0,
                },
                "scoring": [{"kind": "velocity", "weight": 1.0, "params": {"v_max": 5.0}}],
            }
            for i in range(1, actions + 1)
        ],
        "edges": [[f"s{i}", f"s{i+1}"] for i in range(1, actions)],
    }


def bench_recorder(seed: int = 0, actions: int = 5, repeats: int = 3):
    """Full-session step rate with and without recording, average/min/max rows."""
    import tempfile

    from .config import RunConfig
    from .session import run_session

    without, with_rec = [], []
    for r in range(repeats):
        for record, sink in ((False, without), (True, with_rec)):
            with tempfile.TemporaryDirectory() as tmp:
                result = run_session(
                    RunConfig(
                        scenario=reference_scenario(actions),
                        clients=10,
                        seed=seed + r,
                        record=record,
                        output_dir=tmp,
                    )
                )
                sink.append(result.steps_per_second)
    rows = [
        {"metric": "average_steps_per_s", "without_recording": statistics.fmean(without),
         "with_recording": statistics.fmean(with_rec)},
        {"metric": "median_steps_per_s", "without_recording": statistics.median(without),
         "with_recording": statistics.median(with_rec)},
        {"metric": "min_steps_per_s", "without_recording": min(without),
         "with_recording": min(with_rec)},
        {"metric": "max_steps_per_s", "without_recording": max(without),
         "with_recording": max(with_rec)},
    ]
    return rows, rows_to_csv(rows)


def bench_physics(steps: int = 10_000, seed: int = 0):
    """Per-step dissection overhead on loopback vs in-process."""
    from ..physsplit import (
        Collider,
        Host,
        InProcessTransport,
        PhysicsDescriptor,
        PhysicsServer,
        TcpTransport,
        serve_tcp,
    )

    def build(host):
        rng = np.random.default_rng(seed)
        for oid in range(20):
            kind = oid % 3
            pos = [float(rng.uniform(-2, 2)), float(rng.uniform(0.5, 3)), float(rng.uniform(-2, 2))]
            if kind == 0:
                d = PhysicsDescriptor(oid, Collider.SPHERE, (0.1, 0, 0), 1.0, 0.5, 0.2)
            elif kind == 1:
                d = PhysicsDescriptor(oid, Collider.BOX, (0.1, 0.1, 0.1), 1.0)
            else:
                d = PhysicsDescriptor(oid, Collider.CAPSULE, (0.05, 0.1, 0), 1.0)
            host.register(d, position=pos)

    local = Host(session_id=1, transport=InProcessTransport(PhysicsServer()))
    build(local)
    local_times = []
    for _ in range(steps):
        t0 = time.perf_counter()
        local.step()
        local_times.append(time.perf_counter() - t0)

    tcp, _, port = serve_tcp()
    try:
        remote = Host(session_id=1, transport=TcpTransport("127.0.0.1", port))
        build(remote)
        remote_times = []
        for _ in range(steps):
            t0 = time.perf_counter()
            remote.step()
            remote_times.append(time.perf_counter() - t0)
        remote.transport.close()
    finally:
        tcp.shutdown()

    med_local = statistics.median(local_times) * 1000.0
    med_remote = statistics.median(remote_times) * 1000.0
    budget_ms = 1000.0 / 60.0
    rows = [
        {"metric": "steps", "value": steps},
        {"metric": "in_process_median_ms", "value": med_local},
        {"metric": "dissected_median_ms", "value": med_remote},
        {"metric": "dissection_overhead_ms", "value": med_remote - med_local},
        {"metric": "overhead_fraction_of_60hz_budget", "value": (med_remote - med_local) / budget_ms},
        {"metric": "dissected_p90_ms", "value": sorted(remote_times)[int(0.9 * steps)] * 1000.0},
        {"metric": "dissected_max_ms", "value": max(remote_times) * 1000.0},
    ]
    return rows, rows_to_csv(rows)


BENCHES = {
    "softbody": bench_softbody,
    "cut": bench_cut,
    "tear": bench_tear,
    "net": bench_net,
    "recorder": bench_recorder,
    "physics": bench_physics,
}


def run_bench(kind: str, **params):
    if kind not in BENCHES:
        raise InputError(f"unknown bench '{kind}' (choose from {sorted(BENCHES)})")
    return BENCHES[kind](**params)
