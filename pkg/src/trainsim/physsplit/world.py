"""Minimal deterministic rigid-body world.

Semi-implicit Euler with gravity, a ground plane at y = 0, sphere/box/capsule
vs ground contacts and sphere-sphere impulses.  Objects integrate in
ascending id order, so two worlds fed the same messages and dt produce
bit-identical trajectories: the dissection is testable against an in-process
run.  The solver is intentionally small; the architecture around it is the
point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..motor import Motor, Pose, motor_from_pose, motor_translation
from .messages import Collider, PhysicsDescriptor

GRAVITY = 9.81
SLEEP_SPEED = 1e-4
SLEEP_STEPS = 30


@dataclass
class WorldObject:
    descriptor: PhysicsDescriptor
    position: np.ndarray
    velocity: np.ndarray
    orientation: np.ndarray  # unit quaternion; contacts here never spin objects
    kinematic_target: Motor | None = None
    resting_steps: int = 0

    @property
    def sleeping(self) -> bool:
        return self.resting_steps >= SLEEP_STEPS

    def wake(self) -> None:
        self.resting_steps = 0

    def ground_extent(self) -> float:
        """Distance from center to the lowest point of the collider."""
        d = self.descriptor
        if d.collider == Collider.SPHERE:
            return d.dims[0]
        if d.collider == Collider.BOX:
            return d.dims[1]  # half extent along y (axis-aligned boxes)
        return d.dims[0] + d.dims[1]  # capsule standing on its axis end

    def motor(self) -> Motor:
        return motor_from_pose(Pose(self.position.copy(), self.orientation.copy()))


@dataclass
class PhysicsWorld:
    dt: float = 1.0 / 60.0
    objects: dict[int, WorldObject] = field(default_factory=dict)
    tick: int = 0
    dropped_commands: int = 0

    def register(self, descriptor: PhysicsDescriptor, position=None) -> None:
        if descriptor.object_id in self.objects:
            raise KeyError(f"object {descriptor.object_id} already registered")
        self.objects[descriptor.object_id] = WorldObject(
            descriptor=descriptor,
            position=np.zeros(3) if position is None else np.asarray(position, dtype=float),
            velocity=np.zeros(3),
            orientation=np.array([1.0, 0.0, 0.0, 0.0]),
        )

    def unregister(self, object_id: int) -> None:
        self.objects.pop(object_id, None)

    def apply_impulse(self, object_id: int, impulse) -> bool:
        obj = self.objects.get(object_id)
        if obj is None or obj.descriptor.kinematic:
            self.dropped_commands += 1
            return False
        obj.velocity = obj.velocity + np.asarray(impulse, dtype=float) / obj.descriptor.mass
        obj.wake()
        return True

    def set_kinematic_target(self, object_id: int, motor: Motor) -> bool:
        obj = self.objects.get(object_id)
        if obj is None:
            self.dropped_commands += 1
            return False
        obj.kinematic_target = motor
        obj.wake()
        return True

    def step(self) -> list[tuple[int, Motor]]:
        """Advance dt; returns (id, motor) for every non-sleeping object."""
        self.tick += 1
        ids = sorted(self.objects)
        for oid in ids:
            obj = self.objects[oid]
            if obj.descriptor.kinematic:
                if obj.kinematic_target is not None:
                    obj.position = motor_translation(obj.kinematic_target)
                    obj.orientation = obj.kinematic_target.real.copy()
                continue
            if obj.sleeping:
                continue
            obj.velocity = obj.velocity + np.array([0.0, -GRAVITY * self.dt, 0.0])
            obj.position = obj.position + obj.velocity * self.dt
        self._resolve_ground(ids)
        self._resolve_sphere_pairs(ids)
        out = []
        for oid in ids:
            obj = self.objects[oid]
            if obj.descriptor.kinematic:
                out.append((oid, obj.motor()))
                continue
            speed = float(np.linalg.norm(obj.velocity))
            grounded = obj.position[1] <= obj.ground_extent() + 1e-9
            if speed < SLEEP_SPEED and grounded:
                obj.resting_steps += 1
            else:
                obj.resting_steps = 0
            if not obj.sleeping:
                out.append((oid, obj.motor()))
        return out

    def _resolve_ground(self, ids) -> None:
        for oid in ids:
            obj = self.objects[oid]
            if obj.descriptor.kinematic or obj.sleeping:
                continue
            extent = obj.ground_extent()
            penetration = extent - obj.position[1]
            if penetration <= 0:
                continue
            obj.position[1] = extent
            if obj.velocity[1] < 0:
                obj.velocity[1] = -obj.descriptor.restitution * obj.velocity[1]
                if abs(obj.velocity[1]) < 1e-6:
                    obj.velocity[1] = 0.0
            # Coulomb-ish tangential damping on ground contact
            friction = obj.descriptor.friction
            obj.velocity[0] *= max(0.0, 1.0 - friction)
            obj.velocity[2] *= max(0.0, 1.0 - friction)

    def _resolve_sphere_pairs(self, ids) -> None:
        spheres = [
            oid for oid in ids if self.objects[oid].descriptor.collider == Collider.SPHERE
        ]
        for i, a_id in enumerate(spheres):
            for b_id in spheres[i + 1:]:
                a, b = self.objects[a_id], self.objects[b_id]
                if a.descriptor.kinematic and b.descriptor.kinematic:
                    continue
                ra, rb = a.descriptor.dims[0], b.descriptor.dims[0]
                delta = b.position - a.position
                dist = float(np.linalg.norm(delta))
                overlap = ra + rb - dist
                if overlap <= 0 or dist < 1e-12:
                    continue
                normal = delta / dist
                rel = float((b.velocity - a.velocity) @ normal)
                restitution = min(a.descriptor.restitution, b.descriptor.restitution)
                ma = np.inf if a.descriptor.kinematic else a.descriptor.mass
                mb = np.inf if b.descriptor.kinematic else b.descriptor.mass
                inv_ma = 0.0 if np.isinf(ma) else 1.0 / ma
                inv_mb = 0.0 if np.isinf(mb) else 1.0 / mb
                if rel < 0:
                    j = -(1.0 + restitution) * rel / (inv_ma + inv_mb)
                    if inv_ma:
                        a.velocity = a.velocity - j * inv_ma * normal
                        a.wake()
                    if inv_mb:
                        b.velocity = b.velocity + j * inv_mb * normal
                        b.wake()
                # positional correction split by inverse mass
                total_inv = inv_ma + inv_mb
                if total_inv > 0:
                    if inv_ma:
                        a.position = a.position - normal * overlap * (inv_ma / total_inv)
                    if inv_mb:
                        b.position = b.position + normal * overlap * (inv_mb / total_inv)

    def snapshot(self) -> bytes:
        """Full serialized state: the passivity audit surface."""
        import struct

        out = [struct.pack("<IQ", len(self.objects), self.tick)]
        for oid in sorted(self.objects):
            obj = self.objects[oid]
            d = obj.descriptor
            out.append(
                struct.pack(
                    "<IB3ffffB",
                    d.object_id, int(d.collider), *d.dims, d.mass, d.friction, d.restitution,
                    1 if d.kinematic else 0,
                )
            )
            out.append(obj.position.astype("<f8").tobytes())
            out.append(obj.velocity.astype("<f8").tobytes())
            out.append(obj.orientation.astype("<f8").tobytes())
            out.append(struct.pack("<i", obj.resting_steps))
        return b"".join(out)
