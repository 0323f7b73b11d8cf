"""Per-operation timing and intersection counters."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class CutStats:
    intersection_point_count: int = 0
    perform_ms: float = 0.0
    update_particles_ms: float = 0.0

    @property
    def total_ms(self) -> float:
        return self.perform_ms + self.update_particles_ms

    def merge(self, other: "CutStats") -> "CutStats":
        self.intersection_point_count += other.intersection_point_count
        self.perform_ms += other.perform_ms
        self.update_particles_ms += other.update_particles_ms
        return self
