"""Run configuration and deterministic seed substreams."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigurationError

TICK_HZ = 20
TICK_US = 1_000_000 // TICK_HZ


def substream_seed(seed: int, name: str) -> int:
    """Named 64-bit substream of the master seed."""
    return (seed ^ (zlib.crc32(name.encode()) * 0x9E3779B1)) & 0xFFFFFFFFFFFFFFFF


@dataclass
class RunConfig:
    scenario: dict
    clients: int = 1
    seed: int = 0
    latency_ms: float = 20.0
    jitter_ms: float = 5.0
    loss_prob: float = 0.01
    record: bool = False
    output_dir: str = "."
    physics: str = "off"  # off | in-process | dissected
    physics_address: str | None = None  # host:port for dissected mode
    action_ticks: int = 40  # 2 s per action at 20 Hz
    injections: list = field(default_factory=list)
    total_mode: str = "mean"
    resume_recording: str | None = None
    resume_at_us: int | None = None

    def __post_init__(self):
        if self.clients < 1:
            raise ConfigurationError("client count must be >= 1")


def load_config_file(path) -> dict:
    """key = value configuration file (portal settings and friends)."""
    out = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
