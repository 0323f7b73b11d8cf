"""Operator harness: multi-client simulated sessions, scripted trainees, benches."""

from .config import RunConfig, load_config_file, substream_seed
from .script import Injection, ScheduledAction, plan_schedule
from .session import RunResult, run_session
from . import bench

__all__ = [
    "RunConfig",
    "load_config_file",
    "substream_seed",
    "Injection",
    "ScheduledAction",
    "plan_schedule",
    "RunResult",
    "run_session",
    "bench",
]
