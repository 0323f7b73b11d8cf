"""Session recording: timestamped transform deltas + events, replay, resume."""

from .format import (
    EVENT_ACTION,
    EVENT_AUDIO_MARKER,
    EVENT_SCORE,
    Frame,
    RecordedSession,
    read_recording,
    write_recording,
)
from .record import SessionRecorder
from .replay import replay, resume, state_at

__all__ = [
    "EVENT_ACTION",
    "EVENT_AUDIO_MARKER",
    "EVENT_SCORE",
    "Frame",
    "RecordedSession",
    "read_recording",
    "write_recording",
    "SessionRecorder",
    "replay",
    "resume",
    "state_at",
]
