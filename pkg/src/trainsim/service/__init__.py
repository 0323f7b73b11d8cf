"""HTTP service wrapping the engine: session runs, validation, benches, report portal."""

from .app import create_app

__all__ = ["create_app"]
