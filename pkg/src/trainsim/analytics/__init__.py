"""Per-Action assessment: scoring factors, weighted aggregation, reports, portal upload."""

from .factors import (
    FactorState,
    ScoringFactorSpec,
    aggregate_action,
    factor_finalize,
    factor_update,
    make_factor,
    register_custom_factor,
)
from .report import ActionScore, SessionReport
from .portal import PortalConfig, UploadResult, upload_report

__all__ = [
    "FactorState",
    "ScoringFactorSpec",
    "aggregate_action",
    "factor_finalize",
    "factor_update",
    "make_factor",
    "register_custom_factor",
    "ActionScore",
    "SessionReport",
    "PortalConfig",
    "UploadResult",
    "upload_report",
]
