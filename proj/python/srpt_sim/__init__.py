"""Delayed vehicle teleoperation simulator with successive reference pose tracking."""

from ._core import (
    Pose,
    RegionMetrics,
    RunResult,
    Track,
    build_track,
    lookahead_distance,
    metrics_csv,
    relative_pose,
    run,
    sample_downlink_delays,
)

__all__ = [
    "Pose",
    "RegionMetrics",
    "RunResult",
    "Track",
    "build_track",
    "lookahead_distance",
    "metrics_csv",
    "relative_pose",
    "run",
    "sample_downlink_delays",
]
