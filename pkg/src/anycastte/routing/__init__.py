from .policy import (
    Announcement,
    PolicyConfig,
    SitePolicy,
    ALL_NEIGHBORS,
    baseline_config,
    build_announcements,
    expand_negative_prepend,
    policy_distance,
)
from .engine import RouteTable, compute_routes, kernel_backend

__all__ = [
    "ALL_NEIGHBORS",
    "Announcement",
    "PolicyConfig",
    "RouteTable",
    "SitePolicy",
    "baseline_config",
    "build_announcements",
    "compute_routes",
    "expand_negative_prepend",
    "kernel_backend",
    "policy_distance",
]
