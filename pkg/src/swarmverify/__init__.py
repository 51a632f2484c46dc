"""Runtime reachability-based safety verification for quadcopter swarms."""

from .geometry import HyperRectangle, Interval, LinearConstraintSet, interval_hull, min_distance
from .reach import BudgetMode, ReachResult, RuntimeBudget, reach_anytime, single_face_lift
from .verify import TimingProfile, check_global, check_pairwise, is_useful, vt_estimate

__version__ = "0.1.0"

__all__ = [
    "BudgetMode",
    "HyperRectangle",
    "Interval",
    "LinearConstraintSet",
    "ReachResult",
    "RuntimeBudget",
    "TimingProfile",
    "check_global",
    "check_pairwise",
    "interval_hull",
    "is_useful",
    "min_distance",
    "reach_anytime",
    "single_face_lift",
    "vt_estimate",
]
