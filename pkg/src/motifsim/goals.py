"""Goal vocabulary shared by the planner and the agent runtime."""

from .errors import EvalError
from .expr import Ctx, UnboundParam

CRITICAL = "critical"
BEST_EFFORT = "best_effort"

AVOID = "avoid"
REACH = "reach"
UTILITY = "utility"


class Goal:
    """A named objective.

    Critical goals are avoid/reach properties that must hold; best-effort
    goals are pursued when compatible.  Lower priority = more important.
    """

    __slots__ = ("name", "kind", "predicate", "utility", "criticality",
                 "priority", "horizon", "order", "_pred_c", "_util_c")

    def __init__(self, name, kind, predicate=None, utility=None,
                 criticality=BEST_EFFORT, priority=0, horizon=None, order=0):
        if kind not in (AVOID, REACH, UTILITY):
            raise ValueError(f"bad goal kind {kind!r}")
        if criticality not in (CRITICAL, BEST_EFFORT):
            raise ValueError(f"bad criticality {criticality!r}")
        if criticality == CRITICAL and kind == UTILITY:
            raise ValueError("critical goals must be avoid or reach")
        if kind == UTILITY and utility is None:
            raise ValueError("utility goal needs an expression")
        if kind in (AVOID, REACH) and predicate is None:
            raise ValueError(f"{kind} goal needs a predicate")
        self.name = name
        self.kind = kind
        self.predicate = predicate
        self.utility = utility
        self.criticality = criticality
        self.priority = priority
        self.horizon = horizon
        self.order = order
        self._pred_c = None
        self._util_c = None

    def holds(self, cfg):
        """Evaluate the avoid/reach predicate on a configuration."""
        if self._pred_c is None:
            self._pred_c = self.predicate.compile(frozenset())
        try:
            return bool(self._pred_c(Ctx(cfg)))
        except UnboundParam:
            return False

    def score(self, cfg):
        """Evaluate the utility expression on a configuration."""
        if self._util_c is None:
            self._util_c = self.utility.compile(frozenset())
        try:
            v = self._util_c(Ctx(cfg))
        except (UnboundParam, EvalError):
            return 0
        return v

    def sort_key(self):
        return (0 if self.criticality == CRITICAL else 1, self.priority, self.order)
