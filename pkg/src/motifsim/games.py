"""Turn-based two-player games over grounded configurations.

Grounding, the greatest-fixpoint safety solver (maximally permissive),
the least-fixpoint reachability attractor with ranks, environment-model
products, finite-horizon AND-OR planning, and the tabular controller
file format.
"""

from collections import deque

from .errors import EffectError, InvariantViolation, NoSafePlan, StateBudgetExceeded
from .goals import AVOID, BEST_EFFORT, CRITICAL, REACH, UTILITY
from .rules import step_candidates

AGENT_TURN = "agent"
ENV_TURN = "env"

IDLE = "idle"
PASS = "pass"


class GameState:
    __slots__ = ("key", "world", "turn", "bad", "target", "actions")

    def __init__(self, key, world, turn, bad=False, target=False):
        self.key = key
        self.world = world
        self.turn = turn
        self.bad = bad
        self.target = target
        self.actions = []


class GameAction:
    __slots__ = ("label", "dst", "controllable")

    def __init__(self, label, dst, controllable):
        self.label = label
        self.dst = dst
        self.controllable = controllable


class GameModel:
    """A finite turn-based game graph.

    Agent-turn states carry only controllable actions (including an
    explicit `idle` where applicable); env-turn states only uncontrollable
    ones (including an explicit `pass` when the environment is quiescent).
    """

    def __init__(self):
        self.states = []
        self.index = {}
        self.by_world = {}
        self.initial = 0

    def add_state(self, key, world, turn, bad=False, target=False):
        if key in self.index:
            raise ValueError(f"duplicate game state {key!r}")
        i = len(self.states)
        self.states.append(GameState(key, world, turn, bad, target))
        self.index[key] = i
        self.by_world[(world, turn)] = i
        return i

    def add_action(self, src, label, dst, controllable):
        self.states[src].actions.append(GameAction(label, dst, controllable))

    def state(self, i):
        return self.states[i]

    def __len__(self):
        return len(self.states)


class Controller:
    """Winning region plus allowed actions (and ranks for reachability).

    - `winning`: state keys the agent wins from;
    - `kept`: per winning agent-turn state, the allowed action labels;
    - `rank`: distance-to-target class per winning state; empty for
      pure-safety controllers.
    """

    __slots__ = ("winning", "kept", "rank")

    def __init__(self, winning, kept, rank=None):
        self.winning = frozenset(winning)
        self.kept = dict(kept)
        self.rank = dict(rank or {})

    def covers(self, key):
        return key in self.winning

    def kept_actions(self, key):
        return self.kept.get(key, ())

    def is_reach(self):
        return bool(self.rank)

    def validate(self, game):
        """Check the controller invariants against `game`.

        Raises `InvariantViolation` naming the offending state.
        """
        for key in self.winning:
            if key not in game.index:
                raise InvariantViolation(f"unknown state {key!r}")
        for key in self.kept:
            if key not in self.winning:
                raise InvariantViolation(f"kept actions at non-winning state {key!r}")
        for key in self.winning:
            s = game.states[game.index[key]]
            if s.bad:
                raise InvariantViolation(f"bad state {key!r} marked winning")
            if s.turn == ENV_TURN:
                for a in s.actions:
                    if game.states[a.dst].key not in self.winning:
                        raise InvariantViolation(
                            f"uncontrollable exit from winning state {key!r}")
                if self.rank and self.rank[key] > 0:
                    if not s.actions:
                        raise InvariantViolation(f"deadlocked ranked env state {key!r}")
                    for a in s.actions:
                        dk = game.states[a.dst].key
                        if self.rank.get(dk, 10**9) >= self.rank[key]:
                            raise InvariantViolation(
                                f"non-decreasing env branch at {key!r}")
            else:
                kept = self.kept.get(key, ())
                labels = {a.label: a for a in s.actions}
                for lab in kept:
                    a = labels.get(lab)
                    if a is None:
                        raise InvariantViolation(f"unknown kept action {lab!r} at {key!r}")
                    dk = game.states[a.dst].key
                    if dk not in self.winning:
                        raise InvariantViolation(
                            f"kept action {lab!r} at {key!r} leaves the winning set")
                    if self.rank and self.rank.get(dk, 10**9) >= self.rank[key]:
                        raise InvariantViolation(
                            f"kept action {lab!r} at {key!r} does not decrease rank")
                if not kept and (not self.rank or self.rank[key] > 0):
                    raise InvariantViolation(f"winning agent state {key!r} has no kept action")


# ---------------------------------------------------------------------------
# grounding


def _always_false(cfg):
    return False


def ground(cfg, ego, max_states=10000, max_depth=None, bad=None, target=None):
    """BFS-explore the configuration space into a turn-based game.

    The ego's rule instances and controller moves are controllable;
    object dynamics and other components' candidates are uncontrollable.
    Each reached configuration contributes an agent-turn and an env-turn
    state.  Raises `StateBudgetExceeded` when the bounds truncate the
    reachable space, signalling callers to plan on a finite horizon
    instead.
    """
    if ego not in cfg.components:
        raise KeyError(f"no ego component {ego!r}")
    bad = bad or _always_false
    target = target or _always_false
    game = GameModel()
    worlds = {}

    def intern(c):
        w = c.state_hash()
        prev = worlds.get(w)
        if prev is not None:
            if prev.canonical_key() != c.canonical_key():
                raise InvariantViolation(f"state hash collision at {w!r}")
            return w, False
        if len(game.states) + 2 > max_states:
            raise StateBudgetExceeded(
                f"state budget {max_states} exceeded", frontier=len(queue) + 1)
        worlds[w] = c
        b, t = bad(c), target(c)
        game.add_state(w + ":a", w, AGENT_TURN, b, t)
        game.add_state(w + ":e", w, ENV_TURN, b, t)
        return w, True

    queue = deque()
    w0, _ = intern(cfg)
    game.initial = game.by_world[(w0, AGENT_TURN)]
    queue.append((w0, 0))
    expanded = set()

    while queue:
        w, depth = queue.popleft()
        if w in expanded:
            continue
        expanded.add(w)
        c = worlds[w]
        ia = game.by_world[(w, AGENT_TURN)]
        ie = game.by_world[(w, ENV_TURN)]
        cands = step_candidates(c, ego)
        over_depth = max_depth is not None and depth >= max_depth

        env_any = False
        for cand in cands:
            try:
                nxt, _ = cand.apply_to(c)
            except EffectError:
                # a failing effect means the command is not actually fireable
                continue
            if over_depth and nxt.state_hash() not in worlds:
                raise StateBudgetExceeded(
                    f"depth budget {max_depth} exceeded", frontier=len(queue) + 1)
            wn, fresh = intern(nxt)
            if fresh:
                queue.append((wn, depth + 1))
            if cand.is_controllable(ego):
                game.add_action(ia, cand.label, game.by_world[(wn, ENV_TURN)], True)
            else:
                env_any = True
                game.add_action(ie, cand.label, game.by_world[(wn, AGENT_TURN)], False)
        game.add_action(ia, IDLE, ie, True)
        if not env_any:
            game.add_action(ie, PASS, ia, False)
    return game


# ---------------------------------------------------------------------------
# solvers


def solve_safety(game):
    """Greatest fixpoint: the maximally permissive safety controller.

    A state is winning iff it is not bad and (agent turn) some
    controllable action stays winning / (env turn) every action stays
    winning.  `kept` retains every winning-preserving controllable
    action.  An env-turn state with no actions cannot be spoiled and
    counts as winning when not bad.
    """
    n = len(game.states)
    alive = [not s.bad for s in game.states]
    changed = True
    while changed:
        changed = False
        for i, s in enumerate(game.states):
            if not alive[i]:
                continue
            if s.turn == AGENT_TURN:
                ok = any(alive[a.dst] for a in s.actions if a.controllable)
            else:
                ok = all(alive[a.dst] for a in s.actions)
            if not ok:
                alive[i] = False
                changed = True
    winning = {game.states[i].key for i in range(n) if alive[i]}
    kept = {}
    for i, s in enumerate(game.states):
        if alive[i] and s.turn == AGENT_TURN:
            kept[s.key] = tuple(
                a.label for a in s.actions if a.controllable and alive[a.dst])
    return Controller(winning, kept)


def solve_reach(game, within=None):
    """Least fixpoint attractor with rank = guaranteed agent turns to target.

    With `within`, the game is first restricted to that controller's
    winning set and kept actions.  Kept actions strictly decrease rank,
    so following them reaches the target within `rank(initial)` agent
    turns under every environment branch.
    """
    def allowed(i):
        return within is None or game.states[i].key in within.winning

    def usable(s, a):
        if within is None or not a.controllable:
            return True
        return a.label in within.kept.get(s.key, ())

    rank = {}
    for i, s in enumerate(game.states):
        if allowed(i) and s.target:
            rank[i] = 0
    r = 0
    while True:
        r += 1
        new = []
        for i, s in enumerate(game.states):
            if i in rank or not allowed(i):
                continue
            if s.turn == AGENT_TURN:
                if any(usable(s, a) and a.dst in rank for a in s.actions
                       if a.controllable):
                    new.append(i)
            else:
                succs = [a.dst for a in s.actions]
                if succs and all(d in rank for d in succs):
                    new.append(i)
        if not new:
            break
        for i in new:
            rank[i] = r
    winning = {game.states[i].key for i in rank}
    kept = {}
    ranks = {game.states[i].key: k for i, k in rank.items()}
    for i, k in rank.items():
        s = game.states[i]
        if s.turn == AGENT_TURN:
            kept[s.key] = tuple(
                a.label for a in s.actions
                if a.controllable and usable(s, a) and rank.get(a.dst, 10**9) < k)
    return Controller(winning, kept, ranks)


# ---------------------------------------------------------------------------
# environment product


def compose_environments(external, internal, max_states=100000):
    """Synchronous product of two environment games on turns.

    At agent turns the agent picks one action per component game (their
    explicit `idle` actions realize one-sided moves); at env turns the
    branches are the union of both environments' real uncontrollable
    actions, with `pass` only when both are quiescent.  bad is the
    disjunction, target the conjunction.
    """
    def part(g, w, turn):
        i = g.by_world.get((w, turn))
        if i is None:
            raise StateBudgetExceeded(
                f"component game lacks state ({w!r}, {turn})", frontier=1)
        return g.states[i]

    s1 = external.states[external.initial]
    s2 = internal.states[internal.initial]
    if s1.turn != s2.turn:
        raise ValueError("component games must start on the same turn")

    game = GameModel()

    def intern(w1, w2, turn):
        world = (w1, w2)
        i = game.by_world.get((world, turn))
        if i is not None:
            return i, False
        if len(game.states) + 1 > max_states:
            raise StateBudgetExceeded(
                f"product state budget {max_states} exceeded", frontier=len(queue) + 1)
        p1 = part(external, w1, turn)
        p2 = part(internal, w2, turn)
        key = f"{w1}|{w2}:{'a' if turn == AGENT_TURN else 'e'}"
        i = game.add_state(key, world, turn,
                           bad=p1.bad or p2.bad,
                           target=p1.target and p2.target)
        return i, True

    queue = deque()
    i0, _ = intern(s1.world, s2.world, s1.turn)
    game.initial = i0
    queue.append(i0)
    seen = {i0}

    while queue:
        i = queue.popleft()
        s = game.states[i]
        w1, w2 = s.world
        p1 = part(external, w1, s.turn)
        p2 = part(internal, w2, s.turn)
        if s.turn == AGENT_TURN:
            for a1 in p1.actions:
                d1 = external.states[a1.dst].world
                for a2 in p2.actions:
                    d2 = internal.states[a2.dst].world
                    j, _ = intern(d1, d2, ENV_TURN)
                    game.add_action(i, f"{a1.label}|{a2.label}", j, True)
                    if j not in seen:
                        seen.add(j)
                        queue.append(j)
        else:
            moves = []
            for a1 in p1.actions:
                if a1.label != PASS:
                    moves.append((f"{a1.label}|.", external.states[a1.dst].world, w2))
            for a2 in p2.actions:
                if a2.label != PASS:
                    moves.append((f".|{a2.label}", w1, internal.states[a2.dst].world))
            if not moves:
                moves = [(PASS, w1, w2)]
            for label, d1, d2 in moves:
                j, _ = intern(d1, d2, AGENT_TURN)
                game.add_action(i, label, j, False)
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
    return game


# ---------------------------------------------------------------------------
# finite-horizon planning


class PlanNode:
    """One node of a finite plan tree.

    Agent nodes keep the single chosen action; env nodes branch over all
    enabled uncontrollable successors."""

    __slots__ = ("turn", "action", "children", "value")

    def __init__(self, turn, action=None, children=(), value=None):
        self.turn = turn
        self.action = action
        self.children = list(children)
        self.value = value

    def render(self, indent=0):
        pad = "  " * indent
        lines = []
        if self.turn == AGENT_TURN:
            act = self.action if self.action is not None else "(leaf)"
            lines.append(f"{pad}agent: {act}")
            for _, child in self.children:
                lines.extend(child.render(indent + 1))
        else:
            lines.append(f"{pad}env:")
            for label, child in self.children:
                lines.append(f"{pad}  [{label}]")
                lines.extend(child.render(indent + 2))
        return lines


class Plan:
    __slots__ = ("root", "first_action", "value")

    def __init__(self, root, first_action, value):
        self.root = root
        self.first_action = first_action
        self.value = value

    def render(self):
        return "\n".join(self.root.render())


def plan_horizon(cfg, ego, goals, horizon):
    """Depth-limited AND-OR search over the grounded transitions.

    Hard constraint: no branch reaches a state violating a critical avoid
    goal, and every critical reach goal is met on every branch, within
    `horizon` agent turns.  Among surviving agent choices the plan
    maximizes the pessimistic (min over env branches) tuple of
    best-effort goal scores, lexicographically in goal order.  Raises
    `NoSafePlan` when no first action survives.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    crit_avoid = [g for g in goals if g.criticality == CRITICAL and g.kind == AVOID]
    crit_reach = [g for g in goals if g.criticality == CRITICAL and g.kind == REACH]
    best = [g for g in goals if g.criticality == BEST_EFFORT]

    memo = {}

    def leaf_value(c, reached, clean):
        vals = []
        for g in best:
            if g.kind == UTILITY:
                vals.append(g.score(c))
            elif g.kind == REACH:
                vals.append(1 if g.name in reached else 0)
            else:
                vals.append(1 if g.name in clean else 0)
        return tuple(vals)

    def violated(c):
        return any(g.holds(c) for g in crit_avoid)

    def update_flags(c, reached, clean):
        for g in crit_reach:
            if g.name not in reached and g.holds(c):
                reached = reached | {g.name}
        for g in best:
            if g.kind == REACH and g.name not in reached and g.holds(c):
                reached = reached | {g.name}
            elif g.kind == AVOID and g.name in clean and g.holds(c):
                clean = clean - {g.name}
        return reached, clean

    def agent_step(c, depth, reached, clean):
        key = (c.state_hash(), depth, reached, clean)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if depth == horizon:
            if all(g.name in reached for g in crit_reach):
                res = (True, leaf_value(c, reached, clean),
                       PlanNode(AGENT_TURN, value=leaf_value(c, reached, clean)))
            else:
                res = (False, None, None)
            memo[key] = res
            return res
        cands = [x for x in step_candidates(c, ego) if x.is_controllable(ego)]
        options = [(x.label, x) for x in cands] + [(IDLE, None)]
        best_val = None
        best_node = None
        for label, cand in options:
            if cand is not None:
                try:
                    nxt = cand.apply_to(c)[0]
                except EffectError:
                    continue
            else:
                nxt = c
            ok, val, node = env_step(nxt, depth, reached, clean)
            if not ok:
                continue
            if best_val is None or val > best_val:
                best_val = val
                best_node = PlanNode(AGENT_TURN, action=label,
                                     children=[(label, node)], value=val)
        if best_node is None:
            res = (False, None, None)
        else:
            res = (True, best_val, best_node)
        memo[key] = res
        return res

    def env_step(c, depth, reached, clean):
        # `c` is the state after the agent's move at level `depth`
        if violated(c):
            return (False, None, None)
        reached, clean = update_flags(c, reached, clean)
        uncs = [x for x in step_candidates(c, ego) if not x.is_controllable(ego)]
        branches = []
        for x in uncs:
            try:
                branches.append((x.label, x.apply_to(c)[0]))
            except EffectError:
                continue
        branches = branches or [(PASS, c)]
        children = []
        worst = None
        for label, nxt in branches:
            if violated(nxt):
                return (False, None, None)
            r2, c2 = update_flags(nxt, reached, clean)
            ok, val, node = agent_step(nxt, depth + 1, r2, c2)
            if not ok:
                return (False, None, None)
            children.append((label, node))
            if worst is None or val < worst:
                worst = val
        return (True, worst, PlanNode(ENV_TURN, children=children, value=worst))

    reached0, clean0 = update_flags(
        cfg, frozenset(), frozenset(g.name for g in best if g.kind == AVOID))
    ok, val, root = agent_step(cfg, 0, reached0, clean0)
    if not ok:
        raise NoSafePlan(
            "every first action admits an env branch into a critical-avoid "
            f"state within horizon {horizon}")
    return Plan(root, root.action, val)


# ---------------------------------------------------------------------------
# controller table format

_HEADER = "# controller-table v1"


def export_controller(ctrl):
    """Tabular text: one line per (state key, kept action, rank)."""
    lines = [_HEADER]
    for key in sorted(ctrl.winning):
        rank = ctrl.rank.get(key)
        rtxt = "-" if rank is None else str(rank)
        kept = ctrl.kept.get(key, ())
        if kept:
            for lab in kept:
                lines.append(f"{key}\t{rtxt}\t{lab}")
        else:
            lines.append(f"{key}\t{rtxt}\t-")
    return "\n".join(lines) + "\n"


def import_controller(text, game=None):
    """Parse a controller table; validate against `game` when given."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != _HEADER:
        raise InvariantViolation("missing controller-table header")
    winning = set()
    kept = {}
    rank = {}
    for ln in lines[1:]:
        parts = ln.split("\t")
        if len(parts) != 3:
            raise InvariantViolation(f"malformed line: {ln!r}")
        key, rtxt, lab = parts
        winning.add(key)
        if rtxt != "-":
            rank[key] = int(rtxt)
        if lab != "-":
            kept.setdefault(key, []).append(lab)
    ctrl = Controller(winning, {k: tuple(v) for k, v in kept.items()}, rank)
    if game is not None:
        ctrl.validate(game)
    return ctrl
