"""Static and dynamic structure of a system.

Component types, component instances, maps, partial address functions,
motifs and configurations.  Everything here has value semantics: the
public operations return fresh configurations and never mutate their
argument.  Mutating helpers (prefixed ``_``) are reserved for the rule
engine, which works on private clones.
"""

import heapq
import math
from fractions import Fraction
from hashlib import blake2b

from .errors import (
    DomainError,
    NodeOccupied,
    NotAMember,
    UnknownComponent,
    UnknownEdge,
    UnknownMotif,
    UnknownNode,
)

#: Returned by `Map.distance` when no directed path exists.  Comparisons
#: against finite bounds behave as expected (``UNREACHABLE < k`` is false).
UNREACHABLE = math.inf


def node_sort_key(n):
    # maps may use int or str node ids; never mix orderings
    return (0, n, "") if isinstance(n, int) else (1, 0, str(n))


class Map:
    """A directed graph of abstract coordinates with integer edge weights."""

    __slots__ = ("nodes", "out", "_dist")

    def __init__(self, nodes=(), edges=()):
        self.nodes = set(nodes)
        self.out = {n: {} for n in self.nodes}
        self._dist = {}
        for e in edges:
            if len(e) == 2:
                a, b = e
                w = 1
            else:
                a, b, w = e
            self.add_edge(a, b, w)

    def copy(self):
        m = Map.__new__(Map)
        m.nodes = set(self.nodes)
        m.out = {n: dict(d) for n, d in self.out.items()}
        m._dist = {}
        return m

    def edge_list(self):
        return sorted(
            ((a, b, w) for a, d in self.out.items() for b, w in d.items()),
            key=lambda e: (node_sort_key(e[0]), node_sort_key(e[1])),
        )

    def has_node(self, n):
        return n in self.nodes

    def has_edge(self, a, b):
        return a in self.out and b in self.out[a]

    def add_node(self, n):
        self.nodes.add(n)
        self.out.setdefault(n, {})
        self._dist.clear()

    def remove_node(self, n):
        if n not in self.nodes:
            raise UnknownNode(f"no node {n!r}")
        self.nodes.discard(n)
        self.out.pop(n, None)
        for d in self.out.values():
            d.pop(n, None)
        self._dist.clear()

    def add_edge(self, a, b, w=1):
        if a not in self.nodes or b not in self.nodes:
            raise UnknownNode(f"edge endpoint missing: {a!r} -> {b!r}")
        if w < 0:
            raise ValueError("edge weight must be nonnegative")
        self.out[a][b] = int(w)
        self._dist.clear()

    def remove_edge(self, a, b):
        if not self.has_edge(a, b):
            raise UnknownEdge(f"no edge {a!r} -> {b!r}")
        del self.out[a][b]
        self._dist.clear()

    def succ(self, n):
        """The unique out-neighbor of `n`, or None if out-degree != 1."""
        if n not in self.nodes:
            raise UnknownNode(f"no node {n!r}")
        outs = self.out[n]
        if len(outs) != 1:
            return None
        return next(iter(outs))

    def distance(self, a, b):
        """Minimum-weight directed path length a -> b, or UNREACHABLE."""
        if a not in self.nodes:
            raise UnknownNode(f"no node {a!r}")
        if b not in self.nodes:
            raise UnknownNode(f"no node {b!r}")
        dist = self._dist.get(a)
        if dist is None:
            dist = self._dijkstra(a)
            self._dist[a] = dist
        return dist.get(b, UNREACHABLE)

    def _dijkstra(self, src):
        dist = {src: 0}
        heap = [(0, 0, src)]
        tick = 0
        while heap:
            d, _, n = heapq.heappop(heap)
            if d > dist.get(n, UNREACHABLE):
                continue
            for m, w in self.out[n].items():
                nd = d + w
                if nd < dist.get(m, UNREACHABLE):
                    dist[m] = nd
                    tick += 1
                    heapq.heappush(heap, (nd, tick, m))
        return dist

    def hop_distance(self, a, b):
        """Undirected unit-weight distance (used for sensing radii)."""
        if a not in self.nodes or b not in self.nodes:
            raise UnknownNode(f"no node {a!r} or {b!r}")
        if a == b:
            return 0
        adj = {n: set() for n in self.nodes}
        for x, d in self.out.items():
            for y in d:
                adj[x].add(y)
                adj[y].add(x)
        seen = {a}
        frontier = [a]
        hops = 0
        while frontier:
            hops += 1
            nxt = []
            for n in frontier:
                for m in adj[n]:
                    if m == b:
                        return hops
                    if m not in seen:
                        seen.add(m)
                        nxt.append(m)
            frontier = nxt
        return UNREACHABLE

    def canonical(self):
        return (
            tuple(sorted(self.nodes, key=node_sort_key)),
            tuple(self.edge_list()),
        )


def line_map(k):
    """0 -> 1 -> ... -> k-1."""
    return Map(range(k), [(i, i + 1) for i in range(k - 1)])


def ring_map(k):
    return Map(range(k), [(i, (i + 1) % k) for i in range(k)])


def grid_map(w, h):
    """w*h nodes indexed y*w+x, bidirectional 4-neighborhood."""
    edges = []
    for y in range(h):
        for x in range(w):
            n = y * w + x
            if x + 1 < w:
                edges += [(n, n + 1), (n + 1, n)]
            if y + 1 < h:
                edges += [(n, n + w), (n + w, n)]
    return Map(range(w * h), edges)


# ---------------------------------------------------------------------------
# variable domains


class BoolDomain:
    __slots__ = ()

    def contains(self, v):
        return isinstance(v, bool)

    def canon(self, v):
        if not isinstance(v, bool):
            raise DomainError(f"expected bool, got {v!r}")
        return v

    def __eq__(self, other):
        return isinstance(other, BoolDomain)

    def __repr__(self):
        return "bool"


class IntRange:
    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        if lo > hi:
            raise ValueError(f"empty int range [{lo}, {hi}]")
        self.lo = int(lo)
        self.hi = int(hi)

    def contains(self, v):
        return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi

    def canon(self, v):
        if isinstance(v, Fraction):
            if v.denominator != 1:
                raise DomainError(f"{v} is not an integer")
            v = int(v)
        if not self.contains(v):
            raise DomainError(f"{v!r} outside int[{self.lo}, {self.hi}]")
        return v

    def __eq__(self, other):
        return isinstance(other, IntRange) and (self.lo, self.hi) == (other.lo, other.hi)

    def __repr__(self):
        return f"int[{self.lo}, {self.hi}]"


class RealRange:
    """Exact decimal-step reals: admissible values are lo + k*step.

    Values are carried as `Fraction` so traces and replays are bit-exact.
    """

    __slots__ = ("lo", "hi", "step")

    def __init__(self, lo, hi, step=Fraction(1, 10)):
        lo, hi, step = Fraction(lo), Fraction(hi), Fraction(step)
        if lo > hi:
            raise ValueError(f"empty real range [{lo}, {hi}]")
        if step <= 0:
            raise ValueError("step must be positive")
        self.lo = lo
        self.hi = hi
        self.step = step

    def contains(self, v):
        if isinstance(v, bool) or not isinstance(v, (int, Fraction)):
            return False
        v = Fraction(v)
        if not self.lo <= v <= self.hi:
            return False
        return ((v - self.lo) / self.step).denominator == 1

    def canon(self, v):
        if isinstance(v, bool) or not isinstance(v, (int, Fraction)):
            raise DomainError(f"expected a number, got {v!r}")
        v = Fraction(v)
        if not self.contains(v):
            raise DomainError(f"{v} outside real[{self.lo}, {self.hi}] step {self.step}")
        return v

    def snap(self, x):
        """Nearest grid value to a float/number, clamped to [lo, hi]."""
        k = round((Fraction(x).limit_denominator(10**9) - self.lo) / self.step)
        v = self.lo + k * self.step
        return min(max(v, self.lo), self.hi)

    def __eq__(self, other):
        return isinstance(other, RealRange) and (
            (self.lo, self.hi, self.step) == (other.lo, other.hi, other.step)
        )

    def __repr__(self):
        return f"real[{self.lo}, {self.hi}] step {self.step}"


class EnumDomain:
    __slots__ = ("values",)

    def __init__(self, values):
        values = tuple(values)
        if len(set(values)) != len(values):
            raise ValueError("duplicate enumeration values")
        self.values = values

    def contains(self, v):
        return v in self.values

    def canon(self, v):
        if v not in self.values:
            raise DomainError(f"{v!r} not in enum {{{', '.join(self.values)}}}")
        return v

    def __eq__(self, other):
        return isinstance(other, EnumDomain) and self.values == other.values

    def __repr__(self):
        return "enum {%s}" % ", ".join(self.values)


class VarDecl:
    __slots__ = ("name", "domain")

    def __init__(self, name, domain):
        self.name = name
        self.domain = domain

    def __eq__(self, other):
        return (
            isinstance(other, VarDecl)
            and self.name == other.name
            and self.domain == other.domain
        )


# ---------------------------------------------------------------------------
# component types and instances

AGENT = "agent"
OBJECT = "object"


class ControllerSpec:
    """An explicit automaton for an agent type: modes plus guarded
    mode-transition commands.  Transitions are compiled into rules by the
    coordination module."""

    __slots__ = ("modes", "init", "transitions")

    def __init__(self, modes, init, transitions=()):
        self.modes = tuple(modes)
        if init not in self.modes:
            raise ValueError(f"initial mode {init!r} not declared")
        self.init = init
        self.transitions = list(transitions)


class ComponentType:
    __slots__ = ("name", "kind", "vars", "dynamics", "controller")

    def __init__(self, name, kind, vars=(), dynamics=(), controller=None):
        if kind not in (AGENT, OBJECT):
            raise ValueError(f"bad component kind {kind!r}")
        if kind == OBJECT and controller is not None:
            raise ValueError("objects have no controller")
        if kind == AGENT and dynamics:
            raise ValueError("agents have no internal dynamics")
        self.name = name
        self.kind = kind
        self.vars = {}
        for v in vars:
            if v.name in self.vars:
                raise ValueError(f"duplicate var {v.name!r} in type {name!r}")
            self.vars[v.name] = v
        self.dynamics = list(dynamics)
        self.controller = controller
        if controller is not None:
            if "mode" in self.vars:
                raise ValueError("'mode' is reserved for controller automata")
            self.vars["mode"] = VarDecl("mode", EnumDomain(controller.modes))

    def default_state(self):
        state = {}
        for name, decl in self.vars.items():
            d = decl.domain
            if isinstance(d, BoolDomain):
                state[name] = False
            elif isinstance(d, IntRange):
                state[name] = d.lo
            elif isinstance(d, RealRange):
                state[name] = d.lo
            else:
                state[name] = d.values[0]
        if self.controller is not None:
            state["mode"] = self.controller.init
        return state


class ComponentInstance:
    __slots__ = ("id", "type", "state")

    def __init__(self, cid, ctype, state=None):
        self.id = cid
        self.type = ctype
        full = ctype.default_state()
        if state:
            for k, v in state.items():
                if k not in ctype.vars:
                    raise DomainError(f"type {ctype.name!r} has no var {k!r}")
                full[k] = ctype.vars[k].domain.canon(v)
        self.state = full

    def copy(self):
        c = ComponentInstance.__new__(ComponentInstance)
        c.id = self.id
        c.type = self.type
        c.state = dict(self.state)
        return c

    def canonical(self):
        return (self.id, self.type.name, tuple(sorted(self.state.items())))


class Motif:
    """A world bundling a map, member components and coordination rules."""

    __slots__ = ("id", "map", "members", "interaction_rules", "configuration_rules")

    def __init__(self, mid, map, members=(), interaction_rules=(), configuration_rules=()):
        self.id = mid
        self.map = map
        self.members = set(members)
        self.interaction_rules = list(interaction_rules)
        self.configuration_rules = list(configuration_rules)

    def copy(self, copy_map=False, copy_members=False):
        m = Motif.__new__(Motif)
        m.id = self.id
        m.map = self.map.copy() if copy_map else self.map
        m.members = set(self.members) if copy_members else self.members
        m.interaction_rules = self.interaction_rules
        m.configuration_rules = self.configuration_rules
        return m


class Configuration:
    """Global system state: components, motifs, and the partial address
    function mapping (component id, motif id) to a map node."""

    __slots__ = ("components", "motifs", "addresses", "types", "counters", "_key", "_hash")

    def __init__(self, components=(), motifs=(), types=None):
        self.components = {}
        for c in components:
            if c.id in self.components:
                raise ValueError(f"duplicate component id {c.id!r}")
            self.components[c.id] = c
        self.motifs = {}
        for m in motifs:
            if m.id in self.motifs:
                raise ValueError(f"duplicate motif id {m.id!r}")
            self.motifs[m.id] = m
        self.addresses = {}
        self.types = dict(types or {})
        self.counters = {}
        self._key = None
        self._hash = None
        self.check()

    # -- invariants ---------------------------------------------------------

    def check(self):
        for m in self.motifs.values():
            for cid in m.members:
                if cid not in self.components:
                    raise UnknownComponent(
                        f"motif {m.id!r} references missing component {cid!r}"
                    )
        for (cid, mid), n in self.addresses.items():
            m = self.motifs.get(mid)
            if m is None:
                raise UnknownMotif(f"address entry for missing motif {mid!r}")
            if cid not in m.members:
                raise NotAMember(f"{cid!r} addressed in {mid!r} but not a member")
            if n not in m.map.nodes:
                raise UnknownNode(f"address of {cid!r} in {mid!r} is off-map: {n!r}")

    # -- cloning ------------------------------------------------------------

    def clone(self):
        c = Configuration.__new__(Configuration)
        c.components = dict(self.components)
        c.motifs = dict(self.motifs)
        c.addresses = dict(self.addresses)
        c.types = self.types
        c.counters = dict(self.counters)
        c._key = None
        c._hash = None
        return c

    # -- queries ------------------------------------------------------------

    def motif(self, mid):
        m = self.motifs.get(mid)
        if m is None:
            raise UnknownMotif(f"no motif {mid!r}")
        return m

    def component(self, cid):
        c = self.components.get(cid)
        if c is None:
            raise UnknownComponent(f"no component {cid!r}")
        return c

    def address(self, cid, mid):
        """Node of `cid` in motif `mid`, or None when undefined."""
        return self.addresses.get((cid, mid))

    def occupied(self, mid, n):
        """Member ids of motif `mid` addressed at node `n`."""
        m = self.motif(mid)
        if n not in m.map.nodes:
            raise UnknownNode(f"no node {n!r} in motif {mid!r}")
        return {cid for cid in m.members if self.addresses.get((cid, mid)) == n}

    def motifs_of(self, cid):
        return sorted(m.id for m in self.motifs.values() if cid in m.members)

    def fresh_id(self, type_name):
        k = self.counters.get(type_name, 0)
        self.counters[type_name] = k + 1
        return f"{type_name}#{k}"

    # -- mutating helpers (rule engine only, on clones) ---------------------

    def _touch_component(self, cid):
        c = self.component(cid).copy()
        self.components[cid] = c
        self._key = self._hash = None
        return c

    def _touch_motif(self, mid, copy_map=False, copy_members=False):
        m = self.motif(mid).copy(copy_map=copy_map, copy_members=copy_members)
        self.motifs[mid] = m
        self._key = self._hash = None
        return m

    def _place(self, cid, mid, n):
        m = self.motif(mid)
        if cid not in m.members:
            raise NotAMember(f"{cid!r} is not a member of {mid!r}")
        if n not in m.map.nodes:
            raise UnknownNode(f"no node {n!r} in motif {mid!r}")
        self.addresses[(cid, mid)] = n
        self._key = self._hash = None

    def _unplace(self, cid, mid):
        self.addresses.pop((cid, mid), None)
        self._key = self._hash = None

    def _dirty(self):
        self._key = self._hash = None

    # -- canonical form -----------------------------------------------------

    def canonical_key(self):
        if self._key is None:
            comps = tuple(
                self.components[cid].canonical() for cid in sorted(self.components)
            )
            motifs = tuple(
                (mid, self.motifs[mid].map.canonical(), tuple(sorted(self.motifs[mid].members)))
                for mid in sorted(self.motifs)
            )
            addrs = tuple(sorted(self.addresses.items()))
            counters = tuple(sorted(self.counters.items()))
            self._key = (comps, motifs, addrs, counters)
        return self._key

    def state_hash(self):
        if self._hash is None:
            h = blake2b(repr(self.canonical_key()).encode(), digest_size=8)
            self._hash = h.hexdigest()
        return self._hash


# ---------------------------------------------------------------------------
# pure operations


def distance(map, n1, n2):
    """Minimum-weight directed path length, or UNREACHABLE."""
    return map.distance(n1, n2)


def occupied(cfg, motif_id, n):
    return cfg.occupied(motif_id, n)


def place(cfg, component, motif, n):
    """A new configuration with `component` addressed at `n` in `motif`."""
    out = cfg.clone()
    out._place(component, motif, n)
    return out


def add_node(cfg, motif, n):
    out = cfg.clone()
    m = out._touch_motif(motif, copy_map=True)
    m.map.add_node(n)
    return out


def remove_node(cfg, motif, n):
    if cfg.occupied(motif, n):
        raise NodeOccupied(f"node {n!r} of motif {motif!r} is occupied")
    out = cfg.clone()
    m = out._touch_motif(motif, copy_map=True)
    m.map.remove_node(n)
    return out


def add_edge(cfg, motif, a, b, w=1):
    out = cfg.clone()
    m = out._touch_motif(motif, copy_map=True)
    m.map.add_edge(a, b, w)
    return out


def remove_edge(cfg, motif, a, b):
    out = cfg.clone()
    m = out._touch_motif(motif, copy_map=True)
    m.map.remove_edge(a, b)
    return out
