"""Parametric interaction and configuration rules.

The transition relation between configurations: binding enumeration,
atomic rule application, component creation/deletion, migration, and the
global candidate list that schedulers and the game grounder consume.
"""

from .errors import (
    EffectError,
    EngineError,
    EvalError,
    NotAMember,
    UnknownMotif,
    UnknownNode,
    UnknownType,
)
from .expr import UNDEF, Ctx, compile_guard
from .model import AGENT, ComponentInstance, Configuration

INTERACTION = "interaction"
CONFIG = "config"
DYNAMICS = "dynamics"
CONTROLLER = "controller"


class Param:
    __slots__ = ("name", "type", "required")

    def __init__(self, name, type, required=True):
        self.name = name
        self.type = type
        self.required = required

    def __eq__(self, other):
        return (self.name, self.type, self.required) == (
            other.name, other.type, other.required)


# ---------------------------------------------------------------------------
# command effects


class Effect:
    __slots__ = ()

    def compile(self, params):
        raise NotImplementedError

    def unparse(self):
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self.unparse() == other.unparse()


def _owner_id(name, params):
    if name in params:
        def get(ctx):
            cid = ctx.binding.get(name)
            if cid is None:
                raise EffectError(f"effect on unbound parameter {name!r}")
            return cid
        return get
    return lambda ctx: name


class Assign(Effect):
    __slots__ = ("owner", "attr", "value")

    def __init__(self, owner, attr, value):
        self.owner = owner
        self.attr = attr
        self.value = value

    def unparse(self):
        return f"{self.owner}.{self.attr} := {self.value.unparse()}"

    def compile(self, params):
        get = _owner_id(self.owner, params)
        attr = self.attr
        fv = self.value.compile(params)

        def run(ctx, rec):
            cid = get(ctx)
            v = fv(ctx)
            comp = ctx.cfg._touch_component(cid)
            decl = comp.type.vars.get(attr)
            if decl is None:
                raise EffectError(f"type {comp.type.name!r} has no var {attr!r}")
            old = comp.state[attr]
            comp.state[attr] = decl.domain.canon(v)
            rec.append(("assign", cid, attr, old, comp.state[attr]))
        return run


class Exchange(Effect):
    __slots__ = ("o1", "a1", "o2", "a2")

    def __init__(self, o1, a1, o2, a2):
        self.o1, self.a1 = o1, a1
        self.o2, self.a2 = o2, a2

    def unparse(self):
        return f"exchange({self.o1}.{self.a1}, {self.o2}.{self.a2})"

    def compile(self, params):
        g1 = _owner_id(self.o1, params)
        g2 = _owner_id(self.o2, params)
        a1, a2 = self.a1, self.a2

        def run(ctx, rec):
            c1 = ctx.cfg._touch_component(g1(ctx))
            c2 = ctx.cfg._touch_component(g2(ctx))
            for c, a in ((c1, a1), (c2, a2)):
                if a not in c.type.vars:
                    raise EffectError(f"type {c.type.name!r} has no var {a!r}")
            v1, v2 = c1.state[a1], c2.state[a2]
            c1.state[a1] = c1.type.vars[a1].domain.canon(v2)
            c2.state[a2] = c2.type.vars[a2].domain.canon(v1)
            rec.append(("exchange", c1.id, a1, c2.id, a2))
        return run


class Move(Effect):
    """@(p) := node-expression, within the rule's motif."""

    __slots__ = ("owner", "node")

    def __init__(self, owner, node):
        self.owner = owner
        self.node = node

    def unparse(self):
        return f"@({self.owner}) := {self.node.unparse()}"

    def compile(self, params):
        get = _owner_id(self.owner, params)
        fn = self.node.compile(params)

        def run(ctx, rec):
            cid = get(ctx)
            n = fn(ctx)
            if n is UNDEF:
                raise EffectError("move target is an undefined address")
            mid = ctx.motif.id
            old = ctx.cfg.addresses.get((cid, mid))
            ctx.cfg._place(cid, mid, n)
            rec.append(("move", cid, mid, old, n))
        return run


class Create(Effect):
    __slots__ = ("name", "type", "motif", "node", "inits")

    def __init__(self, name, type, motif=None, node=None, inits=()):
        self.name = name
        self.type = type
        self.motif = motif
        self.node = node
        self.inits = list(inits)

    def unparse(self):
        s = f"create {self.name}: {self.type}"
        if self.motif is not None:
            s += f" in {self.motif}"
        if self.node is not None:
            s += f" at {self.node.unparse()}"
        if self.inits:
            body = " ".join(f"{v} = {e.unparse()};" for v, e in self.inits)
            s += " with { %s }" % body
        return s

    def compile(self, params):
        name = self.name
        type_name = self.type
        motif = self.motif
        fn = self.node.compile(params) if self.node is not None else None
        finits = [(v, e.compile(params)) for v, e in self.inits]

        def run(ctx, rec):
            ctype = ctx.cfg.types.get(type_name)
            if ctype is None:
                raise EffectError(f"unknown type {type_name!r}")
            init = {v: f(ctx) for v, f in finits}
            mid = motif if motif is not None else ctx.motif.id
            cid = ctx.cfg.fresh_id(type_name)
            comp = ComponentInstance(cid, ctype, init)
            ctx.cfg.components[cid] = comp
            m = ctx.cfg._touch_motif(mid, copy_members=True)
            m.members.add(cid)
            node = None
            if fn is not None:
                node = fn(ctx)
                if node is UNDEF:
                    raise EffectError("create at an undefined address")
                ctx.cfg._place(cid, mid, node)
            ctx.binding[name] = cid
            ctx.cfg._dirty()
            rec.append(("create", cid, type_name, mid, node))
        return run


class Delete(Effect):
    __slots__ = ("owner",)

    def __init__(self, owner):
        self.owner = owner

    def unparse(self):
        return f"delete({self.owner})"

    def compile(self, params):
        get = _owner_id(self.owner, params)

        def run(ctx, rec):
            cid = get(ctx)
            if cid not in ctx.cfg.components:
                raise EffectError(f"delete of nonexistent component {cid!r}")
            del ctx.cfg.components[cid]
            for mid, m in list(ctx.cfg.motifs.items()):
                if cid in m.members:
                    m2 = ctx.cfg._touch_motif(mid, copy_members=True)
                    m2.members.discard(cid)
            for key in [k for k in ctx.cfg.addresses if k[0] == cid]:
                del ctx.cfg.addresses[key]
            ctx.cfg._dirty()
            rec.append(("delete", cid))
        return run


class Join(Effect):
    __slots__ = ("owner", "motif")

    def __init__(self, owner, motif):
        self.owner = owner
        self.motif = motif

    def unparse(self):
        return f"join({self.owner}, {self.motif})"

    def compile(self, params):
        get = _owner_id(self.owner, params)
        motif = self.motif

        def run(ctx, rec):
            cid = get(ctx)
            if motif not in ctx.cfg.motifs:
                raise EffectError(f"unknown motif {motif!r}")
            m = ctx.cfg._touch_motif(motif, copy_members=True)
            m.members.add(cid)
            rec.append(("join", cid, motif))
        return run


class Leave(Effect):
    __slots__ = ("owner", "motif")

    def __init__(self, owner, motif):
        self.owner = owner
        self.motif = motif

    def unparse(self):
        return f"leave({self.owner}, {self.motif})"

    def compile(self, params):
        get = _owner_id(self.owner, params)
        motif = self.motif

        def run(ctx, rec):
            cid = get(ctx)
            m = ctx.cfg.motifs.get(motif)
            if m is None:
                raise EffectError(f"unknown motif {motif!r}")
            if cid not in m.members:
                raise EffectError(f"{cid!r} is not a member of {motif!r}")
            m2 = ctx.cfg._touch_motif(motif, copy_members=True)
            m2.members.discard(cid)
            ctx.cfg._unplace(cid, motif)
            rec.append(("leave", cid, motif))
        return run


class MigrateEffect(Effect):
    __slots__ = ("owner", "src", "dst", "node")

    def __init__(self, owner, src, dst, node=None):
        self.owner = owner
        self.src = src
        self.dst = dst
        self.node = node

    def unparse(self):
        s = f"migrate({self.owner}, {self.src}, {self.dst}"
        if self.node is not None:
            s += f", {self.node.unparse()}"
        return s + ")"

    def compile(self, params):
        get = _owner_id(self.owner, params)
        src, dst = self.src, self.dst
        fn = self.node.compile(params) if self.node is not None else None

        def run(ctx, rec):
            cid = get(ctx)
            node = None
            if fn is not None:
                node = fn(ctx)
                if node is UNDEF:
                    raise EffectError("migrate to an undefined address")
            _migrate(ctx.cfg, cid, src, dst, node)
            rec.append(("migrate", cid, src, dst, node))
        return run


class MapEdit(Effect):
    __slots__ = ("op", "args")

    def __init__(self, op, args):
        assert op in ("addnode", "removenode", "addedge", "removeedge")
        self.op = op
        self.args = list(args)

    def unparse(self):
        return f"{self.op}({', '.join(a.unparse() for a in self.args)})"

    def compile(self, params):
        op = self.op
        fargs = [a.compile(params) for a in self.args]

        def run(ctx, rec):
            vals = [f(ctx) for f in fargs]
            if any(v is UNDEF for v in vals):
                raise EffectError(f"{op} on an undefined address")
            mid = ctx.motif.id
            m = ctx.cfg._touch_motif(mid, copy_map=True)
            if op == "addnode":
                m.map.add_node(vals[0])
            elif op == "removenode":
                occ = ctx.cfg.occupied(mid, vals[0])
                if occ:
                    raise EffectError(
                        f"node {vals[0]!r} of {mid!r} is occupied by {sorted(occ)}")
                m.map.remove_node(vals[0])
            elif op == "addedge":
                w = vals[2] if len(vals) > 2 else 1
                m.map.add_edge(vals[0], vals[1], w)
            else:
                m.map.remove_edge(vals[0], vals[1])
            rec.append((op, mid, tuple(vals)))
        return run


# ---------------------------------------------------------------------------
# rules


class Rule:
    """A parametric guarded command.

    `kind` distinguishes motif interaction rules (state effects only),
    motif configuration rules, object internal dynamics, and compiled
    controller transitions.
    """

    __slots__ = ("name", "kind", "params", "guard", "effects", "_guard_c",
                 "_effects_c", "_pnames")

    def __init__(self, name, kind, params, guard, effects):
        self.name = name
        self.kind = kind
        self.params = list(params)
        self.guard = guard
        self.effects = list(effects)
        if kind == INTERACTION:
            for e in self.effects:
                if not isinstance(e, (Assign, Exchange)):
                    raise ValueError(
                        f"interaction rule {name!r} may only assign/exchange")
        if kind in (INTERACTION, CONFIG) and not any(p.required for p in self.params):
            raise ValueError(f"rule {name!r} needs at least one required participant")
        self._pnames = frozenset(p.name for p in self.params)
        self._guard_c = None
        self._effects_c = None

    def guard_fn(self):
        if self._guard_c is None:
            self._guard_c = compile_guard(self.guard, self._pnames)
        return self._guard_c

    def effect_fns(self):
        if self._effects_c is None:
            self._effects_c = [e.compile(self._pnames) for e in self.effects]
        return self._effects_c


def enabled_bindings(cfg, motif_id, rule, fixed=None):
    """All enabled bindings of `rule` in `motif_id`, in deterministic order.

    Required parameters are bound to pairwise-distinct type-matching
    members, enumerated lexicographically per parameter position.
    Optional parameters are maximally extended: each is greedily bound to
    the first candidate that satisfies the guard, else omitted.

    `fixed` pre-binds parameters (used for dynamics/controller `self`,
    which need not be motif-member-checked).
    """
    motif = cfg.motif(motif_id)
    guard = rule.guard_fn()
    fixed = fixed or {}

    by_param = {}
    members = sorted(motif.members)
    for p in rule.params:
        if p.name in fixed:
            continue
        by_param[p.name] = [
            cid for cid in members
            if cid in cfg.components and cfg.components[cid].type.name == p.type
        ]

    required = [p for p in rule.params if p.required and p.name not in fixed]
    optional = [p for p in rule.params if not p.required and p.name not in fixed]
    ctx = Ctx(cfg, motif)
    out = []

    def extend_optionals(binding, used):
        for p in optional:
            for cid in by_param[p.name]:
                if cid in used:
                    continue
                binding[p.name] = cid
                ctx.binding = binding
                if guard(ctx):
                    used.add(cid)
                    break
                del binding[p.name]

    def rec(i, binding, used):
        if i == len(required):
            binding = dict(binding)
            used = set(used)
            extend_optionals(binding, used)
            ctx.binding = binding
            if guard(ctx):
                out.append(binding)
            return
        p = required[i]
        for cid in by_param[p.name]:
            if cid in used:
                continue
            binding[p.name] = cid
            used.add(cid)
            rec(i + 1, binding, used)
            used.discard(cid)
            del binding[p.name]

    base = dict(fixed)
    rec(0, base, set(base.values()))
    return out


class Event:
    """One applied rule instance: the replayable trace atom."""

    __slots__ = ("step", "motif", "rule", "binding", "effects", "post_hash")

    def __init__(self, motif, rule, binding, effects, post_hash, step=None):
        self.step = step
        self.motif = motif
        self.rule = rule
        self.binding = binding
        self.effects = effects
        self.post_hash = post_hash


def apply(cfg, motif_id, rule, binding):
    """Apply one enabled rule instance atomically.

    Returns `(new_configuration, event)`.  On any failing effect the
    original configuration is untouched and `EffectError` is raised.
    """
    clone = cfg.clone()
    motif = clone.motif(motif_id)
    ctx = Ctx(clone, motif, dict(binding))
    rec = []
    try:
        for fe in rule.effect_fns():
            fe(ctx, rec)
        clone.check()
    except EffectError:
        raise
    except EngineError as exc:
        raise EffectError(str(exc)) from exc
    event = Event(motif_id, rule.name, dict(binding), rec, clone.state_hash())
    return clone, event


# ---------------------------------------------------------------------------
# component dynamism as standalone operations


def create_component(cfg, type_name, motif_id, node=None, init=None):
    """Create a fresh component of `type_name` in `motif_id`.

    Returns `(new_configuration, new_id)`.  Without a node the component
    is placed with an undefined address.
    """
    if type_name not in cfg.types:
        raise UnknownType(f"unknown type {type_name!r}")
    out = cfg.clone()
    m = out.motifs.get(motif_id)
    if m is None:
        raise UnknownMotif(f"no motif {motif_id!r}")
    if node is not None and node not in m.map.nodes:
        raise UnknownNode(f"no node {node!r} in motif {motif_id!r}")
    cid = out.fresh_id(type_name)
    out.components[cid] = ComponentInstance(cid, cfg.types[type_name], init or {})
    m2 = out._touch_motif(motif_id, copy_members=True)
    m2.members.add(cid)
    if node is not None:
        out._place(cid, motif_id, node)
    out._dirty()
    return out, cid


def delete_component(cfg, cid):
    if cid not in cfg.components:
        raise UnknownType(f"no component {cid!r}")
    out = cfg.clone()
    del out.components[cid]
    for mid, m in list(out.motifs.items()):
        if cid in m.members:
            m2 = out._touch_motif(mid, copy_members=True)
            m2.members.discard(cid)
    for key in [k for k in out.addresses if k[0] == cid]:
        del out.addresses[key]
    out._dirty()
    return out


def _migrate(cfg, cid, from_motif, to_motif, node=None):
    src = cfg.motifs.get(from_motif)
    if src is None:
        raise UnknownMotif(f"no motif {from_motif!r}")
    dst = cfg.motifs.get(to_motif)
    if dst is None:
        raise UnknownMotif(f"no motif {to_motif!r}")
    if cid not in src.members:
        raise NotAMember(f"{cid!r} is not a member of {from_motif!r}")
    if node is not None and node not in dst.map.nodes:
        raise UnknownNode(f"no node {node!r} in motif {to_motif!r}")
    if from_motif != to_motif:
        s = cfg._touch_motif(from_motif, copy_members=True)
        s.members.discard(cid)
        cfg._unplace(cid, from_motif)
        d = cfg._touch_motif(to_motif, copy_members=True)
        d.members.add(cid)
    if node is not None:
        cfg._place(cid, to_motif, node)


def migrate(cfg, cid, from_motif, to_motif, node=None):
    """Move `cid` between motifs; state is unchanged, the source address
    entry is dropped, and the target address is set iff `node` is given."""
    out = cfg.clone()
    _migrate(out, cid, from_motif, to_motif, node)
    return out


# ---------------------------------------------------------------------------
# global candidate enumeration


class Candidate:
    """One fireable event: (motif, rule, binding) plus controllability."""

    __slots__ = ("motif", "rule", "binding", "label", "controlled_by", "kind")

    def __init__(self, motif, rule, binding, controlled_by, kind):
        self.motif = motif
        self.rule = rule
        self.binding = binding
        self.controlled_by = controlled_by
        self.kind = kind
        bind = ",".join(f"{p.name}={binding[p.name]}"
                        for p in rule.params if p.name in binding)
        self.label = f"{motif}/{rule.name}[{bind}]"

    def apply_to(self, cfg):
        return apply(cfg, self.motif, self.rule, self.binding)

    def is_controllable(self, ego):
        return ego is not None and ego in self.controlled_by

    def __repr__(self):
        return f"<candidate {self.label}>"


def _agent_participants(cfg, binding):
    return frozenset(
        cid for cid in binding.values()
        if cid in cfg.components and cfg.components[cid].type.kind == AGENT
    )


def step_candidates(cfg, ego=None):
    """Every enabled rule, controller-transition and dynamics instance.

    Deterministic order: motif id, rule declaration order, lexicographic
    binding; per motif, declared rules come first, then controller
    transitions (by agent id), then object dynamics (by object id).
    When `ego` is given, each candidate's `is_controllable(ego)` tags it
    relative to that agent.
    """
    cands = []
    for mid in sorted(cfg.motifs):
        motif = cfg.motifs[mid]
        for rule in list(motif.interaction_rules) + list(motif.configuration_rules):
            for binding in enabled_bindings(cfg, mid, rule):
                cands.append(Candidate(
                    mid, rule, binding, _agent_participants(cfg, binding),
                    rule.kind))
        for cid in sorted(motif.members):
            comp = cfg.components.get(cid)
            if comp is None:
                continue
            if comp.type.kind == AGENT and comp.type.controller is not None:
                for rule in comp.type.controller.transitions:
                    for binding in enabled_bindings(
                            cfg, mid, rule, fixed={"self": cid}):
                        cands.append(Candidate(
                            mid, rule, binding, frozenset([cid]), CONTROLLER))
            elif comp.type.dynamics:
                for rule in comp.type.dynamics:
                    for binding in enabled_bindings(
                            cfg, mid, rule, fixed={"self": cid}):
                        cands.append(Candidate(
                            mid, rule, binding, frozenset(), DYNAMICS))
    return cands
