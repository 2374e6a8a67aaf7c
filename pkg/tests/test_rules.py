import itertools
from fractions import Fraction

import pytest

from motifsim.errors import (
    EffectError, EvalError, NotAMember, UnknownMotif, UnknownType,
)
from motifsim.expr import Ctx, UNDEF, UnboundParam
from motifsim.lang import parse
from motifsim.rules import (
    apply, create_component, delete_component, enabled_bindings, migrate,
    step_candidates,
)

CONVOY = """\
type car agent {
  var speed: int[0, 5];
}

motif lane {
  map line(6);
  config rule advance for a: car if empty(succ(@(a))) then { @(a) := succ(@(a)); }
  interaction rule swap for a: car, b: car if distance(@(a), @(b)) = 1 then { exchange(a.speed, b.speed); }
  interaction rule match for a: car, b: car, c?: car if a.speed < b.speed then { a.speed := b.speed; }
}

component c1: car { speed = 2; } in lane at 0;

component c2: car { speed = 4; } in lane at 1;

component c3: car { speed = 1; } in lane at 3;
"""


def _system(text=CONVOY):
    model, diags = parse(text)
    assert model is not None, diags
    return model.build()


def _rule(cfg, motif, name):
    m = cfg.motif(motif)
    for r in list(m.interaction_rules) + list(m.configuration_rules):
        if r.name == name:
            return r
    raise AssertionError(name)


# -- expression semantics ----------------------------------------------------


def test_undef_comparison_is_false():
    system = _system()
    model, _ = parse(CONVOY + "\ncomponent c4: car in lane;\n")
    cfg = model.build().cfg
    holds = _goal_pred("@(c4, lane) = 0")
    assert holds(Ctx(cfg)) is False
    holds = _goal_pred("@(c4, lane) != 0")
    assert holds(Ctx(cfg)) is False
    del system


def _goal_pred(text):
    model, diags = parse(
        CONVOY + "\ncomponent c4: car in lane;\n"
        f"goal g critical avoid ({text});\n")
    assert model is not None, diags
    return model.build().goals["g"].predicate.compile(frozenset())


def test_undef_arithmetic_is_an_error():
    model, _ = parse(CONVOY + "\ncomponent c4: car in lane;\n")
    cfg = model.build().cfg
    fn = _goal_pred("@(c4, lane) + 1 = 2")
    with pytest.raises(EvalError):
        fn(Ctx(cfg))


def test_placed_and_member_are_total():
    cfg = _system().cfg
    assert _goal_pred("placed(c1, lane)")(Ctx(cfg)) is True
    assert _goal_pred("member(c1, lane)")(Ctx(cfg)) is True
    assert _goal_pred("empty(2, lane)")(Ctx(cfg)) is True
    assert _goal_pred("empty(0, lane)")(Ctx(cfg)) is False


def test_unbound_param_makes_atom_false():
    cfg = _system().cfg
    rule = _rule(cfg, "lane", "match")
    guard = rule.guard_fn()
    ctx = Ctx(cfg, cfg.motif("lane"), {"a": "c1", "b": "c2"})
    assert guard(ctx) is True  # c is optional, guard ignores it
    # a direct reference to the unbound optional is false, not an error
    from motifsim.expr import VarRef, Binary, Lit
    e = Binary("=", VarRef("c", "speed"), Lit(1)).compile(frozenset({"c"}))
    assert e(Ctx(cfg, binding={})) is False


def test_guard_must_be_boolean():
    from motifsim.expr import Lit, compile_guard
    g = compile_guard(Lit(3), frozenset())
    with pytest.raises(EvalError):
        g(Ctx(_system().cfg))


def test_unparse_round_trip_effects():
    cfg = _system().cfg
    for name in ("advance", "swap", "match"):
        rule = _rule(cfg, "lane", name)
        for e in rule.effects:
            assert e.unparse()
        assert rule.guard.unparse()


# -- binding enumeration -----------------------------------------------------


def test_enabled_bindings_vs_brute_force():
    cfg = _system().cfg
    rule = _rule(cfg, "lane", "swap")
    got = enabled_bindings(cfg, "lane", rule)
    guard = rule.guard_fn()
    members = sorted(cfg.motif("lane").members)
    want = []
    for a, b in itertools.product(members, members):
        if a == b:
            continue
        ctx = Ctx(cfg, cfg.motif("lane"), {"a": a, "b": b})
        if guard(ctx):
            want.append({"a": a, "b": b})
    assert got == want
    assert got  # c1 and c2 are adjacent


def test_bindings_are_pairwise_distinct():
    cfg = _system().cfg
    rule = _rule(cfg, "lane", "match")
    for binding in enabled_bindings(cfg, "lane", rule):
        vals = list(binding.values())
        assert len(vals) == len(set(vals))


def test_optional_greedy_extension():
    cfg = _system().cfg
    rule = _rule(cfg, "lane", "match")
    got = enabled_bindings(cfg, "lane", rule)
    # c1 < c2: guard holds; the optional c grabs the first distinct car
    assert {"a": "c1", "b": "c2", "c": "c3"} in got
    # c3 < c2 leaves c1 free for the optional
    assert {"a": "c3", "b": "c2", "c": "c1"} in got


def test_enumeration_is_deterministic():
    a = [c.label for c in step_candidates(_system().cfg)]
    b = [c.label for c in step_candidates(_system().cfg)]
    assert a == b
    assert a == sorted(set(a), key=a.index)  # no duplicates


# -- atomic application ------------------------------------------------------


def test_exchange_is_an_involution():
    cfg = _system().cfg
    rule = _rule(cfg, "lane", "swap")
    binding = {"a": "c1", "b": "c2"}
    once, _ = apply(cfg, "lane", rule, binding)
    assert once.components["c1"].state["speed"] == 4
    twice, _ = apply(once, "lane", rule, binding)
    assert twice.state_hash() == cfg.state_hash()


def test_apply_is_atomic_on_failure():
    text = CONVOY.replace(
        "interaction rule swap",
        "interaction rule burst for x: car then "
        "{ x.speed := 0; x.speed := 99; }\n  interaction rule swap")
    cfg = _system(text).cfg
    rule = _rule(cfg, "lane", "burst")
    before = cfg.state_hash()
    with pytest.raises(EffectError):
        apply(cfg, "lane", rule, {"x": "c1"})
    assert cfg.state_hash() == before
    assert cfg.components["c1"].state["speed"] == 2


def test_move_respects_occupancy_guard():
    cfg = _system().cfg
    labels = [c.label for c in step_candidates(cfg)]
    # c1 sits behind c2: its advance is not enabled, c2's and c3's are
    assert not any("advance[a=c1]" in lab for lab in labels)
    assert any("advance[a=c2]" in lab for lab in labels)
    assert any("advance[a=c3]" in lab for lab in labels)


def test_candidate_apply_and_event():
    cfg = _system().cfg
    cand = next(c for c in step_candidates(cfg) if "advance[a=c2]" in c.label)
    nxt, event = cand.apply_to(cfg)
    assert nxt.address("c2", "lane") == 2
    assert cfg.address("c2", "lane") == 1
    assert event.rule == "advance"
    assert event.post_hash == nxt.state_hash()


# -- component dynamism ------------------------------------------------------


def test_create_component():
    cfg = _system().cfg
    nxt, cid = create_component(cfg, "car", "lane", node=5,
                                init={"speed": 3})
    assert cid == "car#0"
    assert nxt.components[cid].state["speed"] == 3
    assert nxt.address(cid, "lane") == 5
    assert cid not in cfg.components
    with pytest.raises(UnknownType):
        create_component(cfg, "ghost", "lane")
    with pytest.raises(UnknownMotif):
        create_component(cfg, "car", "ghost")


def test_delete_component():
    cfg = _system().cfg
    nxt = delete_component(cfg, "c1")
    assert "c1" not in nxt.components
    assert "c1" not in nxt.motif("lane").members
    assert nxt.address("c1", "lane") is None
    with pytest.raises(UnknownType):
        delete_component(nxt, "c1")


def test_fresh_ids_survive_deletion():
    cfg = _system().cfg
    cfg2, cid1 = create_component(cfg, "car", "lane")
    cfg3 = delete_component(cfg2, cid1)
    _, cid2 = create_component(cfg3, "car", "lane")
    assert cid2 != cid1  # ids are never reused


def test_migrate_between_motifs():
    model, _ = parse(CONVOY + "\nmotif pit {\n  map line(2);\n}\n")
    cfg = model.build().cfg
    nxt = migrate(cfg, "c1", "lane", "pit", node=0)
    assert "c1" not in nxt.motif("lane").members
    assert "c1" in nxt.motif("pit").members
    assert nxt.address("c1", "lane") is None
    assert nxt.address("c1", "pit") == 0
    assert nxt.components["c1"].state["speed"] == 2  # state untouched
    with pytest.raises(NotAMember):
        migrate(nxt, "c1", "lane", "pit")


def test_rule_kind_constraints():
    from motifsim.expr import TRUE
    from motifsim.rules import INTERACTION, Move, Param, Rule
    from motifsim.expr import Sym
    with pytest.raises(ValueError):
        Rule("bad", INTERACTION, [Param("a", "car")], TRUE,
             [Move("a", Sym("0"))])
    with pytest.raises(ValueError):
        Rule("bad", INTERACTION, [Param("a", "car", required=False)], TRUE, [])


def test_dynamics_candidates_are_uncontrolled():
    from motifsim.scenarios import SHUTTLE
    model, _ = parse(SHUTTLE)
    cfg = model.build().cfg
    cands = step_candidates(cfg, ego="bus")
    assert len(cands) == 1
    assert cands[0].kind == "dynamics"
    assert not cands[0].is_controllable("bus")


def test_unbound_required_effect_raises():
    cfg = _system().cfg
    rule = _rule(cfg, "lane", "swap")
    with pytest.raises(EffectError):
        apply(cfg, "lane", rule, {"a": "c1"})
