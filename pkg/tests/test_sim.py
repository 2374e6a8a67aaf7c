import json

import pytest

from motifsim import sim
from motifsim.errors import ReplayDivergence
from motifsim.lang import parse
from motifsim.scenarios import PLATOON, SHUTTLE, SOCCER, THERMOSTAT


def _system(text):
    model, diags = parse(text)
    assert model is not None, diags
    return model.build()


# -- determinism and traces --------------------------------------------------


def test_traces_are_byte_identical():
    a = sim.run(_system(SHUTTLE))
    b = sim.run(_system(SHUTTLE))
    assert a.text() == b.text()


def test_different_seeds_usually_differ():
    a = sim.run(_system(PLATOON), steps=50, seed=0)
    b = sim.run(_system(PLATOON), steps=50, seed=1)
    assert a.text() != b.text()


def test_trace_shape():
    trace = sim.run(_system(SHUTTLE), steps=5)
    lines = trace.text().splitlines()
    header = json.loads(lines[0])
    assert set(header) == {"model", "seed", "policy", "steps"}
    assert len(lines) == 6
    for ln in lines[1:]:
        e = json.loads(ln)
        assert e["rule"] == "go"
        assert e["unc"] is True


def test_quiescence_stops_the_run():
    system = _system("""\
type rock object {
  var n: int[0, 1];
}

motif pile {
  map line(1);
}

component r1: rock in pile at 0;
""")
    trace = sim.run(system, steps=50)
    assert trace.steps == 0
    assert trace.final.state_hash() == system.cfg.state_hash()


def test_checks_always_and_finally():
    trace = sim.run(_system(SHUTTLE))
    by_name = {c.name: c for c in trace.checks}
    assert by_name["onroute"].ok
    failing = _system(SHUTTLE.replace(
        "check onroute always (placed(bus, route));",
        "check stuck always (@(bus, route) = 0);\n"
        "  check done finally (bus.laps = 0);"))
    trace = sim.run(failing)
    by_name = {c.name: c for c in trace.checks}
    assert not by_name["stuck"].ok and by_name["stuck"].first_fail == 0
    assert not by_name["done"].ok
    assert "FAIL" in trace.summary()


# -- replay ------------------------------------------------------------------


def test_replay_rebuilds_the_final_state():
    system = _system(PLATOON)
    trace = sim.run(system, steps=60)
    final = sim.replay(_system(PLATOON), trace.text())
    assert final.state_hash() == trace.final.state_hash()
    assert final.canonical_key() == trace.final.canonical_key()


def test_replay_detects_tampering():
    system = _system(SHUTTLE)
    trace = sim.run(system, steps=5)
    lines = trace.text().splitlines()
    e = json.loads(lines[3])
    e["post"] = "0" * 16
    lines[3] = json.dumps(e, sort_keys=True)
    with pytest.raises(ReplayDivergence) as exc:
        sim.replay(_system(SHUTTLE), "\n".join(lines))
    assert exc.value.step == 2


def test_replay_rejects_other_models():
    trace = sim.run(_system(SHUTTLE), steps=3)
    with pytest.raises(ReplayDivergence):
        sim.replay(_system(THERMOSTAT), trace.text())
    with pytest.raises(ReplayDivergence):
        sim.replay(_system(SHUTTLE), "")


def test_replay_header_only_returns_initial():
    system = _system(SHUTTLE)
    trace = sim.run(system, steps=0)
    final = sim.replay(_system(SHUTTLE), trace.text())
    assert final.state_hash() == system.cfg.state_hash()


# -- policies ----------------------------------------------------------------


def test_round_robin_is_deterministic_and_rotates():
    a = sim.run(_system(PLATOON), steps=20, policy="round_robin")
    b = sim.run(_system(PLATOON), steps=20, policy="round_robin")
    assert a.text() == b.text()
    rules = {(e["rule"], tuple(sorted(e["binding"].items())))
             for e in a.events}
    assert len(rules) > 1  # the pointer visits different candidates


def test_script_policy_follows_the_script():
    system = _system(THERMOSTAT)
    script = ["cool"] * 4 + ["off_to_on_0", "warm"]
    world = sim.World(system, policy="script", script=script)
    events = [world.advance() for _ in range(len(script))]
    assert [e["rule"] for e in events] == script
    assert world.cfg.components["h1"].state["mode"] == "on"


def test_script_policy_stutters_on_disabled_rule():
    system = _system(THERMOSTAT)
    world = sim.World(system, policy="script", script=["warm"])  # mode is off
    e = world.advance()
    assert e["rule"] is None
    assert e["post"] == system.cfg.state_hash()
    assert world.advance() is None  # script exhausted


def test_script_accepts_qualified_names():
    system = _system(THERMOSTAT)
    world = sim.World(system, policy="script", script=["house/cool"])
    e = world.advance()
    assert e["rule"] == "cool"


# -- dynamism under the scheduler --------------------------------------------

SPAWNER = """\
type queen agent {
  var laid: int[0, 5];
}

type drone object {
  var age: int[0, 9];
}

motif hive {
  map line(6);
  config rule lay for q: queen if q.laid < 2 then { q.laid := q.laid + 1; create d: drone in hive at q.laid with { age = 0; }; }
  config rule cull for q: queen, d: drone if q.laid = 2 and d.age = 0 then { delete(d); }
}

component q1: queen { laid = 0; } in hive at 0;
"""


def test_ids_are_conserved_across_delete_and_create():
    system = _system(SPAWNER)
    world = sim.World(system, policy="round_robin")
    seen = set()
    for _ in range(30):
        e = world.advance()
        if e is None:
            break
        if e["rule"] == "lay":
            new = set(world.cfg.components) - seen
            assert all(i.startswith("drone#") for i in new if i != "q1")
        seen = set(world.cfg.components)
    created = {i for i in seen if i.startswith("drone#")}
    # ids increment monotonically even after deletions
    assert world.cfg.counters.get("drone", 0) >= len(created)


def test_soccer_migrations_are_atomic_per_event():
    system = _system(SOCCER)
    world = sim.World(system, seed=4)
    owner = world.cfg.components["ball1"].state["owner"]
    for _ in range(60):
        e = world.advance()
        if e is None:
            break
        now = world.cfg.components["ball1"].state["owner"]
        if now != owner:
            where = "attack" if now == "us" else "defense"
            assert "p1" in world.cfg.motif(where).members
            assert "p2" in world.cfg.motif(where).members
        owner = now
