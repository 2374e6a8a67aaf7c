import pathlib

import pytest

from motifsim.cli import main
from motifsim.scenarios import PLATOON, SHUTTLE, THERMOSTAT


@pytest.fixture
def models(tmp_path):
    paths = {}
    for name, text in (("thermostat", THERMOSTAT), ("shuttle", SHUTTLE),
                       ("platoon", PLATOON)):
        p = tmp_path / f"{name}.motif"
        p.write_text(text)
        paths[name] = str(p)
    bad = tmp_path / "bad.motif"
    bad.write_text("goal g critical avoid (nobody.x);")
    paths["bad"] = str(bad)
    doomed = tmp_path / "doomed.motif"
    doomed.write_text(THERMOSTAT + "\ngoal doom critical avoid (true);\n")
    paths["doomed"] = str(doomed)
    return paths


def test_check_exit_codes(models, tmp_path, capsys):
    assert main(["check", models["thermostat"]]) == 0
    assert main(["check", models["bad"]]) == 1
    err = capsys.readouterr().err
    assert "nobody" in err
    assert main(["check", str(tmp_path / "missing.motif")]) == 2


def test_simulate_writes_a_trace(models, tmp_path, capsys):
    out = tmp_path / "trace.jsonl"
    rc = main(["simulate", models["shuttle"], "--steps", "10",
               "--trace", str(out)])
    assert rc == 0
    text = out.read_text()
    assert len(text.splitlines()) == 11
    captured = capsys.readouterr().out
    assert "steps: 10" in captured
    assert "onroute" in captured and "pass" in captured


def test_simulate_failing_check(models, tmp_path):
    failing = tmp_path / "failing.motif"
    failing.write_text(SHUTTLE.replace(
        "check onroute always (placed(bus, route));",
        "check stuck always (@(bus, route) = 0);"))
    assert main(["simulate", str(failing), "--steps", "10"]) == 1


def test_simulate_is_deterministic(models, tmp_path):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    for out in (a, b):
        assert main(["simulate", models["platoon"], "--steps", "40",
                     "--seed", "7", "--trace", str(out)]) == 0
    assert a.read_text() == b.read_text()


def test_synth_thermostat(models, tmp_path, capsys):
    out = tmp_path / "ctrl.tsv"
    rc = main(["synth", models["thermostat"], "--agent", "h1",
               "--goal", "band", "--out", str(out)])
    assert rc == 0
    captured = capsys.readouterr().out
    assert "initial: winning" in captured
    table = out.read_text()
    assert table.startswith("# controller-table v1")
    assert "\t" in table


def test_synth_losing_goal(models, capsys):
    rc = main(["synth", models["doomed"], "--agent", "h1", "--goal", "doom"])
    assert rc == 1
    assert "initial: losing" in capsys.readouterr().out


def test_synth_budget_exceeded(models, capsys):
    rc = main(["synth", models["platoon"], "--agent", "v1",
               "--goal", "nope", "--bound", "1"])
    assert rc == 2  # unknown goal reported before grounding
    platoon_goal = models["platoon"]
    # with a real goal the tiny bound trips the state budget
    text = pathlib.Path(platoon_goal).read_text()
    with_goal = pathlib.Path(platoon_goal).with_name("pg.motif")
    with_goal.write_text(
        text + "\ngoal apart critical avoid (@(v1, road) = @(v2, road));\n")
    rc = main(["synth", str(with_goal), "--agent", "v1",
               "--goal", "apart", "--bound", "1"])
    assert rc == 3
    assert "plan" in capsys.readouterr().err


def test_synth_usage_errors(models):
    assert main(["synth", models["thermostat"], "--agent", "h1",
                 "--goal", "missing"]) == 2
    assert main(["synth", models["thermostat"], "--agent", "ghost",
                 "--goal", "band"]) == 2


def test_plan_command(models, capsys):
    rc = main(["plan", models["thermostat"], "--agent", "h1",
               "--horizon", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "first action:" in out
    assert "agent:" in out


def test_plan_no_safe_plan(models, capsys):
    rc = main(["plan", models["doomed"], "--agent", "h1", "--horizon", "2"])
    assert rc == 1
    assert "no safe plan" in capsys.readouterr().err


def test_plan_usage_errors(models):
    assert main(["plan", models["thermostat"], "--agent", "h1",
                 "--horizon", "0"]) == 2
    assert main(["plan", models["thermostat"], "--agent", "ghost"]) == 2


def test_unknown_subcommand_is_usage():
    assert main(["frobnicate"]) == 2
    assert main([]) == 2
