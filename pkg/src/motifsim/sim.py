"""World scheduler, traces, replay and check evaluation.

One event per step.  Each step freezes the truth, lets every
deliberative agent pick a command on its believed model, then commits a
single event chosen from the first nonempty pool:

  1. commands chosen by deliberative agents,
  2. controller transitions of non-deliberative agents,
  3. everything uncontrolled (object dynamics and motif rules with no
     deliberative participant).

Rules involving a deliberative agent fire only when that agent chose
them, so an idle agent withholds its own actions.  The pool ordering
keeps explicit controllers ahead of environment dynamics, which is what
makes their guarantees carry over from the game abstraction (an agent
that must react is never outrun by the plant).
"""

import json
import random

from .agents import AgentRuntime, SensorSpec
from .errors import EffectError, ReplayDivergence
from .expr import Ctx
from .rules import CONTROLLER, step_candidates


class CheckResult:
    __slots__ = ("name", "when", "ok", "first_fail")

    def __init__(self, name, when):
        self.name = name
        self.when = when
        self.ok = True
        self.first_fail = None

    def fail(self, step):
        if self.ok:
            self.ok = False
            self.first_fail = step


class Trace:
    """A replayable run: header, one JSON line per event, check results."""

    def __init__(self, header):
        self.header = header
        self.events = []   # dicts
        self.checks = []   # CheckResult

    def text(self):
        lines = [json.dumps(self.header, sort_keys=True)]
        for e in self.events:
            lines.append(json.dumps(e, sort_keys=True))
        return "\n".join(lines) + "\n"

    @property
    def steps(self):
        return len(self.events)

    def summary(self):
        rows = []
        for c in self.checks:
            state = "pass" if c.ok else f"FAIL@{c.first_fail}"
            rows.append(f"{c.name:<24} {c.when:<8} {state}")
        return "\n".join(rows)


def _model_hash(system):
    from .lang import print_model
    from hashlib import blake2b
    text = print_model(system.model)
    return blake2b(text.encode(), digest_size=8).hexdigest()


class World:
    """Mutable run state: truth configuration plus agent runtimes."""

    def __init__(self, system, seed=0, policy="random", script=None,
                 controllers=None):
        self.system = system
        self.cfg = system.cfg
        self.seed = seed
        self.policy = policy
        self.script = list(script if script is not None else
                           (system.scenario.script if system.scenario else ()))
        self.rng = random.Random(f"run:{seed}")
        self.step_no = 0
        self.rr = 0
        self._cands = {}
        self._apply = {}
        self.runtimes = {}
        for ego, ad in system.agent_defs.items():
            spec = SensorSpec.from_def(ad.sensor, self._default_motif(ego))
            goals = [system.goals[n] for n in ad.goals if n in system.goals]
            rt = AgentRuntime(ego, spec, goals,
                              horizon=ad.horizon, recovery=ad.recovery,
                              thresholds=ad.thresholds, truth=self.cfg)
            rt.repo.patterns = list(ad.patterns)
            for g in goals:
                rt.repo.goals.setdefault(g.name, g)
            if ad.recovery and ad.recovery in system.goals:
                rt.repo.goals.setdefault(ad.recovery, system.goals[ad.recovery])
            self.runtimes[ego] = rt
        self.tables = {}
        if controllers:
            for ego, (gnames, ctrl) in controllers.items():
                if ego in self.runtimes:
                    self.runtimes[ego].repo.controllers["library"] = (
                        frozenset(gnames), ctrl)
                else:
                    # table-driven ego: no deliberation, just play the
                    # synthesized controller on the truth state
                    self.tables[ego] = ctrl

    def _default_motif(self, ego):
        for mid in sorted(self.system.cfg.motifs):
            if ego in self.system.cfg.motifs[mid].members:
                return mid
        return next(iter(sorted(self.system.cfg.motifs)), None)

    # -- candidate pools ----------------------------------------------------

    def _candidates(self):
        h = self.cfg.state_hash()
        cands = self._cands.get(h)
        if cands is None:
            cands = step_candidates(self.cfg)
            self._cands[h] = cands
        return cands

    def _apply_cached(self, cand):
        key = (self.cfg.state_hash(), cand.label)
        hit = self._apply.get(key)
        if hit is None:
            hit = cand.apply_to(self.cfg)
            self._apply[key] = hit
        return hit

    def _pools(self, chosen_labels, steered=()):
        deliberative = set(self.runtimes) | set(steered)
        by_label = {}
        p2 = []
        p3 = []
        for c in self._candidates():
            by_label[c.label] = c
            owners = c.controlled_by & deliberative
            if owners:
                continue  # withheld unless its agent chose it
            if c.kind == CONTROLLER:
                p2.append(c)
            else:
                p3.append(c)
        p1 = [by_label[lab] for lab in chosen_labels if lab in by_label]
        return p1, p2, p3

    # -- one step -----------------------------------------------------------

    def advance(self):
        """Run one step; returns the event dict or None at quiescence."""
        step = self.step_no
        beliefs = {}
        chosen = []
        for ego in self.runtimes:  # declaration order
            rt = self.runtimes[ego]
            label = rt.step(self.cfg, step, self.seed)
            beliefs[ego] = rt.model.digest()
            if label is not None:
                chosen.append(label)
        steered = []
        for ego, ctrl in self.tables.items():
            key = self.cfg.state_hash() + ":a"
            if not ctrl.covers(key):
                continue  # coverage gap: leave the ego's own moves free
            steered.append(ego)
            for lab in ctrl.kept_actions(key):
                if lab != "idle":
                    chosen.append(lab)
                    break

        p1, p2, p3 = self._pools(chosen, steered)
        pool = p1 or p2 or p3
        cand = None
        if self.policy == "script":
            if step < len(self.script):
                want = self.script[step]
                for c in p1 + p2 + p3:
                    if c.rule.name == want or f"{c.motif}/{c.rule.name}" == want:
                        cand = c
                        break
        elif pool:
            if self.policy == "round_robin":
                cand = pool[self.rr % len(pool)]
                self.rr += 1
            else:
                cand = self.rng.choice(pool)
        if cand is None:
            if self.policy == "script" and step < len(self.script):
                # scripted rule not enabled: an explicit stutter step
                self.step_no += 1
                for rt in self.runtimes.values():
                    rt.observe_event(False)
                return {"step": step, "motif": None, "rule": None,
                        "binding": {}, "post": self.cfg.state_hash(),
                        "unc": False, "beliefs": beliefs}
            return None

        try:
            nxt, event = self._apply_cached(cand)
        except EffectError as e:
            # a command that fails to execute consumes the step
            self.step_no += 1
            return {"step": step, "motif": cand.motif, "rule": cand.rule.name,
                    "binding": dict(cand.binding), "post": self.cfg.state_hash(),
                    "unc": not bool(cand.controlled_by), "error": str(e),
                    "beliefs": beliefs}
        unc = not (cand.controlled_by & set(self.runtimes)) \
            and cand.kind != CONTROLLER
        self.cfg = nxt
        self.step_no += 1
        for rt in self.runtimes.values():
            rt.observe_event(unc)
        return {"step": step, "motif": event.motif, "rule": event.rule,
                "binding": dict(event.binding), "post": event.post_hash,
                "unc": unc, "beliefs": beliefs}


def _compile_checks(system):
    checks = []
    if system.scenario is None:
        return checks
    for cd in system.scenario.checks:
        fn = cd.expr.compile(frozenset())
        checks.append((cd, fn, CheckResult(cd.name, cd.when)))
    return checks


def _eval_always(checks, cfg, step):
    for cd, fn, res in checks:
        if cd.when != "always":
            continue
        try:
            ok = bool(fn(Ctx(cfg)))
        except Exception:
            ok = False
        if not ok:
            res.fail(step)


def run(system, steps=None, seed=None, policy=None, controllers=None):
    """Simulate and record a trace.

    Defaults come from the model's scenario block.  The same arguments
    always produce a byte-identical trace.
    """
    sc = system.scenario
    steps = steps if steps is not None else (sc.steps if sc else 100)
    seed = seed if seed is not None else (sc.seed if sc else 0)
    policy = policy or (sc.policy if sc else "random")
    world = World(system, seed=seed, policy=policy, controllers=controllers)
    trace = Trace({"model": _model_hash(system), "seed": seed,
                   "policy": policy, "steps": steps})
    checks = _compile_checks(system)
    _eval_always(checks, world.cfg, -1)
    for _ in range(steps):
        e = world.advance()
        if e is None:
            break
        trace.events.append(e)
        _eval_always(checks, world.cfg, e["step"])
    for cd, fn, res in checks:
        if cd.when == "finally":
            try:
                ok = bool(fn(Ctx(world.cfg)))
            except Exception:
                ok = False
            if not ok:
                res.fail(world.step_no)
    trace.checks = [res for _, _, res in checks]
    trace.final = world.cfg
    return trace


def replay(system, trace_text):
    """Re-apply a trace's events; returns the final configuration.

    Raises `ReplayDivergence` at the first event whose rule instance is
    not enabled or whose post-state hash differs from the recording.
    """
    lines = [ln for ln in trace_text.splitlines() if ln.strip()]
    if not lines:
        raise ReplayDivergence("empty trace file", step=0)
    header = json.loads(lines[0])
    if header.get("model") != _model_hash(system):
        raise ReplayDivergence("trace header does not match this model", step=0)
    cfg = system.cfg
    for ln in lines[1:]:
        e = json.loads(ln)
        step = e["step"]
        if e.get("rule") is None or e.get("error"):
            if cfg.state_hash() != e["post"]:
                raise ReplayDivergence(f"state mismatch at step {step}", step=step)
            continue
        cand = None
        for c in step_candidates(cfg):
            if c.motif == e["motif"] and c.rule.name == e["rule"] \
                    and dict(c.binding) == e["binding"]:
                cand = c
                break
        if cand is None:
            raise ReplayDivergence(
                f"recorded event not enabled at step {step}", step=step)
        cfg, ev = cand.apply_to(cfg)
        if ev.post_hash != e["post"]:
            raise ReplayDivergence(f"state mismatch at step {step}", step=step)
    return cfg
