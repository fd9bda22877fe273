from __future__ import annotations

import json

from deladas.adme import Engine, Phase, assess, dumps_status, evolve_goal, run
from deladas.ddd import diff
from deladas.fabric import Fabric, ScenarioAction, ScenarioEvent
from deladas.model import Configuration, HostStatus, ProbeEvent, ProbeKind
from deladas.parser import parse_goal
from deladas.solver import check_configuration

from conftest import GOALS, make_config, randc_on, six_host_config

FAIL, ADD, KILL = ScenarioAction.FAIL_HOST, ScenarioAction.ADD_HOST, ScenarioAction.FAIL_COMPONENT


def phase_at(result, tick):
    return dict(result.phases)[tick]


def safe_run(goal, scenario, ticks):
    """``run`` with the safety invariant asserted after every tick."""
    checked = []

    def probe(tick, engine):
        if engine.phase is Phase.STEADY:
            assert check_configuration(engine.fabric.observe(), engine.goal) == []
            checked.append(tick)

    return run(goal, scenario, ticks, on_tick=probe), checked


# -- evolve_goal ------------------------------------------------------------------


def test_host_failure_marks_host_failed(randc):
    evolved = evolve_goal(randc, [ProbeEvent(ProbeKind.HOST_FAILED, "h6", 3)])
    assert evolved.host("h6").status is HostStatus.FAILED
    assert evolved.revision == randc.revision + 1
    assert evolved.constraints == randc.constraints


def test_no_events_no_change(randc):
    assert evolve_goal(randc, []) is randc


def test_host_added(randc):
    evolved = evolve_goal(randc, [ProbeEvent(ProbeKind.HOST_ADDED, "h7", 1)])
    assert len(evolved.hosts) == 7 and evolved.host("h7").available


def test_component_failure_leaves_resources(randc):
    assert evolve_goal(randc, [ProbeEvent(ProbeKind.COMPONENT_FAILED, "Client-1", 1)]) is randc


def test_failed_host_can_come_back(randc):
    down = evolve_goal(randc, [ProbeEvent(ProbeKind.HOST_FAILED, "h2", 1)])
    back = evolve_goal(down, [ProbeEvent(ProbeKind.HOST_ADDED, "h2", 2)])
    assert back.host("h2").available and back.revision == randc.revision + 2


# -- assess -----------------------------------------------------------------------


def test_steady_deployment_is_satisfied(randc):
    assert assess(randc, six_host_config()) == []


def test_client_host_loss_before_and_after_evolution(randc):
    observed = six_host_config().restricted_to({"h1", "h2", "h3", "h4", "h5"})
    assert [v.index for v in assess(randc, observed)] == [1]
    evolved = evolve_goal(randc, [ProbeEvent(ProbeKind.HOST_FAILED, "h6", 3)])
    assert assess(evolved, observed) == []


def test_lone_router_violations():
    observed = make_config({"Router-1": "h1"})
    # clause 5 holds: a single router reaches itself
    assert [v.index for v in assess(randc_on(2), observed)] == [1, 4]


# -- step -------------------------------------------------------------------------


def _steady_engine(goal):
    eng = Engine(goal)
    eng.start(0)
    assert eng.phase is Phase.STEADY
    return eng


def test_quiescent_step_makes_no_solver_call(randc):
    eng = _steady_engine(randc)
    calls, history = eng.status.solver_calls, len(eng.status.history)
    eng.step(1)
    assert eng.phase is Phase.STEADY
    assert eng.status.solver_calls == calls and len(eng.status.history) == history


def test_router_host_failure_recovers_on_spares(randc):
    eng = _steady_engine(randc)
    router_host = eng.fabric.observe().instances_of("Router")[0].host
    eng.fabric.inject(ScenarioEvent(1, FAIL, router_host))
    eng.step(1)
    assert eng.phase is Phase.STEADY
    observed = eng.fabric.observe()
    assert check_configuration(observed, eng.goal) == []
    assert all(i.host != router_host for i in observed.instances)


def test_stall_then_unstall():
    eng = _steady_engine(randc_on(2))
    eng.fabric.inject(ScenarioEvent(1, FAIL, "h2"))
    eng.step(1)
    assert eng.phase is Phase.STALLED_UNSAT
    calls = eng.status.solver_calls
    eng.step(2)
    # nothing changed, so no pointless re-solve
    assert eng.phase is Phase.STALLED_UNSAT and eng.status.solver_calls == calls
    eng.fabric.inject(ScenarioEvent(3, ADD, "h3"))
    eng.step(3)
    assert eng.phase is Phase.STEADY
    observed = eng.fabric.observe()
    assert sorted(i.host for i in observed.instances_of("Router")) == ["h1", "h3"]
    assert check_configuration(observed, eng.goal) == []


def test_enactment_failure_is_retried():
    goal = randc_on(2)
    # the fabric lacks h2 although the goal lists it
    eng = Engine(goal, Fabric(["h1"]))
    eng.start(0)
    assert eng.phase is Phase.RESOLVING
    assert eng.fabric.observe() == Configuration() and eng.fabric.log == []
    calls = eng.status.solver_calls
    eng.step(1)
    assert eng.status.solver_calls == calls + 1
    assert any("enactment failed" in t.cause for t in eng.status.history)


def test_initial_unsat_parks_with_empty_fabric():
    result = run(randc_on(1), (), 3)
    assert [p for _, p in result.phases] == [Phase.STALLED_UNSAT] * 4
    assert result.final_configuration() == Configuration()
    assert result.status.solver_calls == 1


def test_stop():
    eng = _steady_engine(randc_on(2))
    eng.stop(1)
    eng.step(2)
    assert eng.phase is Phase.STOPPED and eng.status.history[-1].cause == "stopped"


# -- run --------------------------------------------------------------------------


def test_quiescent_run(randc):
    result, checked = safe_run(randc, (), 10)
    assert all(p is Phase.STEADY for _, p in result.phases)
    assert result.status.solver_calls == 1 and result.status.recoveries == 0
    assert len(checked) == 11


def test_client_host_failure_run(randc):
    result, _ = safe_run(randc, [ScenarioEvent(3, FAIL, "h6")], 10)
    assert phase_at(result, 4) is Phase.STEADY
    final = result.final_configuration()
    assert check_configuration(final, result.goal) == []
    assert len(result.goal.available_hosts) == 5 and {i.host for i in final.instances} == {"h1", "h2", "h3", "h4", "h5"}
    assert result.status.recoveries == 1


def test_client_host_failure_gives_empty_plan(randc):
    eng = _steady_engine(randc)
    log_size = len(eng.fabric.log)
    eng.fabric.inject(ScenarioEvent(3, FAIL, "h6"))
    eng.step(3)
    (tick, plan), = [p for p in eng.plans if p[0] == 3]
    assert len(plan) == 0 and len(eng.fabric.log) == log_size


def test_two_host_stall_and_recover():
    result, _ = safe_run(randc_on(2), [ScenarioEvent(2, FAIL, "h2"), ScenarioEvent(5, ADD, "h3")], 8)
    assert [phase_at(result, t) for t in range(8)] == [Phase.STEADY] * 2 + [Phase.STALLED_UNSAT] * 3 + [Phase.STEADY] * 3
    assert check_configuration(result.final_configuration(), result.goal) == []


def test_component_failure_run(randc):
    result, _ = safe_run(randc, [ScenarioEvent(2, KILL, "Client-2"), ScenarioEvent(4, KILL, "Router-1")], 8)
    assert phase_at(result, 2) is Phase.STEADY and phase_at(result, 4) is Phase.STEADY
    assert check_configuration(result.final_configuration(), result.goal) == []


def test_component_failure_reuses_the_host(randc):
    eng = _steady_engine(randc)
    victim = eng.fabric.observe().instances_of("Client")[1]
    eng.fabric.inject(ScenarioEvent(3, KILL, victim.id))
    eng.step(3)
    (_, plan), = [p for p in eng.plans if p[0] == 3]
    kinds = sorted(type(a).__name__ for a in plan)
    assert kinds == ["Install", "Instantiate", "Wire", "Wire"]
    assert all(getattr(a, "host", victim.host) == victim.host for a in plan)


def test_rejected_scenario_event_is_logged(randc):
    result = run(randc, [ScenarioEvent(2, FAIL, "h99")], 3)
    assert any("rejected FAIL_HOST h99" in line for line in result.log)
    assert all(p is Phase.STEADY for _, p in result.phases)


def test_goal_reload_bumps_revision():
    bigger = parse_goal((GOALS / "randc-3host.dls").read_text())
    result = run(randc_on(2), (), 4, reloads={2: bigger})
    assert result.goal.revision >= 1 and phase_at(result, 2) is Phase.STEADY
    assert check_configuration(result.final_configuration(), result.goal) == []
    assert any("goal reloaded" in line for line in result.log)


def test_constraints_never_change(randc):
    result = run(randc, [ScenarioEvent(1, FAIL, "h1"), ScenarioEvent(3, ADD, "h9"), ScenarioEvent(5, FAIL, "h4")], 8)
    assert result.goal.constraints == randc.constraints


def test_history_is_ordered_by_tick(randc):
    result = run(randc, [ScenarioEvent(2, FAIL, "h2"), ScenarioEvent(6, FAIL, "h5")], 10)
    ticks = [t.tick for t in result.status.history]
    assert ticks == sorted(ticks)


def test_status_dump(randc):
    result = run(randc, [ScenarioEvent(3, FAIL, "h6")], 5)
    data = json.loads(dumps_status(result.status))
    assert data["phase"] == "STEADY" and data["recoveries"] == 1 and data["history"][0]["to"] == "RESOLVING"


def test_run_log_lines(randc):
    result = run(randc, [ScenarioEvent(3, FAIL, "h6")], 5)
    assert result.log[0] == "tick=0 START->RESOLVING cold start"
    assert "tick=3 inject FAIL_HOST h6" in result.log
    assert any(line.startswith("tick=3 RESOLVING->STEADY") and "empty plan" in line for line in result.log)


def test_engine_keeps_previous_plan_record(randc):
    eng = _steady_engine(randc)
    (tick, plan), = eng.plans
    assert tick == 0 and plan == diff(Configuration(), eng.fabric.observe())
