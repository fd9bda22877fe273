from __future__ import annotations

import pytest

from deladas.model import Configuration, HostDescriptor, HostStatus, Reachable
from deladas.parser import parse_goal
from deladas.solver import (
    SolveOptions,
    SolveStatus,
    check_configuration,
    evaluate,
    solve,
    solve_incremental,
    strongly_connected_reachability,
    surviving,
    wirable_pairs,
)

from conftest import GOALS, attach, make_config, randc_on, six_host_config

MUTUAL = ["Router-1.rou -> Router-2.rin", "Router-2.rou -> Router-1.rin"]


def clause(goal, k):
    return goal.constraints[k - 1]


def fail(goal, *hosts):
    return goal.with_hosts(tuple(HostDescriptor(h.id, HostStatus.FAILED if h.id in hosts else h.status) for h in goal.hosts))


# -- evaluate -----------------------------------------------------------------


def test_reachability_clause_on_mutual_routers(randc):
    cfg = make_config({"Router-1": "h1", "Router-2": "h2"}, MUTUAL)
    assert evaluate(clause(randc, 5), cfg, randc)


def test_lonely_router_has_no_peer(randc):
    cfg = make_config({"Router-1": "h1"})
    assert not evaluate(clause(randc, 4), cfg, randc)


def test_three_clients_oversubscribe_a_router(randc):
    chans = attach("Client-1", "Router-1") + attach("Client-2", "Router-1") + attach("Client-3", "Router-1")
    cfg = make_config({"Router-1": "h1", "Client-1": "h2", "Client-2": "h3", "Client-3": "h4"}, chans)
    assert not evaluate(clause(randc, 3), cfg, randc)


def test_one_directional_attachment_still_counts(randc):
    chans = ["Client-1.out -> Router-1.cin", "Client-2.out -> Router-1.cin", "Router-1.cout -> Client-3.in"]
    cfg = make_config({"Router-1": "h1", "Client-1": "h2", "Client-2": "h3", "Client-3": "h4"}, chans)
    assert not evaluate(clause(randc, 3), cfg, randc)


def test_evaluate_with_binding(randc):
    cfg = make_config({"Router-1": "h1", "Router-2": "h2"}, ["Router-1.rou -> Router-2.rin"])
    assert evaluate(Reachable("a", "b"), cfg, randc, {"a": "Router-1", "b": "Router-2"})
    assert not evaluate(Reachable("a", "b"), cfg, randc, {"a": "Router-2", "b": "Router-1"})


def test_reachable_is_reflexive(randc):
    cfg = make_config({"Router-1": "h1", "Router-2": "h2"})
    assert evaluate(Reachable("a", "a"), cfg, randc, {"a": "Router-2"})


def test_connectsto_follows_port_direction_not_operand_order(randc):
    # clause 4 names r1.rin before r2.rou: the channel runs r2 -> r1
    cfg = make_config({"Router-1": "h1", "Router-2": "h2"}, MUTUAL)
    assert evaluate(clause(randc, 4), cfg, randc)
    one_way = make_config({"Router-1": "h1", "Router-2": "h2"}, MUTUAL[:1])
    assert not evaluate(clause(randc, 4), one_way, randc)


def test_host_quantifier_skips_failed_hosts(randc):
    cfg = six_host_config().restricted_to({"h1", "h2", "h3", "h4", "h5"})
    assert not evaluate(clause(randc, 1), cfg, randc)
    assert evaluate(clause(randc, 1), cfg, fail(randc, "h6"))


# -- check_configuration --------------------------------------------------------


def test_six_host_reference_config_is_valid(randc):
    assert check_configuration(six_host_config(), randc) == []


def test_removed_client_in_channel_violates_clause_two(randc):
    cfg = six_host_config()
    missing = Configuration(cfg.instances, tuple(c for c in cfg.channels if str(c) != "Router-2.cout -> Client-4.in"))
    assert [v.index for v in check_configuration(missing, randc)] == [2]


def test_two_routers_on_one_host_violate_clause_one(randc):
    cfg = make_config({"Router-1": "h1", "Router-2": "h1"}, MUTUAL)
    violations = check_configuration(cfg, randc_on(1))
    assert [v.index for v in violations] == [1]
    assert violations[0].line == 12


# -- strong connectivity -----------------------------------------------------------


def _routers(n, chans):
    return make_config({f"Router-{k}": f"h{k}" for k in range(1, n + 1)}, chans)


def test_ring_is_strongly_connected():
    cfg = _routers(3, ["Router-1.rou -> Router-2.rin", "Router-2.rou -> Router-3.rin", "Router-3.rou -> Router-1.rin"])
    reach = strongly_connected_reachability(cfg, "Router")
    assert len(reach) == 9 and all(reach.values())


def test_chain_is_not():
    cfg = _routers(3, ["Router-1.rou -> Router-2.rin", "Router-2.rou -> Router-3.rin"])
    reach = strongly_connected_reachability(cfg, "Router")
    assert reach[("Router-1", "Router-3")] and not reach[("Router-3", "Router-1")]


def test_disjoint_pairs_are_separate_components():
    chans = MUTUAL + ["Router-3.rou -> Router-4.rin", "Router-4.rou -> Router-3.rin"]
    reach = strongly_connected_reachability(_routers(4, chans), "Router")
    assert reach[("Router-1", "Router-2")] and not reach[("Router-1", "Router-3")]


def test_reachability_ignores_other_types():
    # a path through a client does not connect routers
    chans = attach("Client-1", "Router-1") + attach("Client-1", "Router-2")
    cfg = make_config({"Router-1": "h1", "Router-2": "h2", "Client-1": "h3"}, chans)
    assert not strongly_connected_reachability(cfg, "Router")[("Router-1", "Router-2")]


# -- solve ---------------------------------------------------------------------------


def test_wirable_pairs(randc):
    assert wirable_pairs(randc) == [
        ("Client", "out", "Router", "cin"),
        ("Router", "cout", "Client", "in"),
        ("Router", "rou", "Router", "rin"),
    ]


def test_two_hosts_give_two_mutual_routers():
    goal = randc_on(2)
    result = solve(goal, SolveOptions(max_solutions=50))
    assert result.status is SolveStatus.SAT
    for cfg in result.solutions:
        assert check_configuration(cfg, goal) == []
        routers = cfg.instances_of("Router")
        assert len(routers) == 2
        assert {str(c) for c in cfg.channels if c.from_port == "rou"} == set(MUTUAL)
    first = result.solutions[0]
    assert [(i.id, i.host) for i in first.instances] == [("Router-1", "h1"), ("Router-2", "h2")]


def test_one_host_is_unsat():
    result = solve(randc_on(1))
    assert result.status is SolveStatus.UNSAT and result.solutions == ()


def test_six_hosts_sat_with_six_instances(randc):
    result = solve(randc)
    (cfg,) = result.solutions
    assert len(cfg.instances) == 6 and len(cfg.channels) == 10
    assert check_configuration(cfg, randc) == []
    assert len(cfg.instances_of("Router")) == 2


def test_solve_is_deterministic(randc):
    for seed in (0, 42):
        a = solve(randc, SolveOptions(max_solutions=3, seed=seed))
        b = solve(randc, SolveOptions(max_solutions=3, seed=seed))
        assert a == b


def test_seed_changes_host_order(randc):
    a = solve(randc, SolveOptions(seed=0)).solutions[0]
    b = solve(randc, SolveOptions(seed=42)).solutions[0]
    assert check_configuration(b, randc) == []
    assert {i.host for i in a.instances_of("Router")} == {"h1", "h2"}
    assert {i.host for i in b.instances_of("Router")} == {"h2", "h4"}


def test_budget_exhaustion(randc):
    result = solve(randc, SolveOptions(node_budget=5))
    assert result.status is SolveStatus.BUDGET_EXHAUSTED and not result.sat


def test_solution_ids_are_sequential_per_type(randc):
    cfg = solve(randc).solutions[0]
    assert [i.id for i in cfg.instances_of("Client")] == [f"Client-{k}" for k in range(1, 5)]


def test_instance_bound_is_respected():
    goal = randc_on(4)
    for cfg in solve(goal, SolveOptions(max_solutions=20, max_instances_per_type=2)).solutions:
        assert len(cfg.instances_of("Router")) <= 2 and len(cfg.instances_of("Client")) <= 2


def test_vacuous_goal_accepts_empty_configuration():
    goal = parse_goal("components { A } hosts { h1 } constraintset e = constraintset { }")
    result = solve(goal)
    assert result.sat and result.solutions[0] == Configuration()


def test_max_solutions_are_distinct():
    result = solve(randc_on(3), SolveOptions(max_solutions=3))
    assert len(result.solutions) == 3 and len(set(result.solutions)) == 3


def test_invalid_options():
    with pytest.raises(ValueError):
        SolveOptions(max_solutions=0)
    with pytest.raises(ValueError):
        SolveOptions(node_budget=0)


# -- solve_incremental ------------------------------------------------------------


def test_client_host_failure_keeps_survivors(randc):
    goal = fail(randc, "h6")
    result = solve_incremental(goal, six_host_config())
    (cfg,) = result.solutions
    assert cfg == surviving(six_host_config(), goal)
    assert {i.id for i in cfg.instances} == {"Router-1", "Router-2", "Client-1", "Client-2", "Client-3"}
    assert check_configuration(cfg, goal) == []


def test_empty_history_matches_plain_solve(randc):
    assert solve_incremental(randc, Configuration()).solutions == solve(randc).solutions


def test_router_failure_without_spare_is_unsat():
    goal = randc_on(2)
    previous = make_config({"Router-1": "h1", "Router-2": "h2"}, MUTUAL)
    assert solve_incremental(fail(goal, "h2"), previous).status is SolveStatus.UNSAT


def test_router_failure_with_spares_rebuilds_minimally(randc):
    goal = fail(randc, "h2")
    previous = six_host_config()
    (cfg,) = solve_incremental(goal, previous).solutions
    assert check_configuration(cfg, goal) == []
    kept = {i for i in previous.instances if i.host != "h2"} & set(cfg.instances)
    # the surviving router and at least the clients on its side stay put
    assert {"Router-1", "Client-1", "Client-2"} <= {i.id for i in kept}
    new_ids = {i.id for i in cfg.instances} - {i.id for i in previous.instances}
    assert all(int(i.rsplit("-", 1)[1]) > 2 for i in new_ids if i.startswith("Router"))


def test_incremental_result_is_deterministic(randc):
    goal = fail(randc, "h1")
    assert solve_incremental(goal, six_host_config()) == solve_incremental(goal, six_host_config())


def test_incremental_soundness_over_every_single_failure(randc):
    base = six_host_config()
    for h in randc.hosts:
        goal = fail(randc, h.id)
        result = solve_incremental(goal, base)
        assert result.sat
        assert check_configuration(result.solutions[0], goal) == []


def test_goal_files_on_disk_agree():
    from deladas.parser import load_goal

    for n in (1, 2, 3, 4):
        assert load_goal(GOALS / f"randc-{n}host.dls") == randc_on(n)
