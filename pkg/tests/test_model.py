from __future__ import annotations

import pytest

from deladas.model import (
    Channel,
    ComponentInstance,
    ComponentType,
    Configuration,
    Direction,
    HostDescriptor,
    HostStatus,
    PortSpec,
    id_sort_key,
    is_identifier,
)


def test_configuration_sorts_instances_naturally():
    cfg = Configuration((ComponentInstance("Router-10", "Router", "h1"), ComponentInstance("Router-2", "Router", "h2")))
    assert [i.id for i in cfg.instances] == ["Router-2", "Router-10"]


def test_duplicate_instance_id_rejected():
    with pytest.raises(ValueError):
        Configuration((ComponentInstance("A-1", "A", "h1"), ComponentInstance("A-1", "A", "h2")))


def test_duplicate_channel_rejected():
    insts = (ComponentInstance("A-1", "A", "h1"), ComponentInstance("A-2", "A", "h1"))
    ch = Channel("A-1", "o", "A-2", "i")
    with pytest.raises(ValueError):
        Configuration(insts, (ch, ch))


def test_dangling_channel_rejected():
    with pytest.raises(ValueError):
        Configuration((ComponentInstance("A-1", "A", "h1"),), (Channel("A-1", "o", "R9", "i"),))


def test_channel_text():
    ch = Channel("Router-1", "rou", "Router-2", "rin")
    assert str(ch) == "Router-1.rou -> Router-2.rin"
    assert ch.touches("Router-2") and not ch.touches("Router-3")


def test_restricted_to_drops_incident_channels():
    insts = (ComponentInstance("A-1", "A", "h1"), ComponentInstance("A-2", "A", "h2"))
    cfg = Configuration(insts, (Channel("A-1", "o", "A-2", "i"),))
    sub = cfg.restricted_to({"h1"})
    assert [i.id for i in sub.instances] == ["A-1"] and sub.channels == ()


def test_component_type_lookup():
    t = ComponentType("Client", (PortSpec("in", Direction.IN), PortSpec("out", Direction.OUT)))
    assert t.port("out").direction is Direction.OUT and t.port("x") is None


def test_host_descriptor_status():
    assert HostDescriptor("h1").available
    assert not HostDescriptor("h1", HostStatus.FAILED).available


def test_direction_opposite():
    assert Direction.IN.opposite() is Direction.OUT and Direction.OUT.opposite() is Direction.IN


@pytest.mark.parametrize("text, ok", [("Router", True), ("r1", True), ("a_b", True), ("1a", False), ("", False), ("a-b", False)])
def test_is_identifier(text, ok):
    assert is_identifier(text) is ok


def test_id_sort_key_orders_numbers_numerically():
    ids = ["h10", "h2", "h1", "Client-11", "Client-3"]
    assert sorted(ids, key=id_sort_key) == ["Client-3", "Client-11", "h1", "h2", "h10"]


def test_goal_helpers(randc):
    assert randc.component_type("Router").name == "Router"
    assert randc.component_type("Nope") is None
    failed = randc.with_hosts(tuple(HostDescriptor(h.id, HostStatus.FAILED if h.id == "h6" else HostStatus.AVAILABLE) for h in randc.hosts))
    assert failed.revision == randc.revision + 1
    assert "h6" not in failed.available_hosts and failed.host("h6") is not None
