from __future__ import annotations

import sys
from pathlib import Path

import pytest

from deladas.model import HostDescriptor
from deladas.parser import load_goal

ROOT = Path(__file__).resolve().parent.parent
GOALS = ROOT / "goals"

# tests import the oracle as a plain module
sys.path.insert(0, str(Path(__file__).resolve().parent))


def randc_on(n: int):
    """The randc goal restricted to hosts h1..hn."""
    goal = load_goal(GOALS / "randc.dls")
    return goal.with_hosts(tuple(HostDescriptor(f"h{k}") for k in range(1, n + 1)), bump=False)


@pytest.fixture(scope="session")
def randc():
    return load_goal(GOALS / "randc.dls")


def make_config(placements: dict[str, str], channels=(), revision: int = 0):
    """``{"Router-1": "h1", ...}`` and ``["Router-1.rou -> Router-2.rin", ...]`` to a Configuration."""
    from deladas.model import Channel, ComponentInstance, Configuration

    insts = tuple(ComponentInstance(iid, iid.rsplit("-", 1)[0], host) for iid, host in placements.items())
    chans = []
    for text in channels:
        src, dst = (part.strip() for part in text.split("->"))
        fi, fp = src.split(".")
        ti, tp = dst.split(".")
        chans.append(Channel(fi, fp, ti, tp))
    return Configuration(insts, tuple(chans), revision)


def attach(client: str, router: str) -> list[str]:
    return [f"{client}.out -> {router}.cin", f"{router}.cout -> {client}.in"]


def six_host_config():
    """2 mutually wired routers on h1/h2, clients on h3..h6, two per router."""
    chans = ["Router-1.rou -> Router-2.rin", "Router-2.rou -> Router-1.rin"]
    chans += attach("Client-1", "Router-1") + attach("Client-2", "Router-1")
    chans += attach("Client-3", "Router-2") + attach("Client-4", "Router-2")
    return make_config(
        {"Router-1": "h1", "Router-2": "h2", "Client-1": "h3", "Client-2": "h4", "Client-3": "h5", "Client-4": "h6"}, chans
    )


_RANDOM_PORTS = {"Router": (("rou", "cout"), ("rin", "cin")), "Client": (("out",), ("in",))}


def random_config(rng, max_per_type: int = 4, hosts=("h1", "h2", "h3", "h4"), revision: int = 0):
    """A structurally valid randc-typed configuration with arbitrary ids and wiring."""
    from deladas.model import Channel, ComponentInstance, Configuration

    insts = []
    for tname in ("Router", "Client"):
        nums = rng.sample(range(1, 3 * max_per_type + 1), rng.randint(0, max_per_type))
        insts += [ComponentInstance(f"{tname}-{n}", tname, rng.choice(hosts)) for n in nums]
    chans = set()
    if len(insts) > 1:
        for _ in range(rng.randint(0, 3 * len(insts))):
            a, b = rng.sample(insts, 2)
            chans.add(Channel(a.id, rng.choice(_RANDOM_PORTS[a.type_name][0]), b.id, rng.choice(_RANDOM_PORTS[b.type_name][1])))
    rng.shuffle(insts)
    return Configuration(tuple(insts), tuple(chans), revision)


# acceptance results, echoed once more at the end of the session
ACCEPTANCE: dict[int, str] = {}


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {title}: {detail}"
    ACCEPTANCE[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
