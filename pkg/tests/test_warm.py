import pytest

from dnrp.fuzz import case
from dnrp.sim import Simulator
from dnrp.warm import converged_routers


def strip(snaps):
    return {r: s.routes for r, s in snaps.items()}


@pytest.mark.parametrize("protocol", ["dnrp", "ils"])
@pytest.mark.parametrize("seed", range(25))
def test_preload_equals_simulated_bootstrap(seed, protocol):
    topo = case(seed).topology
    simulated = Simulator(topo, protocol).run().final
    loaded = {r: x.snapshot() for r, x in converged_routers(topo, protocol).items()}
    assert strip(simulated) == strip(loaded)


def test_preloaded_network_is_quiet():
    topo = case(2).topology
    trace = Simulator(topo, "dnrp", routers=converged_routers(topo, "dnrp")).run([])
    assert trace.metrics.messages_total == 0 and trace.violations == []
