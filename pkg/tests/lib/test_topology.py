"""Tests for explicit simulator networks and tagged-source views."""

import pytest
from pydantic import ValidationError

from leoage.lib.models import Flow, MprUplink, NetworkConfig, SimNetwork
from leoage.lib.network import derived_rates, dumbbell_scenario, line_scenario
from leoage.lib.topology import (
    TAGGED_SOURCE_ID,
    dumbbell_network,
    line_network,
    network_from_config,
    node_loads,
    tagged_config,
)


class TestLineNetwork:
    """Tests for line_network function."""

    def test_paths(self):
        network = line_network(3, 0.6)
        assert [f.path for f in network.flows] == [[0, 1, 2], [1, 2], [2]]
        assert network.mu == [1.0, 1.0, 0.8]
        assert network.tracked_sources == [1, 2, 3]
        assert all(f.rate == pytest.approx(0.16) for f in network.flows)

    def test_downlink_load(self):
        assert node_loads(line_network(10, 0.7, eps=0.0))[-1] == pytest.approx(0.7)

    @pytest.mark.parametrize("eps", [0.0, 0.01])
    def test_tagged_view_matches_line_scenario(self, eps):
        view = tagged_config(line_network(4, 0.5, eps=eps), 1)
        expected = line_scenario(4, 0.5, eps=eps)
        assert view.lam == pytest.approx(expected.lam)
        assert view.theta == pytest.approx(expected.theta)
        assert view.psi == pytest.approx(expected.psi)
        assert view.mu == expected.mu
        assert view.eps == expected.eps

    def test_tagged_view_of_last_source(self):
        """The last source sees everything upstream as cross traffic at its only node."""
        view = tagged_config(line_network(3, 0.6, eps=0.0), 3)
        assert view.k_links == 1
        assert view.theta == pytest.approx([0.32])
        assert derived_rates(view).rho == pytest.approx([0.6])

    def test_invalid(self):
        with pytest.raises(ValueError):
            line_network(0, 0.5)


class TestDumbbellNetwork:
    """Tests for dumbbell_network function."""

    def test_shared_bottleneck(self):
        network = dumbbell_network(3, 0.7)
        assert network.n_nodes == 1 + 3 * 3
        assert all(f.path[1] == 0 for f in network.flows)
        assert len({f.path[0] for f in network.flows}) == 3

    def test_bottleneck_load(self):
        loads = node_loads(dumbbell_network(2, 0.7, eps=0.0))
        assert loads[0] == pytest.approx(0.56)

    @pytest.mark.parametrize("eps", [0.0, 0.01])
    def test_tagged_view_matches_dumbbell_scenario(self, eps):
        view = tagged_config(dumbbell_network(6, 0.7, eps=eps), 1)
        expected = dumbbell_scenario(6, 0.7, eps=eps)
        assert view.theta == pytest.approx(expected.theta)
        assert view.psi == pytest.approx(expected.psi)
        assert view.mu == expected.mu


class TestNetworkFromConfig:
    """Tests for network_from_config function."""

    def test_flows(self):
        network = network_from_config(line_scenario(3, 0.5))
        tagged = network.flow(TAGGED_SOURCE_ID)
        assert tagged.path == [0, 1, 2]
        assert tagged.tracked is True
        cross = [f for f in network.flows if not f.tracked]
        assert [f.path for f in cross] == [[1, 2], [2]]

    def test_round_trip_with_offload(self):
        """Projecting the realized network back reproduces theta and psi."""
        config = NetworkConfig(
            k_links=3,
            lam=0.1,
            theta=[0.1, 0.05, 0.0],
            psi=[0.3, 0.5, 0.0],
            mu=[1.0, 1.0, 0.8],
            eps=[0.01, 0.02, 0.0],
        )
        view = tagged_config(network_from_config(config), TAGGED_SOURCE_ID)
        assert view.theta == pytest.approx(config.theta)
        assert view.psi == pytest.approx(config.psi)
        assert derived_rates(view).arrival_rate == pytest.approx(
            derived_rates(config).arrival_rate
        )

    def test_node_loads_match_derived_rates(self):
        config = line_scenario(4, 0.8, eps=0.01, uplink=MprUplink(p_c=0.1))
        assert node_loads(network_from_config(config)) == pytest.approx(derived_rates(config).rho)


class TestSimNetwork:
    """Tests for SimNetwork validation."""

    def test_unknown_node(self):
        with pytest.raises(ValidationError, match="unknown node"):
            SimNetwork(mu=[1.0], eps=[0.0], flows=[Flow(source_id=1, rate=0.5, path=[0, 1])])

    def test_requires_tracked_flow(self):
        with pytest.raises(ValidationError):
            SimNetwork(
                mu=[1.0], eps=[0.0], flows=[Flow(source_id=1, rate=0.5, path=[0], tracked=False)]
            )

    def test_duplicate_ids(self):
        flows = [Flow(source_id=1, rate=0.1, path=[0]), Flow(source_id=1, rate=0.1, path=[0])]
        with pytest.raises(ValidationError):
            SimNetwork(mu=[1.0], eps=[0.0], flows=flows)

    def test_flow_lookup(self):
        network = line_network(2, 0.5)
        assert network.flow(2).path == [1]
        with pytest.raises(KeyError):
            network.flow(9)

    def test_offload_length(self):
        with pytest.raises(ValidationError):
            Flow(source_id=1, rate=0.1, path=[0, 1], offload=[0.5])
