"""
Topology Module

Builds explicit multi-flow networks for the simulator and projects them
back to the tagged-source view used by the closed forms.

Node indices are 0-based here: node n owns outgoing link n with service
rate mu[n] and erasure probability eps[n].
"""

from typing import List, Optional

from leoage.lib.models import Flow, IdealUplink, NetworkConfig, SimNetwork, Uplink
from leoage.lib.network import (
    DEFAULT_EPS,
    MU_DL,
    MU_ISL,
    dumbbell_rate,
)

TAGGED_SOURCE_ID = 1


def line_network(
    k_links: int,
    rho: float,
    mu_isl: float = MU_ISL,
    mu_dl: float = MU_DL,
    eps: float = DEFAULT_EPS,
    uplink: Uplink = IdealUplink(),
    buffer_capacity: Optional[int] = None,
) -> SimNetwork:
    """K relays in a chain, one ground source per relay, all delivered by the last downlink.

    Source j (1-based) enters at node j-1, so source 1 crosses every link.
    """
    if k_links < 1:
        raise ValueError(f"k_links must be positive, got {k_links}")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")

    lam = rho * mu_dl / k_links
    flows = [
        Flow(source_id=j, rate=lam, path=list(range(j - 1, k_links)), uplink=uplink)
        for j in range(1, k_links + 1)
    ]
    return SimNetwork(
        mu=[mu_isl] * (k_links - 1) + [mu_dl],
        eps=[eps] * k_links,
        flows=flows,
        buffer_capacity=buffer_capacity,
    )


def dumbbell_network(
    n_sources: int,
    rho: float,
    mu_isl: float = MU_ISL,
    mu_dl: float = MU_DL,
    eps: float = DEFAULT_EPS,
    uplink: Uplink = IdealUplink(),
    buffer_capacity: Optional[int] = None,
) -> SimNetwork:
    """N four-hop flows whose only shared relay is the bottleneck (node 0).

    Source s uses nodes a_s -> 0 -> c_s -> d_s; d_s owns the downlink.
    """
    lam = dumbbell_rate(n_sources, rho, mu_dl)

    mu = [mu_isl]
    flows = []
    for s in range(1, n_sources + 1):
        first = len(mu)
        mu.extend([mu_isl, mu_isl, mu_dl])
        path = [first, 0, first + 1, first + 2]
        flows.append(Flow(source_id=s, rate=lam, path=path, uplink=uplink))

    return SimNetwork(mu=mu, eps=[eps] * len(mu), flows=flows, buffer_capacity=buffer_capacity)


def network_from_config(config: NetworkConfig) -> SimNetwork:
    """Realize a tagged-source path as a simulator network.

    The tagged source gets id 1 and crosses every node. Each theta_k > 0
    becomes an untracked Poisson flow entering at node k and leaving after
    each hop with probability psi.
    """
    k = config.k_links
    flows = [
        Flow(
            source_id=TAGGED_SOURCE_ID,
            rate=config.lam,
            path=list(range(k)),
            uplink=config.uplink,
        )
    ]
    for node, theta in enumerate(config.theta):
        if theta <= 0:
            continue
        flows.append(
            Flow(
                source_id=len(flows) + 1,
                rate=theta,
                path=list(range(node, k)),
                offload=list(config.psi[node:]),
                tracked=False,
            )
        )
    return SimNetwork(
        mu=list(config.mu),
        eps=list(config.eps),
        flows=flows,
        buffer_capacity=config.buffer_capacity,
    )


def tagged_config(network: SimNetwork, source_id: int) -> NetworkConfig:
    """Tagged-source view of one flow.

    Cross traffic joining the tagged path at a node becomes theta there; the
    share of cross traffic not continuing to the next tagged node becomes
    psi, so the cross-load recursion reproduces every node's true load.
    """
    flow = network.flow(source_id)
    path = flow.path
    k = len(path)
    position = {node: idx for idx, node in enumerate(path)}

    theta = [0.0] * k
    total = [0.0] * k
    cont = [0.0] * k

    for other in network.flows:
        if other.source_id == source_id:
            continue
        rate = other.rate * (1.0 - other.uplink.collision_probability(other.rate))
        for hop, node in enumerate(other.path):
            idx = position.get(node)
            if idx is not None:
                joined_before = hop > 0 and idx > 0 and other.path[hop - 1] == path[idx - 1]
                if not joined_before:
                    theta[idx] += rate
                total[idx] += rate
                stays = (
                    hop + 1 < len(other.path)
                    and idx + 1 < k
                    and other.path[hop + 1] == path[idx + 1]
                )
                if stays:
                    cont[idx] += rate * (1.0 - other.offload_at(hop))
            rate *= (1.0 - other.offload_at(hop)) * (1.0 - network.eps[node])

    psi = [
        1.0 - cont[idx] / total[idx] if total[idx] > 0 and idx < k - 1 else 0.0
        for idx in range(k)
    ]
    return NetworkConfig(
        k_links=k,
        lam=flow.rate,
        theta=theta,
        psi=[min(max(p, 0.0), 1.0) for p in psi],
        mu=[network.mu[n] for n in path],
        eps=[network.eps[n] for n in path],
        uplink=flow.uplink,
        buffer_capacity=network.buffer_capacity,
    )


def node_loads(network: SimNetwork) -> List[float]:
    """Mean-rate utilization of every node."""
    arrivals = [0.0] * network.n_nodes
    for flow in network.flows:
        rate = flow.rate * (1.0 - flow.uplink.collision_probability(flow.rate))
        for hop, node in enumerate(flow.path):
            arrivals[node] += rate
            rate *= (1.0 - flow.offload_at(hop)) * (1.0 - network.eps[node])
    return [a / mu for a, mu in zip(arrivals, network.mu)]
