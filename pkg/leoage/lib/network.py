"""
Network Model Module

Computes the steady-state quantities of a tagged source's path: aggregate
cross-traffic load, end-to-end success probabilities, per-node arrival
rates, utilizations and response rates. Also builds the line and dumbbell
scenarios used throughout the evaluation.

Nodes are 1-indexed in the public API (node k is link k); vectors are
stored 0-indexed.
"""

from typing import List

from leoage.lib.models import DerivedRates, IdealUplink, NetworkConfig, Uplink

# Default link parameters
MU_ISL = 1.0
MU_DL = 0.8
DEFAULT_EPS = 0.01
DUMBBELL_LINKS = 4
DUMBBELL_BOTTLENECK = 2


def cross_traffic_load(config: NetworkConfig, k: int) -> float:
    """Aggregate cross-traffic rate entering node k.

    theta_bar_k = sum_{j<=k} theta_j * prod_{i=j}^{k-1} (1 - psi_i)(1 - eps_i)

    Args:
        config: Tagged-source path description
        k: Node index, 1 <= k <= K

    Returns:
        float: Cross-traffic load at node k

    Raises:
        IndexError: If k is outside 1..K
    """
    if not 1 <= k <= config.k_links:
        raise IndexError(f"node index {k} outside 1..{config.k_links}")

    load = 0.0
    for j in range(1, k + 1):
        surviving = config.theta[j - 1]
        for i in range(j, k):
            surviving *= (1.0 - config.psi[i - 1]) * (1.0 - config.eps[i - 1])
        load += surviving
    return load


def success_probabilities(config: NetworkConfig) -> List[float]:
    """Return p_s(0..K), the probability of surviving links 1..j."""
    p_s = [1.0]
    for eps in config.eps:
        p_s.append(p_s[-1] * (1.0 - eps))
    return p_s


def derived_rates(config: NetworkConfig) -> DerivedRates:
    """Compute per-node arrival rates, utilizations and response rates.

    The tagged packet reaching node j has survived links 1..j-1, so the
    arrival rate is lambda * p_s(j-1) + theta_bar_j. Lambda is the entry
    rate after uplink losses.
    """
    lam = config.entry_rate
    p_s = success_probabilities(config)
    theta_bar = [cross_traffic_load(config, k) for k in range(1, config.k_links + 1)]

    arrival = [lam * p_s[j] + theta_bar[j] for j in range(config.k_links)]
    rho = [a / mu for a, mu in zip(arrival, config.mu)]
    alpha = [mu - a for a, mu in zip(arrival, config.mu)]

    return DerivedRates(
        source_rate=lam,
        theta_bar=theta_bar,
        p_s=p_s,
        arrival_rate=arrival,
        rho=rho,
        alpha=alpha,
    )


def stability_check(derived: DerivedRates) -> List[int]:
    """Return the 1-based indices of nodes with rho >= 1 (empty when stable)."""
    return [j + 1 for j, rho in enumerate(derived.rho) if rho >= 1.0]


def line_scenario(
    k_links: int,
    rho: float,
    mu_isl: float = MU_ISL,
    mu_dl: float = MU_DL,
    eps: float = DEFAULT_EPS,
    uplink: Uplink = IdealUplink(),
) -> NetworkConfig:
    """Tagged view of the first source of a K-node line network.

    Every node except the first has a ground source with the same rate
    lambda = rho * mu_dl / K, all heading to the same destination, so rho
    is the error-free downlink load. Cross sources share the tagged uplink
    model, so their entry rate is thinned the same way.
    """
    if k_links < 1:
        raise ValueError(f"k_links must be positive, got {k_links}")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")

    lam = rho * mu_dl / k_links
    cross = lam * (1.0 - uplink.collision_probability(lam))
    return NetworkConfig(
        k_links=k_links,
        lam=lam,
        theta=[0.0] + [cross] * (k_links - 1),
        psi=[0.0] * k_links,
        mu=[mu_isl] * (k_links - 1) + [mu_dl],
        eps=[eps] * k_links,
        uplink=uplink,
    )


def dumbbell_rate(n_sources: int, rho: float, mu_dl: float = MU_DL) -> float:
    """Per-source rate giving error-free load rho, normalized by the downlink rate."""
    if n_sources < 1:
        raise ValueError(f"n_sources must be positive, got {n_sources}")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    return rho * mu_dl / n_sources


def dumbbell_scenario(
    n_sources: int,
    rho: float,
    mu_isl: float = MU_ISL,
    mu_dl: float = MU_DL,
    eps: float = DEFAULT_EPS,
    uplink: Uplink = IdealUplink(),
) -> NetworkConfig:
    """Tagged view of one source in a four-hop dumbbell sharing the second link.

    The other N-1 sources reach the bottleneck through their own first
    link and leave the path right after it (psi_2 = 1).
    """
    lam = dumbbell_rate(n_sources, rho, mu_dl)
    p_first = 1.0 - uplink.collision_probability(lam)

    theta = [0.0] * DUMBBELL_LINKS
    psi = [0.0] * DUMBBELL_LINKS
    theta[DUMBBELL_BOTTLENECK - 1] = (n_sources - 1) * lam * p_first * (1.0 - eps)
    psi[DUMBBELL_BOTTLENECK - 1] = 1.0

    return NetworkConfig(
        k_links=DUMBBELL_LINKS,
        lam=lam,
        theta=theta,
        psi=psi,
        mu=[mu_isl] * (DUMBBELL_LINKS - 1) + [mu_dl],
        eps=[eps] * DUMBBELL_LINKS,
        uplink=uplink,
    )
