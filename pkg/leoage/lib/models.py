"""Data types for relay network configurations, derived rates, and bounds.

This module contains the Pydantic models shared by the analysis, the
simulator, and the CLI: the tagged-source view of a path (NetworkConfig),
the steady-state quantities derived from it, uplink access models, and the
explicit multi-flow network the simulator runs on.
"""

import math
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Scheduling policies applied at every relay
Policy = Literal["FCFS", "OPF", "HAF"]

POLICIES: tuple[Policy, ...] = ("FCFS", "OPF", "HAF")


class UnstableNetworkError(ValueError):
    """Raised when a node has utilization >= 1 and no stationary regime exists."""

    def __init__(self, nodes: List[int], message: Optional[str] = None):
        self.nodes = list(nodes)
        super().__init__(message or f"Unstable configuration: rho >= 1 at node(s) {self.nodes}")


class UnsupportedConfigError(ValueError):
    """Raised when a closed form is requested outside the regime it was derived for."""


class IdealUplink(BaseModel):
    """Uplink with no access losses: every generated packet reaches node 1."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    model: Literal["ideal"] = "ideal"

    def collision_probability(self, rate: float) -> float:
        return 0.0


class MprUplink(BaseModel):
    """Multi-packet reception: collisions are harmless, channel errors thin the process."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    model: Literal["mpr"] = "mpr"
    p_c: float = Field(ge=0.0, lt=1.0)

    def collision_probability(self, rate: float) -> float:
        return self.p_c


class AlohaUplink(BaseModel):
    """Pure ALOHA with a single attempt; overlapping transmissions are all lost."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    model: Literal["aloha"] = "aloha"
    packet_duration: float = Field(gt=0.0)

    def collision_probability(self, rate: float) -> float:
        # vulnerability window of two packet durations
        return 1.0 - math.exp(-2.0 * rate * self.packet_duration)


Uplink = Annotated[Union[IdealUplink, MprUplink, AlohaUplink], Field(discriminator="model")]


class NetworkConfig(BaseModel):
    """One source's path through K links, seen from the tagged source.

    Cross traffic enters node k at rate theta[k]; after service at node k a
    fraction psi[k] of it leaves the path. Every transmission on link k is
    erased with probability eps[k].
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    k_links: int = Field(ge=1)
    lam: float = Field(alias="lambda", ge=0.0)
    theta: List[float]
    psi: List[float]
    mu: List[float]
    eps: List[float]
    uplink: Uplink = IdealUplink()
    buffer_capacity: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_vectors(self) -> "NetworkConfig":
        for name in ("theta", "psi", "mu", "eps"):
            values = getattr(self, name)
            if len(values) != self.k_links:
                raise ValueError(
                    f"{name} has length {len(values)}, expected k_links={self.k_links}"
                )
        if any(v < 0 for v in self.theta):
            raise ValueError("cross-traffic rates must be non-negative")
        if any(v <= 0 for v in self.mu):
            raise ValueError("service rates must be positive")
        if any(not 0.0 <= v <= 1.0 for v in self.psi):
            raise ValueError("offload fractions must lie in [0, 1]")
        if any(not 0.0 <= v < 1.0 for v in self.eps):
            raise ValueError("erasure probabilities must lie in [0, 1)")
        return self

    @property
    def entry_rate(self) -> float:
        """Rate of the process entering node 1 after uplink losses."""
        return self.lam * (1.0 - self.uplink.collision_probability(self.lam))

    @property
    def error_free(self) -> bool:
        return all(e == 0.0 for e in self.eps)


class DerivedRates(BaseModel):
    """Steady-state quantities for every node of a NetworkConfig (node j at index j-1)."""

    model_config = ConfigDict(frozen=True)

    source_rate: float
    theta_bar: List[float]
    p_s: List[float]
    arrival_rate: List[float]
    rho: List[float]
    alpha: List[float]

    @property
    def k_links(self) -> int:
        return len(self.alpha)


class AoIBounds(BaseModel):
    """Average-AoI bounds and independence approximation for one policy."""

    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    approx: float
    policy: Policy

    @model_validator(mode="after")
    def _check_order(self) -> "AoIBounds":
        if self.lower > self.upper * (1.0 + 1e-12):
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
        return self


class Flow(BaseModel):
    """A Poisson packet flow following a fixed path of nodes."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    source_id: int
    rate: float = Field(gt=0.0)
    path: List[int] = Field(min_length=1)
    offload: Optional[List[float]] = None
    uplink: Uplink = IdealUplink()
    tracked: bool = True

    @model_validator(mode="after")
    def _check_path(self) -> "Flow":
        if len(set(self.path)) != len(self.path):
            raise ValueError(f"flow {self.source_id} visits a node twice")
        if self.offload is not None:
            if len(self.offload) != len(self.path):
                raise ValueError(f"flow {self.source_id}: offload length must match path")
            if any(not 0.0 <= p <= 1.0 for p in self.offload):
                raise ValueError(f"flow {self.source_id}: offload probabilities must lie in [0, 1]")
        return self

    def offload_at(self, hop: int) -> float:
        return self.offload[hop] if self.offload is not None else 0.0


class SimNetwork(BaseModel):
    """Explicit network for the simulator: one server per node and a set of flows.

    Node n transmits on its outgoing link with rate mu[n] and erasure
    probability eps[n].
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mu: List[float]
    eps: List[float]
    flows: List[Flow] = Field(min_length=1)
    buffer_capacity: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_network(self) -> "SimNetwork":
        if len(self.mu) != len(self.eps):
            raise ValueError("mu and eps must have one entry per node")
        if any(v <= 0 for v in self.mu):
            raise ValueError("service rates must be positive")
        if any(not 0.0 <= v < 1.0 for v in self.eps):
            raise ValueError("erasure probabilities must lie in [0, 1)")
        ids = [f.source_id for f in self.flows]
        if len(set(ids)) != len(ids):
            raise ValueError("flow source ids must be unique")
        for flow in self.flows:
            if any(not 0 <= n < len(self.mu) for n in flow.path):
                raise ValueError(f"flow {flow.source_id} references an unknown node")
        if not any(f.tracked for f in self.flows):
            raise ValueError("at least one flow must be tracked")
        return self

    @property
    def n_nodes(self) -> int:
        return len(self.mu)

    @property
    def tracked_sources(self) -> List[int]:
        return [f.source_id for f in self.flows if f.tracked]

    def flow(self, source_id: int) -> Flow:
        for f in self.flows:
            if f.source_id == source_id:
                return f
        raise KeyError(f"no flow with source id {source_id}")
