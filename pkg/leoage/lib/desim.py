"""
Discrete-Event Simulator Module

Seedable event-driven simulation of relay networks: Poisson sources,
ideal/MPR/ALOHA uplinks, exponential service per link, erasures after
service, cross-traffic offload and three scheduling policies (FCFS, OPF,
HAF). Produces per-source delivery traces for leoage.lib.stats.

One Simulator owns all of its state and is strictly single-threaded;
independent replications run in worker processes via run_replications.
"""

import heapq
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from leoage.lib.models import (
    AlohaUplink,
    MprUplink,
    NetworkConfig,
    Policy,
    SimNetwork,
    UnstableNetworkError,
)
from leoage.lib.topology import network_from_config, node_loads

DEFAULT_WARMUP_FRAC = 0.05
DRAW_BATCH = 4096

# Event kinds
ENTRY = 0
DEPART = 1

SeedLike = Union[int, np.random.SeedSequence]


@dataclass(slots=True)
class Packet:
    """A packet in flight. Plain dataclass: created once per packet in the hot loop."""

    source_id: int
    seq: int
    generation_time: float
    node_arrival_time: float = 0.0
    arrival_seq: int = 0
    hop: int = 0
    flow_idx: int = 0


@dataclass
class NodeState:
    """Queue, server and HAF bookkeeping of one relay."""

    queue: List[Packet] = field(default_factory=list)
    in_service: Optional[Packet] = None
    service_start: float = 0.0
    freshest_forwarded: Dict[int, float] = field(default_factory=dict)


def select_next(node: NodeState, policy: Policy, now: float) -> Packet:
    """Remove and return the next packet to serve.

    FCFS serves arrival order. OPF serves the oldest generation timestamp,
    then arrival order, then source id. HAF serves the source with the
    largest node-local age (sources never forwarded count as infinitely
    old), then falls through to the OPF rule.

    Raises:
        ValueError: If the queue is empty
    """
    queue = node.queue
    if not queue:
        raise ValueError("select_next called on an empty queue")

    if policy == "FCFS":
        key = lambda p: (p.node_arrival_time, p.arrival_seq, p.source_id)  # noqa: E731
    elif policy == "OPF":
        key = lambda p: (p.generation_time, p.node_arrival_time, p.arrival_seq, p.source_id)  # noqa: E731
    elif policy == "HAF":
        freshest = node.freshest_forwarded

        def key(p: Packet):
            age = now - freshest.get(p.source_id, -math.inf)
            return (-age, p.generation_time, p.node_arrival_time, p.arrival_seq, p.source_id)
    else:
        raise ValueError(f"Unknown policy: {policy}")

    idx = min(range(len(queue)), key=lambda i: key(queue[i]))
    return queue.pop(idx)


def aloha_survivor_mask(starts: np.ndarray, packet_duration: float) -> np.ndarray:
    """Boolean mask of pure-ALOHA transmissions that overlap no other transmission.

    starts must be sorted; a start survives iff both neighbours are more
    than one packet duration away.
    """
    starts = np.asarray(starts, dtype=float)
    mask = np.ones(len(starts), dtype=bool)
    if len(starts) < 2:
        return mask
    clear = np.diff(starts) > packet_duration
    mask[1:] &= clear
    mask[:-1] &= clear
    return mask


def aloha_arrivals(
    lambda_offered: float,
    packet_duration: float,
    horizon: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Surviving transmission start times of a pure-ALOHA channel over [0, horizon]."""
    if lambda_offered <= 0 or packet_duration <= 0 or horizon <= 0:
        raise ValueError("lambda_offered, packet_duration and horizon must be positive")
    count = rng.poisson(lambda_offered * horizon)
    starts = np.sort(rng.uniform(0.0, horizon, count))
    return starts[aloha_survivor_mask(starts, packet_duration)]


def mpr_survivor_mask(n: int, p_c: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean mask of n uplink attempts, each lost independently with probability p_c."""
    if not 0.0 <= p_c < 1.0:
        raise ValueError(f"p_c must lie in [0, 1), got {p_c}")
    return rng.random(n) >= p_c


def mpr_thin(arrivals: Sequence[float], p_c: float, rng: np.random.Generator) -> np.ndarray:
    """Drop every arrival independently with probability p_c."""
    arrivals = np.asarray(arrivals, dtype=float)
    return arrivals[mpr_survivor_mask(len(arrivals), p_c, rng)]


def poisson_times(rng: np.random.Generator, rate: float, horizon: float) -> np.ndarray:
    """Event times of a Poisson process on (0, horizon]."""
    chunks = []
    t = 0.0
    while t <= horizon:
        n = int(rate * (horizon - t) * 1.1) + 16
        times = t + np.cumsum(rng.exponential(1.0 / rate, n))
        chunks.append(times)
        t = times[-1]
    times = np.concatenate(chunks)
    return times[times <= horizon]


class DeliveryTrace(BaseModel):
    """Deliveries of one source at its destination, in delivery order."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    seq: np.ndarray
    generation: np.ndarray
    delivery: np.ndarray

    def __len__(self) -> int:
        return len(self.seq)

    @property
    def delays(self) -> np.ndarray:
        return self.delivery - self.generation


class FlowCounts(BaseModel):
    """Per-flow packet accounting; generated = uplink_lost + entered."""

    generated: int = 0
    uplink_lost: int = 0
    dropped: int = 0
    erased: int = 0
    offloaded: int = 0
    delivered: int = 0
    in_flight: int = 0

    @property
    def entered(self) -> int:
        return self.generated - self.uplink_lost


class NodeStats(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    arrivals: int = 0
    completions: int = 0
    dropped: int = 0
    erased: int = 0
    total_sojourn: float = 0.0
    occupancy_area: float = 0.0
    busy_time: float = 0.0
    departure_times: Optional[np.ndarray] = None

    @property
    def mean_sojourn(self) -> float:
        return self.total_sojourn / self.completions if self.completions else math.nan


class SimResult(BaseModel):
    """Outcome of one simulation run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    policy: Policy
    seed: Optional[int] = None
    n_pkt: int
    horizon: float
    warmup_frac: float = DEFAULT_WARMUP_FRAC
    deliveries: Dict[int, DeliveryTrace]
    flows: Dict[int, FlowCounts]
    link_losses: List[int]
    node_stats: List[NodeStats]
    unstable: bool = False
    unstable_nodes: List[int] = []


class _DrawBuffer:
    """Batched exponential and uniform draws from one stream."""

    def __init__(self, rng: np.random.Generator, batch: int = DRAW_BATCH):
        self._rng = rng
        self._batch = batch
        self._exp = rng.standard_exponential(batch)
        self._exp_pos = 0
        self._uni = rng.random(batch)
        self._uni_pos = 0

    def exponential(self) -> float:
        if self._exp_pos == self._batch:
            self._exp = self._rng.standard_exponential(self._batch)
            self._exp_pos = 0
        value = self._exp[self._exp_pos]
        self._exp_pos += 1
        return float(value)

    def uniform(self) -> float:
        if self._uni_pos == self._batch:
            self._uni = self._rng.random(self._batch)
            self._uni_pos = 0
        value = self._uni[self._uni_pos]
        self._uni_pos += 1
        return float(value)


class Simulator:
    """Event-driven engine for one replication.

    Args:
        network: Nodes and flows to simulate
        policy: Scheduling policy applied at every node
        seed: Master seed or SeedSequence; one child stream per flow and per node
        record_departures: Keep every service completion time per node
        logger: Optional logger instance
    """

    def __init__(
        self,
        network: SimNetwork,
        policy: Policy,
        seed: SeedLike,
        record_departures: bool = False,
        logger: Optional[logging.Logger] = None,
    ):
        if policy not in ("FCFS", "OPF", "HAF"):
            raise ValueError(f"Unknown policy: {policy}")
        self.network = network
        self.policy = policy
        self.seed = seed
        self.record_departures = record_departures
        self.logger = logger

        seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        # children derived from spawn_key directly so a reused SeedSequence replays the same run
        children = [
            np.random.SeedSequence(seq.entropy, spawn_key=(*seq.spawn_key, i))
            for i in range(len(network.flows) + network.n_nodes)
        ]
        self._flow_rngs = [np.random.default_rng(c) for c in children[: len(network.flows)]]
        self._node_draws = [
            _DrawBuffer(np.random.default_rng(c)) for c in children[len(network.flows) :]
        ]

    def _entry_schedule(self, n_pkt: int) -> List[tuple]:
        """Generation times and uplink survival per flow.

        Tracked flows generate exactly n_pkt packets; untracked flows run
        until the last tracked generation.
        """
        flows = self.network.flows
        generations: List[Optional[np.ndarray]] = [None] * len(flows)
        for idx, flow in enumerate(flows):
            if flow.tracked:
                gaps = self._flow_rngs[idx].exponential(1.0 / flow.rate, n_pkt)
                generations[idx] = np.cumsum(gaps)
        end = max(g[-1] for g in generations if g is not None)
        for idx, flow in enumerate(flows):
            if generations[idx] is None:
                generations[idx] = poisson_times(self._flow_rngs[idx], flow.rate, end)

        schedule = []
        for idx, flow in enumerate(flows):
            gen = generations[idx]
            uplink = flow.uplink
            if isinstance(uplink, MprUplink):
                entered = mpr_survivor_mask(len(gen), uplink.p_c, self._flow_rngs[idx])
            elif isinstance(uplink, AlohaUplink):
                entered = aloha_survivor_mask(gen, uplink.packet_duration)
            else:
                entered = np.ones(len(gen), dtype=bool)
            schedule.append((gen, np.flatnonzero(entered)))
        return schedule

    def run(self, n_pkt: int, max_time: Optional[float] = None) -> SimResult:
        """Simulate until every packet leaves the network (or until max_time).

        Raises:
            ValueError: If n_pkt < 1
        """
        if n_pkt < 1:
            raise ValueError(f"n_pkt must be at least 1, got {n_pkt}")

        network = self.network
        flows = network.flows
        policy = self.policy
        mu = network.mu
        eps = network.eps
        capacity = network.buffer_capacity
        n_nodes = network.n_nodes

        nodes = [NodeState() for _ in range(n_nodes)]
        stats = [NodeStats() for _ in range(n_nodes)]
        in_system = [0] * n_nodes
        last_change = [0.0] * n_nodes
        departures: List[List[float]] = [[] for _ in range(n_nodes)]
        counts = [FlowCounts() for _ in flows]
        traces: Dict[int, tuple] = {f.source_id: ([], [], []) for f in flows if f.tracked}

        schedule = self._entry_schedule(n_pkt)
        next_entry = [0] * len(flows)

        events: List[tuple] = []
        counter = 0
        for idx, (gen, entered) in enumerate(schedule):
            counts[idx].generated = len(gen)
            counts[idx].uplink_lost = len(gen) - len(entered)
            if len(entered):
                heapq.heappush(events, (float(gen[entered[0]]), counter, ENTRY, idx))
                counter += 1

        arrival_counter = 0
        now = 0.0

        def touch(node_idx: int, t: float) -> None:
            stats[node_idx].occupancy_area += in_system[node_idx] * (t - last_change[node_idx])
            last_change[node_idx] = t

        def start_service(node_idx: int, t: float) -> None:
            nonlocal counter
            node = nodes[node_idx]
            pkt = select_next(node, policy, t)
            node.in_service = pkt
            node.service_start = t
            end = t + self._node_draws[node_idx].exponential() / mu[node_idx]
            heapq.heappush(events, (end, counter, DEPART, node_idx))
            counter += 1

        def arrive(node_idx: int, pkt: Packet, t: float) -> None:
            nonlocal arrival_counter
            node = nodes[node_idx]
            if capacity is not None and node.in_service is not None and len(node.queue) >= capacity:
                counts[pkt.flow_idx].dropped += 1
                stats[node_idx].dropped += 1
                return
            touch(node_idx, t)
            in_system[node_idx] += 1
            stats[node_idx].arrivals += 1
            pkt.node_arrival_time = t
            pkt.arrival_seq = arrival_counter
            arrival_counter += 1
            node.queue.append(pkt)
            if node.in_service is None:
                start_service(node_idx, t)

        while events:
            t, _, kind, idx = heapq.heappop(events)
            if max_time is not None and t > max_time:
                break
            now = t

            if kind == ENTRY:
                gen, entered = schedule[idx]
                k = next_entry[idx]
                seq = int(entered[k])
                flow = flows[idx]
                pkt = Packet(
                    source_id=flow.source_id,
                    seq=seq,
                    generation_time=float(gen[seq]),
                    flow_idx=idx,
                )
                next_entry[idx] = k + 1
                if k + 1 < len(entered):
                    heapq.heappush(events, (float(gen[entered[k + 1]]), counter, ENTRY, idx))
                    counter += 1
                arrive(flow.path[0], pkt, t)
                continue

            node = nodes[idx]
            pkt = node.in_service
            node.in_service = None
            touch(idx, t)
            in_system[idx] -= 1
            node_stats = stats[idx]
            node_stats.completions += 1
            node_stats.busy_time += t - node.service_start
            node_stats.total_sojourn += t - pkt.node_arrival_time
            if self.record_departures:
                departures[idx].append(t)
            previous = node.freshest_forwarded.get(pkt.source_id, -math.inf)
            node.freshest_forwarded[pkt.source_id] = max(previous, pkt.generation_time)

            flow = flows[pkt.flow_idx]
            draws = self._node_draws[idx]
            offload = flow.offload_at(pkt.hop)
            if offload > 0.0 and draws.uniform() < offload:
                counts[pkt.flow_idx].offloaded += 1
            elif eps[idx] > 0.0 and draws.uniform() < eps[idx]:
                counts[pkt.flow_idx].erased += 1
                node_stats.erased += 1
            elif pkt.hop == len(flow.path) - 1:
                counts[pkt.flow_idx].delivered += 1
                if flow.tracked:
                    seqs, gens, dels = traces[flow.source_id]
                    seqs.append(pkt.seq)
                    gens.append(pkt.generation_time)
                    dels.append(t)
            else:
                pkt.hop += 1
                arrive(flow.path[pkt.hop], pkt, t)

            if node.queue:
                start_service(idx, t)
            assert not (node.in_service is None and node.queue), "idle server with queued work"

        horizon = max_time if max_time is not None else now
        for node_idx in range(n_nodes):
            touch(node_idx, horizon)
            if self.record_departures:
                stats[node_idx].departure_times = np.asarray(departures[node_idx])

        for c in counts:
            c.in_flight = c.entered - c.delivered - c.erased - c.offloaded - c.dropped

        loads = node_loads(network)
        unstable_nodes = [n + 1 for n, rho in enumerate(loads) if rho >= 1.0]

        if self.logger:
            self.logger.debug(
                f"Simulated {policy} to t={horizon:.6g}: "
                f"{sum(c.delivered for c in counts)} deliveries, {counter} events"
            )

        return SimResult(
            policy=policy,
            seed=self.seed if isinstance(self.seed, int) else None,
            n_pkt=n_pkt,
            horizon=horizon,
            deliveries={
                sid: DeliveryTrace(
                    seq=np.asarray(s, dtype=np.int64),
                    generation=np.asarray(g, dtype=float),
                    delivery=np.asarray(d, dtype=float),
                )
                for sid, (s, g, d) in traces.items()
            },
            flows={f.source_id: c for f, c in zip(flows, counts)},
            link_losses=[s.erased for s in stats],
            node_stats=stats,
            unstable=bool(unstable_nodes),
            unstable_nodes=unstable_nodes,
        )


def simulate(
    network: Union[SimNetwork, NetworkConfig],
    policy: Policy,
    n_pkt: int,
    seed: SeedLike,
    warmup_frac: float = DEFAULT_WARMUP_FRAC,
    allow_unstable: bool = False,
    max_time: Optional[float] = None,
    record_departures: bool = False,
    logger: Optional[logging.Logger] = None,
) -> SimResult:
    """Run one replication.

    Args:
        network: SimNetwork, or a NetworkConfig realized with network_from_config
        policy: FCFS, OPF or HAF
        n_pkt: Packets generated per tracked source
        seed: Master seed or SeedSequence
        warmup_frac: Fraction of each source's packets later trimmed at both ends
        allow_unstable: Permit runs with a node at rho >= 1 (flagged in the result)
        max_time: Optional hard stop; by default the network is drained
        record_departures: Keep per-node departure times
        logger: Optional logger instance

    Returns:
        SimResult

    Raises:
        UnstableNetworkError: If a node is overloaded and allow_unstable is False
    """
    if isinstance(network, NetworkConfig):
        network = network_from_config(network)
    if not 0.0 <= warmup_frac < 0.5:
        raise ValueError(f"warmup_frac must lie in [0, 0.5), got {warmup_frac}")

    loads = node_loads(network)
    overloaded = [n for n, rho in enumerate(loads) if rho >= 1.0]
    if overloaded and not allow_unstable:
        raise UnstableNetworkError([n + 1 for n in overloaded])
    if overloaded and logger:
        logger.warning(f"Simulating unstable network, overloaded nodes: {[n + 1 for n in overloaded]}")

    engine = Simulator(network, policy, seed, record_departures=record_departures, logger=logger)
    result = engine.run(n_pkt, max_time=max_time)
    return result.model_copy(update={"warmup_frac": warmup_frac})


def replication_seeds(master_seed: int, count: int, *keys: int) -> List[np.random.SeedSequence]:
    """Independent streams for replications, keyed by (master seed, keys..., replication)."""
    return [np.random.SeedSequence([master_seed, *keys, r]) for r in range(count)]


def _run_task(task: Dict[str, Any]) -> SimResult:
    return simulate(**task)


def run_replications(tasks: List[Dict[str, Any]], jobs: int = 1) -> List[SimResult]:
    """Run simulate(**task) for every task; results keep input order.

    Tasks must not carry a logger when jobs > 1.
    """
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(_run_task, tasks))
