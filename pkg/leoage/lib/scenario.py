"""Scenario files: parsing, validation, sweeps and resolution to networks.

A scenario is a TOML document with the sections ``topology``, ``links``,
``uplink``, ``run`` and an optional ``sweep``. Unknown keys are rejected
and per-link scalars broadcast to arrays. See README.md for the schema.
"""

import hashlib
import json
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from leoage.lib.models import (
    AlohaUplink,
    IdealUplink,
    MprUplink,
    NetworkConfig,
    Policy,
    SimNetwork,
)
from leoage.lib.network import DEFAULT_EPS, MU_DL, MU_ISL
from leoage.lib.topology import (
    dumbbell_network,
    line_network,
    network_from_config,
    node_loads,
    tagged_config,
)

SECTIONS = ("topology", "links", "uplink", "run", "sweep")

PerLink = Union[float, List[float]]


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be read or resolved."""


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class TopologySection(_Section):
    kind: Literal["line", "dumbbell", "custom"]
    k_links: Optional[int] = Field(default=None, ge=1)
    n_sources: Optional[int] = Field(default=None, ge=1)
    rho: Optional[float] = Field(default=None, gt=0.0)
    lam: Optional[float] = Field(default=None, alias="lambda", gt=0.0)
    theta: Optional[PerLink] = None
    psi: Optional[PerLink] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "TopologySection":
        if self.kind == "line" and (self.k_links is None or self.rho is None):
            raise ValueError("line topology needs k_links and rho")
        if self.kind == "dumbbell" and (self.n_sources is None or self.rho is None):
            raise ValueError("dumbbell topology needs n_sources and rho")
        if self.kind == "custom" and (self.k_links is None or self.lam is None):
            raise ValueError("custom topology needs k_links and lambda")
        if self.kind != "custom" and (self.theta is not None or self.psi is not None):
            raise ValueError("theta and psi are only allowed for custom topologies")
        return self


class LinksSection(_Section):
    mu_isl: float = Field(default=MU_ISL, gt=0.0)
    mu_dl: float = Field(default=MU_DL, gt=0.0)
    mu: Optional[PerLink] = None
    eps: PerLink = DEFAULT_EPS


class UplinkSection(_Section):
    model: Literal["ideal", "mpr", "aloha"] = "ideal"
    p_c: Optional[float] = None
    packet_duration: Optional[float] = None

    def build(self):
        if self.model == "mpr":
            if self.p_c is None:
                raise ValueError("mpr uplink needs p_c")
            return MprUplink(p_c=self.p_c)
        if self.model == "aloha":
            if self.packet_duration is None:
                raise ValueError("aloha uplink needs packet_duration")
            return AlohaUplink(packet_duration=self.packet_duration)
        return IdealUplink()


class RunSection(_Section):
    policy: Union[Policy, List[Policy]] = "FCFS"
    n_pkt: int = Field(default=100_000, ge=1)
    seed: Optional[int] = None
    warmup_frac: float = Field(default=0.05, ge=0.0, lt=0.5)
    buffer_capacity: Optional[int] = Field(default=None, ge=1)
    replications: int = Field(default=1, ge=1)

    @property
    def policies(self) -> List[Policy]:
        return [self.policy] if isinstance(self.policy, str) else list(self.policy)


class SweepSection(_Section):
    parameter: str
    values: List[Union[int, float, str]] = Field(min_length=1)


class Scenario(_Section):
    """A validated scenario document."""

    topology: TopologySection
    links: LinksSection = LinksSection()
    uplink: UplinkSection = UplinkSection()
    run: RunSection = RunSection()
    sweep: Optional[SweepSection] = None

    @model_validator(mode="after")
    def _check_sweep(self) -> "Scenario":
        if self.sweep is not None:
            resolve_parameter(self.sweep.parameter)
        self.uplink.build()
        return self

    def points(self) -> List["Scenario"]:
        """One scenario per sweep value (the scenario itself when there is no sweep)."""
        if self.sweep is None:
            return [self]
        section, key = resolve_parameter(self.sweep.parameter)
        points = []
        for value in self.sweep.values:
            data = self.model_dump(by_alias=True, exclude_none=True)
            data.pop("sweep")
            data.setdefault(section, {})[key] = value
            points.append(Scenario.model_validate(data))
        return points


def _section_fields() -> Dict[str, List[str]]:
    sections = {
        "topology": TopologySection,
        "links": LinksSection,
        "uplink": UplinkSection,
        "run": RunSection,
    }
    return {
        name: [info.alias or field for field, info in model.model_fields.items()]
        for name, model in sections.items()
    }


def resolve_parameter(parameter: str) -> tuple:
    """Map 'section.key' or a unique bare key to (section, key).

    Raises:
        ValueError: If the parameter is unknown or ambiguous
    """
    fields = _section_fields()
    if "." in parameter:
        section, key = parameter.split(".", 1)
        if key not in fields.get(section, []):
            raise ValueError(f"Unknown sweep parameter: {parameter}")
        return section, key
    owners = [section for section, keys in fields.items() if parameter in keys]
    if len(owners) != 1:
        raise ValueError(f"Sweep parameter '{parameter}' is unknown or ambiguous")
    return owners[0], parameter


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ScenarioError: If the file is missing or not valid TOML
        pydantic.ValidationError: If the document violates the schema
    """
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ScenarioError(f"Scenario file not found: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"Invalid TOML in {path}: {e}")
    return Scenario.model_validate(data)


def parse_scenario(text: str) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"Invalid TOML: {e}")
    return Scenario.model_validate(data)


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"Cannot write {type(value).__name__} to a scenario file")


def dump_scenario(scenario: Scenario) -> str:
    """Serialize a scenario back to TOML; parse_scenario(dump_scenario(s)) == s."""
    data = scenario.model_dump(by_alias=True, exclude_none=True)
    lines: List[str] = []
    for section in SECTIONS:
        if section not in data:
            continue
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        for key, value in data[section].items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def scenario_hash(scenario: Scenario) -> str:
    """Short content hash identifying a scenario in CSV provenance columns."""
    canonical = json.dumps(
        scenario.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _broadcast(value: Optional[PerLink], k: int, name: str, default: float = 0.0) -> List[float]:
    if value is None:
        return [default] * k
    if isinstance(value, list):
        if len(value) != k:
            raise ScenarioError(f"{name} has {len(value)} entries, expected {k}")
        return [float(v) for v in value]
    return [float(value)] * k


class ResolvedPoint(BaseModel):
    """One sweep point resolved to a simulator network and tagged views per source."""

    model_config = ConfigDict(frozen=True)

    scenario: Scenario
    network: SimNetwork
    configs: Dict[int, NetworkConfig]
    rho: float

    @property
    def topology(self) -> str:
        return self.scenario.topology.kind

    @property
    def k_links(self) -> int:
        return max(c.k_links for c in self.configs.values())

    @property
    def n_sources(self) -> int:
        return len(self.configs)


def resolve(scenario: Scenario) -> ResolvedPoint:
    """Build the network and the per-source NetworkConfigs of a single point.

    Raises:
        ScenarioError: If per-link arrays do not match the topology
    """
    topo = scenario.topology
    links = scenario.links
    uplink = scenario.uplink.build()
    capacity = scenario.run.buffer_capacity

    if topo.kind == "line":
        k = topo.k_links
        base = line_network(k, topo.rho, links.mu_isl, links.mu_dl, 0.0, uplink)
        network = SimNetwork(
            mu=_broadcast(links.mu, k, "mu") if links.mu is not None else base.mu,
            eps=_broadcast(links.eps, k, "eps"),
            flows=base.flows,
            buffer_capacity=capacity,
        )
        configs = {sid: tagged_config(network, sid) for sid in network.tracked_sources}
        rho = topo.rho

    elif topo.kind == "dumbbell":
        if isinstance(links.eps, list) or links.mu is not None:
            raise ScenarioError("dumbbell topologies take scalar eps and mu_isl/mu_dl only")
        network = dumbbell_network(
            topo.n_sources, topo.rho, links.mu_isl, links.mu_dl, links.eps, uplink,
            buffer_capacity=capacity,
        )
        configs = {sid: tagged_config(network, sid) for sid in network.tracked_sources}
        rho = topo.rho

    else:
        k = topo.k_links
        mu = (
            _broadcast(links.mu, k, "mu")
            if links.mu is not None
            else [links.mu_isl] * (k - 1) + [links.mu_dl]
        )
        config = NetworkConfig(
            k_links=k,
            lam=topo.lam,
            theta=_broadcast(topo.theta, k, "theta"),
            psi=_broadcast(topo.psi, k, "psi"),
            mu=mu,
            eps=_broadcast(links.eps, k, "eps"),
            uplink=uplink,
            buffer_capacity=capacity,
        )
        network = network_from_config(config)
        configs = {1: config}
        rho = topo.rho if topo.rho is not None else max(node_loads(network))

    return ResolvedPoint(scenario=scenario, network=network, configs=configs, rho=rho)

