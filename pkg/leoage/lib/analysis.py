"""
AoI Analysis Module

Closed-form Age-of-Information results for a tagged source crossing a
tandem of M/M/1 relays with cross traffic and erasure links:

- exact mean network time
- independence approximation of the average AoI
- policy-specific lower/upper bounds on E[W Y] and on the average AoI
- error-free Peak-AoI tail bound

All functions are pure. Node-local sojourn times are exponential with the
response rate alpha_j, so the end-to-end time is hypoexponential and every
expectation reduces to the kernel in leoage.lib.phasetype.
"""

import logging
import math
from typing import Dict, List, Mapping, Optional

import numpy as np
from scipy import integrate, linalg

from leoage.lib import phasetype
from leoage.lib.models import (
    POLICIES,
    AoIBounds,
    DerivedRates,
    NetworkConfig,
    Policy,
    UnstableNetworkError,
    UnsupportedConfigError,
)
from leoage.lib.network import derived_rates, stability_check

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-9


def _require_stable(derived: DerivedRates) -> None:
    unstable = stability_check(derived)
    if unstable:
        raise UnstableNetworkError(unstable)


def _end_to_end_success(derived: DerivedRates) -> float:
    p_k = derived.p_s[-1]
    if p_k <= 0.0:
        raise UnsupportedConfigError("end-to-end success probability is zero")
    return p_k


def _source_rate(derived: DerivedRates) -> float:
    lam = derived.source_rate
    if lam <= 0.0:
        raise UnsupportedConfigError("tagged source rate is zero, the average AoI is unbounded")
    return lam


def mean_network_time(derived: DerivedRates) -> float:
    """Exact mean end-to-end delay, sum_j 1/alpha_j.

    Raises:
        UnstableNetworkError: If any node has rho >= 1
    """
    _require_stable(derived)
    return sum(1.0 / a for a in derived.alpha)


def aoi_approx(config: NetworkConfig) -> float:
    """Average AoI assuming interarrival and waiting times are independent."""
    derived = derived_rates(config)
    _require_stable(derived)
    p_k = _end_to_end_success(derived)
    lam = _source_rate(derived)

    return (
        sum(1.0 / (p_k * a) for a in derived.alpha)
        + 1.0 / (lam * p_k)
        + (1.0 - p_k) ** 2 / (lam * p_k**2)
    )


def ewy_upper(derived: DerivedRates) -> float:
    """E[W Y] <= E[T] E[Y]; valid for every scheduling policy."""
    return mean_network_time(derived) / _source_rate(derived)


def _prefix_moment(m: int, rate: float, prefix: Optional[phasetype.HypoExpSpec]) -> float:
    """E[S^m e^(-rate S)] / m! for the service time S of links 1..K-1."""
    if prefix is None:
        # K = 1: S is a point mass at zero
        return 1.0 if m == 0 else 0.0

    total = 0.0
    for mu_o, deltas in zip(prefix.rates.distinct_rates, prefix.coeffs):
        for p, delta in enumerate(deltas, start=1):
            total += delta * math.comb(m + p - 1, m) / (rate + mu_o) ** (m + p)
    return total


def ewy_lower_fcfs(
    config: NetworkConfig,
    derived: DerivedRates,
    logger: Optional[logging.Logger] = None,
) -> float:
    """Lower bound on E[W Y] under FCFS: E[Y (T - Y - S)^+].

    T is the K-link system time (hypoexponential over alpha), Y the
    interarrival time and S the pure service time of the first K-1 links.
    Falls back to the matrix form when either hypoexponential is too
    ill-conditioned for its partial-fraction form.
    """
    _require_stable(derived)
    _end_to_end_success(derived)

    lam = _source_rate(derived)
    system = phasetype.hypoexponential(derived.alpha)
    prefix = phasetype.hypoexponential(config.mu[:-1]) if config.k_links > 1 else None

    if system.is_ill_conditioned or (prefix is not None and prefix.is_ill_conditioned):
        if logger:
            logger.debug("Closed-form E[WY] ill-conditioned, using the matrix form")
        return ewy_lower_fcfs_matrix(config, derived)

    total = 0.0
    for alpha_i, gammas in zip(system.rates.distinct_rates, system.coeffs):
        for j, gamma in enumerate(gammas, start=1):
            for ell in range(j):
                for m in range(ell + 1):
                    total += (
                        lam
                        * gamma
                        * (j - ell)
                        * (ell - m + 1)
                        * _prefix_moment(m, alpha_i, prefix)
                        / (alpha_i ** (j - ell + 1) * (alpha_i + lam) ** (ell - m + 2))
                    )
    return total


def ewy_lower_fcfs_matrix(config: NetworkConfig, derived: DerivedRates) -> float:
    """E[Y (T - Y - S)^+] through phase-type matrices, without quadrature.

    With A the sub-generator of T and tail = (-A)^-1 1,

        E[Y (T - Y - S)^+] = lambda e1 (lambda I - A)^-2 E[exp(A S)] tail

    and E[exp(A S)] = (beta x I) (-(B (+) A))^-1 (b x I) for S with initial
    vector beta, sub-generator B and exit vector b (Kronecker sum B (+) A).
    """
    _require_stable(derived)
    lam = _source_rate(derived)
    gen = phasetype.subgenerator(derived.alpha)
    size = gen.shape[0]
    eye = np.eye(size)
    tail = linalg.solve(-gen, np.ones(size))

    if config.k_links == 1:
        shifted = tail
    else:
        service = phasetype.subgenerator(config.mu[:-1])
        n = service.shape[0]
        start = np.zeros((1, n))
        start[0, 0] = 1.0
        exit_rates = -service @ np.ones((n, 1))
        kron_sum = np.kron(service, eye) + np.kron(np.eye(n), gen)
        weighted = linalg.solve(-kron_sum, np.kron(exit_rates, eye))
        shifted = np.kron(start, eye) @ weighted @ tail

    resolvent = linalg.solve(lam * eye - gen, linalg.solve(lam * eye - gen, shifted))
    return float(lam * resolvent[0])


def _expected_excess(gen: np.ndarray, tail: np.ndarray, x: float) -> float:
    """E[(T - x)^+] for T phase-type with sub-generator gen started in phase 1.

    tail is (-gen)^-1 1, the mean residual time from each phase.
    """
    return float(linalg.expm(gen * x)[0] @ tail)


def ewy_lower_fcfs_quadrature(config: NetworkConfig, derived: DerivedRates) -> float:
    """Direct numerical integration of E[Y (T - Y - S)^+] through phase-type matrices."""
    _require_stable(derived)
    lam = _source_rate(derived)
    gen = phasetype.subgenerator(derived.alpha)
    tail = linalg.solve(-gen, np.ones(gen.shape[0]))

    def over_y(y: float, s: float = 0.0) -> float:
        return y * lam * math.exp(-lam * y) * _expected_excess(gen, tail, y + s)

    if config.k_links == 1:
        value, _ = integrate.quad(over_y, 0.0, np.inf, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL)
        return value

    prefix_rates = list(config.mu[:-1])

    def integrand(y: float, s: float) -> float:
        return phasetype.matrix_pdf(prefix_rates, s) * over_y(y, s)

    value, _ = integrate.dblquad(
        integrand, 0.0, np.inf, 0.0, np.inf, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL
    )
    return value


def ewy_lower_opf(config: NetworkConfig, derived: DerivedRates) -> float:
    """Lower bound on E[W Y] shared by OPF and HAF."""
    _require_stable(derived)
    lam = _source_rate(derived)
    mu = config.mu

    value = lam / (derived.alpha[0] * mu[0] ** 2)
    for j in range(1, config.k_links):
        rho = derived.rho[j]
        value += (1.0 - rho) * rho * mu[j - 1] / (
            derived.arrival_rate[j] * (derived.alpha[j] + mu[j - 1])
        )
    return value


def _aoi_from_ewy(config: NetworkConfig, derived: DerivedRates, ewy: float) -> float:
    lam = _source_rate(derived)
    p_k = _end_to_end_success(derived)

    per_node = sum(
        1.0 / (mu * lam) + (1.0 - p_k) / (p_k * alpha * lam)
        for mu, alpha in zip(config.mu, derived.alpha)
    )
    return lam * (
        ewy + per_node + 1.0 / (lam**2 * p_k) + ((1.0 - p_k) / (lam * p_k)) ** 2
    )


def aoi_bounds(
    config: NetworkConfig,
    policy: Policy,
    logger: Optional[logging.Logger] = None,
) -> AoIBounds:
    """Lower/upper bounds and independence approximation of the average AoI.

    Args:
        config: Tagged-source path
        policy: FCFS, OPF or HAF; selects the E[W Y] lower bound
        logger: Optional logger instance

    Returns:
        AoIBounds for the policy

    Raises:
        UnstableNetworkError: If any node has rho >= 1
        UnsupportedConfigError: If the tagged source rate or the end-to-end
            success probability is zero
    """
    derived = derived_rates(config)
    _require_stable(derived)

    if policy == "FCFS":
        ewy_low = ewy_lower_fcfs(config, derived, logger=logger)
    elif policy in ("OPF", "HAF"):
        ewy_low = ewy_lower_opf(config, derived)
    else:
        raise ValueError(f"Unknown policy: {policy}")

    lower = _aoi_from_ewy(config, derived, ewy_low)
    upper = _aoi_from_ewy(config, derived, ewy_upper(derived))

    if logger:
        logger.debug(f"{policy}: E[WY] lower={ewy_low:.6g}, AoI in [{lower:.6g}, {upper:.6g}]")

    return AoIBounds(lower=lower, upper=upper, approx=aoi_approx(config), policy=policy)


def aoi_bounds_all(
    config: NetworkConfig, logger: Optional[logging.Logger] = None
) -> Dict[str, AoIBounds]:
    return {policy: aoi_bounds(config, policy, logger=logger) for policy in POLICIES}


def network_aoi_bounds(
    configs: Mapping[int, NetworkConfig],
    policy: Policy,
    logger: Optional[logging.Logger] = None,
) -> AoIBounds:
    """Bounds on the source-averaged AoI of a network.

    FCFS bounds already hold per source. OPF and HAF reorder packets across
    sources, so their bounds only hold for the average over all sources.

    Args:
        configs: Tagged-source path per source id
        policy: FCFS, OPF or HAF
        logger: Optional logger instance

    Raises:
        ValueError: If configs is empty
    """
    if not configs:
        raise ValueError("at least one source is required")

    per_source = [aoi_bounds(configs[source], policy, logger=logger) for source in sorted(configs)]
    return AoIBounds(
        lower=float(np.mean([b.lower for b in per_source])),
        upper=float(np.mean([b.upper for b in per_source])),
        approx=float(np.mean([b.approx for b in per_source])),
        policy=policy,
    )


def paoi_rates(config: NetworkConfig) -> List[float]:
    """Stage rates of the PAoI bound variable: response rates, service rates, source rate."""
    derived = derived_rates(config)
    return list(derived.alpha) + list(config.mu) + [derived.source_rate]


def paoi_tail_bound(config: NetworkConfig, tau):
    """Upper bound on P(PAoI > tau) for error-free paths.

    Raises:
        UnsupportedConfigError: If any link has a positive erasure probability
        UnstableNetworkError: If any node has rho >= 1
    """
    if not config.error_free:
        raise UnsupportedConfigError("PAoI tail bound is only available for error-free links")
    derived = derived_rates(config)
    _require_stable(derived)
    _source_rate(derived)

    spec = phasetype.hypoexponential(paoi_rates(config))
    return phasetype.survival(spec, tau)


def mm1_aoi_exact(lam: float, mu: float) -> float:
    """Average AoI of a single FCFS M/M/1 queue."""
    if lam <= 0:
        raise ValueError(f"arrival rate must be positive, got {lam}")
    if lam >= mu:
        raise UnstableNetworkError([1])
    rho = lam / mu
    return (1.0 / mu) * (1.0 + 1.0 / rho + rho**2 / (1.0 - rho))
