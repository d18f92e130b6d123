"""
Hypoexponential Distribution Module

Closed-form kernel for sums of independent exponential stages with possibly
repeated rates: partial-fraction coefficients, density, CDF, mean and
sampling. A phase-type (matrix exponential) evaluation of the same
distribution serves as validation oracle and as the production path for
rate sets too close to each other for the closed form.
"""

import math
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import linalg
from scipy.special import gammainc

GROUPING_REL_TOL = 1e-9
# Closed form loses all precision when distinct rates nearly coincide
CANCELLATION_GAP = 1e-6
MAX_CONDITION = 1e6

ArrayLike = Union[float, Sequence[float], np.ndarray]


class RateMultiset(BaseModel):
    """Distinct stage rates with their multiplicities."""

    model_config = ConfigDict(frozen=True)

    distinct_rates: Tuple[float, ...]
    multiplicities: Tuple[int, ...]

    @model_validator(mode="after")
    def _check(self) -> "RateMultiset":
        if len(self.distinct_rates) != len(self.multiplicities):
            raise ValueError("one multiplicity per distinct rate is required")
        if not self.distinct_rates:
            raise ValueError("at least one rate is required")
        if any(r <= 0 for r in self.distinct_rates):
            raise ValueError("rates must be strictly positive")
        if any(n < 1 for n in self.multiplicities):
            raise ValueError("multiplicities must be >= 1")
        if len(set(self.distinct_rates)) != len(self.distinct_rates):
            raise ValueError("distinct rates contain duplicates")
        return self

    @property
    def total(self) -> int:
        return sum(self.multiplicities)

    def expanded(self) -> List[float]:
        """All stage rates, repeated by multiplicity."""
        return [r for r, n in zip(self.distinct_rates, self.multiplicities) for _ in range(n)]

    def min_relative_gap(self) -> float:
        rates = sorted(self.distinct_rates)
        if len(rates) < 2:
            return math.inf
        return min((b - a) / b for a, b in zip(rates, rates[1:]))


class HypoExpSpec(BaseModel):
    """Hypoexponential distribution in partial-fraction form.

    coeffs[i][j-1] is the coefficient of t^(j-1) e^(-rate_i t) / (j-1)!.
    """

    model_config = ConfigDict(frozen=True)

    rates: RateMultiset
    coeffs: Tuple[Tuple[float, ...], ...]

    @property
    def condition(self) -> float:
        """Sum of absolute per-term masses; 1 when no cancellation occurs."""
        return sum(
            abs(g) / rate**j
            for rate, gammas in zip(self.rates.distinct_rates, self.coeffs)
            for j, g in enumerate(gammas, start=1)
        )

    @property
    def is_ill_conditioned(self) -> bool:
        return self.rates.min_relative_gap() < CANCELLATION_GAP or self.condition > MAX_CONDITION


def group_rates(rates: Sequence[float], rel_tol: float = GROUPING_REL_TOL) -> RateMultiset:
    """Cluster rates whose relative difference is within rel_tol.

    Clusters keep first-seen order; each distinct rate is the cluster mean.

    Raises:
        ValueError: If any rate is not strictly positive
    """
    sums: List[float] = []
    counts: List[int] = []
    for rate in rates:
        if not rate > 0:
            raise ValueError(f"rates must be strictly positive, got {rate}")
        for idx, total in enumerate(sums):
            center = total / counts[idx]
            if abs(rate - center) <= rel_tol * max(rate, center):
                sums[idx] += rate
                counts[idx] += 1
                break
        else:
            sums.append(float(rate))
            counts.append(1)

    return RateMultiset(
        distinct_rates=tuple(s / c for s, c in zip(sums, counts)),
        multiplicities=tuple(counts),
    )


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Yield every tuple of `parts` non-negative integers summing to `total`."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def coefficients(ms: RateMultiset) -> HypoExpSpec:
    """Partial-fraction coefficients gamma_ij of the hypoexponential density."""
    rates = ms.distinct_rates
    mults = ms.multiplicities
    scale = math.prod(r**n for r, n in zip(rates, mults))

    coeffs = []
    for i, (rate_i, n_i) in enumerate(zip(rates, mults)):
        others = [(rates[l], mults[l]) for l in range(len(rates)) if l != i]
        row = []
        for j in range(1, n_i + 1):
            acc = 0.0
            for comp in _compositions(n_i - j, len(others)):
                term = 1.0
                for (rate_l, n_l), m_l in zip(others, comp):
                    term *= math.comb(n_l + m_l - 1, m_l) / (rate_l - rate_i) ** (n_l + m_l)
                acc += term
            row.append(scale * (-1) ** (n_i - j) * acc)
        coeffs.append(tuple(row))

    return HypoExpSpec(rates=ms, coeffs=tuple(coeffs))


def hypoexponential(rates: Sequence[float], rel_tol: float = GROUPING_REL_TOL) -> HypoExpSpec:
    """Build the distribution of the sum of exponential stages with the given rates."""
    return coefficients(group_rates(rates, rel_tol))


def subgenerator(rates: Sequence[float]) -> np.ndarray:
    stages = np.asarray(rates, dtype=float)
    gen = np.diag(-stages)
    gen[np.arange(len(stages) - 1), np.arange(1, len(stages))] = stages[:-1]
    return gen


def matrix_cdf(rates: Sequence[float], tau: ArrayLike) -> Union[float, np.ndarray]:
    """CDF through the transient solution of the bidiagonal phase-type generator."""
    if any(r <= 0 for r in rates):
        raise ValueError("rates must be strictly positive")
    gen = subgenerator(rates)
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.zeros_like(taus)
    for idx, t in enumerate(taus):
        if t > 0:
            out[idx] = 1.0 - linalg.expm(gen * t)[0].sum()
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(tau) == 0 else out


def matrix_pdf(rates: Sequence[float], t: ArrayLike) -> Union[float, np.ndarray]:
    """Density through the phase-type representation (exit rate of the last stage)."""
    if any(r <= 0 for r in rates):
        raise ValueError("rates must be strictly positive")
    gen = subgenerator(rates)
    last = float(rates[-1])
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(ts)
    for idx, x in enumerate(ts):
        if x >= 0:
            out[idx] = linalg.expm(gen * x)[0, -1] * last
    return float(out[0]) if np.ndim(t) == 0 else out


def pdf(spec: HypoExpSpec, t: ArrayLike) -> Union[float, np.ndarray]:
    """Density f(t); zero for t < 0."""
    if spec.is_ill_conditioned:
        return matrix_pdf(spec.rates.expanded(), t)

    ts = np.asarray(t, dtype=float)
    pos = np.where(ts >= 0, ts, 0.0)
    total = np.zeros_like(pos)
    for rate, gammas in zip(spec.rates.distinct_rates, spec.coeffs):
        decay = np.exp(-rate * pos)
        for j, g in enumerate(gammas, start=1):
            total = total + g * pos ** (j - 1) / math.factorial(j - 1) * decay
    total = np.where(ts >= 0, total, 0.0)
    return float(total) if np.ndim(t) == 0 else total


def cdf(spec: HypoExpSpec, tau: ArrayLike) -> Union[float, np.ndarray]:
    """F(tau) = sum_ij gamma_ij / rate_i^j * P(j, rate_i * tau), P the regularized gamma."""
    if spec.is_ill_conditioned:
        return matrix_cdf(spec.rates.expanded(), tau)

    taus = np.asarray(tau, dtype=float)
    pos = np.where(taus > 0, taus, 0.0)
    total = np.zeros_like(pos)
    for rate, gammas in zip(spec.rates.distinct_rates, spec.coeffs):
        for j, g in enumerate(gammas, start=1):
            total = total + g / rate**j * gammainc(j, rate * pos)
    total = np.clip(np.where(taus > 0, total, 0.0), 0.0, 1.0)
    return float(total) if np.ndim(tau) == 0 else total


def survival(spec: HypoExpSpec, tau: ArrayLike) -> Union[float, np.ndarray]:
    return 1.0 - cdf(spec, tau)


def mean(spec: HypoExpSpec) -> float:
    """Sum of 1/rate over every stage, repeated rates counted once per stage."""
    return sum(n / r for r, n in zip(spec.rates.distinct_rates, spec.rates.multiplicities))


def sample(spec: HypoExpSpec, rng: np.random.Generator, size=None):
    """Draw sums of independent exponential stages.

    Args:
        spec: Distribution to sample
        rng: Caller-owned random stream
        size: None for a single float, otherwise the number of draws

    Returns:
        float or np.ndarray of draws
    """
    scales = 1.0 / np.asarray(spec.rates.expanded())
    if size is None:
        return float(rng.exponential(scales).sum())
    return rng.exponential(scales, size=(size, len(scales))).sum(axis=1)
