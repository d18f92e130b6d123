"""
Statistics Module

Turns delivery records into AoI metrics: exact time-average AoI of the
sawtooth, peak AoI samples, empirical CDFs, Jain's fairness index and
confidence intervals (normal approximation and batch means).
"""

import math
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.stats import norm

from leoage.lib.desim import DeliveryTrace, SimResult

DEFAULT_BATCHES = 20

Deliveries = Union[DeliveryTrace, Sequence[Tuple[float, float]], np.ndarray]
Window = Optional[Tuple[float, float]]


class SourceSummary(BaseModel):
    """AoI, PAoI and delay statistics of one source after trimming."""

    model_config = ConfigDict(frozen=True)

    source_id: int
    mean_aoi: float
    se_aoi: float
    mean_paoi: float
    se_paoi: float
    paoi_p50: float
    paoi_p90: float
    paoi_p99: float
    mean_delay: float
    se_delay: float
    n_deliveries: int
    n_peaks: int
    n_discarded: int
    losses: int


class AoISummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    sources: Dict[int, SourceSummary]
    jfi: float
    window_start: float
    window_end: float


def _as_arrays(deliveries: Deliveries) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(deliveries, DeliveryTrace):
        gen, dlv = deliveries.generation, deliveries.delivery
    else:
        pairs = np.asarray(deliveries, dtype=float).reshape(-1, 2)
        gen, dlv = pairs[:, 0], pairs[:, 1]
    if len(gen) == 0:
        raise ValueError("no deliveries: age is undefined")
    if np.any(np.diff(dlv) < 0):
        raise ValueError("deliveries must be sorted by delivery time")
    return np.asarray(gen, dtype=float), np.asarray(dlv, dtype=float)


def accepted_resets(generation: np.ndarray, delivery: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Deliveries that carry a fresher generation time than everything before them."""
    fresher = np.ones(len(generation), dtype=bool)
    if len(generation) > 1:
        running = np.maximum.accumulate(generation)
        fresher[1:] = generation[1:] > running[:-1]
    return generation[fresher], delivery[fresher]


def time_average_aoi(deliveries: Deliveries, window: Window = None) -> float:
    """Exact average of the age sawtooth over a window.

    Stale deliveries do not reset the age. The default window runs from
    the first to the last accepted reset, so trailing stale deliveries do
    not stretch it.

    Raises:
        ValueError: On empty or unsorted input, or a window starting before
            the first delivery
    """
    gen, dlv = accepted_resets(*_as_arrays(deliveries))
    t0, t1 = window if window is not None else (dlv[0], dlv[-1])
    if t0 < dlv[0]:
        raise ValueError(f"window starts at {t0}, before the first delivery at {dlv[0]}")
    if t1 <= t0:
        raise ValueError(f"empty window [{t0}, {t1}]")

    current = int(np.searchsorted(dlv, t0, side="right")) - 1
    inside = dlv[(dlv > t0) & (dlv < t1)]
    starts = np.concatenate(([t0], inside))
    ends = np.concatenate((inside, [t1]))
    gens = gen[current : current + len(starts)]

    area = np.sum((ends - starts) * ((starts + ends) / 2.0 - gens))
    return float(area / (t1 - t0))


def paoi_samples(deliveries: Deliveries, window: Window = None) -> np.ndarray:
    """Age just before every accepted reset.

    With a window, only peaks whose whole cycle lies inside it are kept,
    which drops the first peak (born before the window).
    """
    gen, dlv = accepted_resets(*_as_arrays(deliveries))
    if len(dlv) < 2:
        raise ValueError("at least two deliveries are required for a peak")
    peaks = dlv[1:] - gen[:-1]
    if window is None:
        return peaks
    t0, t1 = window
    keep = (dlv[:-1] >= t0) & (dlv[1:] <= t1)
    return peaks[keep]


def jain_fairness(values: Sequence[float]) -> float:
    """(sum x)^2 / (N sum x^2)."""
    x = np.asarray(values, dtype=float)
    if x.size == 0 or np.any(x < 0):
        raise ValueError("values must be a non-empty sequence of non-negative numbers")
    squares = float(np.sum(x**2))
    if squares == 0.0:
        raise ValueError("Jain's index is undefined for all-zero input")
    return float(np.sum(x) ** 2 / (x.size * squares))


def empirical_cdf(samples: Sequence[float], grid: Sequence[float]) -> np.ndarray:
    """Right-continuous empirical CDF on the grid, as rows of (tau, fraction <= tau)."""
    ordered = np.sort(np.asarray(samples, dtype=float))
    if ordered.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    taus = np.asarray(grid, dtype=float)
    fractions = np.searchsorted(ordered, taus, side="right") / ordered.size
    return np.column_stack([taus, fractions])


def mean_with_ci(samples: Sequence[float], confidence: float = 0.95) -> Tuple[float, float]:
    """Sample mean and normal-approximation half-width."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("at least two samples are required for a confidence interval")
    z = norm.ppf(0.5 + confidence / 2.0)
    return float(x.mean()), float(z * x.std(ddof=1) / math.sqrt(x.size))


def dkw_epsilon(n: int, confidence: float = 0.99) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band for n samples."""
    if n < 1:
        raise ValueError("n must be positive")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


def batch_means(samples: Sequence[float], n_batches: int = DEFAULT_BATCHES) -> Tuple[float, float]:
    """Mean and standard error of a correlated series by non-overlapping batches.

    Trailing samples that do not fill a batch are dropped.
    """
    x = np.asarray(samples, dtype=float)
    if n_batches < 2 or x.size < n_batches:
        raise ValueError(f"need at least {max(n_batches, 2)} samples for {n_batches} batches")
    size = x.size // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(n_batches))


def aoi_batch_means(
    deliveries: Deliveries,
    window: Tuple[float, float],
    n_batches: int = DEFAULT_BATCHES,
) -> Tuple[float, float]:
    """Time-average AoI and its standard error from equal-length sub-windows."""
    edges = np.linspace(window[0], window[1], n_batches + 1)
    values = [time_average_aoi(deliveries, (a, b)) for a, b in zip(edges[:-1], edges[1:])]
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(n_batches))


def trim_trace(trace: DeliveryTrace, generated: int, warmup_frac: float) -> Tuple[DeliveryTrace, int]:
    cut = int(warmup_frac * generated)
    keep = (trace.seq >= cut) & (trace.seq < generated - cut)
    trimmed = DeliveryTrace(
        seq=trace.seq[keep], generation=trace.generation[keep], delivery=trace.delivery[keep]
    )
    return trimmed, int(len(trace) - keep.sum())


def summarize(
    result: SimResult,
    warmup_frac: Optional[float] = None,
    n_batches: int = DEFAULT_BATCHES,
) -> AoISummary:
    """Per-source statistics with warm-up/tail trimming, plus JFI over mean AoI.

    The first and last warmup_frac of each source's generated packets are
    discarded; the AoI window spans the first to the last accepted reset
    among the kept deliveries of each source.
    """
    frac = result.warmup_frac if warmup_frac is None else warmup_frac
    sources = {}
    starts, ends = [], []

    for sid, trace in result.deliveries.items():
        counts = result.flows[sid]
        kept, discarded = trim_trace(trace, counts.generated, frac)
        losses = counts.uplink_lost + counts.erased + counts.dropped
        nan = math.nan

        _, resets = accepted_resets(kept.generation, kept.delivery)
        if len(kept) < max(n_batches, 2) + 1 or len(resets) < 2:
            sources[sid] = SourceSummary(
                source_id=sid, mean_aoi=nan, se_aoi=nan, mean_paoi=nan, se_paoi=nan,
                paoi_p50=nan, paoi_p90=nan, paoi_p99=nan, mean_delay=nan, se_delay=nan,
                n_deliveries=len(kept), n_peaks=0, n_discarded=discarded, losses=losses,
            )
            continue

        window = (float(resets[0]), float(resets[-1]))
        starts.append(window[0])
        ends.append(window[1])
        mean_aoi, se_aoi = aoi_batch_means(kept, window, n_batches)
        peaks = paoi_samples(kept)
        mean_paoi, se_paoi = batch_means(peaks, min(n_batches, len(peaks)))
        p50, p90, p99 = np.quantile(peaks, [0.5, 0.9, 0.99])
        mean_delay, se_delay = batch_means(kept.delays, n_batches)

        sources[sid] = SourceSummary(
            source_id=sid,
            mean_aoi=mean_aoi,
            se_aoi=se_aoi,
            mean_paoi=mean_paoi,
            se_paoi=se_paoi,
            paoi_p50=float(p50),
            paoi_p90=float(p90),
            paoi_p99=float(p99),
            mean_delay=mean_delay,
            se_delay=se_delay,
            n_deliveries=len(kept),
            n_peaks=len(peaks),
            n_discarded=discarded,
            losses=losses,
        )

    finite = [s.mean_aoi for s in sources.values() if math.isfinite(s.mean_aoi)]
    return AoISummary(
        sources=sources,
        jfi=jain_fairness(finite) if finite else math.nan,
        window_start=min(starts) if starts else math.nan,
        window_end=max(ends) if ends else math.nan,
    )
