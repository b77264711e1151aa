"""Seeded Monte-Carlo engines for the surplus process.

Three simulators share one event-stream convention (``(gap, packet)`` pairs,
first packet at time zero):

* first-passage trials that find the exact ramp-crossing instant of an
  outage within a finite horizon,
* truncated random-walk runs recording the first ascending ladder point and
  the running maximum,
* the nonnegative battery recursion at arrival epochs (``rho < 1`` regime)
  with empty-time accounting.

Determinism contract.  Every trial ``i`` of a run seeded with ``seed`` draws
from its own stream ``trial_rng(seed, i)``, built by seed-sequence spawning
on a counter-based generator.  Trials can therefore be executed serially, in
any order, or on any number of worker processes and produce bit-identical
aggregates.  The vectorized kernels draw gaps and packets in the same fixed
blocks as :func:`hsc.distributions.poisson_events`, so a kernel run and a
generator-driven run of the same stream see the same realization.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .analytic import SystemParams
from .distributions import EVENT_BLOCK, poisson_events, sample_block
from .errors import PreconditionError

__all__ = [
    "TrialOutcome",
    "LadderSample",
    "EstimateWithCI",
    "LindleyStats",
    "trial_rng",
    "simulate_first_passage",
    "estimate_eventual_outage",
    "simulate_ladder",
    "collect_ladder_samples",
    "estimate_phi_from_max",
    "simulate_lindley",
    "lindley_path",
    "record_path",
]

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one first-passage trial."""

    outage: bool
    tau: float | None  # exact crossing instant, present iff outage
    arrivals_observed: int


@dataclass(frozen=True)
class LadderSample:
    """First ascending ladder point (if any) and running maximum of one walk."""

    terminated: bool  # no ladder point observed within the truncated walk
    max_shortfall: float  # running maximum of the walk (worst energy deficit)
    first_ladder_epoch: int | None
    first_ladder_height: float | None


@dataclass(frozen=True)
class EstimateWithCI:
    """A binomial proportion with its 95% confidence interval."""

    estimate: float
    stderr: float
    ci95_lo: float
    ci95_hi: float
    trials: int
    horizon: float
    seed: int


@dataclass(frozen=True)
class LindleyStats:
    """Post-burn-in emptiness statistics of a battery recursion run."""

    time_empty_fraction: float
    arrival_empty_fraction: float
    steps: int
    burn_in: int


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent reconstructible stream for trial ``index`` of run ``seed``."""
    seed = int(seed)
    index = int(index)
    if seed < 0 or index < 0:
        raise ValueError("seed and trial index must be nonnegative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def simulate_first_passage(
    params: SystemParams,
    horizon: float,
    events: Iterator[tuple[float, float]] | Iterable[tuple[float, float]],
) -> TrialOutcome:
    """Run one trial until outage or until simulated time passes ``horizon``.

    The surplus jumps by the packet size at each arrival and ramps down at
    rate ``p`` in between; a trough at or below zero is an outage and the
    crossing instant is solved exactly on the ramp.  A finite scripted
    stream that runs dry leaves the surplus on a final unbroken ramp.
    """
    horizon = float(horizon)
    if not horizon > 0.0:
        raise PreconditionError(f"horizon must be positive, got {horizon!r}")
    p = params.p
    t = 0.0  # arrival instant of the pair being consumed
    level = params.u0  # surplus just before that arrival
    seen = 0
    for gap, packet in events:
        seen += 1
        post = level + packet
        level = post - p * gap  # trough at the next arrival instant
        if level <= 0.0:
            tau = t + post / p
            if tau <= horizon:
                return TrialOutcome(True, tau, seen)
            return TrialOutcome(False, None, seen)
        t += gap
        if t >= horizon:
            return TrialOutcome(False, None, seen)
    tau = t + level / p
    if tau <= horizon:
        return TrialOutcome(True, tau, seen)
    return TrialOutcome(False, None, seen)


def _first_passage_kernel(
    params: SystemParams, horizon: float, rng: np.random.Generator
) -> TrialOutcome:
    # Vectorized replay of simulate_first_passage over poisson_events(rng):
    # identical block draws, crossing predicate, and stopping order.
    p = params.p
    scale = 1.0 / params.lam
    t0 = 0.0
    level = params.u0
    seen = 0
    while True:
        gaps = rng.exponential(scale, EVENT_BLOCK)
        packets = sample_block(params.packet, rng, EVENT_BLOCK)
        troughs = level + np.cumsum(packets - p * gaps)
        cum_gaps = np.cumsum(gaps)
        hits = np.flatnonzero(troughs <= 0.0)
        overs = np.flatnonzero(t0 + cum_gaps >= horizon)
        j_hit = int(hits[0]) if hits.size else None
        j_over = int(overs[0]) if overs.size else None
        if j_hit is not None and (j_over is None or j_hit <= j_over):
            prev = troughs[j_hit - 1] if j_hit > 0 else level
            post = prev + packets[j_hit]
            arrive = t0 + (cum_gaps[j_hit] - gaps[j_hit])
            tau = arrive + post / p
            if tau <= horizon:
                return TrialOutcome(True, float(tau), seen + j_hit + 1)
            return TrialOutcome(False, None, seen + j_hit + 1)
        if j_over is not None:
            return TrialOutcome(False, None, seen + j_over + 1)
        seen += EVENT_BLOCK
        level = float(troughs[-1])
        t0 = float(t0 + cum_gaps[-1])


def _outage_count(task: tuple[SystemParams, float, int, int, int]) -> int:
    params, horizon, seed, lo, hi = task
    count = 0
    for i in range(lo, hi):
        if _first_passage_kernel(params, horizon, trial_rng(seed, i)).outage:
            count += 1
    return count


def estimate_eventual_outage(
    params: SystemParams,
    horizon: float,
    trials: int,
    seed: int,
    workers: int | None = None,
    ci_method: str = "normal",
) -> EstimateWithCI:
    """Fraction of seeded trials that suffer an outage within ``horizon``.

    The estimate is identical for any ``workers`` value (trials own their
    streams; aggregation is a plain count).  It is a downward-biased
    estimator of the eventual-outage probability, since crossings beyond
    the horizon are not observed.

    Args:
        ci_method: ``"normal"`` (clamped normal approximation, default) or
            ``"wilson"`` for a score interval that behaves near 0 and 1.
    """
    trials = int(trials)
    if trials < 1:
        raise PreconditionError(f"trials must be >= 1, got {trials}")
    horizon = float(horizon)
    if not horizon > 0.0:
        raise PreconditionError(f"horizon must be positive, got {horizon!r}")
    if ci_method not in ("normal", "wilson"):
        raise ValueError(f"unknown ci_method {ci_method!r}")

    if workers is not None and workers > 1:
        n_chunks = min(workers, trials)
        bounds = np.linspace(0, trials, n_chunks + 1, dtype=int)
        tasks = [
            (params, horizon, seed, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        with ProcessPoolExecutor(max_workers=n_chunks) as pool:
            outages = sum(pool.map(_outage_count, tasks))
    else:
        outages = _outage_count((params, horizon, seed, 0, trials))

    est = outages / trials
    stderr = math.sqrt(est * (1.0 - est) / trials)
    if ci_method == "normal":
        lo = max(0.0, est - _Z95 * stderr)
        hi = min(1.0, est + _Z95 * stderr)
    else:
        z2 = _Z95 * _Z95
        denom = 1.0 + z2 / trials
        center = (est + z2 / (2.0 * trials)) / denom
        half = (
            _Z95
            * math.sqrt(est * (1.0 - est) / trials + z2 / (4.0 * trials * trials))
            / denom
        )
        lo = max(0.0, center - half)
        hi = min(1.0, center + half)
    return EstimateWithCI(est, stderr, lo, hi, trials, horizon, int(seed))


def simulate_ladder(
    params: SystemParams,
    max_steps: int,
    events: Iterator[tuple[float, float]] | Iterable[tuple[float, float]],
) -> LadderSample:
    """Walk ``S_n = sum(p * gap_i - packet_i)`` for up to ``max_steps`` steps.

    Records the first epoch at which the walk becomes strictly positive
    (the first ascending ladder point) and the running maximum, both
    truncated at ``max_steps``.
    """
    max_steps = int(max_steps)
    if max_steps < 1:
        raise PreconditionError(f"max_steps must be >= 1, got {max_steps}")
    p = params.p
    s = 0.0
    s_max = 0.0
    epoch: int | None = None
    height: float | None = None
    n = 0
    for gap, packet in events:
        n += 1
        s += p * gap - packet
        if epoch is None and s > 0.0:
            epoch, height = n, s
        if s > s_max:
            s_max = s
        if n >= max_steps:
            break
    return LadderSample(epoch is None, s_max, epoch, height)


def _ladder_kernel(
    params: SystemParams,
    max_steps: int,
    rng: np.random.Generator,
    stop_drawdown: float | None = None,
) -> LadderSample:
    # Vectorized simulate_ladder over poisson_events(rng), identical draws.
    # stop_drawdown ends the run once the walk sits that far below its
    # running maximum: with drift down, the probability that either recorded
    # statistic could still change is at most exp(-r* drawdown).
    p = params.p
    scale = 1.0 / params.lam
    s = 0.0
    s_max = 0.0
    epoch: int | None = None
    height: float | None = None
    done = 0
    while done < max_steps:
        gaps = rng.exponential(scale, EVENT_BLOCK)
        packets = sample_block(params.packet, rng, EVENT_BLOCK)
        take = min(EVENT_BLOCK, max_steps - done)
        walk = s + np.cumsum(p * gaps[:take] - packets[:take])
        if epoch is None:
            pos = np.flatnonzero(walk > 0.0)
            if pos.size:
                j = int(pos[0])
                epoch = done + j + 1
                height = float(walk[j])
        block_max = float(walk.max())
        if block_max > s_max:
            s_max = block_max
        s = float(walk[-1])
        done += take
        if stop_drawdown is not None and s_max - s >= stop_drawdown:
            break
    return LadderSample(epoch is None, s_max, epoch, height)


def collect_ladder_samples(
    params: SystemParams,
    walks: int,
    max_steps: int,
    seed: int,
    stop_drawdown: float | None = None,
) -> list[LadderSample]:
    """Run ``walks`` independent truncated ladder walks on per-walk streams.

    ``stop_drawdown`` (optional) trades an error bounded by
    ``exp(-r* stop_drawdown)`` per walk for a large speedup; pass e.g.
    ``30 / r*`` to keep that error below 1e-13.
    """
    walks = int(walks)
    if walks < 1:
        raise PreconditionError(f"walks must be >= 1, got {walks}")
    return [
        _ladder_kernel(params, max_steps, trial_rng(seed, i), stop_drawdown)
        for i in range(walks)
    ]


def estimate_phi_from_max(samples: list[LadderSample], u0: float) -> float:
    """Empirical fraction of walks whose running maximum stayed at or below u0."""
    if not samples:
        raise PreconditionError("samples must be nonempty")
    hits = sum(1 for s in samples if s.max_shortfall <= u0)
    return hits / len(samples)


def lindley_path(
    params: SystemParams,
    steps: int,
    events: Iterator[tuple[float, float]] | Iterable[tuple[float, float]],
) -> list[float]:
    """Battery levels at arrival epochs: ``[W_0, W_1, ..]``, W_0 = u0."""
    steps = int(steps)
    if steps < 0:
        raise PreconditionError(f"steps must be nonnegative, got {steps}")
    p = params.p
    w = params.u0
    path = [w]
    for n, (gap, packet) in enumerate(events):
        if n >= steps:
            break
        w = max(0.0, w + packet - p * gap)
        path.append(w)
    return path


def simulate_lindley(
    params: SystemParams,
    steps: int,
    burn_in: int,
    events: Iterator[tuple[float, float]] | Iterable[tuple[float, float]],
    require_stationary: bool = True,
) -> LindleyStats:
    """Iterate ``W_{n+1} = max(0, W_n + packet_n - p * gap_n)`` from W_0 = u0.

    Post-burn-in accounting: ``arrival_empty_fraction`` is the share of
    produced levels that are exactly zero; ``time_empty_fraction`` is the
    share of elapsed time the store spends empty, where the interval after
    arrival ``n`` contributes ``max(0, gap_n - (W_n + packet_n) / p)``.

    Raises:
        PreconditionError: when ``rho >= 1`` and ``require_stationary`` is
            set; there is no stationary regime to sample.
    """
    steps = int(steps)
    burn_in = int(burn_in)
    if not steps > burn_in >= 0:
        raise PreconditionError(
            f"need steps > burn_in >= 0, got steps={steps}, burn_in={burn_in}"
        )
    if require_stationary and params.rho >= 1.0:
        raise PreconditionError(
            f"no stationary regime at rho = {params.rho} >= 1; "
            "pass require_stationary=False to run anyway"
        )
    p = params.p
    w = params.u0
    counted = 0
    empty_arrivals = 0
    empty_time = 0.0
    total_time = 0.0
    n = 0
    for gap, packet in events:
        if n >= steps:
            break
        if n >= burn_in:
            counted += 1
            total_time += gap
            idle = gap - (w + packet) / p
            if idle > 0.0:
                empty_time += idle
        w_next = w + packet - p * gap
        w = w_next if w_next > 0.0 else 0.0
        if n >= burn_in and w == 0.0:
            empty_arrivals += 1
        n += 1
    if counted == 0 or total_time <= 0.0:
        raise PreconditionError("event stream ended before any post-burn-in step")
    return LindleyStats(
        time_empty_fraction=empty_time / total_time,
        arrival_empty_fraction=empty_arrivals / counted,
        steps=n,
        burn_in=burn_in,
    )


def record_path(
    params: SystemParams,
    horizon: float,
    events: Iterator[tuple[float, float]] | Iterable[tuple[float, float]],
) -> list[tuple[float, float]]:
    """Breakpoints of the sawtooth surplus trajectory.

    Returns ``(time, surplus)`` pairs: the start point, a pre-jump and
    post-jump pair at each arrival, and a final point at the outage instant
    (surplus zero) or at the horizon.  Consecutive points sharing a time
    coordinate encode the jump; between breakpoints the surplus is linear
    with slope ``-p``.  Pre-jump values reproduce the troughs seen by
    :func:`simulate_first_passage` on the same stream.
    """
    horizon = float(horizon)
    if not horizon > 0.0:
        raise PreconditionError(f"horizon must be positive, got {horizon!r}")
    p = params.p
    t = 0.0
    level = params.u0
    pts: list[tuple[float, float]] = [(0.0, level)]
    first = True
    for gap, packet in events:
        if not first:
            pts.append((t, level))
        first = False
        post = level + packet
        pts.append((t, post))
        level = post - p * gap
        if level <= 0.0:
            tau = t + post / p
            if tau <= horizon:
                pts.append((tau, 0.0))
            else:
                pts.append((horizon, post - p * (horizon - t)))
            return pts
        t_next = t + gap
        if t_next >= horizon:
            pts.append((horizon, post - p * (horizon - t)))
            return pts
        t = t_next
    # stream ran dry: one final ramp from the last recorded state
    tau = t + level / p
    if tau <= horizon:
        pts.append((tau, 0.0))
    else:
        pts.append((horizon, level - p * (horizon - t)))
    return pts
