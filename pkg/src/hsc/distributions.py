"""Energy-packet size distributions and arrival event sources.

Three one-parameter packet-size families are supported, each keyed by its
mean m:

* ``exp``  -- exponential with mean m
* ``det``  -- the point mass at m (every packet carries exactly m)
* ``unif`` -- uniform on (0, 2m)

A spec string such as ``"exp:mean=1.5"`` selects a family (mini-grammar:
``kind:mean=<float>``, kind case-insensitive).  Event sources yield an
endless stream of ``(gap, packet)`` pairs: ``packet`` is the energy of the
arrival being delivered and ``gap`` the waiting time until the next one.
The first packet of a stream lands at time zero.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import DomainError, ParseError

__all__ = [
    "Kind",
    "DistributionSpec",
    "parse_distribution_spec",
    "sample",
    "sample_block",
    "moments",
    "mgf",
    "poisson_events",
    "scripted_events",
    "EVENT_BLOCK",
]

# Event sources draw gaps and packets in fixed-size blocks so that a
# vectorized consumer of the same generator state sees the identical stream.
EVENT_BLOCK = 1024

class Kind(enum.Enum):
    """Packet-size family tag; values double as the spec-string tokens."""

    EXPONENTIAL = "exp"
    DETERMINISTIC = "det"
    UNIFORM = "unif"


@dataclass(frozen=True)
class DistributionSpec:
    """A packet-size law: a family tag plus its mean.

    Attributes:
        kind: which one-parameter family.
        mean: mean packet energy, strictly positive and finite.
    """

    kind: Kind
    mean: float

    def __post_init__(self) -> None:
        if not isinstance(self.kind, Kind):
            raise ValueError(f"kind must be a Kind, got {self.kind!r}")
        m = float(self.mean)
        if not math.isfinite(m) or m <= 0.0:
            raise ValueError(f"mean must be positive and finite, got {self.mean!r}")
        object.__setattr__(self, "mean", m)

    def spec_string(self) -> str:
        """Canonical round-trippable spec string, e.g. ``"exp:mean=1.0"``."""
        return f"{self.kind.value}:mean={self.mean!r}"


_KINDS = {k.value: k for k in Kind}


def parse_distribution_spec(text: str) -> DistributionSpec:
    """Parse ``kind:mean=<float>`` into a :class:`DistributionSpec`.

    The kind token is case-insensitive.  Raises :class:`ParseError` with the
    offending position for grammar violations, and plain ``ValueError`` for a
    syntactically valid but nonpositive mean.
    """
    if not isinstance(text, str):
        raise ParseError("distribution spec must be a string")
    s = text.strip()
    colon = s.find(":")
    if colon < 0:
        raise ParseError(
            f"expected ':' after the kind token in {text!r} (position {len(s)})"
        )
    kind_token = s[:colon].strip().lower()
    if kind_token not in _KINDS:
        raise ParseError(
            f"unknown kind {kind_token!r} at position 0 in {text!r}; "
            f"expected one of exp, det, unif"
        )
    rest = s[colon + 1 :].strip()
    if not rest.lower().startswith("mean"):
        raise ParseError(
            f"expected 'mean=' at position {colon + 1} in {text!r}"
        )
    after_key = rest[4:].lstrip()
    if not after_key.startswith("="):
        raise ParseError(
            f"expected '=' after 'mean' at position {colon + 1 + 4} in {text!r}"
        )
    value_token = after_key[1:].strip()
    if not value_token:
        raise ParseError(f"missing mean value at end of {text!r}")
    try:
        mean = float(value_token)
    except ValueError:
        raise ParseError(
            f"mean value {value_token!r} in {text!r} is not a number"
        ) from None
    return DistributionSpec(_KINDS[kind_token], mean)


def sample(spec: DistributionSpec, rng: np.random.Generator) -> float:
    """Draw one packet size. Deterministic packets consume no randomness."""
    if spec.kind is Kind.EXPONENTIAL:
        return float(rng.exponential(spec.mean))
    if spec.kind is Kind.DETERMINISTIC:
        return spec.mean
    return float(rng.uniform(0.0, 2.0 * spec.mean))


def sample_block(
    spec: DistributionSpec, rng: np.random.Generator, n: int
) -> np.ndarray:
    """Draw ``n`` packet sizes as one vectorized call (one stream advance)."""
    if spec.kind is Kind.EXPONENTIAL:
        return rng.exponential(spec.mean, n)
    if spec.kind is Kind.DETERMINISTIC:
        return np.full(n, spec.mean)
    return rng.uniform(0.0, 2.0 * spec.mean, n)


def moments(spec: DistributionSpec) -> tuple[float, float]:
    """Return ``(mean, second_moment)`` of the packet law, exactly."""
    m = spec.mean
    if spec.kind is Kind.EXPONENTIAL:
        return m, 2.0 * m * m
    if spec.kind is Kind.DETERMINISTIC:
        return m, m * m
    # uniform on (0, 2m): E[X^2] = (2m)^2 / 3
    return m, 4.0 * m * m / 3.0


def mgf(spec: DistributionSpec, r: float) -> float:
    """Moment generating function E[e^{rX}] of the packet law at ``r``.

    Exponential packets are only finite for r < 1/mean; outside that a
    :class:`DomainError` is raised.  The uniform closed form
    ``(e^{2mr} - 1) / (2mr)`` is evaluated through ``expm1`` so it stays
    accurate to machine precision as r -> 0.
    """
    r = float(r)
    m = spec.mean
    if spec.kind is Kind.EXPONENTIAL:
        if r >= 1.0 / m:
            raise DomainError(
                f"exponential MGF diverges at r={r} (requires r < 1/mean = {1.0 / m})"
            )
        return 1.0 / (1.0 - r * m)
    if spec.kind is Kind.DETERMINISTIC:
        return math.exp(m * r)
    a = 2.0 * m * r
    if a == 0.0:
        return 1.0
    return math.expm1(a) / a


def poisson_events(
    lam: float, packet: DistributionSpec, rng: np.random.Generator
) -> Iterator[tuple[float, float]]:
    """Endless ``(gap, packet)`` stream with Exp(lam) gaps.

    Draws are made in fixed blocks of :data:`EVENT_BLOCK` (gaps first, then
    packet sizes) so the simulation kernels can replay the identical stream
    from the same generator state without going through this generator.
    """
    if not (lam > 0.0 and math.isfinite(lam)):
        raise ValueError(f"arrival rate must be positive and finite, got {lam!r}")
    scale = 1.0 / lam
    while True:
        gaps = rng.exponential(scale, EVENT_BLOCK)
        packets = sample_block(packet, rng, EVENT_BLOCK)
        yield from zip(gaps.tolist(), packets.tolist())


def scripted_events(
    pairs: Iterable[tuple[float, float]]
) -> Iterator[tuple[float, float]]:
    """Finite, hand-written event stream for tests; validates positivity."""
    for i, (gap, packet) in enumerate(pairs):
        if not gap > 0.0:
            raise ValueError(f"gap #{i} must be positive, got {gap!r}")
        if not packet > 0.0:
            raise ValueError(f"packet #{i} must be positive, got {packet!r}")
        yield float(gap), float(packet)
