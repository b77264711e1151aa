"""Closed-form and numeric analysis of the battery surplus process.

Model.  A store starts with energy ``u0`` and is drained at constant rate
``p``.  Energy packets arrive as a Poisson process with rate ``lam``; packet
sizes are i.i.d. draws from a :class:`~hsc.distributions.DistributionSpec`
law, with the first packet landing at time zero.  The system suffers an
energy outage when the surplus first touches zero.

Observed just before each arrival, the surplus is ``u0`` minus a random walk
whose step is the net draw over one inter-arrival period::

    step = p * gap - packet

so an outage is, equivalently, the walk's running maximum exceeding ``u0``.
With utilization ``rho = lam * mean / p``:

* ``rho <= 1``: outage is certain regardless of ``u0``.
* ``rho > 1``: the outage probability ``psi(u0)`` is strictly less than one
  and decays exponentially in ``u0`` at the adjustment coefficient ``r*``,
  the unique positive root of the step cumulant generating function.

For Poisson arrivals the decay is exact, not just asymptotic::

    psi(u0) = (1 - r* p / lam) * exp(-r* u0)

and ``exp(-r* u0)`` is always an upper bound.  The module also provides the
first-ascent ("ladder") height density of the walk, a trapezoidal solver for
the defective renewal equation satisfied by ``phi = 1 - psi``, the density
of a single step, and the stationary fraction of time spent empty in the
``rho < 1`` regime.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from .distributions import DistributionSpec, Kind, mgf, moments
from .errors import ConvergenceError, DomainError, GridError, PreconditionError

__all__ = [
    "Sustainability",
    "SustainabilityVerdict",
    "SystemParams",
    "SolveMethod",
    "AdjustmentResult",
    "AdjustmentApproximations",
    "utilization",
    "expected_surplus",
    "step_cgf",
    "solve_adjustment_coefficient",
    "approx_adjustment_coefficient",
    "outage_bound",
    "eventual_outage_poisson_exact",
    "asymptotic_outage",
    "required_initial_energy",
    "ladder_height_density_poisson",
    "tilted_ladder_mean_poisson",
    "solve_renewal_equation",
    "step_density",
    "stationary_outage",
    "outage_duration_cdf",
]


class Sustainability(enum.Enum):
    UNSUSTAINABLE_CERTAIN = "UnsustainableCertain"
    SELF_SUSTAINABLE_POSSIBLE = "SelfSustainablePossible"


@dataclass(frozen=True)
class SustainabilityVerdict:
    """Utilization together with the regime it implies."""

    rho: float
    status: Sustainability


@dataclass(frozen=True)
class SystemParams:
    """Harvest-store-consume system parameters.

    Attributes:
        lam: Poisson arrival rate of energy packets (per unit time).
        packet: packet-size law.
        p: constant consumption rate (energy per unit time).
        u0: initial stored energy.
    """

    lam: float
    packet: DistributionSpec
    p: float
    u0: float = 0.0

    def __post_init__(self) -> None:
        for name in ("lam", "p"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)
        u0 = float(self.u0)
        if not math.isfinite(u0) or u0 < 0.0:
            raise ValueError(f"u0 must be nonnegative and finite, got {u0!r}")
        object.__setattr__(self, "u0", u0)
        if not isinstance(self.packet, DistributionSpec):
            raise ValueError(f"packet must be a DistributionSpec, got {self.packet!r}")

    @property
    def rho(self) -> float:
        """Utilization: mean harvested power over consumed power."""
        return self.lam * self.packet.mean / self.p


class SolveMethod(enum.Enum):
    CLOSED_FORM = "closed-form"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class AdjustmentResult:
    """Adjustment coefficient plus provenance of the solve."""

    r_star: float
    method: SolveMethod
    iterations: int
    residual: float


class AdjustmentApproximations(NamedTuple):
    quadratic_fixed_point: float
    mean_variance_guess: float


def utilization(params: SystemParams) -> SustainabilityVerdict:
    """Classify the system: rho <= 1 makes eventual outage certain."""
    rho = params.rho
    if rho <= 1.0:
        return SustainabilityVerdict(rho, Sustainability.UNSUSTAINABLE_CERTAIN)
    return SustainabilityVerdict(rho, Sustainability.SELF_SUSTAINABLE_POSSIBLE)


def expected_surplus(params: SystemParams, t: float) -> float:
    """Mean surplus at time t: ``u0 + (lam * mean - p) * t``."""
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise PreconditionError(f"t must be nonnegative and finite, got {t!r}")
    return params.u0 + (params.lam * params.packet.mean - params.p) * t


def _step_moments(params: SystemParams) -> tuple[float, float]:
    # step = p*gap - packet, gap ~ Exp(lam) independent of packet
    mean_x, m2_x = moments(params.packet)
    var_x = m2_x - mean_x * mean_x
    mu = params.p / params.lam - mean_x
    var = (params.p / params.lam) ** 2 + var_x
    return mu, var


def step_cgf(params: SystemParams, r: float) -> float:
    """Cumulant generating function of one walk step at ``r``.

    ``K(r) = -log(1 - p*r/lam) + log E[e^{-r X}]``; finite for
    ``p*r < lam`` (and, for exponential packets, ``r > -1/mean``).
    """
    r = float(r)
    if params.p * r >= params.lam:
        raise DomainError(
            f"step CGF diverges at r={r}: requires p*r < lam "
            f"({params.p}*{r} >= {params.lam})"
        )
    return -math.log1p(-params.p * r / params.lam) + math.log(mgf(params.packet, -r))


def solve_adjustment_coefficient(
    params: SystemParams, tol: float = 1e-12, force_numeric: bool = False
) -> AdjustmentResult:
    """Find the unique positive root of the step CGF.

    Exponential packets admit the closed form ``(rho - 1) / mean`` and are
    solved that way unless ``force_numeric`` is set.  The numeric path
    brackets the root inside ``(0, lam/p)``, starting from the
    mean-variance guess, and polishes it with a safeguarded bracketing
    solve; a residual above ``tol`` raises :class:`ConvergenceError`.

    Raises:
        PreconditionError: if ``rho <= 1`` (no positive root exists).
    """
    rho = params.rho
    if rho <= 1.0:
        raise PreconditionError(
            f"adjustment coefficient requires rho > 1, got rho = {rho}"
        )
    if params.packet.kind is Kind.EXPONENTIAL and not force_numeric:
        r = (rho - 1.0) / params.packet.mean
        return AdjustmentResult(
            r_star=r,
            method=SolveMethod.CLOSED_FORM,
            iterations=0,
            residual=abs(step_cgf(params, r)),
        )

    mu, var = _step_moments(params)
    r0 = -2.0 * mu / var  # mean-variance guess, positive since mu < 0 here
    hi_limit = params.lam / params.p

    lo = min(r0 / 10.0, 0.5 * hi_limit)
    for _ in range(200):
        if step_cgf(params, lo) < 0.0:
            break
        lo *= 0.1
    else:
        raise ConvergenceError("could not find a negative-CGF point near zero")

    hi = min(2.0 * r0, 0.5 * (lo + hi_limit))
    if hi <= lo:
        hi = 0.5 * (lo + hi_limit)
    found = False
    for _ in range(200):
        if step_cgf(params, hi) > 0.0:
            found = True
            break
        lo = hi  # still left of the root: tighten the bracket
        nxt = hi + 0.5 * (hi_limit - hi)
        if not nxt < hi_limit or nxt <= hi:
            break  # cannot expand further in float without leaving the domain
        hi = nxt
    if not found:
        raise ConvergenceError(
            f"failed to bracket the adjustment coefficient in (0, {hi_limit})"
        )

    root, info = brentq(
        lambda r: step_cgf(params, r),
        lo,
        hi,
        xtol=1e-18,
        rtol=8.881784197001252e-16,
        maxiter=300,
        full_output=True,
    )
    residual = abs(step_cgf(params, root))
    if not info.converged or residual > tol:
        raise ConvergenceError(
            f"root polish stalled: residual {residual} exceeds tol {tol}"
        )
    return AdjustmentResult(
        r_star=float(root),
        method=SolveMethod.NUMERIC,
        iterations=int(info.iterations),
        residual=residual,
    )


def approx_adjustment_coefficient(params: SystemParams) -> AdjustmentApproximations:
    """Two cheap surrogates for the adjustment coefficient.

    * ``quadratic_fixed_point``: ``2 p (rho - 1) / (lam E[X^2])``, from a
      second-order expansion of the packet MGF in the fixed-point form.
    * ``mean_variance_guess``: ``-2 mu / var`` of one walk step, from a
      quadratic expansion of the step CGF itself.

    Raises:
        PreconditionError: if ``rho <= 1``.
    """
    rho = params.rho
    if rho <= 1.0:
        raise PreconditionError(f"approximations require rho > 1, got rho = {rho}")
    _, m2_x = moments(params.packet)
    quad = 2.0 * params.p * (rho - 1.0) / (params.lam * m2_x)
    mu, var = _step_moments(params)
    return AdjustmentApproximations(quad, -2.0 * mu / var)


def outage_bound(r_star: float, u0: float) -> float:
    """Exponential upper bound ``exp(-r* u0)`` on the outage probability."""
    if not r_star > 0.0:
        raise PreconditionError(f"r_star must be positive, got {r_star!r}")
    if u0 < 0.0:
        raise PreconditionError(f"u0 must be nonnegative, got {u0!r}")
    return math.exp(-r_star * u0)


def _check_r_star(params: SystemParams, r_star: float, tol: float = 1e-6) -> None:
    resid = abs(step_cgf(params, r_star))
    if resid > tol:
        raise PreconditionError(
            f"r_star={r_star} is not a CGF root for these parameters "
            f"(residual {resid})"
        )


def eventual_outage_poisson_exact(params: SystemParams, r_star: float) -> float:
    """Exact eventual-outage probability ``(1 - r* p/lam) exp(-r* u0)``.

    Exactness relies on the memoryless arrival stream; ``r_star`` must be
    the adjustment coefficient of ``params``.

    Raises:
        PreconditionError: if ``rho <= 1`` or ``r_star`` is inconsistent.
    """
    if params.rho <= 1.0:
        raise PreconditionError(
            f"exact formula requires rho > 1, got rho = {params.rho}"
        )
    if not 0.0 < r_star < params.lam / params.p:
        raise PreconditionError(
            f"r_star must lie in (0, lam/p), got {r_star!r}"
        )
    _check_r_star(params, r_star)
    return (1.0 - r_star * params.p / params.lam) * math.exp(-r_star * params.u0)


def asymptotic_outage(
    theta: float, r_star: float, mu_tilde: float, u0: float
) -> float:
    """Renewal-theoretic tail approximation of the outage probability.

    ``psi(u0) ~ (1 - theta) / (r* mu_tilde) * exp(-r* u0)`` where ``theta``
    is the total mass of the (defective) ladder-height law and ``mu_tilde``
    the mean of its exponentially tilted, proper version.
    """
    if not 0.0 < theta < 1.0:
        raise PreconditionError(f"theta must be in (0, 1), got {theta!r}")
    if not r_star > 0.0:
        raise PreconditionError(f"r_star must be positive, got {r_star!r}")
    if not mu_tilde > 0.0:
        raise PreconditionError(f"mu_tilde must be positive, got {mu_tilde!r}")
    if u0 < 0.0:
        raise PreconditionError(f"u0 must be nonnegative, got {u0!r}")
    return (1.0 - theta) / (r_star * mu_tilde) * math.exp(-r_star * u0)


def required_initial_energy(r_star: float, epsilon: float) -> float:
    """Smallest ``u0`` whose exponential bound meets target ``epsilon``.

    Inverts ``exp(-r* u0) = epsilon``: ``u0 = log(1/epsilon) / r*``.
    """
    if not r_star > 0.0:
        raise PreconditionError(f"r_star must be positive, got {r_star!r}")
    if not 0.0 < epsilon <= 1.0:
        raise PreconditionError(f"epsilon must be in (0, 1], got {epsilon!r}")
    return math.log(1.0 / epsilon) / r_star


def ladder_height_density_poisson(
    params: SystemParams, r_star: float, x: float | np.ndarray
) -> float | np.ndarray:
    """Defective density of the walk's first ascent height.

    For Poisson arrivals: ``(lam/p - r*) exp(-lam x / p)`` on ``x >= 0``,
    with total mass ``theta = 1 - r* p / lam < 1``.
    """
    if params.rho <= 1.0:
        raise PreconditionError(
            f"ladder density form requires rho > 1, got rho = {params.rho}"
        )
    if not 0.0 < r_star < params.lam / params.p:
        raise PreconditionError(f"r_star must lie in (0, lam/p), got {r_star!r}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise PreconditionError("ladder heights are nonnegative; x must be >= 0")
    beta = params.lam / params.p
    out = (beta - r_star) * np.exp(-beta * arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def tilted_ladder_mean_poisson(params: SystemParams, r_star: float) -> float:
    """Mean of the tilted ladder-height law: ``1 / (lam/p - r*)``."""
    if not 0.0 < r_star < params.lam / params.p:
        raise PreconditionError(f"r_star must lie in (0, lam/p), got {r_star!r}")
    return 1.0 / (params.lam / params.p - r_star)


def solve_renewal_equation(
    f_h: np.ndarray | Callable[[np.ndarray], np.ndarray],
    theta: float,
    step: float,
    u_max: float | None = None,
) -> np.ndarray:
    """March the defective renewal equation for ``phi = 1 - psi`` upward.

    Solves ``phi(u) = (1 - theta) + integral_0^u phi(u - x) f_h(x) dx`` on
    the grid ``0, step, ..., u_max`` with the trapezoid rule, anchored at
    ``phi(0) = 1 - theta``.  The quadrature error is O(step^2) for smooth
    kernels.

    Args:
        f_h: ladder-height density, either already tabulated on the grid or
            a vectorized callable to tabulate.
        theta: total (defective) mass of the ladder-height law, in [0, 1].
        step: grid spacing.
        u_max: grid endpoint; required when ``f_h`` is a callable, optional
            (consistency-checked) for tabulated input.

    Returns:
        ``phi`` tabulated on the same grid.

    Raises:
        GridError: if ``step`` does not tile ``u_max`` within 1e-9, or the
            tabulated input has the wrong length.
    """
    step = float(step)
    if not (math.isfinite(step) and step > 0.0):
        raise GridError(f"step must be positive and finite, got {step!r}")
    if not 0.0 <= theta <= 1.0:
        raise PreconditionError(f"theta must be a probability, got {theta!r}")

    if callable(f_h):
        if u_max is None:
            raise GridError("u_max is required when f_h is a callable")
        n = _grid_points(u_max, step)
        f = np.asarray(f_h(np.arange(n + 1) * step), dtype=float)
    else:
        f = np.asarray(f_h, dtype=float)
        if f.ndim != 1 or f.size < 1:
            raise GridError("tabulated f_h must be a nonempty 1-d array")
        if u_max is not None:
            n = _grid_points(u_max, step)
            if f.size != n + 1:
                raise GridError(
                    f"tabulated f_h has {f.size} points, grid needs {n + 1}"
                )
        n = f.size - 1

    if np.any(f < 0.0):
        raise ValueError("f_h must be nonnegative")
    if n >= 1:
        mass = float(np.trapezoid(f, dx=step))
        if mass > theta + step:
            raise ValueError(
                f"discrete mass {mass} of f_h exceeds theta = {theta} "
                f"beyond the step tolerance"
            )

    phi = np.empty(n + 1)
    phi[0] = 1.0 - theta
    denom = 1.0 - 0.5 * step * f[0]
    if denom <= 0.0:
        raise GridError(
            f"step {step} too coarse for kernel value f_h(0) = {f[0]}"
        )
    half_phi0 = 0.5 * phi[0]
    for j in range(1, n + 1):
        interior = f[1:j] @ phi[j - 1 : 0 : -1]
        phi[j] = ((1.0 - theta) + step * (interior + f[j] * half_phi0)) / denom
    return phi


def _grid_points(u_max: float, step: float) -> int:
    u_max = float(u_max)
    if not (math.isfinite(u_max) and u_max > 0.0):
        raise GridError(f"u_max must be positive and finite, got {u_max!r}")
    n = round(u_max / step)
    if n < 1 or abs(n * step - u_max) > 1e-9:
        raise GridError(
            f"step {step} does not tile [0, {u_max}] within 1e-9"
        )
    return n


def step_density(params: SystemParams, z: float) -> float:
    """Density of one walk step ``p*gap - packet`` at the point ``z``.

    Conditioning on the packet size gives
    ``f(z) = (lam/p) e^{-lam z / p} * E[e^{-lam X / p}; X >= -z]``, which
    closes for all three packet families.  The right tail is always
    proportional to ``e^{-lam z / p}``.
    """
    z = float(z)
    beta = params.lam / params.p
    m = params.packet.mean
    kind = params.packet.kind
    if kind is Kind.EXPONENTIAL:
        denom = 1.0 + beta * m
        if z >= 0.0:
            return beta * math.exp(-beta * z) / denom
        return beta * math.exp(z / m) / denom
    if kind is Kind.DETERMINISTIC:
        if z < -m:
            return 0.0
        return beta * math.exp(-beta * (z + m))
    b = 2.0 * m
    if z >= 0.0:
        return math.exp(-beta * z) * (1.0 - math.exp(-beta * b)) / b
    if z >= -b:
        return (1.0 - math.exp(-beta * (z + b))) / b
    return 0.0


def stationary_outage(params: SystemParams) -> float:
    """Long-run fraction of time the store is empty: ``1 - rho`` (rho < 1).

    Raises:
        PreconditionError: if ``rho >= 1`` (no stationary empty fraction:
            the store either drains forever or grows without bound).
    """
    rho = params.rho
    if rho >= 1.0:
        raise PreconditionError(
            f"stationary outage fraction requires rho < 1, got rho = {rho}"
        )
    return 1.0 - rho


def outage_duration_cdf(params: SystemParams, x: float) -> float:
    """CDF of a single outage's duration in the stationary ``rho < 1`` regime.

    An outage ends at the next arrival, so the duration is the memoryless
    residual gap: ``1 - exp(-lam x)``.
    """
    x = float(x)
    if x < 0.0:
        raise PreconditionError(f"durations are nonnegative, got x = {x!r}")
    return -math.expm1(-params.lam * x)
