"""Single-layer block-Markov decode-and-forward over Rayleigh fading.

Success probabilities, correlated and uncorrelated throughput, the
correlation-region classifier, collocation-gain thresholds and the numeric
audits behind the claim that uncorrelated transmission maximises throughput.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .channel import ChannelParams
from .errors import DomainError, InfeasibleRateError
from .special import WBranch, lambert_w

__all__ = [
    "ThroughputMode",
    "RegionKind",
    "RhoRegion",
    "CorrelatedAllocation",
    "Conjecture1Report",
    "pair_success",
    "success_prob_su",
    "success_prob_pair",
    "crossover_x0",
    "gamma0",
    "classify_rho_region",
    "correlated_allocation",
    "max_correlated_rate",
    "throughput",
    "throughput_or_zero",
    "throughput_slope",
    "maximize_throughput",
    "first_rho_max_rate",
    "oblivious_su_rate",
    "direct_throughput",
    "oblivious_bm_throughput",
    "q_min_single",
    "p_s_star",
    "equal_power_stationary_power",
    "k_ratio",
    "unequal_power_ratio",
    "audit_conjecture1",
    "unimodality_check",
]

DEFAULT_GAMMA = 1.5


class ThroughputMode(enum.Enum):
    RHO_ZERO = "rho-zero"
    RHO_MAX = "rho-max"


class RegionKind(enum.Enum):
    ZERO_OPTIMAL = "zero-optimal"
    AMBIGUOUS = "ambiguous"
    MAX_OPTIMAL = "max-optimal"


@dataclass(frozen=True)
class RhoRegion:
    kind: RegionKind
    r_low: float
    r_high: float


@dataclass(frozen=True)
class CorrelatedAllocation:
    """Effective power split ``p0 >= p0_bar`` produced by maximal correlation."""

    p0: float
    p0_bar: float
    skew_delta: float


def _phi(z: float) -> float:
    # (1 - exp(-z)) / z, continuous at 0
    if z == 0.0:
        return 1.0
    return -math.expm1(-z) / z


def pair_success(x: float, y: float, c: float) -> float:
    """``P(nu_1 x + nu_2 y > c)`` for iid unit exponentials.

    Evaluated as ``exp(-c/x) (1 + (c/x) phi(z))`` with ``x >= y``,
    ``z = c (x - y) / (x y)`` and ``phi(z) = (1 - e^-z)/z``; this equals
    ``(x e^{-c/x} - y e^{-c/y}) / (x - y)`` and ``(1 + c/x) e^{-c/x}`` at
    ``x = y`` without cancellation near the diagonal.
    """
    if c <= 0.0:
        return 1.0
    x, y = max(x, y), min(x, y)
    if x <= 0.0:
        return 0.0
    lead = math.exp(-c / x)
    if y <= 0.0:
        return lead
    z = c * (x - y) / (x * y)
    return lead * (1.0 + (c / x) * _phi(z))


def success_prob_su(rate: float, p: float) -> float:
    """Single-antenna success probability ``exp(-(e^R - 1)/p)``."""
    if rate < 0 or p <= 0:
        raise DomainError("success_prob_su needs rate >= 0 and p > 0")
    return math.exp(-math.expm1(rate) / p)


def success_prob_pair(rate: float, x: float, y: float) -> float:
    """Two-antenna uncorrelated success probability with powers ``x``, ``y``."""
    if x <= 0 or y <= 0:
        raise DomainError("success_prob_pair needs positive powers")
    return pair_success(x, y, math.expm1(rate))


def crossover_x0() -> float:
    """Normalised threshold where equal-power MISO and single-user success cross.

    Root of ``(1 + x) exp(-x/2) = 1`` on the -1 Lambert branch.
    """
    return -2.0 * lambert_w(-0.5 * math.exp(-0.5), WBranch.MINUS_ONE) - 1.0


def gamma0() -> float:
    """Lower end of the ambiguous-correlation rate region, ``x0 / 2``."""
    return -lambert_w(-0.5 * math.exp(-0.5), WBranch.MINUS_ONE) - 0.5


def classify_rho_region(
    rate: float, params: ChannelParams, gamma: float = DEFAULT_GAMMA, q_infinite: bool = False
) -> RhoRegion:
    """Which correlation is optimal at ``rate``.

    ``gamma`` is the upper region constant (3/2 for equal powers). With
    ``q_infinite`` the ambiguous band collapses onto its lower boundary.
    """
    g0 = gamma0()
    if gamma < g0:
        raise DomainError(f"gamma={gamma} is below gamma0={g0:.6f}")
    p = params.total_power
    r_low, r_high = math.log1p(g0 * p), math.log1p(gamma * p)
    if rate < r_low:
        kind = RegionKind.ZERO_OPTIMAL
    elif q_infinite or rate > r_high:
        kind = RegionKind.MAX_OPTIMAL
    else:
        kind = RegionKind.AMBIGUOUS
    return RhoRegion(kind, r_low, r_high)


def max_correlated_rate(params: ChannelParams) -> float:
    """Largest rate for which the maximal-correlation allocation exists."""
    if params.p_r == 0.0:
        return math.inf
    p = params.total_power
    return math.log1p(params.q * p * p / (4.0 * params.p_r))


def correlated_allocation(rate: float, params: ChannelParams) -> CorrelatedAllocation:
    """Power split induced by the largest correlation the relay link allows.

    ``p0 = (P + sqrt(P^2 - 4 P_r (e^R - 1)/Q)) / 2`` and ``p0_bar = P - p0``.
    """
    p = params.total_power
    c = math.expm1(rate)
    disc = p * p - 4.0 * params.p_r * c / params.q
    if -1e-12 * p * p <= disc < 0.0:
        # rounding at the cap itself
        disc = 0.0
    if disc < 0.0:
        raise InfeasibleRateError(f"rate {rate} exceeds what the relay link carries at maximal correlation")
    root = math.sqrt(disc)
    p0_bar = 2.0 * params.p_r * c / (params.q * (p + root))
    p0 = p - p0_bar
    return CorrelatedAllocation(p0, p0_bar, (p0 - p0_bar) / p)


def throughput(rate: float, params: ChannelParams, mode: ThroughputMode = ThroughputMode.RHO_ZERO) -> float:
    """Average throughput ``R * P(success)`` in nats/channel use."""
    if rate <= 0.0:
        return 0.0
    c = math.expm1(rate)
    if mode is ThroughputMode.RHO_ZERO:
        return rate * pair_success(params.p_s, params.p_r, c)
    alloc = correlated_allocation(rate, params)
    return rate * pair_success(alloc.p0, alloc.p0_bar, c)


def throughput_or_zero(rate: float, params: ChannelParams, mode: ThroughputMode) -> float:
    """:func:`throughput`, with rates the relay cannot carry counted as 0."""
    try:
        return throughput(rate, params, mode)
    except InfeasibleRateError:
        return 0.0


def throughput_slope(rate: float, p_s: float, p_r: float) -> float:
    """d/dR of ``R * r(p_s, p_r, e^R - 1)``, the uncorrelated throughput."""
    x, y = max(p_s, p_r), min(p_s, p_r)
    c = math.expm1(rate)
    ree = rate * math.exp(rate)
    lead = math.exp(-c / x)
    if y <= 0.0:
        return lead * (1.0 - ree / x)
    z = c * (x - y) / (x * y)
    if z < 1.0:
        frac = _phi(z) * c / (x * y)
    else:
        frac = -math.expm1(-z) / (x - y)
    # r + R e^R dr/dc with r = lead (1 + y frac) and dr/dc = -lead frac
    return lead * (1.0 + (y - ree) * frac)


def _rate_bracket(params: ChannelParams, mode: ThroughputMode) -> tuple[float, float]:
    hi = math.log1p(1e3 * params.total_power)
    if mode is ThroughputMode.RHO_MAX:
        hi = min(hi, max_correlated_rate(params))
    return 1e-6, hi


def maximize_throughput(
    params: ChannelParams, mode: ThroughputMode = ThroughputMode.RHO_ZERO, grid: int = 2001
) -> tuple[float, float]:
    """Rate maximising :func:`throughput` and the maximal value.

    A log-spaced scan brackets the maximiser, bounded Brent refines it to
    1e-10, and for the uncorrelated mode a root solve of the slope finishes.
    """
    lo, hi = _rate_bracket(params, mode)
    rates = np.geomspace(lo, hi, grid)
    vals = np.array([throughput_or_zero(r, params, mode) for r in rates])
    i = int(np.argmax(vals))
    a, b = rates[max(i - 1, 0)], rates[min(i + 1, grid - 1)]
    res = minimize_scalar(
        lambda r: -throughput_or_zero(r, params, mode), bounds=(a, b), method="bounded", options={"xatol": 1e-10}
    )
    r_star = float(res.x)
    if mode is ThroughputMode.RHO_ZERO:
        f = lambda r: throughput_slope(r, params.p_s, params.p_r)
        if f(a) > 0.0 > f(b):
            r_star = brentq(f, a, b, xtol=1e-15, rtol=1e-15)
    return r_star, throughput(r_star, params, mode)


def first_rho_max_rate(params: ChannelParams, step: float = 1e-3) -> float | None:
    """First rate on a ``step`` grid where maximal correlation beats ``rho = 0``.

    Returns ``None`` if the maximal-correlation scheme never wins before it
    becomes infeasible.
    """
    r_cap = min(max_correlated_rate(params), math.log1p(1e3 * params.total_power))
    k = 1
    while k * step <= r_cap:
        rate = k * step
        if throughput(rate, params, ThroughputMode.RHO_MAX) > throughput(rate, params, ThroughputMode.RHO_ZERO):
            return rate
        k += 1
    return None


def oblivious_su_rate(p_s: float) -> float:
    """Throughput-optimal single-user rate ``W(P_s)``."""
    if p_s <= 0:
        raise DomainError("p_s must be positive")
    return lambert_w(p_s)


def direct_throughput(p: float) -> float:
    """Best single-user throughput at power ``p``: ``W(p) exp(-(1/W(p) - 1/p))``."""
    w = lambert_w(p)
    return w * math.exp(-q_min_single(p))


def oblivious_bm_throughput(params: ChannelParams) -> float:
    """Throughput when the source keeps its single-user rate ``W(P_s)``.

    The relay joins when it can decode that rate (``Q`` above
    :func:`q_min_single`); otherwise the destination sees the source alone.
    """
    rate = oblivious_su_rate(params.p_s)
    c = math.expm1(rate)
    if rate <= math.log1p(params.p_s * params.q):
        return rate * pair_success(params.p_s, params.p_r, c)
    return rate * math.exp(-c / params.p_s)


def q_min_single(p_s: float) -> float:
    """Smallest collocation gain letting the relay decode ``W(P_s)``.

    ``(e^W - 1)/P_s = 1/W - 1/P_s``, computed as ``(1 - e^{-W})/W``.
    """
    w = oblivious_su_rate(p_s)
    return _phi(w)


def p_s_star(q: float) -> float:
    """Source power above which the relay decodes the single-user rate.

    Solves ``W(P) = log(1 + P q)``; returns 0 for ``q >= 1`` where the
    condition holds for every power.
    """
    if q <= 0:
        raise DomainError(f"collocation gain must be positive, got {q}")
    if q >= 1.0:
        return 0.0
    inv = 1.0 / q
    w = lambert_w(-inv * math.exp(-inv), WBranch.PRINCIPAL)
    return math.expm1(w + inv) / q


def equal_power_stationary_power(rate: float) -> float:
    """Equal source/relay power at which ``rate`` maximises uncorrelated throughput."""
    c = math.expm1(rate)
    return 0.5 * (-c + math.sqrt(c * c + 4.0 * rate * c * math.exp(rate)))


def k_ratio(alpha: float, s: float) -> float:
    """``k(alpha)`` for the correlated-throughput comparison at skew scale ``s``.

    Equals the two-antenna success ``r(1 + d, 1 - d, 2 alpha)`` with
    ``d = sqrt(1 - 2 alpha / s)``.
    """
    arg = 1.0 - 2.0 * alpha / s
    if arg < -1e-12:
        raise DomainError(f"alpha={alpha} exceeds s/2={s / 2}")
    d = math.sqrt(max(arg, 0.0))
    return pair_success(1.0 + d, 1.0 - d, 2.0 * alpha)


@dataclass
class Conjecture1Report:
    """Outcome of :func:`audit_conjecture1`."""

    r0: float
    trivially_holds: bool
    slope_at_r0: float = math.nan
    equal_power_bound: bool | None = None
    unequal_power_bound: bool | None = None
    source_dominant_bound: bool | None = None
    s: float = math.nan
    alphas: list[float] = field(default_factory=list)
    alpha_k_alpha: list[float] = field(default_factory=list)
    k1: float = math.nan
    throughput_ratio: list[float] = field(default_factory=list)

    @property
    def slope_negative(self) -> bool:
        return self.trivially_holds or self.slope_at_r0 < 0.0

    @property
    def alpha_checks(self) -> list[bool]:
        return [ak < self.k1 for ak in self.alpha_k_alpha]

    @property
    def passed(self) -> bool:
        if self.trivially_holds:
            return True
        subs = [v for v in (self.equal_power_bound, self.unequal_power_bound, self.source_dominant_bound) if v is not None]
        return self.slope_negative and all(subs) and all(self.alpha_checks)


def unequal_power_ratio(p_s: float, p_r: float) -> float:
    """``(P_s e^{-P_r/P_s} - P_r e^{-P_s/P_r}) / (e^{-P_r/P_s} - e^{-P_s/P_r})``.

    Extended continuously by ``3 P_s / 2`` at ``P_s = P_r``.
    """
    if p_s <= 0 or p_r <= 0:
        raise DomainError("powers must be positive")
    if abs(p_s - p_r) <= 1e-9 * max(p_s, p_r):
        return 0.75 * (p_s + p_r)
    a, b = math.exp(-p_r / p_s), math.exp(-p_s / p_r)
    return (p_s * a - p_r * b) / (a - b)


def audit_conjecture1(params: ChannelParams, alpha_grid=None, n_alpha: int = 200) -> Conjecture1Report:
    """Numerically check the inequalities showing ``rho = 0`` is throughput-optimal.

    Checks that the uncorrelated throughput is decreasing at
    ``R0 = log(1 + P)``, the supporting scalar inequalities for the
    equal/unequal power cases, and for ``alpha`` in ``(1, P_s Q / P]`` that
    ``alpha k(alpha) < k(1)`` with ``s = P Q / (2 P_r)``.
    """
    ps, pr, q = params.p_s, params.p_r, params.q
    p = ps + pr
    r0 = math.log1p(p)
    if ps * q < p:
        return Conjecture1Report(r0=r0, trivially_holds=True)
    rep = Conjecture1Report(r0=r0, trivially_holds=False)
    rep.slope_at_r0 = throughput_slope(r0, ps, pr)
    rhs = math.log1p(p) * (1.0 + p)
    if math.isclose(ps, pr, rel_tol=1e-12):
        rep.equal_power_bound = 1.5 * ps < math.log1p(2.0 * ps) * (1.0 + 2.0 * ps)
    else:
        lhs = unequal_power_ratio(ps, pr)
        rep.unequal_power_bound = lhs < rhs
        if ps > pr:
            rep.source_dominant_bound = lhs < p
    if pr == 0.0:
        return rep
    rep.s = p * q / (2.0 * pr)
    alpha_max = ps * q / p
    if alpha_grid is None:
        alpha_grid = np.linspace(1.0, alpha_max, n_alpha + 1)[1:] if alpha_max > 1.0 else []
    rep.k1 = k_ratio(1.0, rep.s)
    f0 = throughput(r0, params, ThroughputMode.RHO_MAX)
    for a in alpha_grid:
        a = float(a)
        rep.alphas.append(a)
        rep.alpha_k_alpha.append(a * k_ratio(a, rep.s))
        rep.throughput_ratio.append(throughput(math.log1p(a * p), params, ThroughputMode.RHO_MAX) / f0)
    return rep


def unimodality_check(params: ChannelParams, n_grid: int = 2000) -> bool:
    """True iff the uncorrelated throughput slope changes sign exactly once.

    The slope is sampled on ``n_grid`` log-spaced rates in
    ``[1e-6, log(1 + 1e3 P)]``.
    """
    rates = np.geomspace(1e-6, math.log1p(1e3 * params.total_power), max(n_grid, 1000))
    signs = np.sign([throughput_slope(r, params.p_s, params.p_r) for r in rates])
    signs = signs[signs != 0]
    return int(np.count_nonzero(np.diff(signs))) == 1
