"""Two-layer (broadcast approach) block-Markov decode-and-forward.

The source splits its power ``alpha : 1 - alpha`` between two superposed
layers and the relay splits ``beta : 1 - beta``; layer ``i`` of source and
relay share correlation ``rho_i``.  The destination decodes layer 1 treating
layer 2 as interference, then layer 2.

Decoding probabilities come in three flavours:

* Monte Carlo over fading draws (exact event definitions, any parameters);
* the nested-integral form of the layer-1 and layer-2 MISO probabilities,
  conditioned on ``nu_s = a`` and integrated over the Rayleigh magnitude of
  ``h_r`` with the phase handled through the arcsine law of ``cos(phi)``;
* for uncorrelated layers, a half-plane integral in ``(nu_s, nu_r)`` with the
  inner exponential integral in closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize, minimize_scalar

from .channel import (
    ChannelParams,
    CorrelationPair,
    FadingDraw,
    PowerSplit,
    relay_layer_infos,
    two_layer_mutual_infos,
)
from .errors import DomainError, InfeasibleCorrelationError
from .montecarlo import (
    DEFAULT_SE_MULTIPLIER,
    DEFAULT_SEED,
    Provenance,
    ThroughputEstimate,
    map_chunks,
)
from .special import lambert_w

__all__ = [
    "LayerRates",
    "DecodeEvents",
    "DecodeCounts",
    "ConicClassification",
    "SisoLayering",
    "OptimizeMode",
    "TwoLayerOptimum",
    "decode_events",
    "decode_counts",
    "average_throughput_mc",
    "average_throughput_uncorrelated",
    "direct_two_layer_throughput",
    "conic_value",
    "classify_conic",
    "rho2_cap",
    "p_layer1_miso_analytic",
    "p_layer2_miso_analytic",
    "optimize_siso_layering",
    "q_min_layers",
    "oblivious_two_layer",
    "optimize_two_layer_throughput",
]

DEFAULT_TOL = 1e-6


class LayerRates(NamedTuple):
    r1: float
    r2: float


class DecodeEvents(NamedTuple):
    layer1_ok: np.ndarray | bool
    layer2_ok: np.ndarray | bool


@dataclass(frozen=True)
class DecodeCounts:
    """Success counts over ``n`` draws; ``both`` counts layer 1 and layer 2."""

    n: int
    layer1: int
    both: int

    @property
    def layer1_only(self) -> int:
        return self.layer1 - self.both

    def throughput(self, rates: LayerRates) -> float:
        return (rates.r1 * self.layer1 + rates.r2 * self.both) / self.n


@dataclass(frozen=True)
class ConicClassification:
    feasible_at_origin: bool
    rho1_cutoff: float | None
    max_r1: float
    probe_feasible: bool | None = None


# --------------------------------------------------------------------------
# events and Monte Carlo


def decode_events(
    params: ChannelParams, draw: FadingDraw, split: PowerSplit, corr: CorrelationPair, rates: LayerRates
) -> DecodeEvents:
    """Per-draw success of layer 1 and of both layers (successive decoding)."""
    info = two_layer_mutual_infos(params, draw, split, corr)
    r1, r2 = rates
    l1 = (info.i1_relay >= r1) & (np.asarray(info.i1_miso) >= r1)
    l2 = l1 & (info.i2_relay >= r2) & (np.asarray(info.i2_miso) >= r2)
    return DecodeEvents(l1, l2)


def decode_counts(
    params: ChannelParams,
    split: PowerSplit,
    corr: CorrelationPair,
    rates: LayerRates,
    n: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> DecodeCounts:
    """Count layer-1 and two-layer successes over ``n`` seeded draws."""

    def count(draw):
        ev = decode_events(params, draw, split, corr, rates)
        return int(np.count_nonzero(ev.layer1_ok)), int(np.count_nonzero(ev.layer2_ok))

    parts = map_chunks(count, n, seed, workers)
    return DecodeCounts(n, sum(p[0] for p in parts), sum(p[1] for p in parts))


def average_throughput_mc(
    params: ChannelParams,
    split: PowerSplit,
    corr: CorrelationPair,
    rates: LayerRates,
    n_samples: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
    multiplier: float = DEFAULT_SE_MULTIPLIER,
) -> ThroughputEstimate:
    """Monte Carlo ``R1 P(L1) + R2 P(L1 and L2)`` with a standard-error band.

    An infeasible correlation pair yields throughput 0.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    try:
        relay_layer_infos(params, split, corr)
    except InfeasibleCorrelationError:
        return ThroughputEstimate(0.0, 0.0, n_samples, Provenance.MONTE_CARLO, 0.0)
    counts = decode_counts(params, split, corr, rates, n_samples, seed, workers)
    r1, r2 = rates
    n = counts.n
    mean = counts.throughput(rates)
    # payoff takes values 0, r1 and r1 + r2
    second = (r1 * r1 * counts.layer1_only + (r1 + r2) ** 2 * counts.both) / n
    var = max(second - mean * mean, 0.0) * n / (n - 1) if n > 1 else 0.0
    se = math.sqrt(var / n)
    return ThroughputEstimate(mean, multiplier * se, n, Provenance.MONTE_CARLO, se)


# --------------------------------------------------------------------------
# uncorrelated layers: half-plane integrals


def _halfplane_prob(constraints: Sequence[tuple[float, float, float]], tol: float) -> float:
    """``P(ca * a + cb * b > d for every (ca, cb, d))`` for iid Exp(1) ``a, b``."""
    upper = math.log(10.0 / tol)
    points = set()
    for ca, cb, d in constraints:
        if ca != 0.0:
            points.add(d / ca)
    for i, (ca1, cb1, d1) in enumerate(constraints):
        for ca2, cb2, d2 in constraints[i + 1 :]:
            if cb1 != 0.0 and cb2 != 0.0:
                den = ca1 / cb1 - ca2 / cb2
                if den != 0.0:
                    points.add((d1 / cb1 - d2 / cb2) / den)
    points = sorted(p for p in points if 0.0 < p < upper)

    def inner(a):
        lo, hi = 0.0, math.inf
        for ca, cb, d in constraints:
            rhs = d - ca * a
            if cb > 0.0:
                lo = max(lo, rhs / cb)
            elif cb < 0.0:
                hi = min(hi, rhs / cb)
            elif not rhs < 0.0:
                return 0.0
        if hi <= lo:
            return 0.0
        return (math.exp(-lo) - (math.exp(-hi) if hi < math.inf else 0.0)) * math.exp(-a)

    edges = [0.0, *points, upper]
    total = 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        val, _ = quad(inner, x0, x1, epsabs=tol / (4 * len(edges)), epsrel=1e-12, limit=200)
        total += val
    return min(max(total, 0.0), 1.0)


def _uncorrelated_constraints(params, split, rates, with_relay=True):
    e1 = math.exp(rates.r1)
    pr = params.p_r if with_relay else 0.0
    layer1 = (params.p_s * (1.0 - split.alpha_bar * e1), pr * (1.0 - split.beta_bar * e1), math.expm1(rates.r1))
    layer2 = (split.alpha_bar * params.p_s, split.beta_bar * pr, math.expm1(rates.r2))
    return layer1, layer2


def direct_two_layer_throughput(p_s: float, alpha: float, rates: LayerRates) -> float:
    """Two-layer throughput of the source alone (relay silent)."""
    e1 = math.exp(rates.r1)
    ab = 1.0 - alpha
    g1 = 1.0 - ab * e1
    p1 = math.exp(-math.expm1(rates.r1) / (p_s * g1)) if g1 > 0.0 else 0.0
    if rates.r1 <= 0.0:
        p1 = 1.0
    if rates.r2 <= 0.0:
        p2 = 1.0
    elif ab <= 0.0:
        p2 = 0.0
    else:
        p2 = math.exp(-math.expm1(rates.r2) / (ab * p_s))
    return rates.r1 * p1 + rates.r2 * min(p1, p2)


def relay_decodes(params: ChannelParams, split: PowerSplit, rates: LayerRates, corr=CorrelationPair()) -> bool:
    """Whether the relay can decode both layers at the given correlation."""
    i1, i2 = relay_layer_infos(params, split, corr)
    return i1 >= rates.r1 and i2 >= rates.r2


def average_throughput_uncorrelated(
    params: ChannelParams, split: PowerSplit, rates: LayerRates, tol: float = DEFAULT_TOL
) -> ThroughputEstimate:
    """Uncorrelated two-layer throughput by quadrature.

    When the relay cannot decode both layers it stays silent and the
    source-only value is returned instead.
    """
    if not relay_decodes(params, split, rates):
        val = direct_two_layer_throughput(params.p_s, split.alpha, rates)
        return ThroughputEstimate(val, 0.0, 0, Provenance.ANALYTIC)
    c1, c2 = _uncorrelated_constraints(params, split, rates)
    p1 = _halfplane_prob([c1], tol / 4) if rates.r1 > 0 else 1.0
    p12 = _halfplane_prob([c1, c2], tol / 4) if rates.r2 > 0 else p1
    val = rates.r1 * p1 + rates.r2 * p12
    return ThroughputEstimate(val, 0.0, 0, Provenance.QUADRATURE)


# --------------------------------------------------------------------------
# relay feasibility conic


def conic_value(params: ChannelParams, split: PowerSplit, r1: float, rho1: float, rho2: float) -> float:
    """Left-hand side of the layer-1 relay decodability quadratic in ``(rho1, rho2)``.

    Positive exactly when the relay decodes layer 1 at rate ``r1``.
    """
    ps, q = params.p_s, params.q
    a, b, ab, bb = split.alpha, split.beta, split.alpha_bar, split.beta_bar
    e1 = math.exp(r1)
    return (
        -ps * q * a * b * rho1 * rho1
        + (q * ab * ps * e1 - ps * q * ab * bb) * rho2 * rho2
        - 2.0 * ps * q * math.sqrt(a * b * ab * bb) * rho1 * rho2
        + (1.0 + ps * q - e1 * (1.0 + q * ab * ps))
    )


def _conic_scale(params, r1):
    return 1.0 + params.p_s * params.q * math.exp(r1)


def classify_conic(
    params: ChannelParams, split: PowerSplit, rates: LayerRates, corr_probe: CorrelationPair | None = None
) -> ConicClassification:
    """Sign at the origin, smallest infeasible ``rho1`` and the layer-1 rate cap.

    Values within ``1e-12`` (relative) of zero count as infeasible.
    """
    r1 = rates.r1
    eps = 1e-12 * _conic_scale(params, r1)
    f0 = conic_value(params, split, r1, 0.0, 0.0)
    lead = params.p_s * params.q * split.alpha * split.beta
    cutoff = None
    if f0 > eps and lead > 0.0:
        rho_star = math.sqrt(f0 / lead)
        cutoff = rho_star if rho_star <= 1.0 else None
    elif f0 <= eps:
        cutoff = 0.0
    max_r1 = math.log1p(params.p_s * params.q * (1.0 - split.alpha_bar * split.beta_bar))
    probe = None
    if corr_probe is not None:
        probe = conic_value(params, split, r1, corr_probe.rho1, corr_probe.rho2) > eps
    return ConicClassification(f0 > eps, cutoff, max_r1, probe)


def rho2_cap(params: ChannelParams, split: PowerSplit, r2: float) -> float:
    """Largest ``rho2`` letting the relay decode layer 2 at rate ``r2``."""
    denom = params.q * split.alpha_bar * params.p_s
    if denom <= 0.0:
        return 1.0 if r2 <= 0.0 else 0.0
    arg = 1.0 - math.expm1(r2) / denom
    return math.sqrt(arg) if arg > 0.0 else 0.0


# --------------------------------------------------------------------------
# analytic MISO decoding probabilities


_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)
# u = mid - half cos(theta) removes the square-root endpoint behaviour of arcsin
_THETA = 0.5 * math.pi * (_GL_X + 1.0)
_THETA_W = 0.5 * math.pi * _GL_W * np.sin(_THETA)
_COS_THETA = np.cos(_THETA)


def _rayleigh_phase_success(b: float, c: float, kappa: float) -> float:
    """``P(kappa u cos(phi) > c - b u^2)`` with ``u^2 ~ Exp(1)``, ``phi ~ U[0, 2pi)``.

    Outside ``[u_lo, u_hi]`` the event is certain or impossible; between the
    roots the arcsine law of ``cos(phi)`` applies.
    """
    if kappa <= 0.0:
        if c < 0.0:
            return 1.0
        return math.exp(-c / b) if b > 0.0 else (1.0 if c <= 0.0 else 0.0)
    disc = kappa * kappa + 4.0 * b * c
    if c >= 0.0:
        sq = math.sqrt(disc)
        u_lo = 2.0 * c / (kappa + sq)
        u_hi = (kappa + sq) / (2.0 * b)
        base = 0.5 * (math.exp(-u_lo * u_lo) + math.exp(-u_hi * u_hi))
    else:
        if disc <= 0.0:
            return 1.0
        sq = math.sqrt(disc)
        u_lo = -2.0 * c / (kappa + sq)
        u_hi = (kappa + sq) / (2.0 * b)
        base = 1.0 - 0.5 * (math.exp(-u_lo * u_lo) - math.exp(-u_hi * u_hi))
    mid, half = 0.5 * (u_lo + u_hi), 0.5 * (u_hi - u_lo)
    u = mid - half * _COS_THETA
    f = np.clip((c - b * u * u) / (kappa * u), -1.0, 1.0)
    integral = half * np.dot(_THETA_W, u * np.exp(-u * u) * np.arcsin(f))
    return base - 2.0 / math.pi * integral


def _miso_layer_probability(b: float, c0: float, c1: float, k2: float, tol: float) -> float:
    """``int_0^inf e^-a P(kappa(a) u cos(phi) > c0 - c1 a - b u^2) da`` with ``kappa^2 = k2 a``.

    The outer integral breaks where ``c0 - c1 a`` changes sign and at the
    point beyond which the event holds for every ``u`` (``k2 a + 4 b c = 0``).
    """
    if c0 <= 0.0:
        return 1.0
    upper = math.log(10.0 / tol)
    a_zero = c0 / c1 if c1 > 0.0 else math.inf
    den = 4.0 * b * c1 - k2
    a_all = 4.0 * b * c0 / den if den > 0.0 else math.inf
    stop = min(a_all, upper)

    def integrand(a):
        return math.exp(-a) * _rayleigh_phase_success(b, c0 - c1 * a, math.sqrt(k2 * a))

    edges = [0.0] + ([a_zero] if a_zero < stop else []) + [stop]
    total = 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        val, _ = quad(integrand, x0, x1, epsabs=tol / 8, epsrel=1e-10, limit=200)
        total += val
    if a_all <= upper:
        total += math.exp(-a_all)
    return min(max(total, 0.0), 1.0)


def p_layer1_miso_analytic(
    params: ChannelParams, split: PowerSplit, corr: CorrelationPair, r1: float, tol: float = DEFAULT_TOL
) -> float:
    """Probability that the destination's MISO link supports layer 1 at ``r1``.

    The fading power whose coefficient ``1 - (1 - alpha) e^r1`` or
    ``1 - (1 - beta) e^r1`` is positive takes the inner (Rayleigh magnitude
    and phase) integral; the other is integrated outside.  At least one of
    the two coefficients must be positive.

    Raises
    ------
    DomainError
        If both coefficients are non-positive; use :func:`decode_counts`.
    """
    if r1 <= 0.0:
        return 1.0
    ps, pr = params.p_s, params.p_r
    e1 = math.exp(r1)
    g_s = ps * (1.0 - split.alpha_bar * e1)
    g_r = pr * (1.0 - split.beta_bar * e1)
    if g_s <= 0.0 and g_r <= 0.0:
        raise DomainError("layer-1 rate exceeds what either transmitter alone can reach at this power split")
    cross = corr.rho1 * math.sqrt(split.alpha * split.beta) + corr.rho2 * (1.0 - e1) * math.sqrt(
        split.alpha_bar * split.beta_bar
    )
    # only |k| matters: cos(phi) and -cos(phi) share a distribution
    k2 = 4.0 * ps * pr * cross * cross
    inner, outer = (g_r, g_s) if g_r > 0.0 else (g_s, g_r)
    return _miso_layer_probability(inner, e1 - 1.0, outer, k2, tol)


def p_layer2_miso_analytic(
    params: ChannelParams, split: PowerSplit, rho2: float, r2: float, tol: float = DEFAULT_TOL
) -> float:
    """Probability that the MISO link supports layer 2 after cancelling layer 1.

    Upper-bounds the joint probability that both layers decode.
    """
    if not 0.0 <= rho2 <= 1.0:
        raise DomainError(f"rho2 must lie in [0, 1], got {rho2}")
    if r2 <= 0.0:
        return 1.0
    x = split.alpha_bar * params.p_s
    y = split.beta_bar * params.p_r
    if x <= 0.0 and y <= 0.0:
        return 0.0
    k2 = 4.0 * rho2 * rho2 * x * y
    if y <= 0.0:
        return math.exp(-math.expm1(r2) / x)
    return _miso_layer_probability(y, math.expm1(r2), x, k2, tol)


# --------------------------------------------------------------------------
# SISO layering and collocation thresholds


@dataclass(frozen=True)
class SisoLayering:
    """Discrete superposition layering for a single-antenna fading link.

    ``thresholds[i]`` is the fading power at which layer ``i`` becomes
    decodable, ``splits`` the power fractions (summing to 1) and
    ``objective`` the average throughput ``sum R_i exp(-eta_i)``.
    """

    p_s: float
    thresholds: tuple[float, ...]
    rates: tuple[float, ...]
    splits: tuple[float, ...]
    objective: float

    @property
    def n_layers(self) -> int:
        return len(self.thresholds)

    @property
    def residual_powers(self) -> tuple[float, ...]:
        """Interference power left after decoding layers ``1..i`` (``i = 0..N``)."""
        out = [self.p_s]
        for f in self.splits:
            out.append(max(out[-1] - f * self.p_s, 0.0))
        out[-1] = 0.0
        return tuple(out)


def _phi(z: float) -> float:
    if z == 0.0:
        return 1.0
    return -math.expm1(-z) / z


def _layer_term(eta: float, upper: float, lower: float) -> float:
    return (math.log1p(eta * upper) - math.log1p(eta * lower)) * math.exp(-eta)


def _best_threshold(upper: float, lower: float) -> float:
    """Threshold maximising ``log((1 + eta U)/(1 + eta L)) e^-eta``."""
    if upper - lower <= 1e-14 * max(upper, 1e-300):
        # vanishing layer: limit of the stationary condition
        return 1.0 if lower == 0.0 else (math.sqrt(1.0 + 4.0 * lower) - 1.0) / (2.0 * lower)
    if lower == 0.0:
        return _phi(lambert_w(upper))

    def slope(e):
        return upper / (1 + e * upper) - lower / (1 + e * lower) - (math.log1p(e * upper) - math.log1p(e * lower))

    hi = 1.0
    while slope(hi) > 0.0:
        hi *= 2.0
    return brentq(slope, 0.0, hi, xtol=1e-15, rtol=1e-15)


def _coordinate_ascent(p_s: float, n: int, shrink: float, max_sweeps: int, tol: float):
    levels = [p_s * shrink**i for i in range(n)] + [0.0]
    eta = [0.0] * n
    prev = -math.inf
    obj = 0.0
    for _ in range(max_sweeps):
        for i in range(n):
            eta[i] = _best_threshold(levels[i], levels[i + 1])
        for i in range(1, n):
            e_a, e_b = eta[i - 1], eta[i]
            lo, hi = levels[i + 1], levels[i - 1]
            cands = [lo, hi]
            den = e_a * e_b * (math.exp(-e_b) - math.exp(-e_a))
            if den != 0.0:
                stat = (e_a * math.exp(-e_a) - e_b * math.exp(-e_b)) / den
                cands.append(min(max(stat, lo), hi))
            upper, lower = levels[i - 1], levels[i + 1]
            levels[i] = max(cands, key=lambda x: _layer_term(e_a, upper, x) + _layer_term(e_b, x, lower))
        obj = sum(_layer_term(eta[i], levels[i], levels[i + 1]) for i in range(n))
        if obj - prev < tol:
            break
        prev = obj
    return obj, eta, levels


def optimize_siso_layering(
    p_s: float, n_layers: int, starts: Sequence[float] = (0.1, 0.4), max_sweeps: int = 20000
) -> SisoLayering:
    """Thresholds and power fractions maximising ``sum R_i exp(-eta_i)``.

    Layer ``i`` carries ``R_i = log((1 + eta_i I_{i-1}) / (1 + eta_i I_i))``
    where ``I_i`` is the power of the layers not yet decoded.  Coordinate
    ascent alternates the per-layer threshold (a 1-D root solve) with the
    residual powers (closed-form stationary point, clamped); the best of
    several geometric starting profiles is kept.
    """
    if n_layers < 1:
        raise DomainError("need at least one layer")
    if p_s <= 0:
        raise DomainError("p_s must be positive")
    best = None
    for s in starts if n_layers > 1 else starts[:1]:
        res = _coordinate_ascent(p_s, n_layers, s, max_sweeps, 1e-15)
        if best is None or res[0] > best[0]:
            best = res
    obj, eta, levels = best
    rates = tuple(math.log1p(eta[i] * levels[i]) - math.log1p(eta[i] * levels[i + 1]) for i in range(n_layers))
    splits = tuple((levels[i] - levels[i + 1]) / p_s for i in range(n_layers))
    return SisoLayering(p_s, tuple(eta), rates, splits, obj)


def q_min_layers(p_s: float, layering: SisoLayering) -> float:
    """Collocation gain the relay needs to decode every layer: the last threshold."""
    if not math.isclose(layering.p_s, p_s, rel_tol=1e-12):
        raise DomainError("layering was optimised for a different source power")
    return layering.thresholds[-1]


# --------------------------------------------------------------------------
# two-layer throughput optimisation


class OptimizeMode(enum.Enum):
    UNCORRELATED_ANALYTIC = "uncorrelated-analytic"
    CORRELATED_MC = "correlated-mc"


@dataclass(frozen=True)
class TwoLayerOptimum:
    split: PowerSplit
    corr: CorrelationPair
    rates: LayerRates
    value: float


def oblivious_two_layer(params: ChannelParams, beta: float | None = None) -> TwoLayerOptimum:
    """Evaluate the single-antenna optimal two-layer code over the relay channel.

    The source keeps the rates and split that are best without a relay; the
    relay split ``beta`` is optimised unless given.
    """
    lay = optimize_siso_layering(params.p_s, 2)
    alpha = lay.splits[0]
    rates = LayerRates(*lay.rates)

    def value(b):
        return average_throughput_uncorrelated(params, PowerSplit(alpha, b), rates).value

    if beta is None:
        res = minimize_scalar(lambda b: -value(b), bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-6})
        beta = float(res.x)
        if value(alpha) >= -res.fun:
            beta = alpha
    return TwoLayerOptimum(PowerSplit(alpha, beta), CorrelationPair(), rates, value(beta))


_SEARCH_KEYS = ("alpha", "beta", "r1", "r2")


class _Evaluator:
    """Counts evaluations of the uncorrelated throughput and clamps inputs."""

    def __init__(self, params, fixed, tol, budget):
        self.params, self.fixed, self.tol, self.budget = params, fixed, tol, budget
        self.calls = 0
        r_hi = math.log1p(10.0 * params.total_power)
        self.bounds = {"alpha": (0.0, 1.0), "beta": (0.0, 1.0), "r1": (0.0, r_hi), "r2": (0.0, r_hi)}
        self.best = (-math.inf, None)

    def __call__(self, cfg: dict) -> float:
        cfg = {k: min(max(float(cfg[k]), lo), hi) for k, (lo, hi) in self.bounds.items()} | self.fixed
        self.calls += 1
        val = average_throughput_uncorrelated(
            self.params, PowerSplit(cfg["alpha"], cfg["beta"]), LayerRates(cfg["r1"], cfg["r2"]), self.tol
        ).value
        if val > self.best[0] + 1e-12:
            self.best = (val, cfg)
        return val

    @property
    def exhausted(self) -> bool:
        return self.calls >= self.budget

    def nelder_mead(self, start: dict, keys, maxfev: int, scale: float = 0.1):
        keys = [k for k in keys if k not in self.fixed]
        if not keys or maxfev <= 0:
            return self(start)
        x0 = np.array([start[k] for k in keys])
        simplex = [x0] + [x0 + scale * np.eye(len(keys))[i] * (1.0 if x0[i] < 0.5 * self.bounds[k][1] else -1.0)
                          for i, k in enumerate(keys)]
        res = minimize(
            lambda x: -self({**start, **dict(zip(keys, x))}),
            x0,
            method="Nelder-Mead",
            options={"maxfev": maxfev, "xatol": 1e-7, "fatol": 1e-11, "initial_simplex": np.array(simplex)},
        )
        return -res.fun


def optimize_two_layer_throughput(
    params: ChannelParams,
    mode: OptimizeMode = OptimizeMode.UNCORRELATED_ANALYTIC,
    budget: int = 4000,
    fixed: dict | None = None,
    rho_grid: int = 11,
    n_samples: int = 100_000,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
    tol: float = DEFAULT_TOL,
) -> TwoLayerOptimum:
    """Best two-layer configuration found within ``budget`` evaluations.

    ``UNCORRELATED_ANALYTIC`` works on the quadrature throughput: rates are
    refined by Nelder-Mead from the best single-layer code, the oblivious
    code and a coarse lattice of power splits, then all four of
    ``(alpha, beta, r1, r2)`` are polished together.  ``CORRELATED_MC``
    then scans a ``rho_grid x rho_grid`` lattice of correlation pairs with
    common random numbers, ``rho2`` capped so the relay can still decode
    layer 2.  Ties within 1e-9 prefer smaller ``(rho1, rho2)``.
    ``fixed`` pins any of ``alpha, beta, r1, r2``.
    """
    from .single_layer import maximize_throughput

    fixed = {k: float(v) for k, v in (fixed or {}).items()}
    unknown = set(fixed) - set(_SEARCH_KEYS)
    if unknown:
        raise DomainError(f"unknown fixed parameter(s): {sorted(unknown)}")
    ev = _Evaluator(params, fixed, tol, budget)
    obl = oblivious_two_layer(params)
    r_single, _ = maximize_throughput(params)
    starts = [
        {"alpha": 1.0, "beta": 1.0, "r1": r_single, "r2": 0.0},
        {"alpha": obl.split.alpha, "beta": obl.split.beta, "r1": obl.rates.r1, "r2": obl.rates.r2},
    ]
    # coarse split lattice with the rates refined per cell
    lattice = np.linspace(0.5, 1.0, 6)
    per_cell = max(budget // (4 * (len(lattice) ** 2 + len(starts))), 20)
    for st in starts:
        ev.nelder_mead({**st, **fixed}, ("r1", "r2"), per_cell)
    for a in lattice:
        for b in lattice:
            if ev.exhausted:
                break
            base = dict(ev.best[1])
            base.update(alpha=float(a), beta=float(b))
            ev.nelder_mead({**base, **fixed}, ("r1", "r2"), per_cell)
    remaining = max(budget - ev.calls, 0)
    ev.nelder_mead(dict(ev.best[1]), _SEARCH_KEYS, remaining, scale=0.02)
    best_val, best_cfg = ev.best
    split = PowerSplit(best_cfg["alpha"], best_cfg["beta"])
    rates = LayerRates(best_cfg["r1"], best_cfg["r2"])
    result = TwoLayerOptimum(split, CorrelationPair(), rates, best_val)
    if mode is OptimizeMode.UNCORRELATED_ANALYTIC:
        return result

    cap = rho2_cap(params, split, rates.r2)
    grid = np.linspace(0.0, 1.0, rho_grid)
    best = None
    for r1c in grid:
        for r2c in grid:
            if r2c > cap + 1e-12:
                continue
            corr = CorrelationPair(float(r1c), float(r2c))
            est = average_throughput_mc(params, split, corr, rates, n_samples, seed, workers)
            if best is None or est.value > best[0].value + 1e-9:
                best = (est, corr)
    return TwoLayerOptimum(split, best[1], rates, best[0].value)
