"""Static relay channel model, Rayleigh fading draws and mutual informations.

The destination sees ``h_s X_s + h_r X_r + Z_d`` and the relay sees
``sqrt(Q) X_s + Z_r`` with unit-variance noise.  Everything that depends on
the fading enters through three scalars: ``nu_s = |h_s|^2``,
``nu_r = |h_r|^2`` and the phase ``phi`` of ``h_s h_r^*``.  With real
non-negative correlation coefficients, ``Re(rho h_s h_r^*)`` is
``rho sqrt(nu_s nu_r) cos(phi)``.

All rates are in nats per channel use.  Functions accept numpy arrays in the
draw fields and broadcast over them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InfeasibleCorrelationError

__all__ = [
    "ChannelParams",
    "FadingDraw",
    "PowerSplit",
    "CorrelationPair",
    "SingleLayerRates",
    "TwoLayerInfos",
    "db_to_linear",
    "linear_to_db",
    "sample_fading",
    "df_rate_single",
    "relay_layer_infos",
    "two_layer_mutual_infos",
]


def db_to_linear(x_db):
    """``10 ** (x_db / 10)``; scalars in, floats out."""
    out = np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    """``10 log10(x)``; scalars in, floats out."""
    out = 10.0 * np.log10(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ChannelParams:
    """Source power ``p_s``, relay power ``p_r`` and collocation gain ``q`` (linear)."""

    p_s: float
    p_r: float
    q: float

    def __post_init__(self):
        for name in ("p_s", "p_r", "q"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if self.p_s <= 0:
            raise DomainError(f"p_s must be positive, got {self.p_s!r}")
        if self.p_r < 0:
            raise DomainError(f"p_r must be non-negative, got {self.p_r!r}")
        if self.q <= 0:
            raise DomainError(f"q must be positive, got {self.q!r}")

    @classmethod
    def from_db(cls, ps_db: float, pr_db: float, q_db: float) -> "ChannelParams":
        return cls(db_to_linear(ps_db), db_to_linear(pr_db), db_to_linear(q_db))

    @property
    def total_power(self) -> float:
        return self.p_s + self.p_r


@dataclass(frozen=True)
class FadingDraw:
    """One (or a vector of) fading realisations."""

    nu_s: np.ndarray | float
    nu_r: np.ndarray | float
    phi: np.ndarray | float

    def __len__(self):
        return int(np.size(self.nu_s))


@dataclass(frozen=True)
class PowerSplit:
    """Layer-1 power fractions of the source (``alpha``) and relay (``beta``)."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")

    @property
    def alpha_bar(self) -> float:
        return 1.0 - self.alpha

    @property
    def beta_bar(self) -> float:
        return 1.0 - self.beta


@dataclass(frozen=True)
class CorrelationPair:
    """Real non-negative correlation coefficients of layer 1 and layer 2."""

    rho1: float = 0.0
    rho2: float = 0.0

    def __post_init__(self):
        for name in ("rho1", "rho2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")


class SingleLayerRates(NamedTuple):
    rate_relay: float
    rate_miso: np.ndarray | float
    rate: np.ndarray | float


class TwoLayerInfos(NamedTuple):
    i1_relay: float
    i1_miso: np.ndarray | float
    i2_relay: float
    i2_miso: np.ndarray | float


def sample_fading(rng: np.random.Generator, size=None) -> FadingDraw:
    """Draw Rayleigh fading: ``nu_s, nu_r ~ Exp(1)`` iid and ``phi ~ U[0, 2pi)``."""
    nu_s = rng.standard_exponential(size)
    nu_r = rng.standard_exponential(size)
    phi = rng.uniform(0.0, 2.0 * math.pi, size)
    return FadingDraw(nu_s, nu_r, phi)


def _checked_log(arg, what: str):
    arr = np.asarray(arg)
    if np.any(arr <= 0):
        raise InfeasibleCorrelationError(f"{what} log argument is not positive")
    return np.log(arg)


def _cross(draw: FadingDraw):
    return np.sqrt(draw.nu_s * draw.nu_r) * np.cos(draw.phi)


def df_rate_single(params: ChannelParams, draw: FadingDraw, rho: float) -> SingleLayerRates:
    """Single-layer decode-and-forward rate for one draw.

    Returns the source-relay term ``log(1 + P_s Q (1 - rho^2))``, the MISO
    term ``log(1 + nu_s P_s + nu_r P_r + 2 sqrt(P_s P_r nu_s nu_r) rho cos(phi))``
    and their minimum.
    """
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho!r}")
    ps, pr = params.p_s, params.p_r
    rate_relay = math.log1p(ps * params.q * (1.0 - rho * rho))
    arg = 1.0 + draw.nu_s * ps + draw.nu_r * pr + 2.0 * math.sqrt(ps * pr) * rho * _cross(draw)
    rate_miso = _checked_log(arg, "MISO")
    return SingleLayerRates(rate_relay, rate_miso, np.minimum(rate_relay, rate_miso))


def relay_layer_infos(params: ChannelParams, split: PowerSplit, corr: CorrelationPair) -> tuple[float, float]:
    """Source-relay mutual informations ``(i1_relay, i2_relay)``; fading-free."""
    ps, q = params.p_s, params.q
    a, b = split.alpha, split.beta
    ab, bb = split.alpha_bar, split.beta_bar
    r1, r2 = corr.rho1, corr.rho2
    num = 1.0 + ps * q * (1.0 - a * b * r1 * r1 - ab * bb * r2 * r2 - 2.0 * math.sqrt(a * b * ab * bb) * r1 * r2)
    if num <= 0.0:
        raise InfeasibleCorrelationError(
            f"correlation pair ({r1}, {r2}) lies outside the valid covariance cone"
        )
    den = 1.0 + q * ab * ps * (1.0 - r2 * r2)
    return math.log(num / den), math.log(den)


def two_layer_mutual_infos(
    params: ChannelParams, draw: FadingDraw, split: PowerSplit, corr: CorrelationPair
) -> TwoLayerInfos:
    """Mutual informations of the two-layer block-Markov scheme for one draw.

    ``i1_*`` are the first-layer quantities with the second layer treated as
    correlated interference; ``i2_*`` assume the first layer is cancelled.
    """
    i1_relay, i2_relay = relay_layer_infos(params, split, corr)
    ps, pr = params.p_s, params.p_r
    ab, bb = split.alpha_bar, split.beta_bar
    c1 = 2.0 * math.sqrt(split.alpha * split.beta * ps * pr) * corr.rho1
    c2 = 2.0 * math.sqrt(ab * bb * ps * pr) * corr.rho2
    x = _cross(draw)
    total = 1.0 + draw.nu_s * ps + draw.nu_r * pr + (c1 + c2) * x
    layer2 = 1.0 + draw.nu_s * ab * ps + draw.nu_r * bb * pr + c2 * x
    log_total = _checked_log(total, "MISO")
    log_layer2 = _checked_log(layer2, "layer-2 MISO")
    return TwoLayerInfos(i1_relay, log_total - log_layer2, i2_relay, log_layer2)
