"""Real Lambert W function on the principal and -1 branches."""

from __future__ import annotations

import enum
import math

from .errors import DomainError

__all__ = ["WBranch", "lambert_w", "BRANCH_POINT"]

#: Argument of the shared branch point, -1/e.
BRANCH_POINT = -math.exp(-1.0)

_MAX_ITER = 50
_TOL = 1e-14
_BRANCH_SNAP = 1e-15


class WBranch(enum.Enum):
    PRINCIPAL = 0
    MINUS_ONE = -1


def _initial_guess(x: float, branch: WBranch) -> float:
    if x < -0.25:
        # series about the branch point in p = sqrt(2(e x + 1))
        p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        if branch is WBranch.PRINCIPAL:
            return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
        return -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p**3
    if branch is WBranch.MINUS_ONE:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        return l1 - l2 + l2 / l1
    if x < 3.0:
        return math.log1p(x)
    l1 = math.log(x)
    l2 = math.log(l1)
    return l1 - l2 + l2 / l1


def lambert_w(x: float, branch: WBranch = WBranch.PRINCIPAL) -> float:
    """Solve ``w * exp(w) = x`` for real ``w`` on the requested branch.

    Parameters
    ----------
    x : float
        Argument. The principal branch accepts ``x >= -1/e``; the -1
        branch accepts ``-1/e <= x < 0``.
    branch : WBranch
        ``PRINCIPAL`` returns ``w >= -1``, ``MINUS_ONE`` returns ``w <= -1``.

    Returns
    -------
    float

    Raises
    ------
    DomainError
        If ``x`` is outside the branch domain.

    Notes
    -----
    Halley iteration from a branch-point series (near ``-1/e``) or an
    asymptotic logarithmic guess elsewhere.
    """
    x = float(x)
    if math.isnan(x):
        raise DomainError("lambert_w argument is NaN")
    if abs(x - BRANCH_POINT) <= _BRANCH_SNAP:
        return -1.0
    if x < BRANCH_POINT:
        raise DomainError(f"lambert_w argument {x!r} is below -1/e")
    if branch is WBranch.MINUS_ONE and x >= 0.0:
        raise DomainError(f"W_-1 is only defined on [-1/e, 0), got {x!r}")
    if branch is WBranch.PRINCIPAL:
        if x == 0.0:
            return 0.0
        if math.isinf(x):
            return math.inf

    w = _initial_guess(x, branch)
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_next = w - step
        # Halley can overshoot across the branch point from a poor guess
        if branch is WBranch.PRINCIPAL and w_next < -1.0:
            w_next = 0.5 * (w - 1.0)
        elif branch is WBranch.MINUS_ONE and w_next > -1.0:
            w_next = 0.5 * (w - 1.0)
        if abs(w_next - w) <= _TOL * (1.0 + abs(w_next)):
            return w_next
        w = w_next
    return w
