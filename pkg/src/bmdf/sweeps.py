"""Parameter sweeps reproducing the figures, plus a generic custom sweep.

A :class:`SweepSpec` names one axis parameter with its grid and a map of
fixed parameters.  A fixed parameter given as a tuple becomes an outer
series: rows are produced for every series value (outer loops in the order
of ``fixed``) and every axis value (innermost).  Powers and gains are given
in dB (``*_db``) and converted once, here.  When ``pr_db`` is absent the
relay power follows the source power.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import brentq

from . import single_layer as sl
from . import two_layer as tl
from .channel import ChannelParams, CorrelationPair, PowerSplit, db_to_linear, linear_to_db, relay_layer_infos
from .errors import DomainError, InfeasibleCorrelationError
from .montecarlo import DEFAULT_SEED

__all__ = [
    "FigureId",
    "Axis",
    "SweepSpec",
    "Table",
    "PARAMETERS",
    "CUSTOM_COLUMNS",
    "FIGURE_COLUMNS",
    "figure_spec",
    "run_sweep",
    "gain_over_direct",
    "direct_power_db",
    "fig2_gap",
]


class FigureId(enum.Enum):
    FIG2 = "fig2"
    FIG3 = "fig3"
    FIG4 = "fig4"
    FIG5 = "fig5"
    FIG6 = "fig6"
    FIG7 = "fig7"
    FIG8 = "fig8"
    CUSTOM = "custom"


#: Parameters a sweep may reference, with their defaults.
PARAMETERS: dict[str, float | None] = {
    "ps_db": 10.0,
    "pr_db": None,
    "q_db": 10.0,
    "alpha": 1.0,
    "beta": 1.0,
    "rho1": 0.0,
    "rho2": 0.0,
    "r1": 1.0,
    "r2": 0.0,
    "rate": 1.0,
    "layers": 1,
    "s": 10.0,
    "samples": 100_000,
    "tol": tl.DEFAULT_TOL,
}


@dataclass(frozen=True)
class Axis:
    """Swept parameter and its grid; ``unit`` is ``"db"`` or ``"linear"``."""

    name: str
    values: tuple[float, ...]
    unit: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise DomainError("sweep grid is empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise DomainError(f"grid for {self.name} must be strictly increasing")
        if self.unit not in ("db", "linear"):
            raise DomainError(f"unknown axis unit {self.unit!r}")
        if self.unit == "db" and not self.name.endswith("_db"):
            raise DomainError(f"dB axis must be a *_db parameter, got {self.name}")


@dataclass(frozen=True)
class SweepSpec:
    figure_id: FigureId
    axis: Axis
    fixed: Mapping[str, object] = field(default_factory=dict)
    output_columns: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "output_columns", tuple(self.output_columns))
        names = [self.axis.name, *self.fixed]
        for name in names:
            if name not in PARAMETERS:
                raise DomainError(f"unknown sweep parameter {name!r}")
        if self.axis.name in self.fixed:
            raise DomainError(f"{self.axis.name} is both swept and fixed")
        for name, value in self.fixed.items():
            if isinstance(value, (tuple, list)) and not value:
                raise DomainError(f"series {name} is empty")
        if not self.output_columns:
            raise DomainError("no output columns")
        if self.figure_id is FigureId.CUSTOM:
            for col in self.output_columns:
                if col not in CUSTOM_COLUMNS and col not in PARAMETERS:
                    raise DomainError(f"unknown output column {col!r}")
        elif self.output_columns != FIGURE_COLUMNS[self.figure_id]:
            raise DomainError(f"{self.figure_id.value} emits exactly {FIGURE_COLUMNS[self.figure_id]}")

    def points(self) -> list[dict]:
        """Parameter dictionaries in output row order."""
        series = [(k, tuple(v)) for k, v in self.fixed.items() if isinstance(v, (tuple, list))]
        scalars = {k: v for k, v in self.fixed.items() if not isinstance(v, (tuple, list))}
        base = {k: v for k, v in PARAMETERS.items()} | scalars
        out = []
        for combo in product(*(vals for _, vals in series)):
            for x in self.axis.values:
                pt = dict(base)
                pt.update(zip((k for k, _ in series), combo))
                pt[self.axis.name] = x
                if pt["pr_db"] is None:
                    pt["pr_db"] = pt["ps_db"]
                out.append(pt)
        return out


# --------------------------------------------------------------------------
# tables and CSV


def _format(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _parse(s: str):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


@dataclass(frozen=True)
class Table:
    """Rows under named columns; ints stay ints, floats round-trip exactly, text stays text."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def where(self, **match) -> "Table":
        idx = [self.columns.index(k) for k in match]
        keep = tuple(r for r in self.rows if all(r[i] == v for i, v in zip(idx, match.values())))
        return Table(self.columns, keep)

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, dest=None) -> str:
        """Render as CSV (``\\n`` line endings); also write to ``dest`` if given."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_format(v) for v in row])
        text = buf.getvalue()
        if dest is not None:
            if hasattr(dest, "write"):
                dest.write(text)
            else:
                Path(dest).write_text(text, encoding="utf-8", newline="")
        return text

    @classmethod
    def from_csv(cls, source) -> "Table":
        if isinstance(source, (str, Path)) and not str(source).count("\n"):
            text = Path(source).read_text(encoding="utf-8")
        elif hasattr(source, "read"):
            text = source.read()
        else:
            text = str(source)
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        return cls(header, tuple(tuple(_parse(c) for c in row) for row in reader if row))


# --------------------------------------------------------------------------
# per-point quantities


def _params(pt) -> ChannelParams:
    return ChannelParams.from_db(pt["ps_db"], pt["pr_db"], pt["q_db"])


def direct_power_db(target: float) -> float:
    """Source power (dB) at which direct single-layer transmission reaches ``target``."""
    if target <= 0.0:
        raise DomainError("target throughput must be positive")

    def gap(x_db):
        return sl.direct_throughput(db_to_linear(x_db)) - target

    hi = 10.0
    while gap(hi) < 0.0:
        hi += 20.0
        if hi > 400.0:
            raise DomainError("target throughput out of range")
    lo = hi - 20.0
    while gap(lo) > 0.0:
        lo -= 20.0
    return brentq(gap, lo, hi, xtol=1e-12)


def fig2_gap(params: ChannelParams, step: float = 1e-4) -> float | None:
    """Distance from ``log(1 + gamma0 P)`` to the first rate where full correlation wins."""
    first = sl.first_rho_max_rate(params, step)
    if first is None:
        return None
    return first - math.log1p(sl.gamma0() * params.total_power)


def _fig2_row(pt, seed):
    params = _params(pt)
    rate = pt["rate"]
    zero = sl.throughput(rate, params, sl.ThroughputMode.RHO_ZERO)
    full = sl.throughput_or_zero(rate, params, sl.ThroughputMode.RHO_MAX)
    return {"rate": rate, "tp_rho_zero": zero, "tp_rho_max": full, "rho_max_preferred": int(full > zero)}


def _fig3_row(pt, seed):
    params = _params(pt)
    direct = sl.direct_throughput(params.p_s)
    bm = sl.oblivious_bm_throughput(params)
    gain = direct_power_db(bm) - pt["ps_db"]
    return {"q_db": pt["q_db"], "ps_db": pt["ps_db"], "direct_throughput": direct, "bm_throughput": bm, "gain_db": gain}


def _fig4_row(pt, seed):
    ps = db_to_linear(pt["ps_db"])
    n = int(pt["layers"])
    return {"ps_db": pt["ps_db"], "n_layers": n, "q_min": tl.q_min_layers(ps, tl.optimize_siso_layering(ps, n))}


@lru_cache(maxsize=256)
def _siso2(ps: float) -> tl.SisoLayering:
    return tl.optimize_siso_layering(ps, 2)


def _two_layer_row(pt, seed):
    params = _params(pt)
    obl = tl.oblivious_two_layer(params)
    bm = obl.value
    return {
        "q_db": pt["q_db"],
        "pr_db": pt["pr_db"],
        "ps_db": pt["ps_db"],
        "direct_throughput": sl.direct_throughput(params.p_s),
        "direct_two_layer": _siso2(params.p_s).objective,
        "bm_single_layer": sl.oblivious_bm_throughput(params),
        "bm_throughput": bm,
        "gain_db": direct_power_db(bm) - pt["ps_db"],
    }


def _fig7_design(params: ChannelParams):
    lay = _siso2(params.p_s)
    alpha = lay.splits[0]
    return PowerSplit(alpha, alpha), tl.LayerRates(*lay.rates)


def _fig7_row(pt, seed):
    params = _params(pt)
    split, rates = _fig7_design(params)
    corr = CorrelationPair(pt["rho1"], pt["rho2"])
    indicator = tl.conic_value(params, split, rates.r1, corr.rho1, corr.rho2)
    try:
        i1, _ = relay_layer_infos(params, split, corr)
        relay_ok = i1 >= rates.r1
    except InfeasibleCorrelationError:
        relay_ok = False
    est = tl.average_throughput_mc(params, split, corr, rates, int(pt["samples"]), seed)
    return {
        "rho1": corr.rho1,
        "rho2": corr.rho2,
        "throughput": est.value,
        "half_width": est.half_width,
        "feasible_flag": int(relay_ok),
        "indicator": indicator,
    }


def _fig8_row(pt, seed):
    s, alpha = pt["s"], pt["alpha"]
    return {"s": s, "alpha": alpha, "k1": sl.k_ratio(1.0, s), "alpha_k_alpha": alpha * sl.k_ratio(alpha, s)}


FIGURE_COLUMNS: dict[FigureId, tuple[str, ...]] = {
    FigureId.FIG2: ("rate", "tp_rho_zero", "tp_rho_max", "rho_max_preferred"),
    FigureId.FIG3: ("q_db", "ps_db", "direct_throughput", "bm_throughput", "gain_db"),
    FigureId.FIG4: ("ps_db", "n_layers", "q_min"),
    FigureId.FIG5: (
        "q_db", "ps_db", "direct_throughput", "direct_two_layer", "bm_single_layer", "bm_throughput", "gain_db",
    ),
    FigureId.FIG6: (
        "pr_db", "ps_db", "direct_throughput", "direct_two_layer", "bm_single_layer", "bm_throughput", "gain_db",
    ),
    FigureId.FIG7: ("rho1", "rho2", "throughput", "half_width", "feasible_flag", "indicator"),
    FigureId.FIG8: ("s", "alpha", "k1", "alpha_k_alpha"),
}

_ROW_FUNCS = {
    FigureId.FIG2: _fig2_row,
    FigureId.FIG3: _fig3_row,
    FigureId.FIG4: _fig4_row,
    FigureId.FIG5: _two_layer_row,
    FigureId.FIG6: _two_layer_row,
    FigureId.FIG7: _fig7_row,
    FigureId.FIG8: _fig8_row,
}


def _split(pt):
    return PowerSplit(pt["alpha"], pt["beta"])


def _rates(pt):
    return tl.LayerRates(pt["r1"], pt["r2"])


#: Quantities available to custom sweeps, each a function of the point and seed.
CUSTOM_COLUMNS: dict[str, Callable[[dict, int], float]] = {
    "p_s": lambda pt, seed: _params(pt).p_s,
    "p_r": lambda pt, seed: _params(pt).p_r,
    "q": lambda pt, seed: _params(pt).q,
    "success_prob_su": lambda pt, seed: sl.success_prob_su(pt["rate"], _params(pt).p_s),
    "success_prob_pair": lambda pt, seed: sl.success_prob_pair(pt["rate"], _params(pt).p_s, _params(pt).p_r),
    "tp_rho_zero": lambda pt, seed: sl.throughput(pt["rate"], _params(pt), sl.ThroughputMode.RHO_ZERO),
    "tp_rho_max": lambda pt, seed: sl.throughput_or_zero(pt["rate"], _params(pt), sl.ThroughputMode.RHO_MAX),
    "rate_star": lambda pt, seed: sl.maximize_throughput(_params(pt))[0],
    "tp_star": lambda pt, seed: sl.maximize_throughput(_params(pt))[1],
    "oblivious_rate": lambda pt, seed: sl.oblivious_su_rate(_params(pt).p_s),
    "direct_throughput": lambda pt, seed: sl.direct_throughput(_params(pt).p_s),
    "bm_throughput": lambda pt, seed: sl.oblivious_bm_throughput(_params(pt)),
    "q_min_single": lambda pt, seed: sl.q_min_single(_params(pt).p_s),
    "p_s_star_db": lambda pt, seed: linear_to_db(sl.p_s_star(_params(pt).q)),
    "q_min_layers": lambda pt, seed: tl.q_min_layers(
        _params(pt).p_s, tl.optimize_siso_layering(_params(pt).p_s, int(pt["layers"]))
    ),
    "siso_objective": lambda pt, seed: tl.optimize_siso_layering(_params(pt).p_s, int(pt["layers"])).objective,
    "p_layer1_miso": lambda pt, seed: tl.p_layer1_miso_analytic(
        _params(pt), _split(pt), CorrelationPair(pt["rho1"], pt["rho2"]), pt["r1"], pt["tol"]
    ),
    "p_layer2_miso": lambda pt, seed: tl.p_layer2_miso_analytic(_params(pt), _split(pt), pt["rho2"], pt["r2"], pt["tol"]),
    "conic_indicator": lambda pt, seed: tl.conic_value(_params(pt), _split(pt), pt["r1"], pt["rho1"], pt["rho2"]),
    "tp_two_layer_uncorrelated": lambda pt, seed: tl.average_throughput_uncorrelated(
        _params(pt), _split(pt), _rates(pt), pt["tol"]
    ).value,
    "tp_two_layer_mc": lambda pt, seed: tl.average_throughput_mc(
        _params(pt), _split(pt), CorrelationPair(pt["rho1"], pt["rho2"]), _rates(pt), int(pt["samples"]), seed
    ).value,
    "tp_two_layer_oblivious": lambda pt, seed: tl.oblivious_two_layer(_params(pt)).value,
}


def _custom_row(columns):
    def row(pt, seed):
        out = {}
        for col in columns:
            out[col] = pt[col] if col in PARAMETERS else CUSTOM_COLUMNS[col](pt, seed)
        return out

    return row


# --------------------------------------------------------------------------
# presets


def _db_grid(lo, hi, step=1.0):
    n = int(round((hi - lo) / step)) + 1
    return tuple(float(round(lo + i * step, 10)) for i in range(n))


def figure_spec(figure: FigureId | str, **fixed_overrides) -> SweepSpec:
    """Preset for one figure; keyword overrides replace entries of ``fixed``.

    The axis ranges are reconstructions chosen to cover the regimes the
    figures discuss.
    """
    fig = FigureId(figure) if not isinstance(figure, FigureId) else figure
    if fig is FigureId.FIG2:
        axis, fixed = Axis("rate", tuple(np.round(np.linspace(0.01, 4.0, 400), 10))), {
            "ps_db": 8.0, "pr_db": 8.0, "q_db": 10.0}
    elif fig is FigureId.FIG3:
        axis, fixed = Axis("ps_db", _db_grid(-5.0, 35.0), "db"), {"q_db": (-5.0, 0.0, 10.0, 20.0)}
    elif fig is FigureId.FIG4:
        axis, fixed = Axis("ps_db", _db_grid(0.0, 40.0), "db"), {"layers": (1, 2, 4, 8)}
    elif fig is FigureId.FIG5:
        axis, fixed = Axis("ps_db", _db_grid(-5.0, 35.0), "db"), {"q_db": (-5.0, 0.0, 10.0, 20.0)}
    elif fig is FigureId.FIG6:
        axis, fixed = Axis("ps_db", _db_grid(-5.0, 35.0), "db"), {"pr_db": (10.0, 20.0), "q_db": 10.0}
    elif fig is FigureId.FIG7:
        grid = tuple(np.round(np.linspace(0.0, 1.0, 41), 12))
        axis, fixed = Axis("rho2", grid), {
            "rho1": grid, "ps_db": 22.0, "pr_db": 30.0, "q_db": 40.0, "samples": 100_000}
    elif fig is FigureId.FIG8:
        axis, fixed = Axis("alpha", tuple(np.geomspace(1.0, 50.0, 200))), {"s": (5.0, 10.0, 100.0)}
    else:
        raise DomainError("custom sweeps have no preset")
    for k, v in fixed_overrides.items():
        if k == axis.name:
            raise DomainError(f"{k} is the swept parameter of {fig.value}")
        fixed[k] = v
    return SweepSpec(fig, axis, fixed, FIGURE_COLUMNS[fig])


def run_sweep(spec: SweepSpec, seed: int = DEFAULT_SEED, workers: int = 1) -> Table:
    """Evaluate every grid point; rows come out in grid order.

    Points may be evaluated concurrently; Monte Carlo columns reuse ``seed``
    for every point (common random numbers), so values do not depend on
    ``workers``.
    """
    if spec.figure_id is FigureId.CUSTOM:
        fn = _custom_row(spec.output_columns)
    else:
        fn = _ROW_FUNCS[spec.figure_id]
    pts = spec.points()
    if spec.figure_id is FigureId.FIG8:
        pts = [p for p in pts if p["alpha"] <= p["s"] / 2.0]

    def run(pt):
        return fn(pt, seed)

    if workers > 1 and len(pts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            dicts = list(pool.map(run, pts))
    else:
        dicts = [run(p) for p in pts]
    cols = spec.output_columns
    return Table(cols, tuple(tuple(d[c] for c in cols) for d in dicts))


def gain_over_direct(
    table: Table,
    at_throughput: float,
    power_col: str = "ps_db",
    direct_col: str = "direct_throughput",
    bm_col: str = "bm_throughput",
) -> float:
    """Horizontal gap (dB) between the direct and cooperative curves at ``at_throughput``.

    Both curves must be increasing in power and span the requested level;
    each is inverted by linear interpolation.
    """
    power = table.column(power_col).astype(float)
    out = []
    for col in (direct_col, bm_col):
        tp = table.column(col).astype(float)
        if np.any(np.diff(tp) <= 0.0):
            raise DomainError(f"column {col} is not increasing in {power_col}")
        if not tp[0] <= at_throughput <= tp[-1]:
            raise DomainError(f"throughput {at_throughput} outside the range of {col}")
        out.append(float(np.interp(at_throughput, tp, power)))
    return out[0] - out[1]
