"""Command-line interface: figure presets, custom sweeps, thresholds, audits.

Every command writes CSV.  ``--out -`` (the default when ``BMDF_OUTPUT_DIR``
is unset) writes to stdout; relative ``--out`` paths, and the default file
``<command>.csv``, live under ``$BMDF_OUTPUT_DIR`` when it is set.

Exit status is 0 on success, 1 on a domain or validation error (one line on
stderr) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import enum
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import single_layer as sl
from . import sweeps
from . import two_layer as tl
from .channel import (
    ChannelParams,
    CorrelationPair,
    PowerSplit,
    db_to_linear,
    df_rate_single,
    linear_to_db,
    two_layer_mutual_infos,
)
from .errors import DomainError
from .montecarlo import DEFAULT_SEED, estimate
from .sweeps import Axis, FigureId, SweepSpec, Table

__all__ = ["Command", "RunConfig", "OUTPUT_DIR_ENV", "build_parser", "parse_and_dispatch", "main"]

OUTPUT_DIR_ENV = "BMDF_OUTPUT_DIR"
DEFAULT_SAMPLES = 1_000_000  # oracle-check
SWEEP_SAMPLES = 100_000  # Monte Carlo columns of sweeps and fig7
_SEED_LIMIT = 1 << 64

# flag name -> value type
_PARAM_FLAGS = {
    "ps-db": float,
    "pr-db": float,
    "q-db": float,
    "alpha": float,
    "beta": float,
    "rho1": float,
    "rho2": float,
    "r1": float,
    "r2": float,
    "layers": int,
}
_RUN_FLAGS = {"seed": int, "samples": int, "tol": float, "workers": int, "out": str}
_SWEEP_FLAGS = {"axis": str, "grid": str, "columns": str}
_HELP = {
    "ps-db": "source power in dB",
    "pr-db": "relay power in dB (defaults to --ps-db in sweeps)",
    "q-db": "source-relay collocation gain in dB",
    "alpha": "source power fraction of the first layer",
    "beta": "relay power fraction of the first layer",
    "rho1": "first-layer source/relay correlation",
    "rho2": "second-layer source/relay correlation",
    "r1": "first-layer rate in nats",
    "r2": "second-layer rate in nats",
    "layers": "number of code layers",
    "seed": "Monte Carlo seed",
    "samples": "Monte Carlo sample count",
    "tol": "absolute quadrature tolerance",
    "workers": "worker threads; results do not depend on it",
    "out": "output CSV path, '-' for stdout",
    "axis": "swept parameter, e.g. ps-db",
    "grid": "START:STOP:NUM, evenly spaced",
    "columns": "comma-separated output columns",
}


class Command(enum.Enum):
    FIGURE = "figure"
    SWEEP = "sweep"
    THRESHOLDS = "thresholds"
    AUDIT = "audit"
    ORACLE_CHECK = "oracle-check"


@dataclass(frozen=True)
class RunConfig:
    command: Command
    params: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    mc_samples: int | None = None
    tol: float = tl.DEFAULT_TOL
    output_path: str | None = None
    workers: int = 1
    target: str | None = None
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.seed < _SEED_LIMIT:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if self.mc_samples is not None and self.mc_samples < 2:
            raise DomainError(f"samples must be at least 2, got {self.mc_samples}")
        if self.workers < 1:
            raise DomainError(f"workers must be at least 1, got {self.workers}")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bmdf", description="Block-Markov relay throughput toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        for name, typ in {**_PARAM_FLAGS, **_RUN_FLAGS}.items():
            p.add_argument(f"--{name}", type=typ, default=None, help=_HELP[name])
        p.add_argument("--config", type=Path, default=None, help="key = value file; flags override it")

    fig = sub.add_parser("figure", help="emit the table behind one figure")
    fig.add_argument("target", choices=[f.value for f in FigureId if f is not FigureId.CUSTOM])
    common(fig)
    sw = sub.add_parser("sweep", help="custom one-parameter sweep")
    for name in _SWEEP_FLAGS:
        sw.add_argument(f"--{name}", default=None, help=_HELP[name])
    common(sw)
    th = sub.add_parser("thresholds", help="constants and power/gain thresholds")
    common(th)
    au = sub.add_parser("audit", help="numerical audits of the optimality arguments")
    au.add_argument("target", choices=["conjecture1", "unimodality"])
    common(au)
    oc = sub.add_parser("oracle-check", help="closed forms against Monte Carlo")
    common(oc)
    return parser


def _read_config(path: Path) -> dict[str, str]:
    out = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DomainError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


def _resolve(ns: argparse.Namespace) -> RunConfig:
    known = {**_PARAM_FLAGS, **_RUN_FLAGS, **(_SWEEP_FLAGS if ns.command == "sweep" else {})}
    merged: dict[str, object] = {}
    if ns.config is not None:
        for key, raw in _read_config(ns.config).items():
            if key not in known:
                raise DomainError(f"unknown config key {key!r}")
            try:
                merged[key] = known[key](raw)
            except ValueError:
                raise DomainError(f"malformed value for {key}: {raw!r}") from None
    for key in known:
        value = getattr(ns, key.replace("-", "_"), None)
        if value is not None:
            merged[key] = value
    params = {k.replace("-", "_"): merged[k] for k in _PARAM_FLAGS if k in merged}
    return RunConfig(
        command=Command(ns.command),
        params=params,
        seed=merged.get("seed", DEFAULT_SEED),
        mc_samples=merged.get("samples"),
        tol=merged.get("tol", tl.DEFAULT_TOL),
        output_path=merged.get("out"),
        workers=merged.get("workers", 1),
        target=getattr(ns, "target", None),
        sweep={k: merged[k] for k in _SWEEP_FLAGS if k in merged},
    )


# --------------------------------------------------------------------------
# commands


def _require(cfg: RunConfig, *names: str) -> list:
    missing = [n for n in names if n not in cfg.params]
    if missing:
        raise DomainError("missing required parameter(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))
    return [cfg.params[n] for n in names]


def _channel(cfg: RunConfig) -> ChannelParams:
    ps_db, q_db = _require(cfg, "ps_db", "q_db")
    return ChannelParams.from_db(ps_db, cfg.params.get("pr_db", ps_db), q_db)


def _cmd_figure(cfg: RunConfig) -> Table:
    overrides = dict(cfg.params)
    if cfg.target == "fig7" and cfg.mc_samples is not None:
        overrides["samples"] = cfg.mc_samples
    if cfg.target == "fig4" and "layers" in overrides:
        overrides["layers"] = (overrides["layers"],)
    spec = sweeps.figure_spec(cfg.target, **overrides)
    return sweeps.run_sweep(spec, cfg.seed, cfg.workers)


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        start, stop, num = text.split(":")
        start, stop, num = float(start), float(stop), int(num)
    except ValueError:
        raise DomainError(f"grid must be START:STOP:NUM, got {text!r}") from None
    if num < 1:
        raise DomainError("grid needs at least one point")
    if num == 1:
        return (start,)
    step = (stop - start) / (num - 1)
    return tuple(start + i * step for i in range(num))


def _cmd_sweep(cfg: RunConfig) -> Table:
    missing = [k for k in _SWEEP_FLAGS if k not in cfg.sweep]
    if missing:
        raise DomainError("missing required parameter(s): " + ", ".join("--" + k for k in missing))
    name = cfg.sweep["axis"].replace("-", "_")
    axis = Axis(name, _parse_grid(cfg.sweep["grid"]), "db" if name.endswith("_db") else "linear")
    columns = tuple(c.strip() for c in cfg.sweep["columns"].split(",") if c.strip())
    fixed = {k: v for k, v in cfg.params.items() if k != name}
    fixed.update(samples=cfg.mc_samples or SWEEP_SAMPLES, tol=cfg.tol)
    spec = SweepSpec(FigureId.CUSTOM, axis, fixed, (name, *[c for c in columns if c != name]))
    return sweeps.run_sweep(spec, cfg.seed, cfg.workers)


def _rows_table(columns, rows) -> Table:
    return Table(tuple(columns), tuple(tuple(r) for r in rows))


def _cmd_thresholds(cfg: RunConfig) -> Table:
    x0 = sl.crossover_x0()
    rows = [("gamma0", sl.gamma0()), ("x0", x0)]
    if "q_db" in cfg.params:
        q = db_to_linear(cfg.params["q_db"])
        ps_star = sl.p_s_star(q)
        rows.append(("p_s_star", ps_star))
        if ps_star > 0:
            rows.append(("p_s_star_db", linear_to_db(ps_star)))
    if "ps_db" in cfg.params:
        ps = db_to_linear(cfg.params["ps_db"])
        rows.append(("oblivious_rate", sl.oblivious_su_rate(ps)))
        rows.append(("q_min_1", sl.q_min_single(ps)))
        n = cfg.params.get("layers", 2)
        if n < 1:
            raise DomainError("--layers must be at least 1")
        lay = tl.optimize_siso_layering(ps, n)
        rows.append((f"q_min_{n}", tl.q_min_layers(ps, lay)))
        for i, (eta, frac) in enumerate(zip(lay.thresholds, lay.splits), 1):
            rows.append((f"eta_{i}", eta))
            rows.append((f"fraction_{i}", frac))
    return _rows_table(("quantity", "value"), rows)


def _cmd_audit(cfg: RunConfig) -> Table:
    ps_db, pr_db = _require(cfg, "ps_db", "pr_db")
    if cfg.target == "unimodality":
        params = ChannelParams.from_db(ps_db, pr_db, cfg.params.get("q_db", 0.0))
        ok = sl.unimodality_check(params)
        r_star, value = sl.maximize_throughput(params)
        rows = [("rate_star", r_star, ""), ("throughput_star", value, ""), ("unimodal", int(ok), "PASS" if ok else "FAIL")]
        return _rows_table(("check", "value", "status"), rows)
    params = _channel(cfg)
    rep = sl.audit_conjecture1(params)

    def status(flag):
        return "" if flag is None else ("PASS" if flag else "FAIL")

    rows = [("r0", rep.r0, ""), ("trivially_holds", int(rep.trivially_holds), "")]
    if not rep.trivially_holds:
        rows += [
            ("slope_at_r0", rep.slope_at_r0, status(rep.slope_negative)),
            *[
                (name, "" if flag is None else int(flag), status(flag))
                for name, flag in (
                    ("equal_power_bound", rep.equal_power_bound),
                    ("unequal_power_bound", rep.unequal_power_bound),
                    ("source_dominant_bound", rep.source_dominant_bound),
                )
            ],
            ("s", rep.s, ""),
            ("k1", rep.k1, ""),
            ("max_alpha_k_alpha", max(rep.alpha_k_alpha, default=math.nan), status(all(rep.alpha_checks))),
            ("max_throughput_ratio", max(rep.throughput_ratio, default=math.nan), ""),
        ]
    rows.append(("conjecture1", int(rep.passed), "PASS" if rep.passed else "FAIL"))
    return Table(("check", "value", "status"), tuple(rows))


def _oracle_rows(cfg: RunConfig):
    params = _channel(cfg)
    p = cfg.params
    rate = p.get("r1", 1.0)
    n, seed, workers = cfg.mc_samples or DEFAULT_SAMPLES, cfg.seed, cfg.workers
    split = PowerSplit(p.get("alpha", 0.8), p.get("beta", 0.8))
    corr = CorrelationPair(p.get("rho1", 0.0), p.get("rho2", 0.0))
    rates = tl.LayerRates(rate, p.get("r2", 0.5))
    checks = [
        ("success_prob_su", sl.success_prob_su(rate, params.p_s),
         lambda d: d.nu_s * params.p_s >= math.expm1(rate)),
        ("success_prob_pair", sl.success_prob_pair(rate, params.p_s, params.p_r),
         lambda d: df_rate_single(params, d, 0.0).rate_miso >= rate),
    ]
    try:
        alloc = sl.correlated_allocation(rate, params)
        checks.append((
            "success_prob_rho_max",
            sl.success_prob_pair(rate, alloc.p0, alloc.p0_bar),
            lambda d: d.nu_s * alloc.p0 + d.nu_r * alloc.p0_bar >= math.expm1(rate),
        ))
    except DomainError:
        pass
    try:
        checks.append((
            "p_layer1_miso",
            tl.p_layer1_miso_analytic(params, split, corr, rates.r1, cfg.tol),
            lambda d: two_layer_mutual_infos(params, d, split, corr).i1_miso >= rates.r1,
        ))
    except DomainError:
        pass
    checks.append((
        "p_layer2_miso",
        tl.p_layer2_miso_analytic(params, split, corr.rho2, rates.r2, cfg.tol),
        lambda d: two_layer_mutual_infos(params, d, split, corr).i2_miso >= rates.r2,
    ))
    rows = []
    for name, analytic, event in checks:
        est = estimate(lambda d, ev=event: ev(d).astype(float), n, seed, workers)
        rows.append((name, analytic, est))
    if tl.relay_decodes(params, split, rates):
        quad = tl.average_throughput_uncorrelated(params, split, rates, cfg.tol).value
        mc = tl.average_throughput_mc(params, split, CorrelationPair(), rates, n, seed, workers)
        rows.append(("throughput_uncorrelated", quad, mc))
    return rows


def _cmd_oracle(cfg: RunConfig) -> Table:
    out = []
    for name, analytic, est in _oracle_rows(cfg):
        se = est.std_error
        z = (analytic - est.value) / se if se > 0 else (0.0 if analytic == est.value else math.inf)
        ok = abs(z) <= 4.0
        out.append((name, analytic, est.value, se, z, "PASS" if ok else "FAIL"))
    return Table(("quantity", "analytic", "monte_carlo", "std_error", "z", "status"), tuple(out))


_COMMANDS = {
    Command.FIGURE: _cmd_figure,
    Command.SWEEP: _cmd_sweep,
    Command.THRESHOLDS: _cmd_thresholds,
    Command.AUDIT: _cmd_audit,
    Command.ORACLE_CHECK: _cmd_oracle,
}


def _destination(cfg: RunConfig) -> Path | None:
    env = os.environ.get(OUTPUT_DIR_ENV)
    out = cfg.output_path
    if out == "-":
        return None
    if out is None:
        if not env:
            return None
        name = cfg.command.value + (f"-{cfg.target}" if cfg.target else "")
        return Path(env) / f"{name}.csv"
    path = Path(out)
    if env and not path.is_absolute():
        path = Path(env) / path
    return path


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    """Run one command; returns the process exit status."""
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        cfg = _resolve(ns)
        table = _COMMANDS[cfg.command](cfg)
        dest = _destination(cfg)
        if dest is None:
            sys.stdout.write(table.to_csv())
        else:
            dest.parent.mkdir(parents=True, exist_ok=True)
            table.to_csv(dest)
    except (DomainError, ValueError, OSError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"bmdf: error: {msg}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())
