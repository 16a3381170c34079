"""Command-line front end.

Every subcommand writes one CSV table (to stdout or ``--output``) whose
``#`` preamble records the package version and the full effective
configuration.  Exit status: 0 success, 2 configuration error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .abm import AbmConfig, compare_abm_ode, run_abm
from .csvio import CsvTable, fmt
from .dynamics import basin_sample, estimate_beta_u
from .errors import DomainError, EcodynError
from .fixed_points import all_fixed_points, beta_hat, beta_hopf, beta_int
from .fixed_points import thresholds as compute_thresholds
from .integrators import integrate
from .model import (
    FIG3_DELTAS,
    FIG3_ENV,
    EnvParams,
    ModelConfig,
    PayoffDeltas,
    Rule,
    State,
    check_assumptions,
)
from .sweep import default_beta_grid, sweep

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

CONFIG_KEYS = ("delta_tr1", "delta_ps1", "delta_rt0", "delta_sp0", "theta", "epsilon", "beta", "rule")
PRESETS = {
    "fig3": {
        "delta_tr1": FIG3_DELTAS.delta_tr1,
        "delta_ps1": FIG3_DELTAS.delta_ps1,
        "delta_rt0": FIG3_DELTAS.delta_rt0,
        "delta_sp0": FIG3_DELTAS.delta_sp0,
        "theta": FIG3_ENV.theta,
        "epsilon": FIG3_ENV.epsilon,
        "beta": 0.0,
        "rule": "logit",
    }
}


class ConfigError(Exception):
    pass


class NumericalFailure(Exception):
    """Raised after partial output has been written."""


@dataclass
class RunConfig:
    model: ModelConfig
    values: dict
    options: dict

    def preamble(self, command: str) -> list[str]:
        lines = [f"ecodyn {__version__}", f"command={command}"]
        lines += [f"{k}={fmt(self.values[k])}" for k in CONFIG_KEYS]
        lines += [f"{k}={fmt(v)}" for k, v in sorted(self.options.items())]
        return lines


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(values: dict) -> dict:
    out = {}
    for key in CONFIG_KEYS:
        raw = values[key]
        if key == "rule":
            if str(raw) not in ("logit", "imitative"):
                raise ConfigError(f"rule must be 'logit' or 'imitative', got {raw!r}")
            out[key] = str(raw)
            continue
        try:
            out[key] = float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    return out


def build_run_config(args, option_names=()) -> RunConfig:
    values = dict(PRESETS["fig3"])
    if args.preset is not None:
        values.update(PRESETS[args.preset])
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    values = _coerce(values)
    try:
        model = ModelConfig(
            PayoffDeltas(values["delta_tr1"], values["delta_ps1"], values["delta_rt0"], values["delta_sp0"]),
            EnvParams(values["theta"], values["epsilon"]),
            values["beta"],
            Rule(values["rule"]),
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    options = {name: getattr(args, name) for name in option_names}
    return RunConfig(model, values, options)


# --- commands ---------------------------------------------------------------


def cmd_coeffs(rc: RunConfig) -> CsvTable:
    k = rc.model.coeffs
    rep = check_assumptions(rc.model)
    table = CsvTable(
        ["a", "b", "c", "d", "D", "n_bar", "x0", "a1", "a2", "a3", "detail"],
        preamble=rc.preamble("coeffs"),
    )
    table.add(k.a, k.b, k.c, k.d, k.D, k.n_bar, k.x0, rep.a1_holds, rep.a2_holds, rep.a3_holds, rep.detail)
    return table


FP_HEADER = ["beta", "family", "x", "n", "eig1_re", "eig1_im", "eig2_re", "eig2_im", "stability"]


def cmd_fixed_points(rc: RunConfig) -> CsvTable:
    table = CsvTable(list(FP_HEADER), preamble=rc.preamble("fixed-points"))
    config = rc.model.with_rule(Rule.LOGIT)
    try:
        points = all_fixed_points(config)
    except EcodynError as exc:
        table.add(config.beta, "error", None, None, None, None, None, None, None)
        table.footer.append(f"error={type(exc).__name__}: {exc}")
        raise NumericalFailure(table) from exc
    for p in points:
        e1, e2 = p.eigenvalues
        table.add(config.beta, p.family, p.location.x, p.location.n,
                  e1.real, e1.imag, e2.real, e2.imag, p.stability)
    return table


def cmd_thresholds(rc: RunConfig) -> CsvTable:
    k, env = rc.model.coeffs, rc.model.env
    table = CsvTable(["beta_int", "beta_hat", "beta_h", "beta_u", "status"],
                     preamble=rc.preamble("thresholds"))
    values, problems = {}, []
    for name, fn in (
        ("beta_int", lambda: beta_int(k, env)),
        ("beta_hat", lambda: beta_hat(k)),
        ("beta_h", lambda: beta_hopf(k, env)),
    ):
        try:
            values[name] = fn()
        except EcodynError as exc:
            values[name] = None
            problems.append(f"{name}: {exc}")
    values["beta_u"] = None
    if rc.options.get("estimate_beta_u"):
        try:
            values["beta_u"] = estimate_beta_u(
                rc.model.with_rule(Rule.LOGIT), (rc.options["bracket_lo"], rc.options["bracket_hi"])
            )
        except EcodynError as exc:
            problems.append(f"beta_u: {exc}")
    status = "ok" if not problems else "error: " + "; ".join(problems)
    table.add(values["beta_int"], values["beta_hat"], values["beta_h"], values["beta_u"], status)
    if problems:
        raise NumericalFailure(table)
    return table


def _add_path(table, tr, source, stride, prefix=()):
    idx = list(range(0, len(tr.times), stride))
    if idx[-1] != len(tr.times) - 1:
        idx.append(len(tr.times) - 1)
    for i in idx:
        table.add(*prefix, tr.times[i], tr.states[i, 0], tr.states[i, 1], source)


def cmd_simulate(rc: RunConfig) -> CsvTable:
    o = rc.options
    table = CsvTable(["t", "x", "n", "source"], preamble=rc.preamble("simulate"))
    rules = [Rule.LOGIT, Rule.IMITATIVE] if o["sim_rule"] == "both" else [
        Rule(o["sim_rule"]) if o["sim_rule"] else rc.model.rule
    ]
    s0 = State(o["x0"], o["n0"])
    for rule in rules:
        tr = integrate(rc.model.with_rule(rule), s0, o["t_end"], method=o["method"], h=o["h"])
        _add_path(table, tr, rule.value, o["stride"])
    return table


def cmd_sweep(rc: RunConfig) -> CsvTable:
    o = rc.options
    params = rc.model.with_rule(Rule.LOGIT)
    try:
        th = compute_thresholds(params)
    except EcodynError:
        th = None
    if o["uniform"]:
        grid = np.linspace(o["beta_min"], o["beta_max"], o["points"])
    else:
        grid = default_beta_grid(th, o["beta_min"], o["beta_max"], o["points"])
    result = sweep(params, grid, workers=o["workers"], estimate_u=not o["no_beta_u"])
    table = CsvTable(
        ["beta", "family", "x", "n", "n_min", "n_max", "period", "stability", "regime"],
        preamble=rc.preamble("sweep"),
    )
    if result.thresholds is not None:
        t = result.thresholds
        table.preamble += [f"beta_int={fmt(t.beta_int)}", f"beta_hat={fmt(t.beta_hat)}", f"beta_h={fmt(t.beta_h)}"]
    table.preamble.append(f"beta_u={fmt(result.beta_u)}")
    for rec in result.records:
        regime = rec.regime.value if rec.regime is not None else "ambiguous"
        if rec.error is not None:
            table.add(rec.beta, "error", None, None, None, None, None, None, "ambiguous")
            table.footer.append(f"beta={fmt(rec.beta)} error={rec.error}")
            continue
        for p in rec.fixed_points:
            table.add(rec.beta, p.family, p.location.x, p.location.n, None, None, None, p.stability, regime)
        if rec.cycle is not None:
            c = rec.cycle
            table.add(rec.beta, "cycle", None, None, c.n_min, c.n_max, c.period, "stable_cycle", regime)
        elif rec.cycle_status.value == "undecided":
            table.add(rec.beta, "cycle_undecided", None, None, None, None, None, None, regime)
    if any(r.error is not None for r in result.records):
        raise NumericalFailure(table)
    return table


def _lattice(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"grid must look like '5' or '5x4', got {text!r}") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 1:
        raise ConfigError(f"bad grid {text!r}")
    return dims


def cmd_portrait(rc: RunConfig) -> CsvTable:
    o = rc.options
    nx, nn = _lattice(o["grid"])
    table = CsvTable(["ic_id", "t", "x", "n", "source"], preamble=rc.preamble("portrait"))
    ic_id = 0
    for j in range(nn):
        for i in range(nx):
            s0 = State((i + 0.5) / nx, (j + 0.5) / nn)
            tr = integrate(rc.model, s0, o["t_end"], method=o["method"], h=o["h"])
            _add_path(table, tr, rc.model.rule.value, o["stride"], prefix=(ic_id,))
            ic_id += 1
    return table


def cmd_basin(rc: RunConfig) -> CsvTable:
    o = rc.options
    res = _lattice(o["grid"])
    if min(res) < 4:
        raise ConfigError("basin grid must be at least 4x4")
    bmap = basin_sample(rc.model, res, workers=o["workers"], budget=o["budget"])
    table = CsvTable(["x0", "n0", "label"], preamble=rc.preamble("basin"))
    for s, label in bmap.grid:
        table.add(s.x, s.n, label)
    for label, count in sorted(bmap.counts().items()):
        table.footer.append(f"count[{label}]={count}")
    return table


def cmd_abm(rc: RunConfig) -> CsvTable:
    o = rc.options
    model = rc.model.with_rule(Rule.LOGIT)
    try:
        cfg = AbmConfig(model, o["agents"], o["seed"], o["t_end"], o["env_step"], o["x0"], o["n0"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    abm = run_abm(cfg)
    ode = integrate(model, State(o["x0"], o["n0"]), o["t_end"], h=o["h"])
    dev = compare_abm_ode(abm, ode)
    table = CsvTable(["t", "x", "n", "source"], preamble=rc.preamble("abm"))
    idx = list(range(0, len(ode.times), o["stride"]))
    if idx[-1] != len(ode.times) - 1:
        idx.append(len(ode.times) - 1)
    t = ode.times[idx]
    ev = np.clip(np.searchsorted(abm.times, t, side="right") - 1, 0, len(abm.times) - 1)
    for ti, e in zip(t, ev):
        table.add(ti, abm.x_fraction[e], abm.n_env[e], "abm")
    for i in idx:
        table.add(ode.times[i], ode.states[i, 0], ode.states[i, 1], "ode")
    table.footer += [
        f"revisions={abm.revision_count}",
        f"clamp_events={abm.clamp_count}",
        f"sup_dev_x={fmt(dev.sup_x)}",
        f"sup_dev_n={fmt(dev.sup_n)}",
        f"mean_dev_x={fmt(dev.mean_x)}",
        f"mean_dev_n={fmt(dev.mean_n)}",
    ]
    return table


# --- argument parsing --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _model_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model")
    g.add_argument("--config", help="flat 'key = value' file")
    g.add_argument("--preset", choices=sorted(PRESETS))
    for key in CONFIG_KEYS:
        if key == "rule":
            g.add_argument("--rule", choices=["logit", "imitative"])
        else:
            g.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    p.add_argument("-o", "--output", help="write CSV here instead of stdout")
    return p


def _integration_options(p, t_end=100.0, stride=1):
    p.add_argument("--t-end", type=float, default=t_end)
    p.add_argument("--method", choices=["rk4", "dopri5"], default="rk4")
    p.add_argument("--h", type=float, default=0.01, help="RK4 step / initial adaptive step")
    p.add_argument("--stride", type=int, default=stride, help="emit every k-th sample")


COMMANDS = {}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecodyn", description="Logit learning with game-environment feedback.")
    parser.add_argument("--version", action="version", version=f"ecodyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _model_options()

    p = sub.add_parser("coeffs", parents=[common], help="derived coefficients and assumptions")
    COMMANDS["coeffs"] = (cmd_coeffs, ())

    p = sub.add_parser("fixed-points", parents=[common], help="all equilibria at one beta")
    COMMANDS["fixed-points"] = (cmd_fixed_points, ())

    p = sub.add_parser("thresholds", parents=[common], help="beta_int, beta_hat, beta_h [, beta_u]")
    p.add_argument("--estimate-beta-u", action="store_true")
    p.add_argument("--bracket-lo", type=float, default=7.0)
    p.add_argument("--bracket-hi", type=float, default=8.0)
    COMMANDS["thresholds"] = (cmd_thresholds, ("estimate_beta_u", "bracket_lo", "bracket_hi"))

    p = sub.add_parser("simulate", parents=[common], help="one trajectory")
    p.add_argument("--x0", type=float, default=0.6)
    p.add_argument("--n0", type=float, default=0.6)
    p.add_argument("--sim-rule", choices=["logit", "imitative", "both"], default=None,
                   help="override --rule; 'both' emits both learning rules")
    _integration_options(p)
    COMMANDS["simulate"] = (cmd_simulate, ("x0", "n0", "sim_rule", "t_end", "method", "h", "stride"))

    p = sub.add_parser("sweep", parents=[common], help="bifurcation data over beta")
    p.add_argument("--beta-min", type=float, default=0.0)
    p.add_argument("--beta-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--uniform", action="store_true", help="uniform grid instead of threshold-dense")
    p.add_argument("--no-beta-u", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    COMMANDS["sweep"] = (cmd_sweep, ("beta_min", "beta_max", "points", "uniform", "no_beta_u", "workers"))

    p = sub.add_parser("portrait", parents=[common], help="trajectories from a lattice of ICs")
    p.add_argument("--grid", default="5")
    _integration_options(p, t_end=100.0, stride=10)
    COMMANDS["portrait"] = (cmd_portrait, ("grid", "t_end", "method", "h", "stride"))

    p = sub.add_parser("basin", parents=[common], help="attractor label per lattice IC")
    p.add_argument("--grid", default="20")
    p.add_argument("--budget", type=float, default=2000.0)
    p.add_argument("--workers", type=int, default=None)
    COMMANDS["basin"] = (cmd_basin, ("grid", "budget", "workers"))

    p = sub.add_parser("abm", parents=[common], help="agent-based run against the mean dynamics")
    p.add_argument("--agents", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", type=float, default=0.6)
    p.add_argument("--n0", type=float, default=0.6)
    p.add_argument("--t-end", type=float, default=50.0)
    p.add_argument("--env-step", type=float, default=0.01)
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--stride", type=int, default=10)
    COMMANDS["abm"] = (cmd_abm, ("agents", "seed", "x0", "n0", "t_end", "env_step", "h", "stride"))
    return parser


def _emit(table: CsvTable, path: str | None):
    text = table.render()
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fn, option_names = COMMANDS[args.command]
    try:
        rc = build_run_config(args, option_names)
        for name in ("stride", "points"):
            if name in rc.options and rc.options[name] < 1:
                raise ConfigError(f"--{name} must be >= 1")
        table = fn(rc)
    except ConfigError as exc:
        print(f"ecodyn: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        _emit(exc.args[0], args.output)
        print("ecodyn: numerical failure (partial output written)", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"ecodyn: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EcodynError as exc:
        print(f"ecodyn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(table, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
