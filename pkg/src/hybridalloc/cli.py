"""Command-line experiment runner.

Configuration files are flat ``section.key = value`` lines; ``#`` starts a
comment.  Every key has a default (see ``DEFAULTS``), so an empty file is
a valid configuration.  Exit codes: 0 success, 1 certification failure,
2 configuration error.

CSV columns (numbers with 12 significant digits):

* ``solve`` / ``check``: w_sub6, w_m, p_sub6, p_m, rate_total_<unit>,
  rate_total_mbps, ee, active_case, kkt_residual[, oracle_gap]
* ``sweep`` / ``ee``: sweep_value followed by the same columns; the ``ee``
  sweep adds ee_full (the fixed-power full-bandwidth baseline)

``<unit>`` is ``nats`` by default and ``bits`` with ``--bits``; ``ee`` is in
nats/J or bits/J accordingly.
"""
import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import csit, eesolver, oracle, sumrate
from .channel import (
    MmWaveLink, Sub6Channel, generate_mmwave_gain, generate_rayleigh, load_channel,
    random_csit_model, sample_compound_channel,
)
from .linkmodel import LN2, Allocation, SystemParams, to_mbps

EXIT_OK, EXIT_CERT, EXIT_CONFIG = 0, 1, 2

# Representative component draws (watts); ADC is the one that scales with bandwidth.
COMPONENT_POWER_W = {
    "mmwave": {"adc": 250e-3, "lna": 39e-3, "mixer": 16.8e-3, "phase_shifter": 19.8e-3},
    "sub6": {"adc": 0.14e-3, "lna": (3e-3, 10e-3), "mixer": (0.5e-3, 8e-3)},
}

DEFAULTS = {
    "system.p_max": 1.0,
    "system.adc_a": 1e-9,
    "system.n_t": 64,
    "system.n_r": 16,
    "system.w_sub6_max": 1e6,
    "system.w_m_max": 1e9,
    "channel.mode": "rayleigh",
    "channel.seed": 0,
    "channel.gain": 1e9,
    "channel.path": "",
    "channel.los_gain": 1e9,
    "channel.epsilon": 0.0,
    "channel.sigma_e2": 0.0,
    "mmwave.mode": "fixed",
    "mmwave.gain": 6.4e9,
    "mmwave.seed": 0,
    "mmwave.scale": 1e7,
    "mmwave.k_factor": 10.0,
    "sweep.variable": "",
    "sweep.from": 0.0,
    "sweep.to": 0.0,
    "sweep.points": 0,
    "sweep.log_scale": True,
    "solver.problem": "sumrate",
    "solver.mode": "auto",
    "solver.delta": 0.0,
    "solver.p_cap": eesolver.DEFAULT_P_CAP,
    "solver.csit_bound": "none",
    "solver.mc_samples": 1000,
    "solver.full_power": 0.0,
    "oracle.points": 32,
    "oracle.rounds": 4,
    "oracle.shrink": 0.25,
    "output.csv_path": "",
    "output.plot_script": False,
}

CHOICES = {
    "channel.mode": ("rayleigh", "compound", "file"),
    "mmwave.mode": ("fixed", "generated"),
    "sweep.variable": ("", "adc_a", "p_max", "w_m_max", "w_sub6_max"),
    "solver.problem": ("sumrate", "ee"),
    "solver.mode": tuple(m.value for m in sumrate.SolveMode),
    "solver.csit_bound": ("none", "lower", "upper"),
}


class ConfigError(ValueError):
    pass


def _convert(key, raw, where):
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{where}: {key} expects {type(default).__name__}, got {raw!r}")
    if key in CHOICES and raw not in CHOICES[key]:
        raise ConfigError(f"{where}: {key} must be one of {', '.join(c for c in CHOICES[key] if c)}")
    return raw


def parse_config(text, source="<config>"):
    """Parse ``section.key = value`` lines into a dict over ``DEFAULTS``."""
    values = dict(DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'section.key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{where}: unknown field {key!r}")
        values[key] = _convert(key, raw, where)
    return values


@dataclass
class ExperimentConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def load(cls, path=None, seed=None):
        text, source = "", "<defaults>"
        if path:
            try:
                with open(path) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc.strerror}")
            source = path
        values = parse_config(text, source)
        if seed is not None:
            values["channel.seed"] = seed
            values["mmwave.seed"] = seed
        cfg = cls(values)
        cfg.validate()
        return cfg

    def validate(self):
        try:
            self.params()
        except ValueError as exc:
            raise ConfigError(f"system: {exc}")
        if self["sweep.variable"]:
            lo, hi = self["sweep.from"], self["sweep.to"]
            if not (lo > 0 and hi > 0):
                raise ConfigError("sweep: range must be positive")
            if self["sweep.points"] < 2:
                raise ConfigError("sweep: points must be >= 2")
        if self["channel.mode"] == "file" and not self["channel.path"]:
            raise ConfigError("channel: mode = file needs channel.path")
        if self["solver.mc_samples"] < csit.MIN_MC_SAMPLES:
            raise ConfigError(f"solver: mc_samples must be >= {csit.MIN_MC_SAMPLES}")
        try:
            self.grid()
        except ValueError as exc:
            raise ConfigError(f"oracle: {exc}")

    def params(self, **override):
        keys = ("p_max", "adc_a", "n_t", "n_r", "w_sub6_max", "w_m_max")
        vals = {k: self[f"system.{k}"] for k in keys}
        vals.update(override)
        return SystemParams(**vals)

    def grid(self):
        return oracle.GridSpec(self["oracle.points"], self["oracle.rounds"], self["oracle.shrink"])

    def sweep_values(self):
        lo, hi, n = self["sweep.from"], self["sweep.to"], self["sweep.points"]
        if self["sweep.log_scale"]:
            return np.logspace(math.log10(lo), math.log10(hi), n)
        return np.linspace(lo, hi, n)


@dataclass
class Instance:
    channel: Sub6Channel
    link: MmWaveLink
    model: object = None


def build_instance(cfg, params):
    mode = cfg["channel.mode"]
    model = None
    if mode == "rayleigh":
        ch = generate_rayleigh(params.n_t, params.n_r, cfg["channel.seed"], cfg["channel.gain"])
    elif mode == "file":
        try:
            ch = load_channel(cfg["channel.path"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"channel.path: {exc}")
        if ch.n_t != params.n_t or ch.n_r != params.n_r:
            raise ConfigError(
                f"channel.path: matrix is {ch.n_r}x{ch.n_t}, system expects {params.n_r}x{params.n_t}"
            )
    else:
        model = random_csit_model(
            params.n_t, params.n_r, cfg["channel.seed"], cfg["channel.los_gain"],
            cfg["channel.epsilon"], cfg["channel.sigma_e2"],
        )
        ch = sample_compound_channel(model, cfg["channel.seed"])
    if cfg["mmwave.mode"] == "fixed":
        link = MmWaveLink(cfg["mmwave.gain"])
    else:
        link = generate_mmwave_gain(
            params.n_t, params.n_r, cfg["mmwave.seed"], cfg["mmwave.scale"], cfg["mmwave.k_factor"]
        )
    return Instance(ch, link, model)


def _problem(cfg, inst, params):
    return sumrate.Problem.from_channels(inst.channel, inst.link, params)


def run_solver(cfg, inst, params):
    """Solve per the ``solver.*`` block; returns (SolveReport, Problem)."""
    bound = cfg["solver.csit_bound"]
    mode = sumrate.SolveMode(cfg["solver.mode"])
    if cfg["solver.problem"] == "ee":
        prob = _problem(cfg, inst, params)
        delta = cfg["solver.delta"] or None
        return eesolver.dinkelbach_problem(prob, delta, cfg["solver.p_cap"]), prob
    if bound != "none":
        if inst.model is None:
            raise ConfigError("solver.csit_bound needs channel.mode = compound")
        rep = csit.solve_with_csit(
            inst.model, inst.link, params, bound, cfg["solver.mc_samples"], cfg["channel.seed"],
            mode=mode,
        )
        gains = rep.extras.get("sigmas")
        if bound == "lower":
            gains = np.array([inst.model.worst_gain()])
        else:
            cov = rep.extras["covariance"]
            if cov.total_power > 0:
                gains = gains * cov.antenna_powers / cov.total_power
            else:
                gains = gains / gains.size
        return rep, sumrate.Problem(gains, inst.link.gain_A, params)
    prob = _problem(cfg, inst, params)
    return sumrate.solve_problem(prob, mode), prob


def run_oracle(cfg, prob):
    if cfg["solver.problem"] == "ee":
        return oracle.grid_search_ee_gains(
            prob.sub6_gains, prob.gain_A, prob.params, cfg.grid(), cfg["solver.p_cap"]
        )
    return oracle.grid_search_sumrate_gains(prob.sub6_gains, prob.gain_A, prob.params, cfg.grid())


def _objective(cfg, rep):
    return rep.eval.ee if cfg["solver.problem"] == "ee" else rep.eval.rate_total


def fmt(x):
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


class Output:
    def __init__(self, bits):
        self.bits = bits
        self.unit = "bits" if bits else "nats"

    def scale(self, nats):
        return nats / LN2 if self.bits else nats

    def header(self, sweep=False, check=False, extra=()):
        cols = ["w_sub6", "w_m", "p_sub6", "p_m", f"rate_total_{self.unit}", "rate_total_mbps",
                "ee", "active_case", "kkt_residual"]
        if sweep:
            cols.insert(0, "sweep_value")
        if check:
            cols.append("oracle_gap")
        return cols + list(extra)

    def row(self, rep, sweep_value=None, gap=None, extra=()):
        a = rep.allocation
        vals = [a.w_sub6, a.w_m, a.p_sub6, a.p_m, self.scale(rep.eval.rate_total),
                to_mbps(rep.eval.rate_total), self.scale(rep.eval.ee),
                rep.kkt.active_case.value, rep.kkt.max_residual]
        if sweep_value is not None:
            vals.insert(0, sweep_value)
        if gap is not None:
            vals.append(gap)
        return [fmt(v) for v in list(vals) + list(extra)]


def write_csv(path, header, rows):
    if not path:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


PLOT_TEMPLATE = '''"""Render the sweep stored in {csv_name} (needs pandas and matplotlib)."""
import sys

import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv({csv_path!r})
x = df["sweep_value"]
fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
axes[0].plot(x, df["w_m"] / 1e6, "o-", label="mmWave")
axes[0].plot(x, df["w_sub6"] / 1e6, "s-", label="sub-6")
axes[0].set_ylabel("bandwidth (MHz)")
axes[1].plot(x, df["rate_total_mbps"], "o-")
axes[1].set_ylabel("sum rate (Mbps)")
axes[2].plot(x, df["ee"], "o-", label="optimal")
if "ee_full" in df:
    axes[2].plot(x, df["ee_full"], "s--", label="full bandwidth")
axes[2].set_ylabel("energy efficiency ({unit}/J)")
for ax in axes:
    ax.set_xlabel({xlabel!r})
    if {log_x}:
        ax.set_xscale("log")
    ax.grid(True, alpha=0.3)
axes[0].legend()
axes[2].legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png!r}, dpi=150)
'''


def write_plot_script(cfg, csv_path, out):
    if not (cfg["output.plot_script"] and csv_path):
        return None
    base = os.path.splitext(csv_path)[0]
    script = base + "_plot.py"
    with open(script, "w") as fh:
        fh.write(PLOT_TEMPLATE.format(
            csv_name=os.path.basename(csv_path), csv_path=os.path.abspath(csv_path),
            unit=out.unit, xlabel=cfg["sweep.variable"], log_x=bool(cfg["sweep.log_scale"]),
            png=base + ".png",
        ))
    return script


def print_report(rep, out, label=""):
    a = rep.allocation
    head = f"[{label}] " if label else ""
    print(f"{head}candidate: {rep.candidate}  case: {rep.kkt.active_case.value}  "
          f"regime: {rep.snr_regime.value}")
    print(f"  w_sub6 = {a.w_sub6:.6g} Hz   w_m = {a.w_m:.6g} Hz")
    print(f"  p_sub6 = {a.p_sub6:.6g} W    p_m = {a.p_m:.6g} W")
    print(f"  rate   = {out.scale(rep.eval.rate_total):.6g} {out.unit}/s "
          f"({to_mbps(rep.eval.rate_total):.6g} Mbps)")
    print(f"  power  = {rep.eval.consumed_power:.6g} W   EE = {out.scale(rep.eval.ee):.6g} {out.unit}/J")
    print(f"  KKT max residual = {rep.kkt.max_residual:.3g}")
    for w in rep.warnings:
        print(f"  warning: {w}")


def _csv_path(args, cfg):
    return args.csv or cfg["output.csv_path"]


def cmd_solve(args, cfg):
    out = Output(args.bits)
    params = cfg.params()
    inst = build_instance(cfg, params)
    rep, prob = run_solver(cfg, inst, params)
    print_report(rep, out)
    gap = None
    status = EXIT_OK
    if args.check:
        status, gap = _certify(cfg, rep, prob, out)
    write_csv(_csv_path(args, cfg), out.header(check=args.check), [out.row(rep, gap=gap)])
    return status


def certified(solver_value, oracle_value, bound, rtol=1e-9):
    """Mutual certification: the oracle may not beat the solver, and the
    solver may not beat the oracle by more than its resolution bound."""
    slack = 1e-9 + rtol * max(abs(solver_value), abs(oracle_value))
    gap = solver_value - oracle_value
    return -slack <= gap <= bound + slack


def _certify(cfg, rep, prob, out, verbose=True):
    res = run_oracle(cfg, prob)
    ours = _objective(cfg, rep)
    gap = ours - res.objective
    ok = certified(ours, res.objective, res.resolution_bound)
    if verbose:
        unit = f"{out.unit}/J" if cfg["solver.problem"] == "ee" else f"{out.unit}/s"
        print(f"  solver objective = {out.scale(ours):.12g} {unit}")
        print(f"  oracle objective = {out.scale(res.objective):.12g} {unit}  "
              f"(pattern {res.pattern}, resolution bound {out.scale(res.resolution_bound):.3g})")
        print(f"  gap = {out.scale(gap):.3g}  -> {'PASS' if ok else 'FAIL'}")
        if not ok:
            print(f"  solver allocation: {rep.allocation.as_tuple()}")
            print(f"  oracle allocation: {res.allocation.as_tuple()}")
    return (EXIT_OK if ok else EXIT_CERT), gap


def cmd_check(args, cfg):
    out = Output(args.bits)
    params = cfg.params()
    inst = build_instance(cfg, params)
    rep, prob = run_solver(cfg, inst, params)
    print_report(rep, out)
    status, gap = _certify(cfg, rep, prob, out)
    write_csv(_csv_path(args, cfg), out.header(check=True), [out.row(rep, gap=gap)])
    return status


def _sweep(args, cfg, extra_cols=(), extra_fn=None):
    var = cfg["sweep.variable"]
    if not var:
        raise ConfigError("sweep: sweep.variable is required for this command")
    out = Output(args.bits)
    base = cfg.params()
    inst = build_instance(cfg, base)
    rows, status = [], EXIT_OK
    for x in cfg.sweep_values():
        params = base.replace(**{var: float(x)})
        rep, prob = run_solver(cfg, inst, params)
        gap = None
        if args.check:
            st, gap = _certify(cfg, rep, prob, out, verbose=False)
            if st != EXIT_OK:
                print(f"  certification failed at {var} = {x:.6g} (gap {gap:.3g})")
                status = st
        extra = extra_fn(prob, params) if extra_fn else ()
        rows.append(out.row(rep, sweep_value=x, gap=gap, extra=extra))
        print(f"{var} = {x:.6g}: w_m = {rep.allocation.w_m:.6g} Hz, "
              f"rate = {out.scale(rep.eval.rate_total):.6g} {out.unit}/s, "
              f"EE = {out.scale(rep.eval.ee):.6g} {out.unit}/J")
    path = _csv_path(args, cfg)
    write_csv(path, out.header(sweep=True, check=args.check, extra=extra_cols), rows)
    script = write_plot_script(cfg, path, out)
    if script:
        print(f"plot script written to {script}")
    return status


def cmd_sweep(args, cfg):
    return _sweep(args, cfg)


def cmd_ee(args, cfg):
    cfg.values["solver.problem"] = "ee"
    out = Output(args.bits)
    full_power = cfg["solver.full_power"] or cfg["system.p_max"]
    if not cfg["sweep.variable"]:
        return cmd_solve(args, cfg)

    def full(prob, params):
        return (out.scale(eesolver.full_allocation_ee(prob, full_power)),)

    return _sweep(args, cfg, ("ee_full",), full)


TABLE2 = {
    "system.p_max": 2.5, "system.adc_a": 1e-7, "system.n_t": 64, "system.n_r": 16,
    "system.w_sub6_max": 1e6, "system.w_m_max": 1e9, "channel.gain": 1e9,
    "mmwave.mode": "fixed", "mmwave.gain": 6.4e9,
}


def table2(seed=0, overrides=None):
    """Full-bandwidth vs optimal allocation for the high-ADC-cost scenario.

    Returns ``(full_allocation, full_rate, optimal_report, adc_cost)``; the
    full-bandwidth column has zero transmit power whenever the ADC cost of
    both caps exceeds the budget.
    """
    vals = dict(DEFAULTS)
    vals.update(TABLE2)
    vals["channel.seed"] = seed
    vals.update(overrides or {})
    cfg = ExperimentConfig(vals)
    params = cfg.params()
    inst = build_instance(cfg, params)
    adc = params.sub6_cost * params.w_sub6_max + params.mm_cost * params.w_m_max
    spare = max(params.p_max - adc, 0.0)
    full = Allocation(params.w_sub6_max, params.w_m_max, spare / 2, spare / 2)
    prob = sumrate.Problem.from_channels(inst.channel, inst.link, params)
    full_rate = prob.evaluate(full).rate_total if spare > 0 else 0.0
    return full, full_rate, sumrate.solve_problem(prob), adc


def cmd_table2(args, cfg):
    out = Output(args.bits)
    seed = cfg["channel.seed"] if args.seed is None else args.seed
    full, full_rate, rep, adc = table2(seed)
    a = rep.allocation
    print(f"ADC consumption at full bandwidth: {adc:.6g} W (budget {TABLE2['system.p_max']} W)")
    print(f"{'resource':<28}{'full bandwidth':>18}{'optimal':>18}")
    lines = [
        ("sub-6 bandwidth (MHz)", full.w_sub6 / 1e6, a.w_sub6 / 1e6),
        ("mmWave bandwidth (MHz)", full.w_m / 1e6, a.w_m / 1e6),
        ("sub-6 transmit power (mW)", full.p_sub6 * 1e3, a.p_sub6 * 1e3),
        ("mmWave transmit power (mW)", full.p_m * 1e3, a.p_m * 1e3),
        (f"sum rate ({out.unit}/s)", out.scale(full_rate), out.scale(rep.eval.rate_total)),
    ]
    for name, x, y in lines:
        print(f"{name:<28}{x:>18.6g}{y:>18.6g}")
    for w in rep.warnings:
        print(f"warning: {w}")
    path = _csv_path(args, cfg)
    write_csv(path, ["resource", "full", "optimal"], [[n, fmt(x), fmt(y)] for n, x, y in lines])
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "ee": cmd_ee,
    "check": cmd_check,
    "table2": cmd_table2,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hybridalloc",
        description="Joint power and bandwidth allocation across sub-6 GHz and mmWave interfaces.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat 'section.key = value' configuration file")
    parser.add_argument("--seed", type=int, help="override channel and mmWave seeds")
    parser.add_argument("--csv", help="CSV output path (overrides output.csv_path)")
    parser.add_argument("--check", action="store_true", help="certify against the grid oracle")
    parser.add_argument("--bits", action="store_true", help="report bits instead of nats")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = ExperimentConfig.load(args.config, args.seed)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
