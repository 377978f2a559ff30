"""Command-line front end: scenario generation, closed-loop simulation with
CSV output, verification oracles, plotting and gain sweeps.

    ltvobs example [--slow-gains] OUT.toml
    ltvobs simulate SCENARIO.toml [--t-final S] [--dt S] [--noise-amplitude A]
                    [--seed N] [--out CSV]
    ltvobs verify SCENARIO.toml [--report PATH]
    ltvobs plot CSV OUTDIR
    ltvobs sweep SCENARIO.toml --grid SPEC [--outdir DIR] [--workers N]
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import scenario_io, verify
from .ode import BlowUpError, IntegrationConfig
from .sim import run_closed_loop, run_report
from .truth import Scenario, ScenarioValidationError, make_example_scenario

__all__ = ["main"]


def _apply_overrides(sc: Scenario, args) -> Scenario:
    updates = {}
    if args.noise_amplitude is not None:
        updates["noise_amplitude"] = args.noise_amplitude
    if args.seed is not None:
        updates["noise_seed"] = args.seed
    return dataclasses.replace(sc, **updates) if updates else sc


def _config(args) -> IntegrationConfig:
    return IntegrationConfig(h=args.dt, t_final=args.t_final,
                             record_stride=args.record_stride)


def cmd_example(args) -> int:
    sc = make_example_scenario(slow_gains=args.slow_gains)
    scenario_io.save_scenario(sc, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_simulate(args) -> int:
    sc = scenario_io.load_scenario(args.scenario)
    sc = _apply_overrides(sc, args)
    try:
        res = run_closed_loop(sc, _config(args))
    except BlowUpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        scenario_io.write_csv(res, args.out)
    report = run_report(res)
    for line in report.lines():
        print(line)
    return 0


def cmd_verify(args) -> int:
    sc = scenario_io.load_scenario(args.scenario)
    reports = verify.run_all_checks(sc)
    width = max(len(r.name) for r in reports)
    failed = False
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}")
        failed |= not r.passed
    if args.report:
        lines = []
        for r in reports:
            lines.extend(r.lines())
        Path(args.report).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"report written to {args.report}")
    return 1 if failed else 0


def cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, data = scenario_io.read_csv(args.csv)
    col = {name: i for i, name in enumerate(header)}
    t = data[:, col["t"]]
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    # parameter error norm, log scale; exact zeros cannot be drawn on a log
    # axis, so they are dropped and counted in a footnote
    perr = data[:, col["param_err_norm"]]
    nz = perr > 0.0
    fig, ax = plt.subplots()
    ax.semilogy(t[nz], perr[nz])
    ax.set_xlabel("t [s]")
    ax.set_ylabel("parameter error norm")
    n_dropped = int(np.count_nonzero(~nz))
    if n_dropped:
        fig.text(0.01, 0.01, f"{n_dropped} exact-zero samples omitted (log scale)",
                 fontsize=7)
    path = outdir / "param_err_norm.svg"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    # per-component state observation error
    n = sum(1 for name in header if name.startswith("x_") and not name.startswith("xhat"))
    fig, ax = plt.subplots()
    for i in range(n):
        err = data[:, col[f"xhat_{i + 1}"]] - data[:, col[f"x_{i + 1}"]]
        ax.plot(t, err, label=f"x̂_{i + 1} − x_{i + 1}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("state observation error")
    ax.legend()
    path = outdir / "state_err.svg"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots()
    ax.plot(t, data[:, col["Delta"]])
    ax.set_xlabel("t [s]")
    ax.set_ylabel("Delta")
    path = outdir / "delta.svg"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    for p in written:
        print(f"wrote {p}")
    return 0


def _parse_grid(spec: str) -> list[dict[str, float]]:
    """'gains.alpha=1,10;gains.f0=0.001,0.1' -> cartesian product of dicts."""
    axes = []
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        key, _, vals = part.partition("=")
        if not vals:
            raise ValueError(f"grid axis {part!r} has no values")
        axes.append((key.strip(), [float(v) for v in vals.split(",")]))
    combos = []
    for values in itertools.product(*(vals for _, vals in axes)):
        combos.append({key: v for (key, _), v in zip(axes, values)})
    return combos


_GRID_FIELDS = {
    "gains.f0": "f0", "gains.alpha": "alpha", "gains.gamma": "gamma",
    "noise.amplitude": "noise_amplitude",
}


def _sweep_one(payload):
    scenario_path, combo, cfg_kwargs, outdir = payload
    sc = scenario_io.load_scenario(scenario_path)
    updates = {}
    for key, val in combo.items():
        if key not in _GRID_FIELDS:
            raise ValueError(f"unsupported sweep key {key!r}; "
                             f"supported: {sorted(_GRID_FIELDS)}")
        updates[_GRID_FIELDS[key]] = val
    sc = dataclasses.replace(sc, **updates)
    res = run_closed_loop(sc, IntegrationConfig(**cfg_kwargs))
    tag = "_".join(f"{k.split('.')[-1]}{v:g}" for k, v in combo.items())
    report = run_report(res)
    lines = [f"sweep.{k} = {v:g}" for k, v in combo.items()] + report.lines()
    out = Path(outdir) / f"run_{tag}.report"
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(out), report.final_theta_err


def cmd_sweep(args) -> int:
    combos = _parse_grid(args.grid)
    if not combos:
        print("error: empty sweep grid", file=sys.stderr)
        return 2
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg_kwargs = dict(h=args.dt, t_final=args.t_final, record_stride=args.record_stride)
    payloads = [(args.scenario, combo, cfg_kwargs, str(outdir)) for combo in combos]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_one, payloads))
    else:
        results = [_sweep_one(p) for p in payloads]
    for path, err in results:
        print(f"{path}: final_theta_err = {err:.6e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltvobs",
                                     description="Adaptive LTV state observer simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("example", help="write the built-in benchmark scenario")
    p.add_argument("out", help="output scenario path (.toml)")
    p.add_argument("--slow-gains", action="store_true",
                   help="use f0=0.1, alpha=1 instead of f0=0.001, alpha=100")
    p.set_defaults(func=cmd_example)

    def add_sim_args(p):
        p.add_argument("--t-final", type=float, default=100.0)
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--record-stride", type=int, default=100)

    p = sub.add_parser("simulate", help="run the closed loop and emit CSV + report")
    p.add_argument("scenario")
    add_sim_args(p)
    p.add_argument("--noise-amplitude", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="trajectory CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run all verification oracles")
    p.add_argument("scenario")
    p.add_argument("--report", default=None, help="machine-readable report path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="static plots from a trajectory CSV")
    p.add_argument("csv")
    p.add_argument("outdir")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("sweep", help="fan out runs over a gain grid")
    p.add_argument("scenario")
    p.add_argument("--grid", required=True,
                   help="e.g. 'gains.alpha=1,10,100;gains.f0=0.001,0.1'")
    p.add_argument("--outdir", default="sweep_out")
    p.add_argument("--workers", type=int, default=1)
    add_sim_args(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioValidationError, scenario_io.CsvFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
