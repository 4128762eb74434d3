"""Command-line experiment runner.

Every subcommand writes CSV files (comma separated, LF newlines, header row)
plus a JSON manifest into the output directory. ``cogscale replay`` re-runs
a manifest and reproduces the CSV bytes.

Exit codes: 0 success, 2 usage or configuration error, 3 numeric or
infeasibility error, 4 placement error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__, bounds, interference, per_design, throughput
from .core import (
    CogScaleError,
    ConfigError,
    DomainError,
    NetworkConfig,
    NumericError,
    PlacementError,
    PowerMode,
    UnsupportedError,
    config_from_mapping,
    derived_quantities,
    load_config,
    tomllib,
    validate,
)
from .geometry import check_placement, place_network, placement_to_csv

OUT_ENV = "COGSCALE_OUT"
DEFAULT_OUT = "cogscale_out"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PLACEMENT = 0, 2, 3, 4
U64_MAX = 2 ** 64 - 1

# options shared by every subcommand: (flags, kwargs, default)
_COMMON = [
    (("--config",), dict(metavar="PATH", help="flat TOML config file"), None),
    (("--seed",), dict(type=int, metavar="U64", help="master seed (default 0)"), 0),
    (("--workers",), dict(type=int, metavar="N", help="worker processes (default 1)"), 1),
    (("--out",), dict(metavar="DIR", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})"), None),
    (("--dump-raw",), dict(action="store_true", help="also write raw per-draw samples"), False),
    (("--set",), dict(action="append", metavar="KEY=VALUE", dest="overrides",
                      help="override one config field; repeatable"), None),
    (("--mode",), dict(choices=["constant", "scaled"], help="cognitive power law"), None),
    (("--gamma",), dict(type=float, help="power exponent; implies --mode scaled"), None),
]


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _db(x: float) -> Optional[float]:
    return 10 * math.log10(x) if x > 0 else None


class Run:
    """Output bookkeeping for one invocation."""

    def __init__(self, out_dir: Path, name: str):
        self.out_dir = out_dir
        self.name = name
        self.outputs: list[str] = []

    def write(self, filename: str, header, rows) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / filename
        with open(path, "w", newline="") as fh:
            fh.write(csv_text(header, rows))
        self.outputs.append(filename)
        return path

    def write_text(self, filename: str, text: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / filename
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.outputs.append(filename)
        return path


# ----------------------------------------------------------------- commands

def cmd_validate(args, config: NetworkConfig, run: Run) -> int:
    report = validate(config)
    if not report.ok:
        for v in report:
            print(f"{v.code}: {v.message}", file=sys.stderr)
        return EXIT_CONFIG
    d = derived_quantities(config)
    run.write("derived.csv", ["quantity", "value"], [
        ("n_expected", d.n_expected),
        ("capacity_C", d.capacity_C),
        ("outage_rate_C0", d.outage_rate_C0),
    ])
    print("config ok")
    return EXIT_OK


def cmd_place(args, config: NetworkConfig, run: Run) -> int:
    placement = place_network(config, args.n, args.seed, fill_pers=args.fill_pers)
    problems = check_placement(placement, config, fill_pers=args.fill_pers)
    if problems:
        raise PlacementError("; ".join(problems))
    run.write_text("placement.csv", placement_to_csv(placement))
    print(f"placed {placement.n} pairs, acceptance ratio {placement.acceptance_ratio:.4f}")
    return EXIT_OK


def cmd_interference_mc(args, config: NetworkConfig, run: Run) -> int:
    R = config.network_radius_R
    if args.target == "primary":
        est = interference.mc_primary_rx_interference(config, args.trials, args.seed, n=args.n,
                                                      workers=args.workers)
        if args.n is not None:
            reference = None
        else:
            try:
                reference = bounds.exact_interference_alpha4(config, R)
            except UnsupportedError:
                reference = bounds.quadrature_oracle(config, R)
    else:
        est = interference.mc_central_rx_interference(config, args.trials, args.seed,
                                                      workers=args.workers)
        reference = interference.avg_cog_interference(config, R)
    run.write("interference_mc.csv",
              ["target", "mean", "variance", "stderr", "n_trials", "reference"],
              [(args.target, est.mean, est.variance, est.stderr, est.n_trials, reference)])
    if args.dump_raw:
        run.write("interference_mc_raw.csv", ["trial", "I0"], enumerate(est.samples))
    print(f"mean {est.mean:.6g} +/- {est.stderr:.3g} (reference {_fmt(reference) or 'n/a'})")
    return EXIT_OK


def cmd_interference_lattice(args, config: NetworkConfig, run: Run) -> int:
    eps_c = args.eps_c if args.eps_c is not None else config.rx_protect_eps_c / config.per_radius_R0
    alpha = config.path_loss_alpha
    thetas = interference.theta_grid(args.theta_grid)
    scan = interference.lattice_scan(thetas, eps_c, alpha, args.K)
    run.write("lattice.csv", ["theta", "value", "tail_bound"],
              [(s.theta, s.value, s.tail_bound) for s in scan])
    worst = interference.worst_case_primary_interference(eps_c, alpha, args.K, args.theta_grid)
    print(f"worst-case lattice sum {worst.value:.10g} at theta {worst.theta:.6g} "
          f"(tail <= {worst.tail_bound:.3g})")
    return EXIT_OK


def cmd_interference_avg(args, config: NetworkConfig, run: Run) -> int:
    radii = args.R if args.R else [config.network_radius_R, math.inf]
    rows = [(r, interference.avg_cog_interference(config, r)) for r in radii]
    run.write("avg_interference.csv", ["R", "mean_interference"], rows)
    for r, v in rows:
        print(f"R={r:g}: {v:.10g}")
    return EXIT_OK


def cmd_bounds_grid(args, config: NetworkConfig, run: Run) -> int:
    R = args.R if args.R is not None else math.inf
    rows = []
    for r0 in args.r0_grid:
        cfg = config.with_(per_radius_R0=float(r0))
        b = bounds.bound_set(cfg, R)
        oracle = bounds.quadrature_oracle(cfg, R)
        rows.append((r0, b.lb1, b.lb2, b.ub, b.exact_alpha4, oracle))
    run.write("bounds_grid.csv", ["R0", "lb1", "lb2", "ub", "exact", "oracle"], rows)
    return EXIT_OK


FIGURE_ALPHA = {"figure7": 3.0, "figure8": 4.0, "figure9": 5.0}


def cmd_bounds_figure(args, config: NetworkConfig, run: Run) -> int:
    alpha = FIGURE_ALPHA[args.figure]
    r0_values = range(1, args.r0_max + 1)
    if alpha == 4.0:
        data = bounds.figure_rows(alpha, r0_values, with_oracle=False)
        header = ["R0", "lb1", "lb2", "ub", "exact"]
        rows = [(d["R0"], d["lb1"], d["lb2"], d["ub"], d["exact_alpha4"]) for d in data]
    else:
        data = bounds.figure_rows(alpha, r0_values, with_oracle=True)
        header = ["R0", "lb1", "lb2", "ub", "exact_alpha4", "oracle"]
        rows = [(d["R0"], d["lb1"], d["lb2"], d["ub"], d["exact_alpha4"], d["oracle"])
                for d in data]
    run.write(f"{args.figure}.csv", header, rows)
    return EXIT_OK


def cmd_per_solve(args, config: NetworkConfig, run: Run) -> int:
    sol = per_design.solve(config)
    run.write("per_solution.csv",
              ["r0_interference_free", "r0_markov", "r0_implicit", "binding_constraint"],
              [(sol.r0_interference_free, sol.r0_markov, sol.r0_implicit,
                sol.binding_constraint.value)])
    print(f"R0 design {sol.design_radius:.6g} (binding: {sol.binding_constraint.value})")
    if args.outage_draws:
        est = per_design.empirical_outage(config, sol.r0_markov, args.outage_draws, args.seed,
                                          workers=args.workers)
        run.write("per_outage.csv", ["r0", "outage_prob", "stderr", "n_draws", "beta"],
                  [(est.r0, est.outage_prob, est.stderr, est.n_draws, config.outage_prob_beta)])
        print(f"empirical outage at the Markov radius: {est.outage_prob:.4g} "
              f"(beta {config.outage_prob_beta:g})")
    return EXIT_OK


def _binding(config: NetworkConfig, r0: float, variant: str) -> str:
    r_u = per_design.interference_free_radius(config)
    if r0 >= 0.99 * r_u:
        return per_design.Binding.NOISE.value
    return (per_design.Binding.IMPLICIT if variant == "implicit" else per_design.Binding.MARKOV).value


def cmd_per_fig10(args, config: NetworkConfig, run: Run) -> int:
    curve = per_design.tradeoff_curve(config, "R0_vs_eps_p", args.eps_p_grid, args.c0_series,
                                      args.variant)
    rows = []
    for c0, eps_p, r0 in curve.rows:
        cfg = config.with_(outage_rate_C0=c0, eta_fraction=None, guard_band_eps_p=eps_p)
        b = _binding(cfg, r0, curve.variant)
        rows.append((c0, eps_p, r0, b))
        print(f"C0={c0:g} eps_p={eps_p:g}: R0={r0:.6g} [{b}]")
    for c0, eps_p in curve.missing:
        print(f"C0={c0:g} eps_p={eps_p:g}: infeasible", file=sys.stderr)
    run.write("fig10.csv", ["C0", "eps_p", "R0", "binding"], rows)
    return EXIT_OK


def cmd_per_fig11(args, config: NetworkConfig, run: Run) -> int:
    curve = per_design.tradeoff_curve(config, "P0_vs_R0", args.r0_grid, args.eps_p_series,
                                      args.variant)
    rows = [(eps_p, r0, p0, _db(p0)) for eps_p, r0, p0 in curve.rows]
    for eps_p, r0 in curve.missing:
        print(f"eps_p={eps_p:g} R0={r0:g}: infeasible", file=sys.stderr)
    run.write("fig11.csv", ["eps_p", "R0", "P0", "P0_dB"], rows)
    return EXIT_OK


def cmd_scaling(args, config: NetworkConfig, run: Run) -> int:
    result = throughput.scaling_experiment(config, args.n_grid, args.seeds, args.seed, args.workers,
                                           args.K, args.theta_grid)
    run.write("scaling.csv", ["n", "T_n", "S_n", "std", "C1bar"],
              [(p.n, p.mean_per_user_rate, p.sum_rate, p.std_across_seeds, p.lower_bound_C1bar)
               for p in result.per_n])
    if args.dump_raw:
        run.write("scaling_raw.csv", ["n", "seed_index", "T"],
                  [(n, i, t) for n in result.n_values for i, t in enumerate(result.per_seed[n])])
    for p in result.per_n:
        print(f"n={p.n}: T_n={p.mean_per_user_rate:.5g} (C1bar {p.lower_bound_C1bar:.3g})")
    return EXIT_OK


def cmd_concentration(args, config: NetworkConfig, run: Run) -> int:
    table = throughput.concentration_experiment(config, args.n_grid, args.trials, args.delta,
                                                args.seed, args.workers)
    run.write("concentration.csv",
              ["n", "mean_rate", "std_rate", "p_delta", "var_rate", "k2_proxy", "delta"],
              [(r.n, r.mean_rate, r.std_rate, r.p_delta, r.var_rate, r.k2_proxy, table.delta)
               for r in table.rows])
    if args.dump_raw:
        run.write("concentration_raw.csv", ["n", "trial", "S_over_n"],
                  [(n, i, s) for n, arr in table.per_trial.items() for i, s in enumerate(arr)])
    print(f"log-log slope of std(S_n/n): {table.decay_slope():.4f}")
    return EXIT_OK


# ------------------------------------------------------------------- parser

def _add_common(parser: argparse.ArgumentParser):
    for flags, kwargs, _ in _COMMON:
        parser.add_argument(*flags, default=argparse.SUPPRESS, **kwargs)


def _leaf(sub, name: str, func, help_text: str, **defaults) -> argparse.ArgumentParser:
    p = sub.add_parser(name, help=help_text, description=help_text)
    _add_common(p)
    p.set_defaults(func=func, **defaults)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cogscale",
                                     description="Cognitive network interference and scaling experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_common(parser)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    _leaf(sub, "validate", cmd_validate, "check a configuration and print derived quantities")

    p = _leaf(sub, "place", cmd_place, "sample one placement and write it as CSV")
    p.add_argument("--n", type=int, help="fixed node count (Poisson when omitted)")
    p.add_argument("--fill-pers", action="store_true",
                   help="let cognitive transmitters occupy PERs (bound validation only)")

    inter = sub.add_parser("interference", help="interference estimates")
    isub = inter.add_subparsers(dest="kind", metavar="KIND")
    isub.required = True
    p = _leaf(isub, "mc", cmd_interference_mc, "Monte Carlo mean interference")
    p.add_argument("--target", choices=["primary", "central"], default="primary")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--n", type=int, help="fixed node count (Poisson when omitted)")
    p = _leaf(isub, "lattice", cmd_interference_lattice, "hexagonal-lattice primary interference scan")
    p.add_argument("--K", type=int, default=interference.DEFAULT_TRUNCATION_K)
    p.add_argument("--theta-grid", type=int, default=interference.DEFAULT_THETA_GRID)
    p.add_argument("--eps-c", type=float, help="normalized protection radius (default eps_c/R0)")
    p = _leaf(isub, "avg", cmd_interference_avg, "mean cognitive interference at the centre")
    p.add_argument("--R", type=_floats, help="network radii (inf allowed)")

    bnd = sub.add_parser("bounds", help="mean-interference bounds")
    bsub = bnd.add_subparsers(dest="kind", metavar="KIND")
    bsub.required = True
    p = _leaf(bsub, "grid", cmd_bounds_grid, "bounds and quadrature on an R0 grid")
    p.add_argument("--r0-grid", type=_floats, default=[1.0, 2.0, 5.0, 10.0, 20.0])
    p.add_argument("--R", type=float, help="network radius (default inf)")
    for fig, alpha in FIGURE_ALPHA.items():
        p = _leaf(bsub, fig, cmd_bounds_figure,
                  f"bound table versus R0 for alpha={alpha:g}, lambda=P=1, eps_p=2", figure=fig)
        p.add_argument("--r0-max", type=int, default=20)

    per = sub.add_parser("per-radius", help="exclusive-region radius design")
    psub = per.add_subparsers(dest="kind", metavar="KIND")
    psub.required = True
    p = _leaf(psub, "solve", cmd_per_solve, "all radius solutions for the configuration")
    p.add_argument("--outage-draws", type=int, default=0,
                   help="also simulate outage at the Markov radius with this many placements")
    p = _leaf(psub, "curve-fig10", cmd_per_fig10, "R0 versus guard band for several C0")
    p.add_argument("--eps-p-grid", type=_floats, default=[0.5 * k for k in range(1, 21)])
    p.add_argument("--c0-series", type=_floats, default=[1.0, 2.0, 3.0, 4.0])
    p.add_argument("--variant", choices=["auto", "markov", "implicit"], default="auto")
    p = _leaf(psub, "curve-fig11", cmd_per_fig11, "required P0 versus R0 for several guard bands")
    p.add_argument("--r0-grid", type=_floats, default=[0.25 * k for k in range(2, 17)])
    p.add_argument("--eps-p-series", type=_floats, default=[0.5, 1.0, 2.0, 5.0, 10.0])
    p.add_argument("--variant", choices=["auto", "markov", "implicit"], default="auto")

    for name, func, help_text in [
        ("scaling", cmd_scaling, "per-user and sum rate versus n at fixed density"),
        ("concentration", cmd_concentration, "spread of S_n/n over independent placements"),
    ]:
        p = _leaf(sub, name, func, help_text)
        p.add_argument("--n-grid", type=_ints, default=list(throughput.DEFAULT_N_GRID))
        if name == "scaling":
            p.add_argument("--seeds", type=int, default=20)
            p.add_argument("--K", type=int, default=interference.DEFAULT_TRUNCATION_K)
            p.add_argument("--theta-grid", type=int, default=interference.DEFAULT_THETA_GRID)
        else:
            p.add_argument("--trials", type=int, default=100)
            p.add_argument("--delta", type=float)

    p = sub.add_parser("replay", help="re-run a manifest and reproduce its outputs")
    p.add_argument("manifest", help="path to a manifest JSON file")
    p.add_argument("--out", help="output directory (default: the manifest's directory)")
    p.set_defaults(func=None)
    return parser


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def resolve_config(args) -> NetworkConfig:
    config = load_config(args.config) if args.config else NetworkConfig()
    changes = {}
    for item in args.overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        changes[key.strip()] = _parse_value(value.strip())
    if args.mode is not None:
        changes["mode"] = PowerMode.SCALED if args.mode == "scaled" else PowerMode.CONSTANT
    if args.gamma is not None:
        changes["power_exponent_gamma"] = args.gamma
        changes.setdefault("mode", PowerMode.SCALED)
    return config_from_mapping(changes, config) if changes else config


def _resolve_common(args):
    for flags, kwargs, default in _COMMON:
        name = kwargs.get("dest") or flags[0].lstrip("-").replace("-", "_")
        if not hasattr(args, name):
            setattr(args, name, default)
    if not 0 <= args.seed <= U64_MAX:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")


def _command_name(args) -> str:
    parts = [args.command]
    if getattr(args, "kind", None):
        parts.append(args.kind)
    return "_".join(p.replace("-", "_") for p in parts)


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _execute(args, argv: Sequence[str], config_override: Optional[NetworkConfig] = None) -> int:
    _resolve_common(args)
    config = config_override if config_override is not None else resolve_config(args)
    if args.command != "validate":
        config.require_valid()
    name = _command_name(args)
    run = Run(_out_dir(args), name)
    start = time.perf_counter()
    code = args.func(args, config, run)
    if code == EXIT_OK:
        manifest = {
            "subcommand": name,
            "argv": list(argv),
            "config": config.as_dict(),
            "seed": args.seed,
            "workers": args.workers,
            "version": __version__,
            "outputs": run.outputs,
            "duration_s": time.perf_counter() - start,
        }
        run.write_text(f"{name}.manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return code


def _strip_options(argv: Sequence[str], drop: dict[str, int]) -> list[str]:
    """Remove options (with their value count) from an argv list."""
    out, skip = [], 0
    for tok in argv:
        if skip:
            skip -= 1
            continue
        key = tok.split("=", 1)[0]
        if key in drop:
            skip = drop[key] if "=" not in tok else 0
            continue
        out.append(tok)
    return out


def replay(manifest_path: str, out: Optional[str], parser: argparse.ArgumentParser) -> int:
    path = Path(manifest_path)
    try:
        manifest = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest {path}: {exc}") from exc
    argv = _strip_options(manifest["argv"], {"--config": 1, "--set": 1, "--mode": 1,
                                             "--gamma": 1, "--out": 1})
    target = out or str(path.parent)
    args = parser.parse_args(argv + ["--out", target])
    config = config_from_mapping(manifest["config"])
    return _execute(args, argv + ["--out", target], config_override=config)


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "replay":
            return replay(args.manifest, args.out, parser)
        return _execute(args, argv)
    except (ConfigError, UsageError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlacementError as exc:
        print(f"placement error: {exc}", file=sys.stderr)
        return EXIT_PLACEMENT
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CogScaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
