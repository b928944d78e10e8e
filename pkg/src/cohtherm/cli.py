"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bath import BathSpec, build_rate_table, time_grid
from .coherence import CoherenceTrajectory
from .config import (
    DEFAULT_SAMPLES,
    DEFAULT_T_MAX,
    DEFAULT_CUTOFF,
    DEFAULT_ETA,
    SOLVERS,
    expand_preset,
    figure_preset,
    load_config,
    output_root,
)
from .dynamics import Scenario
from .errors import NumericalError, ParameterError
from .runner import emit_plot_script, run
from .states import KINDS, StateKind
from .thermometry import estimate_temperature

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _echo(msg):
    print(msg, file=sys.stderr)


def _add_physics_flags(p, with_kT=True):
    p.add_argument("--state", choices=KINDS, help="initial state kind")
    p.add_argument("--p", type=float, help="mixing probability for mixed kinds")
    p.add_argument("--env", choices=("local", "common"), help="environment topology")
    p.add_argument("--eta", type=float, help="coupling strength (units of omega_0)")
    p.add_argument("--lambda", dest="cutoff", type=float, help="cutoff frequency (units of omega_0)")
    if with_kT:
        p.add_argument("--kT", type=_floats, help="comma-separated temperatures")
    p.add_argument("--t-max", type=float, help="final time in 1/omega_0")
    p.add_argument("--samples", type=int, help="number of grid points")


def cmd_run(args):
    config = load_config(
        args.config,
        kind=args.state,
        p=args.p,
        environment=args.env,
        eta=args.eta,
        cutoff=args.cutoff,
        kT=tuple(args.kT) if args.kT is not None else None,
        t_max=args.t_max,
        samples=args.samples,
        solver=args.solver,
        output=args.output,
        cache=False if args.no_cache else None,
        substeps=args.substeps,
        workers=args.workers,
    )
    report = run(config, dump_states=args.dump_states, progress=_echo)
    for path in report.files:
        print(path)
    _echo(f"{len(report.computed)} file(s) computed, {len(report.cache_hits)} cache hit(s)")
    if report.crosscheck:
        worst = max(report.crosscheck.values())
        _echo(f"ode vs analytic max deviation {worst:.3e} ({'ok' if report.crosscheck_ok else 'FAILED'})")
        if not report.crosscheck_ok:
            return EXIT_NUMERICAL
    return EXIT_OK


def cmd_preset(args):
    root = Path(args.output) if args.output else output_root()
    for panel in expand_preset(args.name):
        config = figure_preset(
            panel,
            output=root / panel,
            solver=args.solver,
            t_max=args.t_max,
            samples=args.samples,
            cache=False if args.no_cache else None,
        )
        report = run(config, progress=lambda m, panel=panel: _echo(f"[{panel}] {m}"))
        curves = [p for p in report.files if p.name.endswith("_analytic.csv")] or report.files
        script = emit_plot_script(curves, panel, config=config)
        for path in report.files:
            print(path)
        print(script)
    return EXIT_OK


def _read_observed(path):
    with open(path) as fh:
        return CoherenceTrajectory.from_csv(fh)


def cmd_estimate(args):
    observed = _read_observed(args.observed)
    if args.config:
        config = load_config(args.config, kind=args.state, p=args.p, environment=args.env,
                             eta=args.eta, cutoff=args.cutoff)
        kind, env, eta, cutoff = config.state, config.environment, config.eta, config.cutoff
    else:
        if args.state is None:
            raise ParameterError("--state is required without --config", field="state")
        kind = StateKind.parse(args.state, args.p)
        env = args.env or "local"
        eta = DEFAULT_ETA if args.eta is None else args.eta
        cutoff = DEFAULT_CUTOFF if args.cutoff is None else args.cutoff
    t = np.asarray(observed.t)
    bath = BathSpec(eta, cutoff, 0.0)
    scenario = (Scenario.local if env == "local" else Scenario.common)(kind, bath, t)
    result = estimate_temperature(observed, scenario, args.bounds, workers=args.workers)
    print(result.to_json())
    if result.warning:
        _echo(f"warning: {result.warning}")
    return EXIT_OK


def cmd_rates(args):
    spec = BathSpec(
        DEFAULT_ETA if args.eta is None else args.eta,
        DEFAULT_CUTOFF if args.cutoff is None else args.cutoff,
        args.kT,
    )
    grid = time_grid(args.t_max or DEFAULT_T_MAX, args.samples or DEFAULT_SAMPLES)
    table = build_rate_table(spec, grid)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            table.to_csv(fh)
        print(args.out)
    else:
        table.to_csv(sys.stdout)
    return EXIT_OK


def cmd_verify(args):
    from .verify import run_checks

    results = run_checks(quick=args.quick)
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += not ok
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cohtherm", description="Three-qubit coherence dynamics under thermal dephasing."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configured sweep over kT")
    p.add_argument("config", nargs="?", help="INI config with [state], [bath], [run] sections")
    _add_physics_flags(p)
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--output", type=Path, help="output directory")
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--substeps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--dump-states", action="store_true", help="also write density-matrix CSVs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="reproduce a figure panel (fig2a..fig5i) or group (fig2..fig5)")
    p.add_argument("name")
    p.add_argument("--output", type=Path, help="output root; panels go to <root>/<panel>")
    p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--t-max", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--no-cache", action="store_true")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("estimate-temp", help="fit kT to an observed t,c_r CSV")
    p.add_argument("observed", help="CSV with header t,c_r on a uniform grid starting at 0")
    p.add_argument("--config", help="INI config supplying state and bath (kT ignored)")
    _add_physics_flags(p, with_kT=False)
    p.add_argument("--bounds", type=float, nargs=2, default=(0.01, 100.0), metavar=("LO", "HI"))
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("rates", help="dump the rate table as CSV")
    p.add_argument("--kT", type=float, required=True)
    p.add_argument("--eta", type=float)
    p.add_argument("--lambda", dest="cutoff", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("-o", "--out", help="write to file instead of stdout")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("verify", help="run the oracle cross-checks")
    p.add_argument("--quick", action="store_true", help="shorter grid, fewer scenarios")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ParameterError as exc:
        field = f" [{exc.field}]" if exc.field else ""
        _echo(f"config error{field}: {exc}")
        return EXIT_CONFIG
    except NumericalError as exc:
        _echo(f"numerical failure: {exc}")
        return EXIT_NUMERICAL
    except ValueError as exc:
        _echo(f"config error: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _echo(f"I/O error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
