# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import argparse
import csv
import json
import logging
import math
import os
import pathlib
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import torch

from . import checks
from .constants import (
    DEFAULT_GRID_N,
    DEFAULT_QUAD_N,
    DEFAULT_SEED,
    DEFAULT_TAIL_TOL,
    REAL,
    RELATION_TOL,
    THREADS_ENV,
    TWO_PI,
)
from .data import RunConfig, StateSpec, build_state
from .errors import (
    ConvergenceError,
    DegenerateProjectionError,
    InvalidInputError,
    ResolutionError,
    ResourceError,
    UnsupportedInputError,
)
from .modes import ModeExpansion, eval_wavefunction
from .phase_stats import grid_oracle, phase_uncertainty, windowed_stats
from .relations import check_relation_min

logger = logging.getLogger(__name__)

_NUMBER_RE = re.compile(
    r"^(?P<sign>[-+])?(?P<coef>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)?"
    r"\s*\*?\s*(?P<pi>pi)?\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?$"
)


def parse_number(text):
    """A float, optionally written with pi, e.g. ``0.3``, ``pi/4``, ``-2*pi``, ``3pi/4``."""
    match = _NUMBER_RE.match(text.strip())
    if match is None or not (match["coef"] or match["pi"]):
        raise InvalidInputError(f"cannot read {text!r} as a number")
    value = float(match["coef"]) if match["coef"] else 1.0
    if match["pi"]:
        value *= math.pi
    if match["den"]:
        value /= float(match["den"])
    return -value if match["sign"] == "-" else value


def parse_param(text):
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise InvalidInputError(f"--param expects name=value, got {text!r}")
    return name.strip(), parse_number(value)


def _add_common_args(parser):
    parser.add_argument("--grid-n", type=int, default=DEFAULT_GRID_N, help="window-origin grid")
    parser.add_argument(
        "--quad-n", type=int, default=DEFAULT_QUAD_N, help="quadrature nodes for basis overlaps"
    )
    parser.add_argument(
        "--tail-tol", type=float, default=DEFAULT_TAIL_TOL, help="truncation tail mass"
    )
    parser.add_argument("--tol", type=float, default=RELATION_TOL, help="relation tolerance")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for random states")
    parser.add_argument("--format", choices=["csv", "jsonl"], default="csv", help="output format")
    parser.add_argument(
        "--out", type=pathlib.Path, default=pathlib.Path("phasekit_out"), help="output directory"
    )
    parser.add_argument(
        "--oracle", action="store_true", help="also run the brute-force grid oracle"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug output")


def create_parser():
    parser = argparse.ArgumentParser(
        description="Window-minimised phase uncertainty of periodic quantum states"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    state = subparsers.add_parser("state", help="write the mode table and density of a state")
    state.add_argument("spec", help="JSON state spec, inline or as a file path")
    state.add_argument("--param", action="append", default=[], help="override name=value")
    state.add_argument("--density-points", type=int, default=1024, help="density samples")
    state.set_defaults(func=run_state)

    uncertainty = subparsers.add_parser("uncertainty", help="minimised phase uncertainty")
    uncertainty.add_argument("spec", help="JSON state spec, inline or as a file path")
    uncertainty.add_argument("--param", action="append", default=[], help="override name=value")
    uncertainty.set_defaults(func=run_uncertainty)

    verify = subparsers.add_parser("verify", help="run the property suites")
    verify.add_argument("suite", choices=list(checks.SUITES) + ["all"])
    verify.add_argument("--n-states", type=int, default=1000, help="random 32-mode states")
    verify.add_argument("--alphas-per-state", type=int, default=16, help="origins per state")
    verify.add_argument("--oracle-states", type=int, default=200, help="random 16-mode states")
    verify.set_defaults(func=run_verify)

    repro = subparsers.add_parser("repro", help="table of the worked examples")
    repro.set_defaults(func=run_repro)

    sweep = subparsers.add_parser("sweep", help="uncertainty report across a parameter")
    sweep.add_argument("spec", help="JSON state spec template, inline or as a file path")
    sweep.add_argument("param", help="name of the parameter to vary")
    sweep.add_argument("values", nargs="+", help="parameter values (pi allowed, e.g. pi/4)")
    sweep.add_argument("--param", dest="overrides", action="append", default=[])
    sweep.add_argument(
        "--plot-data", action="store_true", help="also write whitespace-separated plot data"
    )
    sweep.set_defaults(func=run_sweep)

    for sub in (state, uncertainty, verify, repro, sweep):
        _add_common_args(sub)
    return parser


def write_rows(rows, path, output_format):
    """Write dict rows in order; CSV columns are the union of keys in first-seen order."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as outfile:
        if output_format == "jsonl":
            for row in rows:
                outfile.write(json.dumps(row) + "\n")
            return
        fieldnames = []
        for row in rows:
            fieldnames.extend(k for k in row if k not in fieldnames)
        writer = csv.DictWriter(outfile, fieldnames=fieldnames, restval="", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _load_spec(text, overrides):
    spec = StateSpec.parse(text)
    if overrides:
        spec = spec.with_params(**dict(parse_param(o) for o in overrides))
    return spec


def cmd_state(spec, config, density_points=1024):
    src = build_state(spec, config.tail_tol)
    thetas = torch.arange(density_points, dtype=REAL) * (TWO_PI / density_points) - math.pi
    if isinstance(src, ModeExpansion):
        print(
            f"Built {spec.type} state with {src.num_modes} modes, "
            f"norm^2 {src.norm_squared()!r}, tail bound {src.tail_bound!r}"
        )
        mode_rows = [
            {
                "l": l if src.half_integer else int(l),
                "re": c.real,
                "im": c.imag,
                "prob": abs(c) ** 2,
            }
            for l, c in zip(src.modes.tolist(), src.coeffs.tolist())
        ]
        write_rows(mode_rows, config.output_file("modes"), config.output_format)
        rho = eval_wavefunction(src, thetas).abs() ** 2
    else:
        print(f"Built {spec.type} density with {len(src.pieces)} arcs")
        rho = src.evaluate(thetas)
    density_rows = [{"theta": t, "rho": r} for t, r in zip(thetas.tolist(), rho.tolist())]
    write_rows(density_rows, config.output_file("density"), config.output_format)
    print(f"Wrote {config.output_path}")
    return 0


def uncertainty_row(spec, config):
    src = build_state(spec, config.tail_tol)
    result = phase_uncertainty(src, config.grid_n)
    row = {"spec": spec.describe()}
    row.update(result.as_row())
    row["naive_variance_alpha0"] = windowed_stats(src, 0.0).variance
    if isinstance(src, ModeExpansion):
        report = check_relation_min(src, config.tolerance)
        row.update(
            {
                "delta_L": report.delta_L,
                "lhs": report.lhs,
                "rhs": report.rhs,
                "margin": report.margin,
                "satisfied": report.satisfied,
            }
        )
    if config.oracle:
        brute = grid_oracle(src)
        row["oracle_variance"] = brute.variance
        row["oracle_discrepancy"] = abs(brute.variance - result.variance)
    return row


def cmd_uncertainty(spec, config):
    row = uncertainty_row(spec, config)
    print(
        f"alpha0={row['alpha0']!r} delta_theta={row['delta_theta']!r} "
        f"variance={row['variance']!r} edge={row['edge_density_at_min']!r} "
        f"extrema={row['n_extrema_found']}"
    )
    if "oracle_discrepancy" in row:
        print(
            f"oracle variance={row['oracle_variance']!r} "
            f"(|diff| {row['oracle_discrepancy']:.3g})"
        )
    path = config.output_file("uncertainty")
    write_rows([row], path, config.output_format)
    print(f"Wrote {path}")
    return 0


def cmd_verify(suite, config, **suite_kwargs):
    names = checks.SUITES if suite == "all" else (suite,)
    exit_code = 0
    for name in names:
        kwargs = suite_kwargs if name == "relations" else {}
        rows = checks.run_suite(name, config, **kwargs)
        failed = [row for row in rows if not row.passed]
        path = config.output_file(f"verify_{name}")
        write_rows([row.as_row() for row in rows], path, config.output_format)
        print(f"{name}: {len(rows) - len(failed)}/{len(rows)} checks passed, wrote {path}")
        for row in failed:
            print(
                f"  FAILED {row.check} on {row.subject} (seed {config.seed}): "
                f"value {row.value!r}, margin {row.margin!r}"
            )
        if failed:
            exit_code = 1
    return exit_code


def cmd_repro(config):
    rows = checks.repro_table(config)
    path = config.output_file("repro")
    write_rows([row.as_row() for row in rows], path, config.output_format)
    for row in rows:
        status = "pass" if row.passed else "FAIL"
        print(
            f"{status:4s} {row.example_id:22s} {row.quantity:30s} "
            f"{row.computed_value!r} (err {row.abs_or_rel_error:.3g}, tol {row.tolerance:g})"
        )
    print(f"Wrote {path}")
    return 0 if all(row.passed for row in rows) else 1


def cmd_sweep(spec, param, values, config, plot_data=False):
    if param not in spec.params:
        raise InvalidInputError(
            f"{spec.type} spec has no parameter {param!r}; it has {', '.join(sorted(spec.params))}"
        )
    specs = [spec.with_params(**{param: value}) for value in values]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as executor:
            rows = list(executor.map(lambda s: uncertainty_row(s, config), specs))
    else:
        rows = [uncertainty_row(s, config) for s in specs]
    for value, row in zip(values, rows):
        row[param] = value

    path = config.output_file("sweep")
    write_rows(rows, path, config.output_format)
    print(f"Swept {param} over {len(values)} values, wrote {path}")
    if plot_data:
        columns = [param, "delta_theta", "variance", "edge_density_at_min"]
        if all("margin" in row for row in rows):
            columns.append("margin")
        table = np.array([[float(row[c]) for c in columns] for row in rows])
        plot_path = config.output_path / "sweep.dat"
        np.savetxt(plot_path, table, fmt="%.17g", header=" ".join(columns))
        print(f"Wrote {plot_path}")
    return 0


def run_state(args, config):
    return cmd_state(_load_spec(args.spec, args.param), config, args.density_points)


def run_uncertainty(args, config):
    return cmd_uncertainty(_load_spec(args.spec, args.param), config)


def run_verify(args, config):
    return cmd_verify(
        args.suite,
        config,
        num_states=args.n_states,
        alphas_per_state=args.alphas_per_state,
        oracle_states=args.oracle_states,
    )


def run_repro(args, config):
    return cmd_repro(config)


def run_sweep(args, config):
    spec = _load_spec(args.spec, args.overrides)
    values = [parse_number(v) for v in args.values]
    return cmd_sweep(spec, args.param, values, config, plot_data=args.plot_data)


def main(args):
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    try:
        config = RunConfig.from_args(args)
        if THREADS_ENV in os.environ:
            torch.set_num_threads(config.threads)
        return args.func(args, config)
    except (InvalidInputError, UnsupportedInputError, DegenerateProjectionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ResourceError, ResolutionError, ConvergenceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3