"""Command line front end: compute, solve, simulate, sweep, plot.

Output contract: every successful run prints exactly one JSON envelope to
stdout; diagnostics go to stderr only. Exit codes are stable: 0 success,
2 invalid input or unreachable target, 3 filesystem failure.

All probability flags take proportions in [0, 1]; percent-style values
above 1 are rejected, never rescaled. Payload files are written through
``--out`` (JSON by default, ``--format csv`` for the tabular form); the
stdout envelope is JSON regardless, so ``--format csv`` without ``--out``
is an error rather than a silent change of the stdout contract.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .cohort import SimulationSpec, empirical_measures, plugin_rates, simulate_cohort
from .errors import BinaryRiskError, DegenerateScenarioError, InvalidParamsError
from .measures import (
    DerivedMeasures,
    PopulationParams,
    SolverConfig,
    derive_measures,
    par,
    rr_for_target_c,
    rr_from_par,
)
from .sweep import GridSpec, evaluate_grid, grids_to_csv, grids_to_json, render_svg

__all__ = ["build_parser", "main"]

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3


def _measures_dict(measures: DerivedMeasures) -> dict:
    return {
        "p1": measures.p1,
        "f_cases": measures.f_cases,
        "f_controls": measures.f_controls,
        "par": measures.par,
        "c_index": measures.c_index,
    }


def _emit(command: str, inputs: dict, results: dict, warnings=None) -> None:
    envelope = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "results": results,
        "warnings": list(warnings or []),
    }
    json.dump(envelope, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _flatten(record: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in record.items():
        name = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict):
            flat.update(_flatten(value, name))
        else:
            flat[name] = value
    return flat


def _record_csv(record: dict) -> str:
    flat = _flatten(record)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(flat.keys())
    writer.writerow(["" if value is None else value for value in flat.values()])
    return buffer.getvalue()


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _write_record_payload(args, record: dict) -> list[str]:
    """Write the flat payload of compute/solve/simulate when --out is given."""
    if args.out is None:
        if args.format == "csv":
            raise InvalidParamsError(
                "--format csv requires --out PATH; stdout always carries the JSON envelope"
            )
        return []
    if args.format == "csv":
        text = _record_csv(record)
    else:
        text = json.dumps(record, indent=2) + "\n"
    _write_text(args.out, text)
    return [args.out]


def _cmd_compute(args) -> int:
    inputs = {
        "f": args.f,
        "p0": args.p0,
        "rr": args.rr,
        "format": args.format,
        "out": args.out,
    }
    measures = derive_measures(PopulationParams(f=args.f, p0=args.p0, rr=args.rr))
    results = _measures_dict(measures)
    files = _write_record_payload(args, results)
    if files:
        results = {**results, "files": files}
    _emit("compute", inputs, results)
    return EXIT_OK


def _cmd_solve(args) -> int:
    inputs = {
        "f": args.f,
        "p0": args.p0,
        "target_par": args.target_par,
        "target_c": args.target_c,
        "tolerance": args.tolerance,
        "format": args.format,
        "out": args.out,
    }
    has_par = args.target_par is not None
    has_c = args.target_c is not None
    if has_par == has_c:
        raise InvalidParamsError("exactly one of --target-par or --target-c is required")
    warnings = []
    if has_par:
        if args.p0 is not None:
            warnings.append("p0 is not used when solving for a target PAR")
        if args.tolerance is not None:
            warnings.append("tolerance is not used by the algebraic PAR inversion")
        rr = rr_from_par(args.f, args.target_par)
        verification = {"par": par(args.f, rr)}
    else:
        if args.p0 is None:
            raise InvalidParamsError("--target-c requires --p0")
        if args.tolerance is None:
            config = SolverConfig()
        else:
            config = SolverConfig(abs_tolerance=args.tolerance)
        rr = rr_for_target_c(args.f, args.p0, args.target_c, config)
        forward = derive_measures(PopulationParams(f=args.f, p0=args.p0, rr=rr))
        verification = {"c_index": forward.c_index}
    results = {"rr": rr, "verification": verification}
    files = _write_record_payload(args, results)
    if files:
        results = {**results, "files": files}
    _emit("solve", inputs, results, warnings)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    inputs = {
        "f": args.f,
        "p0": args.p0,
        "rr": args.rr,
        "n": args.n,
        "seed": args.seed,
        "format": args.format,
        "out": args.out,
    }
    params = PopulationParams(f=args.f, p0=args.p0, rr=args.rr)
    spec = SimulationSpec(params=params, n_subjects=args.n, seed=args.seed)
    counts = simulate_cohort(spec)
    try:
        empirical = empirical_measures(counts)
    except DegenerateScenarioError as exc:
        raise DegenerateScenarioError(
            f"{exc}; increase --n until every margin of the table is populated"
        ) from exc
    f_hat, p0_hat, p1_hat = plugin_rates(counts)
    closed = derive_measures(params)
    empirical_payload = {"f": f_hat, "p0": p0_hat, "rr": p1_hat / p0_hat}
    empirical_payload.update(_measures_dict(empirical))
    closed_payload = _measures_dict(closed)
    results = {
        "counts": {
            "n_exposed_case": counts.n_exposed_case,
            "n_exposed_control": counts.n_exposed_control,
            "n_unexposed_case": counts.n_unexposed_case,
            "n_unexposed_control": counts.n_unexposed_control,
        },
        "empirical": empirical_payload,
        "closed_form": closed_payload,
        "difference": {
            key: empirical_payload[key] - closed_payload[key] for key in closed_payload
        },
    }
    files = _write_record_payload(args, results)
    if files:
        results = {**results, "files": files}
    _emit("simulate", inputs, results)
    return EXIT_OK


def _grid_inputs(args) -> dict:
    return {
        "prevalences": list(args.prevalences) if args.prevalences is not None else None,
        "p0_min": args.p0_min,
        "p0_max": args.p0_max,
        "rr_min": args.rr_min,
        "rr_max": args.rr_max,
        "resolution": args.resolution,
        "levels": list(args.levels) if args.levels is not None else None,
        "format": args.format,
        "out": args.out,
    }


def _grid_spec_from_args(args) -> GridSpec:
    kwargs = {}
    if args.prevalences is not None:
        kwargs["prevalences"] = args.prevalences
    if args.p0_min is not None:
        kwargs["p0_min"] = args.p0_min
    if args.p0_max is not None:
        kwargs["p0_max"] = args.p0_max
    if args.rr_min is not None:
        kwargs["rr_min"] = args.rr_min
    if args.rr_max is not None:
        kwargs["rr_max"] = args.rr_max
    if args.resolution is not None:
        kwargs["resolution"] = args.resolution
    if args.levels is not None:
        kwargs["contour_levels"] = args.levels
    return GridSpec(**kwargs)


def _panel_summaries(grids) -> list[dict]:
    summaries = []
    for grid in grids:
        unmasked = grid.c_values[~grid.mask]
        summaries.append(
            {
                "prevalence": grid.prevalence,
                "c_min": float(unmasked.min()) if unmasked.size else None,
                "c_max": float(unmasked.max()) if unmasked.size else None,
                "masked_cells": int(grid.mask.sum()),
            }
        )
    return summaries


def _cmd_sweep(args) -> int:
    inputs = _grid_inputs(args)
    spec = _grid_spec_from_args(args)
    grids = [evaluate_grid(spec, prevalence) for prevalence in spec.prevalences]
    out = args.out
    if out is None:
        out = "grids.csv" if args.format == "csv" else "grids.json"
    text = grids_to_csv(grids) if args.format == "csv" else grids_to_json(grids, spec)
    _write_text(out, text)
    results = {"files": [out], "panels": _panel_summaries(grids)}
    _emit("sweep", inputs, results)
    return EXIT_OK


def _cmd_plot(args) -> int:
    inputs = _grid_inputs(args)
    warnings = []
    if args.format == "csv":
        warnings.append("the plot payload is SVG; --format is ignored")
    spec = _grid_spec_from_args(args)
    grids = [evaluate_grid(spec, prevalence) for prevalence in spec.prevalences]
    out = args.out if args.out is not None else "figure.svg"
    _write_text(out, render_svg(grids, spec))
    results = {"files": [out], "panels": _panel_summaries(grids)}
    _emit("plot", inputs, results, warnings)
    return EXIT_OK


def _float_tuple(text: str) -> tuple[float, ...]:
    values = tuple(float(token) for token in text.split(",") if token.strip())
    if not values:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binaryrisk",
        description=(
            "Epidemiologic measures for a binary risk factor: attributable risk, "
            "concordance index, inverse solvers, cohort simulation, and contour figures."
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format",
        choices=("json", "csv"),
        default="json",
        help="payload format for --out files (stdout always carries the JSON envelope)",
    )
    common.add_argument(
        "--out", default=None, metavar="PATH", help="write the command payload to PATH"
    )

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    compute = sub.add_parser(
        "compute", parents=[common], help="derive all measures for one scenario"
    )
    compute.add_argument(
        "--f", type=float, required=True, help="risk factor prevalence, proportion in (0,1)"
    )
    compute.add_argument(
        "--p0",
        type=float,
        required=True,
        help="incidence among the unexposed, proportion in (0,1)",
    )
    compute.add_argument(
        "--rr", type=float, required=True, help="relative risk; rr*p0 must not exceed 1"
    )
    compute.set_defaults(handler=_cmd_compute)

    solve = sub.add_parser(
        "solve", parents=[common], help="invert PAR or the c-index for the relative risk"
    )
    solve.add_argument(
        "--f", type=float, required=True, help="risk factor prevalence, proportion in (0,1)"
    )
    solve.add_argument(
        "--p0", type=float, default=None, help="incidence among the unexposed; required with --target-c"
    )
    solve.add_argument(
        "--target-par", type=float, default=None, dest="target_par",
        help="attributable risk to invert algebraically",
    )
    solve.add_argument(
        "--target-c", type=float, default=None, dest="target_c",
        help="c-index to invert by bisection over rr",
    )
    solve.add_argument(
        "--tolerance", type=float, default=None,
        help="absolute solver tolerance (default 1e-10)",
    )
    solve.set_defaults(handler=_cmd_solve)

    simulate = sub.add_parser(
        "simulate",
        parents=[common],
        help="simulate a seeded cohort and compare it with the closed form",
    )
    simulate.add_argument(
        "--f", type=float, required=True, help="risk factor prevalence, proportion in (0,1)"
    )
    simulate.add_argument(
        "--p0",
        type=float,
        required=True,
        help="incidence among the unexposed, proportion in (0,1)",
    )
    simulate.add_argument(
        "--rr", type=float, required=True, help="relative risk; rr*p0 must not exceed 1"
    )
    simulate.add_argument("--n", type=int, required=True, help="number of subjects to draw")
    simulate.add_argument(
        "--seed",
        type=int,
        required=True,
        help="64-bit RNG seed; mandatory so every run is reproducible",
    )
    simulate.set_defaults(handler=_cmd_simulate)

    grid_flags = argparse.ArgumentParser(add_help=False)
    grid_flags.add_argument(
        "--prevalences", type=_float_tuple, default=None, metavar="LIST",
        help="comma-separated prevalence panels (default 0.5,0.2,0.1)",
    )
    grid_flags.add_argument("--p0-min", type=float, default=None, dest="p0_min")
    grid_flags.add_argument("--p0-max", type=float, default=None, dest="p0_max")
    grid_flags.add_argument("--rr-min", type=float, default=None, dest="rr_min")
    grid_flags.add_argument("--rr-max", type=float, default=None, dest="rr_max")
    grid_flags.add_argument(
        "--resolution", type=int, default=None, help="samples per axis (default 201)"
    )
    grid_flags.add_argument(
        "--levels", type=_float_tuple, default=None, metavar="LIST",
        help="comma-separated contour levels (default 0.51..0.60)",
    )

    sweep = sub.add_parser(
        "sweep",
        parents=[common, grid_flags],
        help="evaluate the c-index grids and export them as CSV or JSON",
    )
    sweep.set_defaults(handler=_cmd_sweep)

    plot = sub.add_parser(
        "plot", parents=[common, grid_flags], help="render the contour figure as SVG"
    )
    plot.set_defaults(handler=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse has already written its diagnostic; fold its exit code
        # into the 0/2 contract
        code = exc.code
        return code if isinstance(code, int) else EXIT_INPUT
    try:
        return args.handler(args)
    except BinaryRiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
