"""Command-line interface.

Subcommands: simulate, fit, estimate, test, profile, analyze, plot.
Exit codes: 0 success, 2 input error, 3 numerical failure.  The default
worker-thread count comes from the CSRSTATS_THREADS environment variable;
``--threads`` overrides it.
"""

import argparse
import json
import sys

import numpy as np

from . import fileio, plots
from .analysis import build_profiles, pairing_report
from .cluster_test import TestConfig, run_test
from .errors import InputError, NumericalError
from .grids import PointSample, Window, voxelize
from .nulls import (
    DEFAULT_WEIGHTS,
    GammaParams,
    NullModelSpec,
    PoissonSumParams,
    fit_gamma_mle,
    fit_poisson_sum_em,
    round_values_to_representable,
    sample_binomial_points,
    sample_gamma_grid,
    sample_poisson_points,
    sample_poisson_sum_grid,
)
from .ripley import k_grid, k_points, k_points_edge_corrected
from .rng import derive_seed
from .synth import ShotNoiseParams, gen_poisson_grid, gen_scenario_suite, gen_shot_noise

NULL_CHOICES = [
    "permutation", "gamma", "gamma-cond", "wsp", "empirical",
    "reference", "poisson", "binomial",
]


def _parse_extent(text):
    try:
        parts = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise InputError(f"bad extent {text!r} (use e.g. 50x50 or 64x64x16)")
    if len(parts) not in (2, 3):
        raise InputError("extent must have 2 or 3 axes")
    return parts


def _parse_params(text):
    params = {}
    if not text:
        return params
    for item in text.split(","):
        if "=" not in item:
            raise InputError(f"bad --params item {item!r} (use key=value)")
        key, value = item.split("=", 1)
        key = key.strip()
        if ":" in value:
            params[key] = [float(v) for v in value.split(":")]
        else:
            try:
                params[key] = float(value)
            except ValueError:
                raise InputError(f"bad numeric value for {key!r}")
    return params


def _parse_weights(text):
    if not text:
        return DEFAULT_WEIGHTS
    try:
        return tuple(float(w) for w in text.split(","))
    except ValueError:
        raise InputError(f"bad --weights {text!r}")


def _radii(args, voxel_len):
    rstep = args.rstep if args.rstep is not None else voxel_len
    rmax = args.rmax if args.rmax is not None else 10.0 * voxel_len
    if rstep <= 0 or rmax <= 0:
        raise InputError("rmax and rstep must be positive")
    return np.arange(0.0, rmax + 0.5 * rstep, rstep)


def _load_input(args, need="any"):
    """Load --grid or --points (with optional --mask / window flags)."""
    grid_path = getattr(args, "grid", None)
    points_path = getattr(args, "points", None)
    if bool(grid_path) == bool(points_path):
        raise InputError("provide exactly one of --grid or --points")
    if grid_path:
        if need == "points":
            raise InputError("this operation requires a point sample")
        return fileio.read_grid(grid_path, getattr(args, "mask", None))
    window = None
    if getattr(args, "extent", None):
        window = Window(len(_parse_extent(args.extent)), _parse_extent(args.extent),
                        args.voxel_len)
    return fileio.read_points(points_path, window, args.voxel_len)


def _cmd_simulate(args):
    params = _parse_params(args.params)
    if args.generator == "suite":
        items = gen_scenario_suite(args.seed)
        manifest = fileio.write_suite(items, args.out)
        print(manifest)
        return 0
    extent = _parse_extent(args.extent)
    window = Window(len(extent), extent, args.voxel_len)
    if args.generator == "gamma":
        grid = sample_gamma_grid(
            GammaParams(params.get("a", 1.0), params.get("b", 1.0)),
            window, None, args.seed)
    elif args.generator == "wsp":
        weights = tuple(params.get("weights", DEFAULT_WEIGHTS))
        rates = params.get("rates", [1.0] * len(weights))
        if np.isscalar(rates):
            rates = [rates] * len(weights)
        grid = sample_poisson_sum_grid(
            PoissonSumParams(weights, tuple(rates)), window, None, args.seed)
    elif args.generator == "poisson-grid":
        grid = gen_poisson_grid(params.get("lambda", 0.1), window, args.seed)
    elif args.generator == "shot-noise":
        grid = gen_shot_noise(
            ShotNoiseParams(params.get("lambda", 0.1), params.get("sigma", 2.0),
                            params.get("margin")),
            window, args.seed)
    elif args.generator == "poisson-points":
        pts = sample_poisson_points(params.get("lambda", 0.1), window, args.seed)
        fileio.write_points(pts, args.out)
        print(args.out)
        return 0
    elif args.generator == "binomial":
        pts = sample_binomial_points(int(params.get("n", 100)), window, args.seed)
        fileio.write_points(pts, args.out)
        print(args.out)
        return 0
    else:  # pragma: no cover - argparse restricts choices
        raise InputError(f"unknown generator {args.generator!r}")
    fileio.write_grid(grid, args.out)
    print(args.out)
    return 0


def _cmd_fit(args):
    grid = fileio.read_grid(args.grid, args.mask)
    unit_volume = grid.window.voxel_len ** grid.dim
    if args.model == "gamma":
        marginal = fit_gamma_mle(grid.active_values)
        params = GammaParams(marginal.a / unit_volume, marginal.b)
    else:
        weights = _parse_weights(args.weights)
        rounded = round_values_to_representable(grid.active_values, weights)
        marginal = fit_poisson_sum_em(rounded, weights, args.iters)
        params = PoissonSumParams(
            weights, tuple(a / unit_volume for a in marginal.rates))
    fileio.save_model(params, args.out)
    print(args.out)
    return 0


def _cmd_estimate(args):
    sample = _load_input(args)
    if args.estimator == "kbar":
        if isinstance(sample, PointSample):
            sample = voxelize(sample, sample.window.voxel_len).grid
        curves = k_grid(sample, _radii(args, sample.window.voxel_len))
    else:
        if not isinstance(sample, PointSample):
            raise InputError("point estimators require --points input")
        radii = _radii(args, sample.window.voxel_len)
        if args.estimator == "classic":
            curves = k_points(sample, radii)
        else:
            curves = k_points_edge_corrected(sample, radii)
    fileio.write_curves_csv(curves, args.out)
    print(args.out)
    return 0


def _null_spec(args):
    kwargs = {}
    if args.null == "wsp":
        kwargs["weights"] = _parse_weights(args.weights)
        kwargs["em_iters"] = args.iters
    if args.null == "reference":
        if not args.reference:
            raise InputError("--null reference requires --reference")
        kwargs["reference"] = fileio.read_grid(args.reference)
    return NullModelSpec(args.null, **kwargs)


def _cmd_test(args):
    sample = _load_input(args)
    spec = _null_spec(args)
    config = TestConfig(args.trials, args.omega,
                        _radii(args, sample.window.voxel_len), spec, args.seed)
    result = run_test(sample, config, threads=args.threads)
    fileio.write_result_csv(result, args.out)
    if args.json:
        fileio.write_result_json(result, args.json)
    print(args.out)
    return 0


def _cmd_profile(args):
    rows = fileio.read_batch_manifest(args.manifest)
    spec = _null_spec(args)
    out_rows = []
    for index, row in enumerate(rows):
        if row["grid"]:
            sample = fileio.read_grid(row["grid"], row["mask"])
        else:
            sample = fileio.read_points(row["points"], voxel_len=args.voxel_len)
        config = TestConfig(args.trials, args.omega,
                            _radii(args, sample.window.voxel_len), spec,
                            derive_seed(args.seed, index))
        result = run_test(sample, config, threads=args.threads)
        out_rows.append({"id": row["id"], "species": row["species"],
                         "kind": row["kind"], "time": row["time"],
                         "delta": result.delta})
    fileio.write_deltas_csv(out_rows, args.out)
    print(args.out)
    return 0


def _cmd_analyze(args):
    per_cell = fileio.read_deltas_csv(args.deltas)
    profiles = build_profiles(per_cell)
    report = pairing_report(profiles)
    fileio.write_pairing_report_json(report, args.out)
    if args.matrix_csv:
        with open(args.matrix_csv, "w") as fh:
            fh.write("," + ",".join(report.protein_labels) + "\n")
            for label, row in zip(report.mrna_labels, report.correlations):
                fh.write(label + "," + ",".join(f"{v:.11e}" for v in row) + "\n")
    print(args.out)
    return 0


def _cmd_plot(args):
    if bool(args.result) == bool(args.deltas):
        raise InputError("provide exactly one of --result or --deltas")
    if args.result:
        radii, cols, _ = fileio.read_result_csv(args.result)
        plots.plot_clustering_index(radii, cols["H_star"], args.out,
                                    title=args.title)
    else:
        per_cell = fileio.read_deltas_csv(args.deltas)
        plots.plot_delta_bars(per_cell, args.out, title=args.title)
    print(args.out)
    return 0


def _add_radii_flags(sub):
    sub.add_argument("--rmax", type=float, default=None,
                     help="largest radius (default: 10 voxel widths)")
    sub.add_argument("--rstep", type=float, default=None,
                     help="radius step (default: one voxel width)")


def _add_input_flags(sub, points_window=True):
    sub.add_argument("--grid", help="grid file")
    sub.add_argument("--points", help="point CSV file")
    sub.add_argument("--mask", help="mask file for --grid")
    if points_window:
        sub.add_argument("--extent", help="window extent for --points, e.g. 50x50")
    sub.add_argument("--voxel-len", dest="voxel_len", type=float, default=1.0,
                     help="voxel side length (default 1)")


def _add_null_flags(sub):
    sub.add_argument("--null", required=True, choices=NULL_CHOICES)
    sub.add_argument("--trials", type=int, default=99)
    sub.add_argument("--omega", type=float, default=0.05)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--weights", help="wsp mark weights, comma separated")
    sub.add_argument("--iters", type=int, default=5, help="wsp EM iterations")
    sub.add_argument("--reference", help="reference grid for --null reference")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker threads (default: CSRSTATS_THREADS env var or 1)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="csrstats",
        description="Ripley K/L/H statistics and clustering-index tests "
                    "against complete spatial randomness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic data")
    p.add_argument("--generator", required=True,
                   choices=["suite", "gamma", "wsp", "poisson-grid",
                            "shot-noise", "poisson-points", "binomial"])
    p.add_argument("--params", default="",
                   help="comma separated key=value pairs; lists use colons")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--extent", default="50x50")
    p.add_argument("--voxel-len", dest="voxel_len", type=float, default=1.0)
    p.add_argument("--out", required=True,
                   help="output file (directory for --generator suite)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit a CSR model to a grid")
    p.add_argument("--model", required=True, choices=["gamma", "wsp"])
    p.add_argument("--grid", required=True)
    p.add_argument("--mask")
    p.add_argument("--weights", help="wsp mark weights, comma separated")
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("estimate", help="K/L/H curves for a grid or point sample")
    p.add_argument("--estimator", default="kbar",
                   choices=["kbar", "classic", "edge"])
    _add_input_flags(p)
    _add_radii_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("test", help="clustering-index test against a CSR null")
    _add_input_flags(p)
    _add_null_flags(p)
    _add_radii_flags(p)
    p.add_argument("--out", required=True, help="result CSV path")
    p.add_argument("--json", help="also write a JSON mirror here")
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("profile", help="batch degree of clustering over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--voxel-len", dest="voxel_len", type=float, default=1.0,
                   help="voxel length for point-sample rows")
    _add_null_flags(p)
    _add_radii_flags(p)
    p.add_argument("--out", required=True, help="deltas CSV path")
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("analyze", help="profile correlations and significance")
    p.add_argument("--deltas", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--matrix-csv", dest="matrix_csv",
                   help="also write the correlation matrix as CSV")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("plot", help="SVG charts from result or deltas tables")
    p.add_argument("--result", help="test-result CSV (clustering-index chart)")
    p.add_argument("--deltas", help="deltas CSV (degree-of-clustering bars)")
    p.add_argument("--title")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
