"""File formats: grids, point CSVs, curve/result tables, model JSON, manifests.

Grid files carry a one-line JSON header ``{"dim": d, "extent": [...],
"voxel_len": l}`` followed by whitespace-separated values in row-major order;
mask files use the same layout with 0/1 values.  Point files are CSV with an
``x,y`` or ``x,y,z`` header.  Numeric report tables (curves, test results)
are formatted with 12 significant digits.
"""

import csv
import json
import os

import numpy as np

from .errors import InputError
from .grids import PointSample, VoxelGrid, Window
from .nulls import GammaParams, PoissonSumParams

SIG = "{:.11e}"  # 12 significant digits


def _fmt(x):
    return SIG.format(float(x))


# ---------------------------------------------------------------------------
# Grids and masks
# ---------------------------------------------------------------------------


def _read_header(line, path):
    try:
        header = json.loads(line)
        return Window(int(header["dim"]),
                      tuple(int(e) for e in header["extent"]),
                      float(header.get("voxel_len", 1.0)))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad grid header ({exc})")


def read_grid(path, mask_path=None):
    """Read a grid file, optionally applying a mask file of the same shape."""
    with open(path) as fh:
        first = fh.readline()
        window = _read_header(first, path)
        try:
            values = np.array(fh.read().split(), dtype=float)
        except ValueError as exc:
            raise InputError(f"{path}: bad grid values ({exc})")
    if values.size != window.n_voxels:
        raise InputError(
            f"{path}: expected {window.n_voxels} values, found {values.size}"
        )
    mask = None
    if mask_path is not None:
        mask = read_mask(mask_path, window)
    return VoxelGrid(window, values, mask)


def read_mask(path, window):
    """Read a 0/1 mask file and check it against `window`."""
    with open(path) as fh:
        mask_window = _read_header(fh.readline(), path)
        raw = np.array(fh.read().split(), dtype=float)
    if mask_window.extent != window.extent or mask_window.dim != window.dim:
        raise InputError(f"{path}: mask shape does not match grid")
    if raw.size != window.n_voxels:
        raise InputError(f"{path}: expected {window.n_voxels} mask values")
    if np.any((raw != 0.0) & (raw != 1.0)):
        raise InputError(f"{path}: mask values must be 0 or 1")
    return raw.astype(bool)


def write_grid(grid, path):
    """Write a grid (or a boolean mask grid) in the text format."""
    window = grid.window
    header = {"dim": window.dim, "extent": list(window.extent),
              "voxel_len": window.voxel_len}
    rows = grid.values.reshape(-1, window.extent[-1])
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for row in rows:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def write_mask(mask, window, path):
    header = {"dim": window.dim, "extent": list(window.extent),
              "voxel_len": window.voxel_len}
    rows = np.asarray(mask, dtype=int).reshape(-1, window.extent[-1])
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for row in rows:
            fh.write(" ".join(str(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Point samples
# ---------------------------------------------------------------------------


def read_points(path, window=None, voxel_len=1.0):
    """Read an ``x,y[,z]`` CSV of coordinates in length units.

    Without an explicit window, one is inferred to cover all points with the
    given voxel length.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty point file")
        if header not in (["x", "y"], ["x", "y", "z"]):
            raise InputError(f"{path}: point header must be x,y or x,y,z")
        dim = len(header)
        try:
            pts = np.array([[float(cell) for cell in row]
                            for row in _point_rows(reader, dim, path)])
        except ValueError as exc:
            raise InputError(f"{path}: bad coordinate ({exc})")
    if pts.size == 0:
        raise InputError(f"{path}: empty sample")
    if window is None:
        extent = tuple(int(np.floor(c / voxel_len)) + 1 for c in pts.max(axis=0))
        window = Window(dim, extent, voxel_len)
    return PointSample(window, pts)


def _point_rows(reader, dim, path):
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != dim:
            raise InputError(f"{path}: expected {dim} columns, got {len(row)}")
        yield row


def write_points(points, path):
    header = ["x", "y", "z"][: points.dim]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for p in points.points:
            writer.writerow([f"{c:.17g}" for c in p])


# ---------------------------------------------------------------------------
# Curves and test results
# ---------------------------------------------------------------------------


def write_curves_csv(curves, path):
    """Curve table ``r,K,L,H``, one row per radius."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "K", "L", "H"])
        for r, k, l, h in zip(curves.radii, curves.K, curves.L, curves.H):
            writer.writerow([_fmt(r), _fmt(k), _fmt(l), _fmt(h)])


def write_result_csv(result, path):
    """Test result table ``r,H_obs,q_lo,q_med,q_hi,H_star`` plus delta footer."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "H_obs", "q_lo", "q_med", "q_hi", "H_star"])
        for row in zip(result.radii, result.h_obs, result.q_lo, result.q_med,
                       result.q_hi, result.h_star):
            writer.writerow([_fmt(v) for v in row])
        writer.writerow(["delta", _fmt(result.delta)])


def read_result_csv(path):
    """Read back a test-result CSV into (radii, columns dict, delta)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:6] != ["r", "H_obs", "q_lo", "q_med", "q_hi", "H_star"]:
            raise InputError(f"{path}: not a test-result CSV")
        rows, delta = [], None
        for row in reader:
            if row and row[0] == "delta":
                delta = float(row[1])
                continue
            rows.append([float(v) for v in row])
    data = np.asarray(rows)
    if data.size == 0 or delta is None:
        raise InputError(f"{path}: incomplete test-result CSV")
    cols = dict(zip(["H_obs", "q_lo", "q_med", "q_hi", "H_star"], data[:, 1:].T))
    return data[:, 0], cols, delta


def _config_echo(config):
    spec = config.null_spec
    echo = {
        "trials": config.trials,
        "omega": config.omega,
        "base_seed": config.base_seed,
        "radii": [float(r) for r in config.radii],
        "null": {"kind": spec.kind},
    }
    if spec.kind == "wsp":
        echo["null"]["weights"] = list(spec.weights)
        echo["null"]["em_iters"] = spec.em_iters
    return echo


def write_result_json(result, path):
    """JSON mirror of the result CSV, with a config echo for provenance."""
    payload = {
        "config": _config_echo(result.config),
        "radii": [float(r) for r in result.radii],
        "H_obs": [float(v) for v in result.h_obs],
        "q_lo": [float(v) for v in result.q_lo],
        "q_med": [float(v) for v in result.q_med],
        "q_hi": [float(v) for v in result.q_hi],
        "H_star": [float(v) for v in result.h_star],
        "delta": float(result.delta),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Fitted models
# ---------------------------------------------------------------------------


def model_to_json(params):
    if isinstance(params, GammaParams):
        return {"kind": "gamma", "a": params.a, "b": params.b}
    if isinstance(params, PoissonSumParams):
        return {"kind": "wsp", "weights": list(params.weights),
                "alphas": list(params.rates)}
    raise InputError(f"cannot serialize model {type(params).__name__}")


def model_from_json(obj):
    kind = obj.get("kind")
    if kind == "gamma":
        return GammaParams(float(obj["a"]), float(obj["b"]))
    if kind == "wsp":
        return PoissonSumParams(tuple(obj["weights"]), tuple(obj["alphas"]))
    raise InputError(f"unknown model kind {kind!r}")


def save_model(params, path):
    with open(path, "w") as fh:
        json.dump(model_to_json(params), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        try:
            return model_from_json(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: bad model file ({exc})")


# ---------------------------------------------------------------------------
# Scenario suite and batch manifests
# ---------------------------------------------------------------------------


def write_suite(items, outdir):
    """Write scenario grids plus a ``manifest.csv`` into `outdir`."""
    os.makedirs(outdir, exist_ok=True)
    manifest = os.path.join(outdir, "manifest.csv")
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "generator", "params", "seed", "path"])
        for item in items:
            rel = f"{item.item_id}.grid"
            write_grid(item.grid, os.path.join(outdir, rel))
            writer.writerow(
                [item.item_id, item.generator,
                 json.dumps(item.params, sort_keys=True), item.seed, rel]
            )
    return manifest


BATCH_COLUMNS = ("id", "species", "kind", "time")


def read_batch_manifest(path):
    """Read a per-cell batch manifest.

    Required columns: id, species, kind, time; each row must carry a ``grid``
    or ``points`` path (relative paths resolve against the manifest), and may
    carry a ``mask`` path.  Returns a list of row dicts.
    """
    base = os.path.dirname(os.path.abspath(path))
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = set(reader.fieldnames or ())
        missing = [c for c in BATCH_COLUMNS if c not in fields]
        if missing:
            raise InputError(f"{path}: manifest lacks columns {missing}")
        if not ({"grid", "points"} & fields):
            raise InputError(f"{path}: manifest needs a grid or points column")
        for raw in reader:
            row = {k: (v.strip() if isinstance(v, str) else v)
                   for k, v in raw.items()}
            if not row.get("id"):
                raise InputError(f"{path}: row with empty id")
            if row["kind"] not in ("mRNA", "protein"):
                raise InputError(f"{path}: kind must be mRNA or protein")
            try:
                row["time"] = float(row["time"])
            except (TypeError, ValueError):
                raise InputError(f"{path}: bad time for id {row['id']}")
            for key in ("grid", "points", "mask"):
                if row.get(key):
                    row[key] = os.path.join(base, row[key])
                else:
                    row[key] = None
            if bool(row["grid"]) == bool(row["points"]):
                raise InputError(
                    f"{path}: id {row['id']} needs exactly one of grid/points"
                )
            rows.append(row)
    if not rows:
        raise InputError(f"{path}: empty manifest")
    return rows


def write_deltas_csv(rows, path):
    """Per-cell degree-of-clustering table ``id,species,kind,time,delta``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "species", "kind", "time", "delta"])
        for row in rows:
            writer.writerow([row["id"], row["species"], row["kind"],
                             f"{row['time']:.17g}", _fmt(row["delta"])])


def read_deltas_csv(path):
    """Read a deltas table into the build_profiles input mapping."""
    per_cell = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = set(reader.fieldnames or ())
        needed = {"species", "kind", "time", "delta"}
        if not needed <= fields:
            raise InputError(f"{path}: deltas table lacks {sorted(needed - fields)}")
        for row in reader:
            try:
                t = float(row["time"])
                d = float(row["delta"])
            except (TypeError, ValueError):
                raise InputError(f"{path}: bad numeric cell in deltas table")
            key = (row["species"].strip(), row["kind"].strip())
            per_cell.setdefault(key, {}).setdefault(t, []).append(d)
    if not per_cell:
        raise InputError(f"{path}: empty deltas table")
    return per_cell


def write_pairing_report_json(report, path):
    payload = {
        "mrna_species": list(report.mrna_labels),
        "protein_species": list(report.protein_labels),
        "correlations": [[float(v) for v in row] for row in report.correlations],
        "corresponding": list(report.corresponding),
        "pair_r": {k: float(v) for k, v in report.pair_r.items()},
        "pair_z": {k: float(v) for k, v in report.pair_z.items()},
        "mann_whitney_p": float(report.mann_whitney_p),
        "conventions": report.conventions,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
