"""Ripley K/L/H estimation for voxel grids and point samples.

Three K estimators are provided:

* :func:`k_grid` -- second-moment estimator for voxel grids, computed with an
  FFT autocorrelation of the value lattice (linear, zero-padded), summing the
  autocorrelation over all nonzero lags whose centre-to-centre distance is
  within each radius.  The voxel self-pair (diagonal) terms are excluded, so
  ``K(0) == 0`` exactly and ``K >= 0`` elementwise.
* :func:`k_points` -- the classical biased point estimator normalized by the
  window volume.
* :func:`k_points_edge_corrected` -- the unbiased point estimator that weighs
  each pair by the window self-overlap volume at the pair separation.

L and H transforms normalize K so that a homogeneous Poisson process gives
``L(r) = r`` and ``H(r) = 0``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InputError
from .grids import total_and_intensity

__all__ = [
    "RipleyCurves",
    "as_radii",
    "ball_volume",
    "window_overlap",
    "k_grid",
    "k_points",
    "k_points_edge_corrected",
    "l_h_from_k",
]


def as_radii(radii):
    """Validate a radii grid: finite, nonnegative, strictly increasing."""
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise InputError("radii must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(r)):
        raise InputError("radii must be finite")
    if r[0] < 0:
        raise InputError("radii must be nonnegative")
    if np.any(np.diff(r) <= 0):
        raise InputError("radii must be strictly increasing")
    return r


def default_radii(voxel_len=1.0, steps=10):
    """Radii 0..steps in increments of one voxel width."""
    return np.arange(steps + 1, dtype=float) * voxel_len


@dataclass(frozen=True, eq=False)  # identity equality: fields hold arrays
class RipleyCurves:
    """K, L, H values over a radii grid, plus the intensity estimate and the
    diagonal (self-pair) correction used by the grid estimator."""

    radii: np.ndarray
    K: np.ndarray
    L: np.ndarray
    H: np.ndarray
    lam: float
    diag_correction: float = 0.0


def ball_volume(dim, r):
    """Volume of a ball of radius r in 2 or 3 dimensions."""
    if r < 0:
        raise InputError("radius must be nonnegative")
    if dim == 2:
        return math.pi * r * r
    if dim == 3:
        return (4.0 / 3.0) * math.pi * r ** 3
    raise InputError(f"unsupported dimension {dim}")


def _unit_ball_volume(dim):
    return ball_volume(dim, 1.0)


def window_overlap(window, shift):
    """Volume of the window intersected with itself translated by `shift`.

    For a rectangular window this is the exact product of per-axis overlaps,
    ``prod_i max(0, side_i - |shift_i|)``.
    """
    shift = np.asarray(shift, dtype=float)
    if shift.shape != (window.dim,):
        raise InputError("shift must be a d-vector")
    return float(np.prod(np.maximum(0.0, window.side_lengths - np.abs(shift))))


def l_h_from_k(K, radii, dim):
    """Derive L and H curves from K values.

    ``L(r) = (K(r) / c_d) ** (1/d)`` with ``c_2 = pi`` and ``c_3 = 4*pi/3``,
    and ``H(r) = L(r) - r``; at ``r == 0`` both are 0 by convention.
    """
    K = np.asarray(K, dtype=float)
    radii = as_radii(radii)
    if K.shape != radii.shape:
        raise InputError("K and radii must have the same length")
    if np.any(K < 0):
        raise InputError("K must be nonnegative")
    L = (K / _unit_ball_volume(dim)) ** (1.0 / dim)
    H = L - radii
    at_origin = radii == 0.0
    L = np.where(at_origin, 0.0, L)
    H = np.where(at_origin, 0.0, H)
    return L, H


@lru_cache(maxsize=16)
def _lag_table(extent):
    """Sorted nonzero-lag lookup for a lattice of the given extent.

    Returns ``(flat_indices, root_sq)`` where `flat_indices` orders the flat
    (2e-1)^d lag block by squared lag norm, zero lag excluded, and `root_sq`
    holds the matching sqrt of the integer squared norms (distance for unit
    voxels; multiply by voxel_len for the general case).
    """
    sq = np.zeros((), dtype=np.int64)
    for axis, e in enumerate(extent):
        lags = np.concatenate([np.arange(0, e), np.arange(-(e - 1), 0)])
        shape = [1] * len(extent)
        shape[axis] = lags.size
        sq = sq + (lags * lags).reshape(shape)
    flat = sq.ravel()
    nonzero = np.flatnonzero(flat > 0)
    order = np.argsort(flat[nonzero], kind="stable")
    flat_indices = nonzero[order]
    root_sq = np.sqrt(flat[flat_indices].astype(float))
    return flat_indices, root_sq


def _next_pow2(n):
    p = 1
    while p < n:
        p *= 2
    return p


def _autocorr_lag_block(values):
    """Linear autocorrelation of `values` over all lags, via zero-padded FFT.

    Output axis i holds lags ``0..e-1`` followed by ``-(e-1)..-1``.
    The FFT size is the next power of two >= 2*extent per axis, so circular
    wrap-around cannot contaminate any physical lag.
    """
    extent = values.shape
    axes = tuple(range(values.ndim))
    fft_shape = tuple(_next_pow2(2 * e) for e in extent)
    spectrum = np.fft.rfftn(values, fft_shape, axes=axes)
    acorr = np.fft.irfftn(spectrum * np.conj(spectrum), fft_shape, axes=axes)
    take = tuple(
        np.concatenate([np.arange(0, e), np.arange(s - e + 1, s)])
        for e, s in zip(extent, fft_shape)
    )
    return acorr[np.ix_(*take)]


def k_grid(grid, radii):
    """Ripley K for a voxel grid, with L and H.

    Implements the normalized second-moment sum over ordered voxel pairs
    weighted by the product of their values, excluding same-voxel pairs,
    divided by ``lambda**2 * volume``.  Distances are centre-to-centre.
    Masked grids run on the zero-filled full lattice (zeros contribute
    nothing), with volume and intensity taken over in-mask voxels only.

    Parameters
    ----------
    grid : VoxelGrid
    radii : array-like
        Strictly increasing radii within [0, window diameter], length units.

    Returns
    -------
    RipleyCurves
    """
    radii = as_radii(radii)
    if radii[-1] > grid.window.diameter:
        raise InputError("radius exceeds the window diameter")
    total, lam = total_and_intensity(grid)
    volume = grid.active_volume
    active = grid.active_values
    denom = lam * lam * volume

    flat_indices, root_sq = _lag_table(grid.window.extent)
    block = _autocorr_lag_block(grid.values)
    weights = block.ravel()[flat_indices]
    cum = np.cumsum(weights)
    dist = grid.window.voxel_len * root_sq
    pos = np.searchsorted(dist, radii, side="right")
    pair_sum = np.where(pos > 0, cum[np.maximum(pos - 1, 0)], 0.0)

    # FFT roundoff can leave tiny negatives where the true sum is ~0.
    K = np.maximum(pair_sum / denom, 0.0)
    L, H = l_h_from_k(K, radii, grid.dim)
    diag = float((active * active).sum()) / denom
    return RipleyCurves(radii, K, L, H, lam, diag)


def _k_from_sorted_pair_stats(sorted_dist, sorted_weight, radii, denom):
    cum = np.cumsum(sorted_weight)
    pos = np.searchsorted(sorted_dist, radii, side="right")
    return np.where(pos > 0, cum[np.maximum(pos - 1, 0)], 0.0) / denom


def k_points(points, radii):
    """Classical (biased) Ripley K for a point sample, with L and H.

    Counts ordered pairs within each radius, normalized by
    ``lambda**2 * volume`` with ``lambda = n / volume``.  No edge correction;
    the bias is toward underestimation near the window boundary.
    """
    radii = as_radii(radii)
    if points.n_points < 2:
        raise InputError("point estimator requires at least 2 points")
    volume = points.window.volume
    lam = points.n_points / volume
    dist = np.sort(pdist(points.points))
    # pdist yields unordered pairs; each contributes twice to the ordered sum.
    K = _k_from_sorted_pair_stats(
        dist, np.full(dist.shape, 2.0), radii, lam * lam * volume
    )
    L, H = l_h_from_k(K, radii, points.dim)
    return RipleyCurves(radii, K, L, H, lam)


def k_points_edge_corrected(points, radii):
    """Edge-corrected (unbiased) Ripley K for a point sample, with L and H.

    Each ordered pair is weighted by the reciprocal volume of the window
    self-overlap at the pair separation, computed analytically for the
    rectangular window.
    """
    radii = as_radii(radii)
    if points.n_points < 2:
        raise InputError("point estimator requires at least 2 points")
    lam = points.n_points / points.window.volume
    pts = points.points
    n = points.n_points
    iu, ju = np.triu_indices(n, k=1)
    diffs = np.abs(pts[iu] - pts[ju])
    overlaps = np.prod(np.maximum(0.0, points.window.side_lengths - diffs), axis=1)
    if np.any(overlaps <= 0.0):
        raise InputError("pair separation exceeds window")
    dist = np.sqrt((diffs * diffs).sum(axis=1))
    order = np.argsort(dist, kind="stable")
    K = _k_from_sorted_pair_stats(
        dist[order], 2.0 / overlaps[order], radii, lam * lam
    )
    L, H = l_h_from_k(K, radii, points.dim)
    return RipleyCurves(radii, K, L, H, lam)
