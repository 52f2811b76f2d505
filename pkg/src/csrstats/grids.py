"""Data model for spatially quantized observations.

A :class:`Window` is a rectangular observation region partitioned into a
regular lattice of cubical voxels.  Observations come in two flavours:

* :class:`VoxelGrid` -- one nonnegative real value per voxel (counts or
  intensities), optionally restricted to a boolean mask.
* :class:`PointSample` -- raw point coordinates inside the window.

All types are immutable after construction and all operations are pure
functions, so instances can be shared freely across threads.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import InputError


def _readonly(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Window:
    """Rectangular window of ``extent`` voxels per axis, each of side ``voxel_len``.

    Physical side lengths are ``extent[i] * voxel_len``; coordinates live in
    the half-open box ``[0, extent[i] * voxel_len)`` per axis.
    """

    dim: int
    extent: tuple
    voxel_len: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InputError(f"unsupported dimension {self.dim} (must be 2 or 3)")
        extent = tuple(int(e) for e in self.extent)
        if len(extent) != self.dim:
            raise InputError("extent length must equal dim")
        if any(e <= 0 for e in extent):
            raise InputError("extent components must be positive")
        if not (np.isfinite(self.voxel_len) and self.voxel_len > 0):
            raise InputError("voxel_len must be positive and finite")
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "voxel_len", float(self.voxel_len))

    @property
    def n_voxels(self):
        return int(np.prod(self.extent))

    @property
    def side_lengths(self):
        """Physical side lengths, in length units."""
        return np.asarray(self.extent, dtype=float) * self.voxel_len

    @property
    def volume(self):
        """Lebesgue volume of the full window, in length units."""
        return float(np.prod(self.side_lengths))

    @property
    def diameter(self):
        """Length of the window diagonal."""
        return float(self.voxel_len * math.sqrt(sum(e * e for e in self.extent)))

    def voxel_centres_1d(self):
        """Per-axis voxel centre coordinates, as a list of 1-d arrays."""
        l = self.voxel_len
        return [(np.arange(e) + 0.5) * l for e in self.extent]


@dataclass(frozen=True, eq=False)  # identity equality: fields hold arrays
class VoxelGrid:
    """Voxel-quantized observation of a nonnegative measure on a window.

    ``values`` has shape ``window.extent`` (row-major).  If ``mask`` is given,
    voxels outside the mask are stored as zeros and excluded from totals,
    intensities, permutations and fits.
    """

    window: Window
    values: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size != self.window.n_voxels:
            raise InputError("values size does not match window extent")
        values = values.reshape(self.window.extent)
        if not np.all(np.isfinite(values)):
            raise InputError("grid values must be finite")
        if np.any(values < 0):
            raise InputError("grid values must be nonnegative")
        mask = self.mask
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.size != self.window.n_voxels:
                raise InputError("mask size does not match window extent")
            mask = mask.reshape(self.window.extent)
            if not mask.any():
                raise InputError("mask selects no voxels")
            values = np.where(mask, values, 0.0)
            object.__setattr__(self, "mask", _readonly(mask))
        object.__setattr__(self, "values", _readonly(values))

    @property
    def dim(self):
        return self.window.dim

    @property
    def n_active(self):
        """Number of in-mask voxels (all voxels when unmasked)."""
        if self.mask is None:
            return self.window.n_voxels
        return int(self.mask.sum())

    @property
    def active_values(self):
        """Flat array of in-mask voxel values, in row-major voxel order."""
        if self.mask is None:
            return self.values.ravel()
        return self.values[self.mask]

    @property
    def active_volume(self):
        """Lebesgue volume of the in-mask region."""
        return self.n_active * self.window.voxel_len ** self.dim

    def with_active_values(self, new_values):
        """Return a copy with the in-mask voxel values replaced (same order)."""
        new_values = np.asarray(new_values, dtype=float)
        if new_values.size != self.n_active:
            raise InputError("replacement value count does not match active voxels")
        if self.mask is None:
            return VoxelGrid(self.window, new_values.reshape(self.window.extent))
        full = np.zeros(self.window.extent)
        full[self.mask] = new_values
        return VoxelGrid(self.window, full, self.mask)


@dataclass(frozen=True, eq=False)  # identity equality: fields hold arrays
class PointSample:
    """Point coordinates (length units) inside a window."""

    window: Window
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.window.dim:
            raise InputError("points must be an (n, dim) array")
        if not np.all(np.isfinite(pts)):
            raise InputError("point coordinates must be finite")
        sides = self.window.side_lengths
        if pts.size and (np.any(pts < 0) or np.any(pts >= sides)):
            raise InputError("point coordinates must lie inside the window")
        object.__setattr__(self, "points", _readonly(pts))

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.window.dim


class VoxelizeResult(NamedTuple):
    grid: VoxelGrid
    shared_voxels: bool  # True when some voxel holds more than one point


def voxelize(points, voxel_len):
    """Bin a point sample into voxel counts.

    Voxels are half-open boxes ``[k*l, (k+1)*l)`` per axis; a point exactly on
    the upper window boundary is clamped into the last voxel.  Returns the
    count grid together with a flag telling whether any voxel received more
    than one point (grid and point estimators agree on snapped coordinates
    only when the flag is False).

    Parameters
    ----------
    points : PointSample
    voxel_len : float
        Side length of the new voxels, in length units.

    Returns
    -------
    VoxelizeResult
        ``(grid, shared_voxels)``.
    """
    if points.n_points == 0:
        raise InputError("empty sample")
    if not (np.isfinite(voxel_len) and voxel_len > 0):
        raise InputError("voxel_len must be positive and finite")
    sides = points.window.side_lengths
    if np.any(voxel_len > sides):
        raise InputError("voxel_len exceeds the window extent")
    extent = tuple(int(math.ceil(s / voxel_len - 1e-12)) for s in sides)
    window = Window(points.window.dim, extent, voxel_len)
    idx = np.floor(points.points / voxel_len).astype(np.int64)
    idx = np.minimum(idx, np.asarray(extent) - 1)
    counts = np.zeros(extent)
    np.add.at(counts, tuple(idx.T), 1.0)
    grid = VoxelGrid(window, counts)
    return VoxelizeResult(grid, bool(np.any(counts > 1)))


def project_to_2d(grid):
    """Sum a 3-d grid along its last (z) axis into a 2-d grid.

    The output mask marks a pixel active when any z-level voxel above it was
    active.  Total mass is preserved.
    """
    if grid.dim != 2 + 1:
        raise InputError("project_to_2d requires a 3-d grid")
    window = Window(2, grid.window.extent[:2], grid.window.voxel_len)
    values = grid.values.sum(axis=2)
    mask = None if grid.mask is None else grid.mask.any(axis=2)
    return VoxelGrid(window, values, mask)


def total_and_intensity(grid):
    """Total in-mask mass and the intensity estimate mass / active volume.

    Raises
    ------
    InputError
        If the total mass is zero ("degenerate sample"); the intensity-based
        estimators are undefined in that case.
    """
    total = float(grid.active_values.sum())
    if total <= 0.0:
        raise InputError("degenerate sample: total mass is zero")
    return total, total / grid.active_volume
