from itertools import combinations, permutations

import numpy as np
import pytest
from scipy.stats import rankdata

from csrstats import (
    PointSample,
    VoxelGrid,
    Window,
    clustering_index,
    k_grid,
    quantile_bands,
)


@pytest.fixture
def window_50():
    return Window(2, (50, 50), 1.0)


def k_grid_direct(grid, radii):
    """O(N^2) double-sum oracle for the grid K estimator."""
    extent = grid.window.extent
    l = grid.window.voxel_len
    coords = np.indices(extent).reshape(len(extent), -1).T
    centres = (coords + 0.5) * l
    v = grid.values.ravel()
    diff = centres[:, None, :] - centres[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    prod = np.outer(v, v)
    diag = float((v * v).sum())
    total = float(grid.active_values.sum())
    volume = grid.n_active * l ** grid.dim
    lam = total / volume
    out = []
    for r in np.asarray(radii, dtype=float):
        out.append((float(prod[dist <= r].sum()) - diag) / (lam * lam * volume))
    return np.asarray(out)


def random_point_sample(rng, window, n, distinct_voxels=False):
    """Uniform points; optionally guaranteed at most one point per unit voxel."""
    if not distinct_voxels:
        pts = rng.uniform(0, window.side_lengths, size=(n, window.dim))
        return PointSample(window, pts)
    flat = rng.choice(window.n_voxels, size=n, replace=False)
    idx = np.stack(np.unravel_index(flat, window.extent), axis=1)
    jitter = rng.uniform(0.0, 1.0, size=idx.shape)
    pts = (idx + jitter) * window.voxel_len
    return PointSample(window, pts)


def weighted_k_tilde(points, weights, window, radii):
    """Brute-force K for an atomic measure with known atom positions."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    volume = window.volume
    lam = total / volume
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    prod = np.outer(w, w)
    diag = float((w * w).sum())
    return np.asarray(
        [(float(prod[dist <= r].sum()) - diag) / (lam * lam * volume) for r in radii]
    )


def exhaustive_rejection_rates(window, values, omega, radii, mask=None):
    """Per-radius P(H* > 1) with all permutations as trials and assignments."""
    base = VoxelGrid(window, np.zeros(window.extent), mask)
    perms = list(permutations(values))
    H = np.array([k_grid(base.with_active_values(p), radii).H for p in perms])
    bands = quantile_bands(H, omega)
    hits = np.zeros(len(radii))
    for row in H:
        hits += clustering_index(row, bands) > 1.0
    return hits / len(perms)


def rank_sum_oracle(a, b):
    """Enumeration oracle for the one-tailed Mann-Whitney p, via rank sums."""
    pooled = np.asarray(list(a) + list(b), dtype=float)
    n_a = len(a)
    n = len(pooled)

    def u_of_split(order):
        perm = np.concatenate([pooled[list(order)],
                               pooled[[i for i in range(n) if i not in order]]])
        ranks = rankdata(perm)
        return ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0

    u_obs = u_of_split(tuple(range(n_a)))
    hits = total = 0
    for pick in combinations(range(n), n_a):
        hits += u_of_split(pick) >= u_obs
        total += 1
    return hits / total


def random_grid(rng, extent, voxel_len=1.0, masked=False, sparsity=0.5):
    window = Window(len(extent), extent, voxel_len)
    values = rng.uniform(0, 3, size=extent)
    values[rng.random(extent) < sparsity] = 0.0
    mask = None
    if masked:
        mask = rng.random(extent) < 0.8
        if not mask.any():
            mask.flat[0] = True
        if values[mask].sum() == 0.0:
            values[np.unravel_index(np.flatnonzero(mask.ravel())[0], extent)] = 1.0
    elif values.sum() == 0.0:
        values.flat[0] = 1.0
    return VoxelGrid(window, values, mask)
