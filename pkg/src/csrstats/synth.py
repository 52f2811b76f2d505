"""Synthetic data generators for the CSR-vs-clustering study.

CSR generators reuse the null-model samplers (Gamma, weighted Poisson sum,
per-voxel Poisson counts).  The clustered generator is a Gaussian shot-noise
field: a homogeneous Poisson point set, sampled on a margin-expanded region to
avoid boundary deficits, smoothed by an isotropic Gaussian kernel evaluated at
voxel centres.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InputError
from .grids import VoxelGrid, Window
from .nulls import (
    DEFAULT_WEIGHTS,
    GammaParams,
    PoissonSumParams,
    sample_gamma_grid,
    sample_poisson_sum_grid,
)
from .rng import derive_seed, make_generator


@dataclass(frozen=True)
class ShotNoiseParams:
    """Gaussian shot-noise field: point intensity, kernel sd, sampling margin.

    ``margin`` is the width of the border added around the window when
    sampling the underlying points; None means 4 sigma, at which the kernel
    mass lost to truncation is below 1e-4.
    """

    intensity: float
    sigma: float
    margin: float = None

    def __post_init__(self):
        if not (np.isfinite(self.intensity) and self.intensity > 0):
            raise InputError("intensity must be positive")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InputError("sigma must be positive")
        if self.margin is not None and self.margin < 0:
            raise InputError("margin must be nonnegative")

    @property
    def effective_margin(self):
        return 4.0 * self.sigma if self.margin is None else float(self.margin)


def gen_shot_noise(params, window, seed):
    """Sample a Gaussian shot-noise grid.

    Draws a homogeneous Poisson point set on the window expanded by the margin
    on every side, then sets each voxel value to the sum over points of the
    isotropic Gaussian density (sd sigma per axis) at the voxel centre.
    Kernels integrate to one, so the expected voxel value is the point
    intensity.
    """
    margin = params.effective_margin
    sides = window.side_lengths
    expanded = np.prod(sides + 2.0 * margin)
    rng = make_generator(seed)
    n = int(rng.poisson(params.intensity * expanded))
    pts = rng.uniform(-margin, sides + margin, size=(n, window.dim))

    centres = window.voxel_centres_1d()
    values = np.zeros(window.extent)
    if n > 0:
        norm = 1.0 / (params.sigma * np.sqrt(2.0 * np.pi))
        # separable kernel: per-axis Gaussian factors combined by outer product
        factors = [
            norm * np.exp(-((c[None, :] - pts[:, i : i + 1]) ** 2)
                          / (2.0 * params.sigma ** 2))
            for i, c in enumerate(centres)
        ]
        if window.dim == 2:
            values = np.einsum("ni,nj->ij", factors[0], factors[1])
        else:
            values = np.einsum("ni,nj,nk->ijk", factors[0], factors[1], factors[2])
    return VoxelGrid(window, np.maximum(values, 0.0))


def gen_poisson_grid(lam, window, seed):
    """Per-voxel independent Poisson counts with mean lam * voxel volume.

    For unit voxels this is exactly the voxelization of a homogeneous Poisson
    point process with intensity lam.
    """
    if not (np.isfinite(lam) and lam > 0):
        raise InputError("intensity must be positive")
    rng = make_generator(seed)
    counts = rng.poisson(lam * window.voxel_len ** window.dim, size=window.extent)
    return VoxelGrid(window, counts.astype(float))


class ScenarioItem(NamedTuple):
    item_id: str
    generator: str
    params: dict
    seed: int
    grid: VoxelGrid


SCENARIO_SIGMAS = (1.0, 2.0, 3.0, 4.0, 5.0, 10.0)
SCENARIO_REPLICATES = 5


def gen_scenario_suite(seed, window=None):
    """Generate the full synthetic scenario suite (45 labeled grids).

    Five replicates of each setting on a 50x50 unit-voxel window:

    * Gamma process, shape ~ U(0, 10] and scale ~ U(0, 2] per replicate;
    * weighted Poisson sum with the standard mark ladder and per-mark rates
      ~ U[0.37, 2.7] per replicate;
    * Poisson counts with intensity 0.1;
    * Gaussian shot noise with intensity 0.1 and sigma in
      {1, 2, 3, 4, 5, 10}.
    """
    window = window or Window(2, (50, 50), 1.0)
    items = []

    def item_seed():
        return derive_seed(seed, len(items))

    for rep in range(SCENARIO_REPLICATES):
        s = item_seed()
        rng = make_generator(s)
        a = 10.0 * (1.0 - rng.random())  # (0, 10]
        b = 2.0 * (1.0 - rng.random())  # (0, 2]
        grid_seed = int(rng.integers(0, 2 ** 63))
        grid = sample_gamma_grid(GammaParams(a, b), window, None, grid_seed)
        items.append(ScenarioItem(f"gamma-{rep}", "gamma", {"a": a, "b": b}, s, grid))

    for rep in range(SCENARIO_REPLICATES):
        s = item_seed()
        rng = make_generator(s)
        rates = tuple(rng.uniform(0.37, 2.7, size=len(DEFAULT_WEIGHTS)))
        grid_seed = int(rng.integers(0, 2 ** 63))
        grid = sample_poisson_sum_grid(
            PoissonSumParams(DEFAULT_WEIGHTS, rates), window, None, grid_seed
        )
        items.append(
            ScenarioItem(
                f"wsp-{rep}",
                "wsp",
                {"weights": list(DEFAULT_WEIGHTS), "rates": list(rates)},
                s,
                grid,
            )
        )

    for rep in range(SCENARIO_REPLICATES):
        s = item_seed()
        grid = gen_poisson_grid(0.1, window, s)
        items.append(ScenarioItem(f"poisson-{rep}", "poisson", {"lambda": 0.1}, s, grid))

    for sigma in SCENARIO_SIGMAS:
        for rep in range(SCENARIO_REPLICATES):
            s = item_seed()
            grid = gen_shot_noise(ShotNoiseParams(0.1, sigma), window, s)
            items.append(
                ScenarioItem(
                    f"shot-noise-s{sigma:g}-{rep}",
                    "shot-noise",
                    {"lambda": 0.1, "sigma": sigma},
                    s,
                    grid,
                )
            )
    return items
