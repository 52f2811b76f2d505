import math

import numpy as np
import pytest

from csrstats import (
    InputError,
    ShotNoiseParams,
    Window,
    gen_poisson_grid,
    gen_scenario_suite,
    gen_shot_noise,
)

WINDOW = Window(2, (50, 50), 1.0)


def test_shot_noise_mean_matches_intensity():
    # kernels integrate to 1, so with a wide margin the expected voxel value
    # is the underlying point intensity
    params = ShotNoiseParams(0.1, 2.0)
    assert params.effective_margin == 8.0
    totals = [gen_shot_noise(params, WINDOW, seed=s).values.mean()
              for s in range(100)]
    # per-replicate mean fluctuates like sqrt(lambda)/sqrt(area-ish); use the
    # empirical spread for the gate
    sem = np.std(totals, ddof=1) / math.sqrt(len(totals))
    assert abs(np.mean(totals) - 0.1) < 5 * sem


def test_shot_noise_small_sigma_concentrates():
    # sigma far below the voxel size: each point's mass lands in one voxel
    grid = gen_shot_noise(ShotNoiseParams(0.005, 0.05), WINDOW, seed=2)
    vals = np.sort(grid.values.ravel())[::-1]
    n_dominant = int((vals > 0.01 * vals[0]).sum())
    assert 1 <= n_dominant <= 40  # about one voxel per sampled point
    assert vals[:n_dominant].sum() / vals.sum() > 0.99


def test_shot_noise_deterministic():
    params = ShotNoiseParams(0.1, 1.0)
    g1 = gen_shot_noise(params, WINDOW, seed=9)
    g2 = gen_shot_noise(params, WINDOW, seed=9)
    assert np.array_equal(g1.values, g2.values)


def test_shot_noise_3d():
    win = Window(3, (8, 8, 8), 1.0)
    grid = gen_shot_noise(ShotNoiseParams(0.05, 1.0), win, seed=4)
    assert grid.values.shape == (8, 8, 8)
    assert np.all(grid.values >= 0.0)


def test_shot_noise_param_validation():
    with pytest.raises(InputError):
        ShotNoiseParams(0.0, 1.0)
    with pytest.raises(InputError):
        ShotNoiseParams(1.0, -1.0)


def test_poisson_grid_mean():
    grid = gen_poisson_grid(0.1, WINDOW, seed=5)
    assert abs(grid.values.mean() - 0.1) < 5 * math.sqrt(0.1 / 2500)
    assert np.array_equal(grid.values, gen_poisson_grid(0.1, WINDOW, seed=5).values)


def test_scenario_suite_composition():
    items = gen_scenario_suite(seed=77)
    assert len(items) == 45
    by_gen = {}
    for item in items:
        by_gen.setdefault(item.generator, []).append(item)
        assert item.grid.window.extent == (50, 50)
        assert item.grid.window.voxel_len == 1.0
    assert len(by_gen["gamma"]) == 5
    assert len(by_gen["wsp"]) == 5
    assert len(by_gen["poisson"]) == 5
    assert len(by_gen["shot-noise"]) == 30
    sigmas = sorted({item.params["sigma"] for item in by_gen["shot-noise"]})
    assert sigmas == [1.0, 2.0, 3.0, 4.0, 5.0, 10.0]
    for item in by_gen["gamma"]:
        assert 0.0 < item.params["a"] <= 10.0
        assert 0.0 < item.params["b"] <= 2.0
    for item in by_gen["wsp"]:
        assert all(0.37 <= a <= 2.7 for a in item.params["rates"])


def test_scenario_suite_deterministic():
    a = gen_scenario_suite(seed=3)
    b = gen_scenario_suite(seed=3)
    for x, y in zip(a, b):
        assert x.item_id == y.item_id
        assert np.array_equal(x.grid.values, y.grid.values)
