import numpy as np
import pytest

from csrstats import (
    InputError,
    PointSample,
    VoxelGrid,
    Window,
    project_to_2d,
    total_and_intensity,
    voxelize,
)


def test_voxelize_simple_binning():
    win = Window(2, (3, 1), 1.0)
    pts = PointSample(win, [(0.5, 0.5), (2.5, 0.5)])
    grid, shared = voxelize(pts, 1.0)
    assert grid.values.ravel().tolist() == [1.0, 0.0, 1.0]
    assert shared is False


def test_voxelize_shared_voxel_flag():
    win = Window(2, (1, 1), 1.0)
    pts = PointSample(win, [(0.4, 0.4), (0.6, 0.6)])
    grid, shared = voxelize(pts, 1.0)
    assert grid.values.ravel().tolist() == [2.0]
    assert shared is True


def test_voxelize_mass_conservation():
    rng = np.random.default_rng(7)
    win = Window(2, (50, 50), 1.0)
    pts = PointSample(win, rng.uniform(0, 50, size=(100, 2)))
    grid, _ = voxelize(pts, 1.0)
    assert grid.values.sum() == 100.0


def test_voxelize_errors():
    win = Window(2, (3, 3), 1.0)
    with pytest.raises(InputError, match="empty sample"):
        voxelize(PointSample(win, np.empty((0, 2))), 1.0)
    pts = PointSample(win, [(1.0, 1.0)])
    with pytest.raises(InputError):
        voxelize(pts, 5.0)


def test_voxelize_intensity_identity():
    rng = np.random.default_rng(3)
    win = Window(2, (20, 30), 0.5)
    pts = PointSample(win, rng.uniform(0, [10.0, 15.0], size=(37, 2)))
    grid, _ = voxelize(pts, 0.5)
    total, lam = total_and_intensity(grid)
    assert total == 37.0
    assert lam == 37.0 / (20 * 30 * 0.5 ** 2)


def test_voxelize_translation_consistency():
    rng = np.random.default_rng(11)
    win = Window(2, (30, 30), 1.0)
    base = rng.uniform(5, 15, size=(25, 2))
    g0, _ = voxelize(PointSample(win, base), 1.0)
    g1, _ = voxelize(PointSample(win, base + [3.0, 7.0]), 1.0)
    assert np.array_equal(np.roll(g0.values, (3, 7), axis=(0, 1)), g1.values)


def test_project_to_2d_column_sums():
    win = Window(3, (2, 1, 3), 1.0)
    grid = VoxelGrid(win, [1, 2, 3, 0, 0, 4])
    flat = project_to_2d(grid)
    assert flat.window.extent == (2, 1)
    assert flat.values.ravel().tolist() == [6.0, 4.0]


def test_project_to_2d_zero_grid():
    win = Window(3, (4, 3, 2), 1.0)
    flat = project_to_2d(VoxelGrid(win, np.zeros(24)))
    assert flat.values.sum() == 0.0


def test_project_to_2d_preserves_mass_and_mask():
    rng = np.random.default_rng(5)
    for _ in range(20):
        extent = tuple(rng.integers(1, 6, size=3))
        win = Window(3, extent, 1.0)
        vals = rng.uniform(0, 2, size=extent)
        mask = rng.random(extent) < 0.7
        if not mask.any():
            mask.flat[0] = True
        grid = VoxelGrid(win, vals, mask)
        flat = project_to_2d(grid)
        assert flat.values.sum() == pytest.approx(grid.values.sum(), rel=1e-12)
        assert np.array_equal(flat.mask, mask.any(axis=2))


def test_project_to_2d_rejects_2d_input():
    grid = VoxelGrid(Window(2, (2, 2), 1.0), np.ones(4))
    with pytest.raises(InputError):
        project_to_2d(grid)


def test_total_and_intensity_uniform():
    grid = VoxelGrid(Window(2, (50, 50), 1.0), np.full(2500, 0.1))
    total, lam = total_and_intensity(grid)
    assert total == pytest.approx(250.0)
    assert lam == pytest.approx(0.1)


def test_total_and_intensity_unmasked_vs_masked():
    win = Window(2, (2, 2), 1.0)
    grid = VoxelGrid(win, [2, 0, 0, 0])
    assert total_and_intensity(grid) == (2.0, 0.5)
    masked = VoxelGrid(win, [2, 0, 0, 0], mask=[True, True, False, False])
    assert total_and_intensity(masked) == (2.0, 1.0)


def test_total_and_intensity_degenerate():
    grid = VoxelGrid(Window(2, (2, 2), 1.0), np.zeros(4))
    with pytest.raises(InputError, match="degenerate"):
        total_and_intensity(grid)


def test_masked_out_voxels_stored_as_zero():
    grid = VoxelGrid(Window(2, (2, 2), 1.0), [1, 2, 3, 4],
                     mask=[True, False, True, False])
    assert grid.values.ravel().tolist() == [1.0, 0.0, 3.0, 0.0]
    assert grid.n_active == 2
    assert grid.active_values.tolist() == [1.0, 3.0]


def test_grid_validation_errors():
    win = Window(2, (2, 2), 1.0)
    with pytest.raises(InputError):
        VoxelGrid(win, [1, 2, 3])
    with pytest.raises(InputError):
        VoxelGrid(win, [1, 2, 3, -1])
    with pytest.raises(InputError):
        VoxelGrid(win, [1, 2, 3, np.inf])
    with pytest.raises(InputError):
        Window(4, (2, 2, 2, 2), 1.0)
    with pytest.raises(InputError):
        Window(2, (0, 5), 1.0)


def test_point_sample_bounds():
    win = Window(2, (3, 3), 1.0)
    with pytest.raises(InputError):
        PointSample(win, [(3.0, 1.0)])  # boundary is exclusive
    with pytest.raises(InputError):
        PointSample(win, [(-0.1, 1.0)])


def test_grid_values_read_only():
    grid = VoxelGrid(Window(2, (2, 2), 1.0), [1, 2, 3, 4])
    with pytest.raises(ValueError):
        grid.values[0, 0] = 9.0
