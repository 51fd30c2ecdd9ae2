import numpy as np
import pytest

from elastika.curves import Curve, uniform_grid


def smooth_curve(rng, grid, n_channels=1, n_harmonics=3, scale=1.0):
    """Random band-limited curve with decaying harmonic content."""
    k = np.arange(1, n_harmonics + 1)
    values = []
    for _ in range(n_channels):
        a = rng.standard_normal(n_harmonics) / k**2
        b = rng.standard_normal(n_harmonics) / k**2
        row = a @ np.sin(np.pi * np.outer(k, grid)) + b @ np.cos(np.pi * np.outer(k, grid))
        values.append(scale * row)
    return np.vstack(values)


def make_curve(values, grid=None, trial_id="t", subject_id="s", channels=None):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if grid is None:
        grid = uniform_grid(values.shape[1])
    if channels is None:
        channels = tuple(f"ch{i}" for i in range(values.shape[0]))
    return Curve(
        trial_id=trial_id,
        subject_id=subject_id,
        channels=channels,
        grid=grid,
        values=values,
    )


@pytest.fixture
def grid101():
    return uniform_grid(101)
