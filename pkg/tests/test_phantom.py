import numpy as np
import pytest

from activescan.phantom import (LABEL_MYOCARDIUM, LABEL_VENTRICLE, PhantomParams,
                                default_phantom_grid, generate_phantom)


@pytest.fixture(scope="module")
def phantom():
    params = PhantomParams(grid=default_phantom_grid(32), n_frames=40, period=16, seed=7)
    return generate_phantom(params)


def test_exact_periodicity(phantom):
    seq, labels = phantom
    for t in (0, 3, 11):
        assert np.array_equal(seq.frames[t], seq.frames[t + 16])
        assert np.array_equal(labels[t], labels[t + 16])


def test_labels_disjoint_and_present(phantom):
    _, labels = phantom
    for t in range(labels.shape[0]):
        vent = labels[t] == LABEL_VENTRICLE
        myo = labels[t] == LABEL_MYOCARDIUM
        assert not np.any(vent & myo)
        assert vent.sum() > 20 and myo.sum() > 20


def test_deterministic_generation():
    params = PhantomParams(grid=default_phantom_grid(16), n_frames=6, period=3, seed=5)
    a, la = generate_phantom(params)
    b, lb = generate_phantom(params)
    assert np.array_equal(a.frames, b.frames)
    assert np.array_equal(la, lb)


def test_intensity_gap_every_frame(phantom):
    seq, labels = phantom
    for t in range(seq.n_frames):
        myo = seq.frames[t][labels[t] == LABEL_MYOCARDIUM].mean()
        vent = seq.frames[t][labels[t] == LABEL_VENTRICLE].mean()
        assert myo - vent >= 0.5


def test_motion_is_smooth(phantom):
    seq, _ = phantom
    one = np.mean([np.abs(seq.frames[t + 1] - seq.frames[t]).mean() for t in range(8)])
    half = np.mean([np.abs(seq.frames[t + 8] - seq.frames[t]).mean() for t in range(8)])
    assert 0 < one < half


def test_values_in_range(phantom):
    seq, _ = phantom
    assert seq.frames.min() >= -1.0 and seq.frames.max() <= 1.0


def test_param_validation():
    grid = default_phantom_grid(16)
    with pytest.raises(ValueError):
        PhantomParams(grid=grid, inner_radius=0.5, outer_radius=0.4)
    with pytest.raises(ValueError):
        PhantomParams(grid=grid, period=1)
    with pytest.raises(ValueError):
        PhantomParams(grid=grid, amplitude=0.9)
    with pytest.raises(ValueError):
        PhantomParams(grid=grid, inner_radius=0.37, outer_radius=0.38, amplitude=0.5)
