import numpy as np
import pytest

from activescan.denoisers.learned import (TrainConfig, load_checkpoint, save_checkpoint,
                                          train_epsilon_denoiser)
from activescan.phantom import PhantomParams, default_phantom_grid, generate_phantom
from activescan.schedule import forward_diffuse, make_cosine_schedule


@pytest.fixture(scope="module")
def s500():
    return make_cosine_schedule(500)


@pytest.fixture(scope="module")
def tiny_dataset():
    seqs = []
    for i in range(10):
        params = PhantomParams(grid=default_phantom_grid(16), n_frames=8,
                               period=4, seed=100 + i)
        seqs.append(generate_phantom(params)[0])
    return seqs


@pytest.fixture(scope="module")
def trained(tiny_dataset, s500):
    cfg = TrainConfig(dataset=tiny_dataset, window=3, steps=80, batch=8, seed=1)
    return train_epsilon_denoiser(cfg, s500)


def test_zero_predictor_baseline(s500, rng):
    # E ||eps - 0||^2 per pixel is 1 under unit-variance noise
    eps = rng.standard_normal((64, 3, 16, 16))
    assert float((eps**2).mean()) == pytest.approx(1.0, abs=0.02)


def test_training_beats_zero_predictor(trained):
    assert trained.val_mse < 0.5
    assert trained.qualified


def test_training_deterministic(tiny_dataset, s500):
    cfg = TrainConfig(dataset=tiny_dataset, window=3, steps=25, batch=8, seed=7)
    a = train_epsilon_denoiser(cfg, s500)
    b = train_epsilon_denoiser(cfg, s500)
    assert a.val_mse == b.val_mse
    x = np.random.default_rng(0).standard_normal((2, 3, 16, 16))
    assert np.array_equal(a.denoiser.evaluate(x, 100), b.denoiser.evaluate(x, 100))


def test_evaluate_shape_and_purity(trained, rng):
    den = trained.denoiser
    x = rng.standard_normal((4, 3, 16, 16))
    out = den.evaluate(x, 250)
    assert out.shape == x.shape
    assert np.array_equal(out, den.evaluate(x, 250))
    single = den.evaluate(x[0], 250)
    assert np.allclose(single, out[0], atol=1e-6)


def test_beats_zero_predictor_per_tau_bucket(trained, tiny_dataset, s500, rng):
    den = trained.denoiser
    frames = tiny_dataset[-1].frames
    x0 = np.stack([frames[0:3], frames[3:6]]).astype(np.float64)
    for frac in (0.1, 0.5, 0.9):
        tau = int(frac * 500)
        eps = rng.standard_normal(x0.shape)
        x_tau = forward_diffuse(x0, eps, tau, s500)
        mse = float(((den.evaluate(x_tau, tau) - eps) ** 2).mean())
        assert mse < 1.0, f"tau bucket {frac}: mse {mse}"


def test_checkpoint_roundtrip(trained, s500, tmp_path, rng):
    save_checkpoint(tmp_path / "ck", trained.denoiser)
    assert (tmp_path / "ck" / "manifest.txt").exists()
    assert (tmp_path / "ck" / "config.json").exists()
    back = load_checkpoint(tmp_path / "ck", s500)
    x = rng.standard_normal((2, 3, 16, 16))
    assert np.array_equal(back.evaluate(x, 321), trained.denoiser.evaluate(x, 321))


def test_checkpoint_bytes_deterministic(tiny_dataset, s500, tmp_path):
    cfg = TrainConfig(dataset=tiny_dataset, window=3, steps=20, batch=8, seed=3)
    for name in ("a", "b"):
        res = train_epsilon_denoiser(cfg, s500)
        save_checkpoint(tmp_path / name, res.denoiser)
    for f in sorted((tmp_path / "a").rglob("*")):
        if f.is_file():
            twin = tmp_path / "b" / f.relative_to(tmp_path / "a")
            assert f.read_bytes() == twin.read_bytes(), f.name


def test_train_config_validation(tiny_dataset):
    with pytest.raises(ValueError):
        TrainConfig(dataset=[], window=3)
    short = tiny_dataset[0]
    with pytest.raises(ValueError):
        TrainConfig(dataset=[short], window=99)


def test_checkpoint_tau_mismatch_rejected(trained, tmp_path):
    save_checkpoint(tmp_path / "ck", trained.denoiser)
    with pytest.raises(ValueError, match="tau_max"):
        load_checkpoint(tmp_path / "ck", make_cosine_schedule(100))
