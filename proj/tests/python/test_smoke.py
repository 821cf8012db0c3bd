import numpy as np
import pytest

import isac_atr as ia


def test_presets():
    desk = ia.desk_preset()
    assert (desk.subcarriers, desk.symbols) == (64, 64)
    full = ia.full_scale_preset()
    assert (full.subcarriers, full.symbols) == (1584, 1120)
    assert ia.padded_dims(1584, 1120, 0) == (2048, 2048)
    assert ia.padded_dims(64, 64, 2) == (256, 256)


def test_single_target_peak():
    radio = ia.desk_preset()
    radio.tdd.period_symbols = 1
    radio.tdd.dl_symbols = 1
    dr = ia.range_per_bin_m(radio, 64)
    dv = ia.velocity_per_bin_mps(radio, 64)
    scene = ia.Scene(0, [ia.Scatterer(10 * dr, 5 * dv, 1.0, 0.0)], float("inf"), 0)
    h = ia.simulate_frame(scene, radio)
    p = ia.compute_periodogram(h, radio, 0)
    n, m = np.unravel_index(np.argmax(np.abs(p)), p.shape)
    assert (n, m) == (10, 5)


def test_parseval():
    radio = ia.desk_preset()
    rng = np.random.default_rng(3)
    h = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    for f in (0, 1, 2):
        p = ia.compute_periodogram(h, radio, f)
        lhs = np.sum(np.abs(p) ** 2)
        rhs = np.sum(np.abs(h) ** 2) / p.size
        assert abs(lhs - rhs) <= 1e-9 * rhs


def test_features_and_flip():
    radio = ia.desk_preset()
    scene = ia.Scene(0, [ia.Scatterer(8.0, 1.5)], 20.0, 4)
    p = ia.compute_periodogram(ia.simulate_frame(scene, radio), radio, 0)
    t = ia.extract_features(p, radio)
    assert t.shape == (2, 64, 64) and t.dtype == np.float32
    assert np.all(np.isfinite(t))
    flipped = ia.hflip(t)
    assert np.array_equal(flipped, t[:, :, ::-1])
    assert np.array_equal(ia.hflip(flipped), t)


def test_class_weights():
    counts = [2051, 1308, 841, 2776, 886, 643, 604, 1466]
    w = ia.class_weights_from_counts(counts)
    total = sum(counts)
    assert w[5] == pytest.approx(total / (8 * 643), rel=1e-12)
    assert sum(c * x for c, x in zip(counts, w)) == pytest.approx(total, rel=1e-12)
    assert ia.train_count_for(803, 0.8) == 643


def test_dataset_round_trip(tmp_path):
    ds = ia.generate_dataset(total=40, seed=5)
    assert len(ds) == 40
    assert ds.features.shape == (40, 2, 64, 64)
    assert sorted(set(ds.labels)) == list(range(8))
    path = tmp_path / "d.iatr"
    ds.save(path)
    assert ia.load_dataset(path) == ds
    data = bytearray(path.read_bytes())
    data[200] ^= 0x10
    path.write_bytes(bytes(data))
    with pytest.raises(ia.FormatError):
        ia.load_dataset(path)


def test_train_save_load(tmp_path):
    ds = ia.generate_dataset(total=48, seed=2)
    cfg = ia.reference_config(0)
    det = ia.Detector(cfg, ds.rows, ds.cols, 7)
    assert det.param_count > 0
    history = det.train(ds, ia.TrainConfig(epochs=1, seed=3))
    assert len(history) == 1 and np.isfinite(history[0]["test_loss"])
    report = det.evaluate(ds)
    assert report["mean_loss"] == pytest.approx(history[0]["test_loss"], rel=1e-6)
    path = tmp_path / "m.iatm"
    det.save(path)
    loaded = ia.load_checkpoint(path)
    x = ds.features[:4]
    assert np.array_equal(loaded.logits(x), det.logits(x))
    assert loaded.evaluate(ds)["mean_loss"] == report["mean_loss"]


def test_errors():
    with pytest.raises(ia.IoError):
        ia.load_dataset("/nonexistent/file.iatr")
    cfg = ia.reference_config(0)
    cfg.first_kernel = 7
    with pytest.raises(ia.ConfigError):
        cfg.validate()
