import json
import math
import os

import numpy as np
import pytest

import styletune as st
from styletune.training import list_content_images

from conftest import synth_content, write_png


# ---------------------------------------------------------------------------
# strength sampling


def test_sample_strength_grid_membership():
    for step in range(100_000):
        a = st.sample_strength(0, step)
        k = round(a * 10)
        assert 0 <= k <= 100
        assert a == k / 10.0


def test_sample_strength_uniformity_band():
    counts = np.zeros(101, dtype=int)
    n = 100_000
    for step in range(n):
        counts[round(st.sample_strength(12345, step) * 10)] += 1
    freqs = counts / n
    assert freqs.min() >= 0.5 / 101
    assert freqs.max() <= 2.0 / 101


def test_sample_strength_deterministic():
    a = [st.sample_strength(7, s) for s in range(500)]
    b = [st.sample_strength(7, s) for s in range(500)]
    assert a == b
    c = [st.sample_strength(8, s) for s in range(500)]
    assert a != c


# ---------------------------------------------------------------------------
# Adam


def test_adam_first_step_closed_form():
    p = st.Tensor(np.asarray(1.0), requires_grad=True)
    state = st.AdamState.for_params({"p": p})
    st.adam_step({"p": p}, {"p": np.asarray(4.0)}, state, lr=1e-3)
    # bias corrections cancel at t=1: update = -lr * g / (|g| + ~eps)
    assert float(p.data) == pytest.approx(1.0 - 1e-3, abs=1e-9)
    assert state.t == 1


def test_adam_zero_gradient_means_no_motion():
    p = st.Tensor(np.array([2.0, -3.0]), requires_grad=True)
    state = st.AdamState.for_params({"p": p})
    for _ in range(10):
        st.adam_step({"p": p}, {"p": np.zeros(2)}, state, lr=0.1)
    assert p.data.tolist() == [2.0, -3.0]


def test_adam_five_steps_match_scalar_reference():
    # independent hand-rolled Adam on f(p) = p^2, gradient 2p
    b1, b2, eps, lr = 0.9, 0.999, 1e-8, 0.05
    p_ref, m, v = 1.0, 0.0, 0.0
    trace = []
    for t in range(1, 6):
        g = 2.0 * p_ref
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        p_ref = p_ref - lr * mhat / (math.sqrt(vhat) + eps)
        trace.append(p_ref)

    p = st.Tensor(np.asarray(1.0), requires_grad=True)
    state = st.AdamState.for_params({"p": p})
    got = []
    for _ in range(5):
        st.adam_step({"p": p}, {"p": 2.0 * p.data}, state, lr=lr)
        got.append(float(p.data))
    np.testing.assert_allclose(got, trace, rtol=0, atol=1e-12)


def test_adam_shape_mismatch_rejected():
    p = st.Tensor(np.zeros(3), requires_grad=True)
    state = st.AdamState.for_params({"p": p})
    with pytest.raises(ValueError, match="shape"):
        st.adam_step({"p": p}, {"p": np.zeros(4)}, state, lr=0.1)


# ---------------------------------------------------------------------------
# checkpoint format


def _sample_tensors():
    rng = np.random.default_rng(0)
    return {
        "t.conv1.weight": rng.normal(size=(2, 3, 3, 3)).astype(np.float32),
        "t.res1.beta": np.asarray(1.25, dtype=np.float32),  # rank-0
        "t.in1.gain": np.ones(2, dtype=np.float32),
    }


def test_checkpoint_roundtrip_bitwise(tmp_path):
    path = str(tmp_path / "a.ckpt")
    tensors = _sample_tensors()
    st.save_checkpoint(tensors, path)
    loaded = st.load_checkpoint(path)
    assert set(loaded) == set(tensors)
    for k in tensors:
        assert loaded[k].dtype == np.float32
        assert np.array_equal(loaded[k], tensors[k])
        assert loaded[k].shape == tensors[k].shape


def test_checkpoint_save_load_save_byte_identical(tmp_path):
    p1, p2 = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
    st.save_checkpoint(_sample_tensors(), p1)
    st.save_checkpoint(st.load_checkpoint(p1), p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_checkpoint_crc_flip_detected(tmp_path):
    path = str(tmp_path / "a.ckpt")
    st.save_checkpoint(_sample_tensors(), path)
    blob = bytearray(open(path, "rb").read())
    blob[len(blob) // 2] ^= 0xFF  # flip a byte in the data region
    open(path, "wb").write(bytes(blob))
    with pytest.raises(st.CheckpointCrcError, match="crc mismatch"):
        st.load_checkpoint(path)


def test_checkpoint_wrong_magic(tmp_path):
    path = str(tmp_path / "a.ckpt")
    st.save_checkpoint(_sample_tensors(), path)
    blob = bytearray(open(path, "rb").read())
    blob[:4] = b"WHAT"
    open(path, "wb").write(bytes(blob))
    with pytest.raises(st.CheckpointMagicError, match="not a checkpoint"):
        st.load_checkpoint(path)


def test_checkpoint_unsupported_version(tmp_path):
    path = str(tmp_path / "a.ckpt")
    st.save_checkpoint(_sample_tensors(), path)
    blob = bytearray(open(path, "rb").read())
    blob[4] = 2  # version u32 LE starts at offset 4
    open(path, "wb").write(bytes(blob))
    with pytest.raises(st.CheckpointVersionError, match="unsupported version 2"):
        st.load_checkpoint(path)


def test_checkpoint_truncation(tmp_path):
    path = str(tmp_path / "a.ckpt")
    st.save_checkpoint(_sample_tensors(), path)
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:-6])
    with pytest.raises(st.CheckpointTruncatedError, match="unexpected end of file"):
        st.load_checkpoint(path)


def test_checkpoint_crc_helper(tmp_path):
    path = str(tmp_path / "a.ckpt")
    st.save_checkpoint(_sample_tensors(), path)
    crc = st.checkpoint_crc(path)
    assert len(crc) == 8
    int(crc, 16)


# ---------------------------------------------------------------------------
# image I/O


def test_load_solid_ppm(tmp_path):
    path = str(tmp_path / "solid.ppm")
    with open(path, "wb") as fh:
        fh.write(b"P6\n8 8\n255\n" + bytes([255]) * (8 * 8 * 3))
    t = st.load_image(path)
    assert t.shape == (1, 3, 8, 8)
    assert np.all(t.data == 1.0)


def test_save_load_quantization_bound(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, size=(1, 3, 16, 16))
    quantized = np.rint(x * 255.0) / 255.0
    path = str(tmp_path / "q.png")
    st.save_image(st.Tensor(quantized), path)
    back = st.load_image(path)
    assert np.max(np.abs(back.data - quantized)) <= 1.0 / 255.0 + 1e-12


def test_resize_then_center_crop(tmp_path):
    arr = np.zeros((60, 100, 3), dtype=np.uint8)
    path = str(tmp_path / "wide.png")
    write_png(arr, path)
    t = st.load_image(path, size=64)
    assert t.shape == (1, 3, 64, 64)


def test_load_image_rejects_garbage(tmp_path):
    path = str(tmp_path / "not_an_image.png")
    with open(path, "wb") as fh:
        fh.write(b"garbage bytes")
    with pytest.raises(st.ImageFormatError, match="decode"):
        st.load_image(path)


def test_load_image_rejects_unsupported_format(tmp_path):
    from PIL import Image

    path = str(tmp_path / "photo.jpg")
    Image.fromarray(synth_content(16)).save(path, format="JPEG")
    with pytest.raises(st.ImageFormatError, match="unsupported image format"):
        st.load_image(path)


def test_png_bytes_deterministic():
    rng = np.random.default_rng(2)
    x = st.Tensor(rng.uniform(size=(1, 3, 16, 16)))
    assert st.to_png_bytes(x) == st.to_png_bytes(x)


# ---------------------------------------------------------------------------
# config


def test_config_from_json_roundtrip(tmp_path, desk_data):
    cfg_path = str(tmp_path / "cfg.json")
    raw = {
        "content_dir": desk_data["content_dir"],
        "style_image_path": desk_data["style"],
        "checkpoint_out": str(tmp_path / "m.ckpt"),
        "image_size": 32,
        "batch_size": 2,
        "epochs": 1,
        "learning_rate": 0.001,
        "seed": 3,
        "widths": [8, 16, 32],
        "loss_weights": {"lambda_content": 1.0, "lambda_style": 5.0, "lambda_tv": 1e-5},
    }
    with open(cfg_path, "w") as fh:
        json.dump(raw, fh)
    cfg = st.TrainConfig.from_json(cfg_path)
    assert cfg.image_size == 32
    assert cfg.widths == (8, 16, 32)
    assert cfg.loss_weights.lambda_style == 5.0


def test_config_missing_key(tmp_path, desk_data):
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w") as fh:
        json.dump({"content_dir": desk_data["content_dir"]}, fh)
    with pytest.raises(st.ConfigError, match="style_image_path"):
        st.TrainConfig.from_json(cfg_path)


def test_config_unknown_key(tmp_path, desk_data):
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w") as fh:
        json.dump(
            {"content_dir": "x", "style_image_path": "y", "bogus_knob": 1}, fh
        )
    with pytest.raises(st.ConfigError, match="bogus_knob"):
        st.TrainConfig.from_json(cfg_path)


def test_config_validation():
    with pytest.raises(st.ConfigError, match="image_size"):
        st.TrainConfig(content_dir="x", style_image_path="y", image_size=24)
    with pytest.raises(st.ConfigError, match="alpha_grid"):
        st.TrainConfig(content_dir="x", style_image_path="y", alpha_grid=(0.05,))


def test_alpha_grid_constant():
    assert len(st.ALPHA_GRID) == 101
    assert st.ALPHA_GRID[0] == 0.0
    assert st.ALPHA_GRID[-1] == 10.0
    assert all(a == k / 10.0 for k, a in enumerate(st.ALPHA_GRID))


# ---------------------------------------------------------------------------
# training loop


def _tiny_cfg(desk_data, tmp_path, **over):
    base = dict(
        content_dir=desk_data["content_dir"],
        style_image_path=desk_data["style"],
        checkpoint_out=str(tmp_path / "model.ckpt"),
        image_size=32,
        batch_size=2,
        epochs=2,
        learning_rate=1e-3,
        seed=5,
        widths=(8, 16, 32),
        precision="float64",
    )
    base.update(over)
    return st.TrainConfig(**base)


def test_empty_dataset_rejected(tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    with pytest.raises(st.ConfigError, match="no .png"):
        list_content_images(str(empty))


def test_train_epochs_zero_returns_initial_weights(desk_data, tmp_path):
    cfg = _tiny_cfg(desk_data, tmp_path, epochs=0)
    enc = st.generate_encoder(0)
    weights, log = st.train(cfg, enc)
    assert log == []
    init = st.init_weights(cfg.architecture(), cfg.seed, dtype=np.float64)
    for name in init.names():
        assert np.array_equal(weights[name].data, init[name].data)
    assert os.path.exists(cfg.checkpoint_out)


def test_train_deterministic_checkpoints(desk_data, tmp_path):
    enc = st.generate_encoder(0)
    cfg1 = _tiny_cfg(desk_data, tmp_path, checkpoint_out=str(tmp_path / "m1.ckpt"))
    cfg2 = _tiny_cfg(desk_data, tmp_path, checkpoint_out=str(tmp_path / "m2.ckpt"))
    st.train(cfg1, enc)
    st.train(cfg2, enc)
    assert open(cfg1.checkpoint_out, "rb").read() == open(cfg2.checkpoint_out, "rb").read()


def test_train_encoder_frozen_and_log_consistent(desk_data, tmp_path):
    enc = st.generate_encoder(4)
    before = [(w.data.copy(), b.data.copy()) for w, b in enc.stages]
    cfg = _tiny_cfg(desk_data, tmp_path)
    weights, log = st.train(cfg, enc, log_path=str(tmp_path / "log.jsonl"))
    for (w0, b0), (w1, b1) in zip(before, enc.stages):
        assert np.array_equal(w0, w1.data)
        assert np.array_equal(b0, b1.data)
    assert len(log) == 2  # 2 images, batch 2, 2 epochs -> 1 step per epoch
    for entry in log:
        bd = st.LossBreakdown(
            content=entry["content"], style=entry["style"], tv=entry["tv"],
            total=entry["total"], alpha_used=entry["alpha"],
        )
        bd.check(cfg.loss_weights)
        assert entry["alpha"] in st.ALPHA_GRID
    lines = [json.loads(line) for line in open(tmp_path / "log.jsonl")]
    assert lines == log


def test_fixed_strength_run_has_single_alpha(desk_data, tmp_path):
    enc = st.generate_encoder(0)
    cfg = _tiny_cfg(desk_data, tmp_path, epochs=3)
    _, log = st.train_fixed_strength_baseline(cfg, 2.5, enc)
    assert {entry["alpha"] for entry in log} == {2.5}


def test_train_aborts_on_non_finite_loss(desk_data, tmp_path, monkeypatch):
    import styletune.training as training_mod

    real = training_mod.total_loss

    def poisoned(*args, **kwargs):
        loss, bd = real(*args, **kwargs)
        bad = st.LossBreakdown(
            content=bd.content, style=bd.style, tv=bd.tv,
            total=float("nan"), alpha_used=bd.alpha_used,
        )
        return loss, bad

    monkeypatch.setattr(training_mod, "total_loss", poisoned)
    cfg = _tiny_cfg(desk_data, tmp_path)
    with pytest.raises(st.TrainingError, match="step 0") as err:
        st.train(cfg, st.generate_encoder(0))
    assert err.value.step == 0


def test_train_meta_sidecar(desk_data, tmp_path):
    cfg = _tiny_cfg(desk_data, tmp_path, epochs=1)
    st.train(cfg, st.generate_encoder(0))
    meta = json.load(open(cfg.checkpoint_out + ".meta.json"))
    assert meta["widths"] == [8, 16, 32]
    assert meta["seed"] == 5
