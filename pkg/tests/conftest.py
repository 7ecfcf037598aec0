import os

import numpy as np
import pytest
from PIL import Image

import styletune as st


def synth_content(size=64) -> np.ndarray:
    """Smooth gradients plus a bright disc; uint8 (h, w, 3)."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / (size - 1)
    r, g, b = yy, xx, (xx + yy) / 2
    disc = ((xx - 0.35) ** 2 + (yy - 0.4) ** 2) < 0.04
    r = np.where(disc, 0.95, r)
    g = np.where(disc, 0.85, g)
    b = np.where(disc, 0.2, b)
    return (np.stack([r, g, b], -1) * 255).round().astype(np.uint8)


def synth_style(size=64) -> np.ndarray:
    """High-frequency checkerboard with stripes; uint8 (h, w, 3)."""
    yy, xx = np.mgrid[0:size, 0:size]
    check = ((xx // 8 + yy // 8) % 2).astype(np.float64)
    stripe = ((xx + 2 * yy) % 12 < 4).astype(np.float64)
    r = 0.9 * check + 0.1 * (1 - check)
    g = 0.15 * check + 0.75 * stripe * (1 - check)
    b = 0.8 * (1 - check) + 0.2 * stripe
    return (np.clip(np.stack([r, g, b], -1), 0, 1) * 255).round().astype(np.uint8)


def synth_style2(size=64) -> np.ndarray:
    """A second style: concentric rings."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    rad = np.sqrt((xx - size / 2) ** 2 + (yy - size / 2) ** 2)
    ring = ((rad // 5) % 2).astype(np.float64)
    r = 0.2 + 0.7 * ring
    g = 0.8 - 0.6 * ring
    b = 0.5 * np.ones_like(ring)
    return (np.clip(np.stack([r, g, b], -1), 0, 1) * 255).round().astype(np.uint8)


def write_png(arr: np.ndarray, path: str) -> None:
    Image.fromarray(arr).save(path)


def random_image_tensor(rng: np.random.Generator, size: int, dtype=np.float64) -> st.Tensor:
    return st.Tensor(rng.uniform(0.05, 0.95, size=(1, 3, size, size)).astype(dtype))


@pytest.fixture(scope="session")
def desk_data(tmp_path_factory):
    """On-disk content dir + two style images, 64x64."""
    root = tmp_path_factory.mktemp("deskdata")
    content_dir = root / "content"
    content_dir.mkdir()
    write_png(synth_content(64), str(content_dir / "a.png"))
    write_png(synth_content(96)[::-1].copy(), str(content_dir / "b.png"))
    style = root / "style.png"
    style2 = root / "style2.png"
    write_png(synth_style(64), str(style))
    write_png(synth_style2(64), str(style2))
    return {
        "root": str(root),
        "content_dir": str(content_dir),
        "style": str(style),
        "style2": str(style2),
    }


@pytest.fixture(scope="session")
def tiny_model(tmp_path_factory, desk_data):
    """A quickly trained 32x32 test-scale checkpoint, shared by CLI/service tests."""
    root = tmp_path_factory.mktemp("tinymodel")
    ckpt = str(root / "tiny.ckpt")
    cfg = st.TrainConfig(
        content_dir=desk_data["content_dir"],
        style_image_path=desk_data["style"],
        checkpoint_out=ckpt,
        image_size=32,
        batch_size=2,
        epochs=10,
        learning_rate=1e-3,
        seed=11,
        widths=(8, 16, 32),
        residual_blocks=5,
        precision="float32",
    )
    enc = st.generate_encoder(0, dtype=np.float32)
    weights, log = st.train(cfg, enc, log_path=ckpt + ".log.jsonl")
    return {"checkpoint": ckpt, "config": cfg, "log": log, "size": 32}


@pytest.fixture()
def content_png_bytes(desk_data):
    with open(os.path.join(desk_data["content_dir"], "a.png"), "rb") as fh:
        return fh.read()
