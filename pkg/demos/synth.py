"""Synthetic test images shared by the demo scripts."""

import numpy as np
from PIL import Image


def content_image(size=64) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / (size - 1)
    r, g, b = yy, xx, (xx + yy) / 2
    disc = ((xx - 0.35) ** 2 + (yy - 0.4) ** 2) < 0.04
    r = np.where(disc, 0.95, r)
    g = np.where(disc, 0.85, g)
    b = np.where(disc, 0.2, b)
    return (np.stack([r, g, b], -1) * 255).round().astype(np.uint8)


def style_image(size=64) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    check = ((xx // 8 + yy // 8) % 2).astype(np.float64)
    stripe = ((xx + 2 * yy) % 12 < 4).astype(np.float64)
    r = 0.9 * check + 0.1 * (1 - check)
    g = 0.15 * check + 0.75 * stripe * (1 - check)
    b = 0.8 * (1 - check) + 0.2 * stripe
    return (np.clip(np.stack([r, g, b], -1), 0, 1) * 255).round().astype(np.uint8)


def rings_image(size=64) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    rad = np.sqrt((xx - size / 2) ** 2 + (yy - size / 2) ** 2)
    ring = ((rad // 5) % 2).astype(np.float64)
    r = 0.2 + 0.7 * ring
    g = 0.8 - 0.6 * ring
    b = 0.5 * np.ones_like(ring)
    return (np.clip(np.stack([r, g, b], -1), 0, 1) * 255).round().astype(np.uint8)


def save(arr: np.ndarray, path: str) -> None:
    Image.fromarray(arr).save(path)
