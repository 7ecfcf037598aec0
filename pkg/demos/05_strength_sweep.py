"""Render one content image across the whole strength range.

Loads the checkpoint produced by 04_train_strength_conditioned.py and
stitches an ascending-strength strip like the side-by-side figures people
make when comparing stylization levels.  Run demo 04 first.
"""

import os

import numpy as np
from PIL import Image

import styletune as st

OUT = os.path.join(os.path.dirname(__file__), "out")
ckpt = os.path.join(OUT, "demo_model.ckpt")
if not os.path.exists(ckpt):
    raise SystemExit("run 04_train_strength_conditioned.py first")

weights = st.load_transformer(ckpt, dtype=np.float64)
print(f"loaded {ckpt}: widths {weights.config.widths}, "
      f"{weights.config.residual_blocks} residual blocks, "
      f"crc {st.checkpoint_crc(ckpt)}")

x = st.load_image(os.path.join(OUT, "data", "content.png"), size=48)
alphas = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0]
tiles = []
for alpha in alphas:
    y = st.forward(x, weights, alpha)
    arr = st.imageio.to_uint8(y)
    tiles.append(arr)
    print(f"  alpha {alpha:4.1f}: mean pixel {arr.mean():6.1f}")

strip = np.concatenate(tiles, axis=1)
path = os.path.join(OUT, "strength_strip.png")
Image.fromarray(strip).save(path)
print(f"\nwrote {path} ({strip.shape[1]}x{strip.shape[0]}, "
      f"{len(alphas)} tiles ordered by alpha)")
