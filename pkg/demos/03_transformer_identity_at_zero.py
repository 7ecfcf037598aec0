"""Zero strength means the residual branches are provably inert.

At alpha = 0 every gate is exactly 0, so the network output cannot depend
on any residual-branch parameter: scrambling them all changes nothing.
Strength then moves the output smoothly away from that anchor.
"""

import numpy as np

import styletune as st
from styletune.network import randomize_residual_params

rng = np.random.default_rng(0)
arch = st.ArchitectureConfig.test_scale()
weights = st.init_weights(arch, seed=7)
x = st.Tensor(rng.uniform(0.05, 0.95, size=(1, 3, 32, 32)))

base = st.forward(x, weights, alpha=0.0)
print(f"forward at alpha=0: output shape {base.shape}, range "
      f"({float(base.data.min()):.4f}, {float(base.data.max()):.4f})")

for trial in range(3):
    scrambled = randomize_residual_params(weights, rng)
    diff = float(np.max(np.abs(st.forward(x, scrambled, 0.0).data - base.data)))
    print(f"  residual params scrambled (trial {trial}): max |difference| = {diff:.2e}")

print("\nmoving alpha away from zero wakes the branches up:")
prev = base.data
for alpha in (0.1, 0.5, 1.0, 3.0):
    out = st.forward(x, weights, alpha).data
    print(f"  alpha = {alpha:4.1f}: max |output - output@0| = {np.max(np.abs(out - base.data)):.4f}")

delta = 1e-6
lip = np.max(np.abs(st.forward(x, weights, 1.0 + 1e-3).data - st.forward(x, weights, 1.0).data)) / 1e-3
step = np.max(np.abs(st.forward(x, weights, 1.0 + delta).data - st.forward(x, weights, 1.0).data))
print(f"\nsmoothness spot check at alpha=1: |f(a+1e-6) - f(a)| = {step:.2e} "
      f"<= L*delta = {lip * delta:.2e}")
