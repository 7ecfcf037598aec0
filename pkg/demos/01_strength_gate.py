"""How the residual gate responds to the strength input.

gamma(alpha, beta) = 2|alpha*beta| / (1 + |alpha*beta|) turns the
unbounded strength alpha into a gate in [0, 2) for each residual block.
This script walks the curve and checks its headline properties.
"""

import numpy as np

from styletune import gamma

print("gate values for beta = 1 (the initialization):")
for alpha in (0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0):
    print(f"  alpha = {alpha:6.1f}  ->  gamma = {gamma(alpha, 1.0):.6f}")

print("\nalpha = 1 applies the unscaled branch at init:", gamma(1.0, 1.0) == 1.0)
print("alpha = 10 approaches but never reaches 2:", gamma(10.0, 1.0))

rng = np.random.default_rng(0)
pairs = rng.uniform(-100, 100, size=(100_000, 2))
vals = np.array([gamma(a, b) for a, b in pairs])
print(f"\n100k random (alpha, beta) pairs: min {vals.min():.4f}, max {vals.max():.6f} (< 2)")

print("\nnegative alpha behaves like |alpha| (the gate uses |alpha*beta|):")
for alpha in (0.5, 3.0):
    print(f"  gamma({-alpha}, 0.7) == gamma({alpha}, 0.7):", gamma(-alpha, 0.7) == gamma(alpha, 0.7))

print("\nbeta rescales the alpha axis: larger |beta| saturates the gate sooner")
for beta in (0.25, 1.0, 4.0):
    row = ", ".join(f"{gamma(a, beta):.3f}" for a in (0.5, 1.0, 2.0, 5.0))
    print(f"  beta = {beta:4.2f}: gamma(0.5/1/2/5) = {row}")
