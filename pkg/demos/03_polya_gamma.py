"""The Polya-Gamma sampler against its closed-form moments.

    python3 demos/03_polya_gamma.py
"""

import numpy as np

from npglm import make_rng, polya_gamma_moments, sample_polya_gamma

rng = make_rng(0)
print("   c     mean(exact)  mean(sample)   var(exact)  var(sample)")
for c in (0.0, 0.5, 2.0, 10.0, 50.0):
    w = sample_polya_gamma(np.full(200_000, c), rng)
    m, v = polya_gamma_moments(1, c)
    print(f"{c:5.1f}   {m:.6f}     {w.mean():.6f}     {v:.3e}   {w.var():.3e}")

# Laplace transform: E exp(-t w) = cosh(c/2) / cosh(sqrt(c^2/4 + t/2)).
c, t = 1.5, 2.0
w = sample_polya_gamma(np.full(200_000, c), rng)
exact = np.cosh(c / 2) / np.cosh(np.sqrt(c * c / 4 + t / 2))
print(f"\nLaplace transform at t={t}: exact {exact:.5f}, Monte Carlo {np.exp(-t * w).mean():.5f}")
