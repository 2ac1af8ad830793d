"""
Rank deficiency of the expanded covariance
==========================================

A time-delay embedding of a deterministic map lies close to a low-dimensional
manifold, so the quadratic expansion of that embedding has far fewer
independent directions than its nominal size M. This script prints the
spectrum of B for a few embedding dimensions and compares the cutoff rank
with the machine-precision rank.
"""

#%%
import numpy as np

from svdsfa import LogisticConfig, expansion_dim, logistic_series, numerical_rank
from svdsfa.experiments import prepare

series = logistic_series(LogisticConfig(q=1.2, length=6000))

#%%
# Rank with a relative cutoff of 1e-7 versus the usual machine-precision test.
print(f"{'m':>3} {'M':>4} {'rank eps':>9} {'rank mach':>10}  smallest kept / largest")
for m in (2, 4, 8, 12, 20, 30):
    b = prepare(series, m).moments.b
    lam = np.sort(np.linalg.eigvalsh(b))[::-1]
    r = numerical_rank(b, 1e-7)
    print(f"{m:>3} {expansion_dim(m):>4} {r:>9} {numerical_rank(b, None):>10}  {lam[r - 1] / lam[0]:.2e}")

#%%
# The normalized spectrum at m = 12 falls off a cliff; everything past the
# knee is roundoff and is what the cutoff removes.
b = prepare(series, 12).moments.b
lam = np.sort(np.abs(np.linalg.eigvalsh(b)))[::-1]
lam = lam / lam[0]
for k in range(0, 40, 4):
    print(f"lambda_{k + 1:<3d} {lam[k]:.3e}")
