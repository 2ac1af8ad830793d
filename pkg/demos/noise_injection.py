"""
Noise injection
===============

Adding a little Gaussian noise to the raw series lifts the small eigenvalues
of B above roundoff. The rank returns to M and the generalized solver works
again, at the price of training on perturbed data.
"""

#%%
from svdsfa import LogisticConfig, expansion_dim, logistic_series, numerical_rank
from svdsfa.experiments import evaluate, prepare

#%%
m = 10
print(f"m = {m}, M = {expansion_dim(m)}")
print(f"{'sigma':>8} {'rank(B)':>8} {'GEN <y1^2>':>12} {'SVD |corr|':>11}")
for sigma in (0.0, 1e-10, 1e-8, 1e-6, 1e-4):
    series = logistic_series(LogisticConfig(noise_sigma=sigma, seed=1))
    prep = prepare(series, m)
    gen = evaluate(prep, prep.train("gen"), k=1)
    svd = evaluate(prep, prep.train("svd"), k=1)
    print(f"{sigma:>8.0e} {numerical_rank(prep.moments.b):>8} {gen.report.variance[0]:>12.6g} "
          f"{abs(svd.corr):>11.4f}")
