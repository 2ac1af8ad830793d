"""
Choice of the eigenvalue cutoff
===============================

The cutoff decides how many directions of B survive sphering. Lowering it
admits more (noisier) directions; the slowest output barely changes.
"""

#%%
from svdsfa import LogisticConfig, logistic_series
from svdsfa.experiments import evaluate, prepare

prep = prepare(logistic_series(LogisticConfig()), 12)

#%%
base = None
print(f"{'eps':>7} {'P':>4} {'mse':>10} {'rel change':>11} {'|corr|':>8} {'eta':>8}")
for eps in (1e-6, 1e-7, 1e-9, 1e-12):
    run = evaluate(prep, prep.train("svd", eps), k=1)
    if eps == 1e-7:
        base = run.alignment.mse
    rel = "" if base is None else f"{run.alignment.mse / base - 1:+.3f}"
    print(f"{eps:>7.0e} {run.model.n_components:>4} {run.alignment.mse:>10.5f} {rel:>11} "
          f"{abs(run.corr):>8.4f} {run.report.eta[0]:>8.3f}")
