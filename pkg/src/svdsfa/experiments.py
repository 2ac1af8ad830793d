"""Parameter sweeps behind the experiment tables.

A *cell* is one (m, sigma) combination: generate a series, embed it, fit the
preprocessing and accumulate the expanded moments once, then train whichever
methods are requested on the shared moments.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .driving import (
    EmbeddingSpec,
    LogisticConfig,
    align,
    constraint_report,
    driving_force,
    embed,
    logistic_series,
)
from .sfa import (
    GEN_EIG,
    SVD_SFA,
    SfaModel,
    TrainingMoments,
    _method_name,
    accumulate_training,
    apply_model,
    expansion_dim,
    preprocessor_from_moments,
    train_gen_eig,
    train_svd_sfa,
)
from .spectra import DEFAULT_EPSILON, UNIT_ROUNDOFF, MomentAccumulator, numerical_rank

log = logging.getLogger(__name__)

DEFAULT_M = (2, 4, 8, 10, 12, 20, 30)
DEFAULT_SIGMAS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)
DEFAULT_EPSILONS = (1e-6, 1e-7, 1e-9, 1e-12)


def derive_seed(seed: int, m: int, sigma_index: int) -> int:
    """Per-cell noise seed, independent of sweep order."""
    state = np.random.SeedSequence([int(seed), int(m), int(sigma_index)]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


@dataclass(frozen=True)
class ExperimentPlan:
    q: float = 1.2
    length: int = 6000
    burn_in: int = 1000
    w0: float = 0.6
    seed: int = 0
    tau: int = 1
    m_list: tuple = DEFAULT_M
    sigma_list: tuple = DEFAULT_SIGMAS
    epsilon_list: tuple = DEFAULT_EPSILONS
    methods: tuple = (GEN_EIG, SVD_SFA)
    epsilon: float = DEFAULT_EPSILON
    epsilon_m: int = 12
    output_dir: str = "."
    jobs: int = 1
    rank_epsilon: float | None = DEFAULT_EPSILON

    def __post_init__(self):
        if any(m < 2 for m in self.m_list):
            raise ValueError("all embedding dimensions must be >= 2")
        if any(not s >= 0 for s in self.sigma_list):
            raise ValueError("noise amplitudes must be >= 0")
        if any(not 0 < e < 1 for e in (*self.epsilon_list, self.epsilon)):
            raise ValueError("cutoffs must lie in (0, 1)")
        if not self.methods:
            raise ValueError("at least one method is required")
        object.__setattr__(self, "methods", tuple(_method_name(x) for x in self.methods))
        # validates q, length, w0, burn_in
        LogisticConfig(self.q, self.length, self.w0, self.burn_in)

    def config(self, sigma: float = 0.0, seed: int | None = None) -> LogisticConfig:
        return LogisticConfig(self.q, self.length, self.w0, self.burn_in, sigma,
                              self.seed if seed is None else seed)


@dataclass
class Prepared:
    """Embedded training data with its preprocessing and expanded moments."""

    embedded: np.ndarray
    t: np.ndarray
    moments: TrainingMoments
    preprocessor: object

    def train(self, method: str, epsilon: float = DEFAULT_EPSILON) -> SfaModel:
        solve = train_svd_sfa if _method_name(method) == SVD_SFA else train_gen_eig
        mo = self.moments
        return solve(mo.v0, mo.b, mo.c_prime, epsilon, preprocessor=self.preprocessor)


def prepare(series, m: int, tau: int = 1, chunk_size: int | None = None,
            floor: float = UNIT_ROUNDOFF) -> Prepared:
    """Embed a scalar series and accumulate the training moments."""
    emb = embed(series, EmbeddingSpec(m, tau))
    s = emb.values
    chunks = [s] if chunk_size is None else [s[i:i + chunk_size] for i in range(0, len(s), chunk_size)]
    raw = MomentAccumulator(m)
    for c in chunks:
        raw.update(c)
    raw = raw.finalize()
    pre = preprocessor_from_moments(raw.mean, raw.b, "sphere", m, floor)
    return Prepared(s, emb.t, accumulate_training(chunks, pre), pre)


@dataclass
class RunResult:
    model: SfaModel
    y: np.ndarray
    t: np.ndarray
    gamma: np.ndarray
    report: object
    alignment: object
    corr: float


def evaluate(prepared: Prepared, model: SfaModel, k: int | None = None) -> RunResult:
    """Apply ``model`` to its training data and score ``y_1`` against the force."""
    k = min(model.n_components, 5) if k is None else k
    y = apply_model(model, prepared.embedded, k)
    gamma = driving_force(prepared.t)
    report = constraint_report(y, gamma)
    with np.errstate(all="ignore"):
        corr = float(np.corrcoef(gamma, y[:, 0])[0, 1]) if np.std(y[:, 0]) > 0 else float("nan")
    return RunResult(model, y, prepared.t, gamma, report, align(gamma, y[:, 0]), corr)


def _cell(args):
    plan, m, sigma_index, sigma, want_svd = args
    out = {"m": m, "sigma": sigma, "M": expansion_dim(m)}
    try:
        series = logistic_series(plan.config(sigma, derive_seed(plan.seed, m, sigma_index)))
        prep = prepare(series, m, plan.tau)
        out["rank"] = numerical_rank(prep.moments.b, plan.rank_epsilon)
    except Exception as exc:  # recorded per cell, the sweep goes on
        log.warning("cell m=%s sigma=%s failed: %s", m, sigma, exc)
        out["error"] = f"ERR:{exc}"
        return out
    for method in plan.methods:
        if method == SVD_SFA and not want_svd:
            continue
        key = "G" if method == GEN_EIG else "S"
        try:
            res = evaluate(prep, prep.train(method, plan.epsilon), k=1)
            out[key] = {
                "N": res.model.n_components,
                "mean": float(res.report.mean[0]),
                "var": float(res.report.variance[0]),
                "eta": float(res.report.eta[0]),
                "corr": res.corr,
                "unstable": res.model.unstable,
            }
        except Exception as exc:
            log.warning("cell m=%s sigma=%s %s failed: %s", m, sigma, method, exc)
            out[key] = f"ERR:{exc}"
    return out


def _epsilon_cell(args):
    plan, eps = args
    try:
        prep = prepare(logistic_series(plan.config(0.0)), plan.epsilon_m, plan.tau)
        res = evaluate(prep, prep.train(SVD_SFA, eps), k=1)
        return {"epsilon": eps, "P": res.model.n_components, "mse": res.alignment.mse,
                "corr": res.corr, "eta": float(res.report.eta[0])}
    except Exception as exc:
        return {"epsilon": eps, "error": f"ERR:{exc}"}


def _map(fn, tasks, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _num(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".6g")


def _field(cell, key, sub):
    if "error" in cell:
        return cell["error"]
    val = cell.get(key)
    if val is None:
        return ""
    if isinstance(val, str):
        return val
    return val[sub]


def run_tables(plan: ExperimentPlan) -> dict[str, list[list[str]]]:
    """Compute all tables; returns rows (header first) keyed by file name."""
    tasks = [(plan, m, i, s, s == 0.0)
             for m in plan.m_list for i, s in enumerate(plan.sigma_list)]
    cells = {(c["m"], c["sigma"]): c for c in _map(_cell, tasks, plan.jobs)}

    sig_head = [_num(s) for s in plan.sigma_list]
    table1 = [["m", "N_G", "N_S", "mean_y1_G", "mean_y1_S", "var_y1_G", "var_y1_S",
               "eta_G", "eta_S", "corr_G", "corr_S", "unstable_G"]]
    for m in plan.m_list:
        c = cells.get((m, 0.0)) or _cell((plan, m, 0, 0.0, True))
        row = [str(m)]
        for col in ("N", "mean", "var", "eta", "corr"):
            for key in ("G", "S"):
                row.append(_num(_field(c, key, col)))
        row.append(_num(_field(c, "G", "unstable")))
        table1.append(row)

    table2 = [["m", *sig_head, "M"]]
    table3 = [["m", *sig_head]]
    for m in plan.m_list:
        ranks, variances = [], []
        for s in plan.sigma_list:
            c = cells[(m, s)]
            ranks.append(c.get("error") or _num(c["rank"]))
            variances.append(_num(_field(c, "G", "var")) if GEN_EIG in plan.methods else "")
        table2.append([str(m), *ranks, str(expansion_dim(m))])
        table3.append([str(m), *variances])

    eps_rows = _map(_epsilon_cell, [(plan, e) for e in plan.epsilon_list], plan.jobs)
    base = next((r for r in eps_rows if r.get("epsilon") == plan.epsilon and "mse" in r), None)
    if base is None:
        base = _epsilon_cell((plan, plan.epsilon))
    eps_table = [["epsilon", "P", "mse", "rel_change_mse", "corr", "eta"]]
    for r in eps_rows:
        if "error" in r:
            eps_table.append([_num(r["epsilon"]), r["error"], "", "", "", ""])
            continue
        rel = (r["mse"] / base["mse"] - 1.0) if "mse" in base else float("nan")
        eps_table.append([_num(r["epsilon"]), _num(r["P"]), _num(r["mse"]), _num(rel),
                          _num(r["corr"]), _num(r["eta"])])

    return {"table1.csv": table1, "table2.csv": table2, "table3.csv": table3,
            "epsilon.csv": eps_table}


def write_tables(plan: ExperimentPlan) -> list[Path]:
    out_dir = Path(plan.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in run_tables(plan).items():
        path = out_dir / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
        written.append(path)
    return written


__all__ = [
    "ExperimentPlan",
    "Prepared",
    "RunResult",
    "derive_seed",
    "evaluate",
    "prepare",
    "run_tables",
    "write_tables",
]
