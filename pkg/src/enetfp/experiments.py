"""Seeded batch experiments: consistency under a ``lam_n`` schedule, the
two-feature instability contrast and the balancing-principle choice.

Every experiment splits into independent cells keyed by integers. Each
cell draws from its own counter-based stream ``(root seed, kind, ...key)``,
so results do not depend on how cells are scheduled across workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import stats

from .datagen import GeneratorSpec, NoiseModel, collinear_design, generate_dataset, make_rng
from .dictionary import Dictionary, effective_kappa
from .errors import ConfigError
from .operators import assemble_empirical, predict
from .oracle import OracleProblem, approximation_constant, enet_representation, exact_solve
from .prox import Coefficients
from .selection import (BoundInputs, LambdaGrid, PathConfig, balancing_select,
                        default_lam0, regularization_path)
from .serialization import (coefficients_from_json, coefficients_to_json, config_hash,
                            dictionary_from_config, dumps, encode_id, rows_to_csv)
from .solver import SolverConfig, iterations_needed, solve

KINDS = ("consistency", "instability", "adaptive")
_STREAM = {"consistency": 1, "holdout": 2, "instability": 3, "adaptive": 4}

_HAAR4 = {"type": "haar", "max_level": 4, "s": 1.0, "a": 0.0}
_BETA_STAR = [[[0, 0], 1.0], [[0, 1], 0.5], [[1, 0], 1.0], [[2, 1], -1.0]]

_KIND_DEFAULTS = {
    "consistency": dict(n_schedule=(100, 400, 1600, 6400), noise={"kind": "gaussian", "scale": 0.5},
                        eps_values=(1.0,)),
    "instability": dict(n_schedule=(50,), noise={"kind": "gaussian", "scale": 0.1},
                        eps_values=(1e-6, 1.0), lam=0.1),
    "adaptive": dict(n_schedule=(1600,), noise={"kind": "gaussian", "scale": 0.5},
                     eps_values=(1.0,), seeds=tuple(range(30))),
}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    seed: int = 0
    seeds: tuple = tuple(range(20))
    dictionary: dict = field(default_factory=lambda: dict(_HAAR4))
    beta_star: list = field(default_factory=lambda: [list(x) for x in _BETA_STAR])
    noise: dict = field(default_factory=lambda: {"kind": "gaussian", "scale": 0.1})
    n_schedule: tuple = (100,)
    eps_values: tuple = (1.0,)
    lambda_exponent: float = 1.0 / 3.0
    lambda_scale: float = 1.0
    lam: float | None = None
    theta_step: float = 0.01
    theta_count: int = 10
    include_center: bool = True
    signal: float = 1.0
    kappa_minus: float = 0.0
    eta: float = 1e-8
    max_iter: int = 200_000
    grid_count: int = 10
    lam0: float | None = None
    delta: float = 3.0
    representation_points: int = 4096
    holdout_factor: int = 10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "n_schedule", tuple(int(n) for n in self.n_schedule))
        object.__setattr__(self, "eps_values", tuple(float(e) for e in self.eps_values))
        if not self.seeds or len(set(self.seeds)) != len(self.seeds) or min(self.seeds) < 0:
            raise ConfigError("seeds must be distinct non-negative integers")
        if not self.n_schedule or min(self.n_schedule) < 1:
            raise ConfigError("n_schedule needs positive sample sizes")
        if not self.eps_values or min(self.eps_values) <= 0:
            raise ConfigError("eps values must be positive")
        if self.kind == "consistency" and not 0.0 < self.lambda_exponent < 0.5:
            raise ConfigError("consistency runs need lambda_exponent in (0, 1/2)")
        if self.kind == "instability":
            if self.lam is None or not self.lam > 0:
                raise ConfigError("instability demo needs lam > 0")
            top = math.pi / 4 + self.theta_count * self.theta_step
            if self.theta_count < 1 or not self.theta_step > 0 or top >= math.pi / 2:
                raise ConfigError("theta sweep must stay inside (0, pi/2)")
        NoiseModel(**self.noise)

    @classmethod
    def default(cls, kind: str, **overrides) -> "ExperimentSpec":
        if kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")
        return cls(kind=kind, **{**_KIND_DEFAULTS[kind], **overrides})

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        if "kind" not in d:
            raise ConfigError("experiment config needs 'kind'")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown experiment fields: {sorted(unknown)}")
        rest = {k: v for k, v in d.items() if k != "kind"}
        return cls.default(d["kind"], **rest)

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("seeds", "n_schedule", "eps_values"):
            out[k] = list(out[k])
        return out

    @property
    def noise_model(self) -> NoiseModel:
        return NoiseModel(**self.noise)

    def thetas(self) -> list[float]:
        ks = [k for k in range(-self.theta_count, self.theta_count + 1)
              if k != 0 or self.include_center]
        return [math.pi / 4 + k * self.theta_step for k in ks]


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    cells: list
    summary: dict
    provenance: dict
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "config": self.config, "cells": self.cells,
                "summary": self.summary, "provenance": self.provenance, "flags": self.flags}

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def csv_rows(self) -> list[dict]:
        rows = []
        for c in self.cells:
            rows.append({k: (";".join(map(str, v)) if isinstance(v, list) else v)
                         for k, v in c.items()})
        return rows

    def to_csv(self) -> str:
        return rows_to_csv(self.csv_rows())


def worker_count(cap: int | None = None) -> int:
    """Workers for cell execution, from ``ENET_THREADS`` (default 1)."""
    raw = os.environ.get("ENET_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"ENET_THREADS must be an integer, got {raw!r}") from None
    if k < 1:
        raise ConfigError("ENET_THREADS must be at least 1")
    return min(k, cap) if cap else k


def run_cells(func, tasks: list, workers: int | None = None) -> list:
    """Apply ``func`` to every task; output order follows ``tasks``."""
    workers = worker_count(len(tasks)) if workers is None else min(workers, max(len(tasks), 1))
    if workers <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _quantiles(values) -> dict:
    v = np.asarray(values, dtype=float)
    q25, med, q75 = np.percentile(v, [25, 50, 75])
    return {"median": float(med), "q25": float(q25), "q75": float(q75), "iqr": float(q75 - q25)}


def _ids(beta: Coefficients) -> list:
    return sorted((encode_id(g) for g in beta), key=repr)


def _representation(spec: ExperimentSpec, dic: Dictionary, beta_star: Coefficients, eps: float):
    # deterministic midpoint grid stands in for the design law
    N = spec.representation_points
    X = (np.arange(N) + 0.5) / N
    return enet_representation(dic, X, beta_star, eps)


def _solver_path_config(spec: ExperimentSpec, dic: Dictionary, eps: float) -> PathConfig:
    return PathConfig(eps=eps, kappa=None, kappa_minus=spec.kappa_minus,
                      eta=spec.eta, max_iter=spec.max_iter)


# consistency -----------------------------------------------------------------

def _consistency_cell(task):
    spec, dic, beta_star, dagger, eps, n, seed = task
    gen = GeneratorSpec(dic, beta_star, n, spec.noise_model, seed=spec.seed)
    data = generate_dataset(gen, key=(_STREAM["consistency"], n, seed))
    lam = spec.lambda_scale * n ** (-spec.lambda_exponent)
    pt = regularization_path(dic, data, [lam], _solver_path_config(spec, dic, eps))[0]
    beta = pt.result.beta
    rng = make_rng(spec.seed, _STREAM["holdout"], n, seed)
    Xh = rng.uniform(0.0, 1.0, size=(spec.holdout_factor * n, dic.input_dim))
    diff = predict(dic, beta, Xh) - predict(dic, dagger, Xh)
    return {
        "eps": eps, "n": n, "seed": seed, "lam": lam,
        "error": (beta - dagger).norm(),
        "prediction_error": float(np.mean(np.sum(diff ** 2, axis=1))),
        "support": _ids(beta), "support_size": len(beta),
        "active_set_size": pt.result.active_set_size,
        "iterations": pt.result.iterations, "kkt_residual": pt.result.kkt_residual,
        "converged": pt.result.converged,
    }


def run_consistency(spec: ExperimentSpec, workers: int | None = None) -> ExperimentReport:
    """Fit at ``lam_n = c n^-r`` for every ``n`` and seed; record the distance
    to the elastic-net representation and a holdout prediction error."""
    if spec.kind != "consistency":
        raise ConfigError("run_consistency needs a consistency spec")
    dic = dictionary_from_config(spec.dictionary)
    beta_star = coefficients_from_json(spec.beta_star)
    tasks, reps = [], {}
    for eps in spec.eps_values:
        rep = _representation(spec, dic, beta_star, eps)
        reps[eps] = rep
        for n in spec.n_schedule:
            for seed in spec.seeds:
                tasks.append((spec, dic, beta_star, rep.beta, eps, n, seed))
    cells = run_cells(_consistency_cell, tasks, workers)
    cells.sort(key=lambda c: (c["eps"], c["n"], c["seed"]))

    summary, flags = {"by_eps": []}, []
    for eps in spec.eps_values:
        rows = []
        for n in spec.n_schedule:
            sel = [c for c in cells if c["eps"] == eps and c["n"] == n]
            rows.append({"n": n, "lam": sel[0]["lam"],
                         "error": _quantiles([c["error"] for c in sel]),
                         "prediction_error": _quantiles([c["prediction_error"] for c in sel])})
        medians = [r["error"]["median"] for r in rows]
        rho = (float(stats.spearmanr(np.log(spec.n_schedule), medians).statistic)
               if len(rows) > 1 else float("nan"))
        summary["by_eps"].append({
            "eps": eps, "rows": rows, "spearman_log_n_vs_median_error": rho,
            "strictly_decreasing": all(b < a for a, b in zip(medians, medians[1:])),
            "beta_dagger": coefficients_to_json(reps[eps].beta),
            "beta_dagger_tol": reps[eps].achieved_tol,
        })
    if not all(c["converged"] for c in cells):
        flags.append("some fits did not certify convergence")
    return _report(spec, cells, summary, flags, {
        "beta_dagger": "exact solves at lam 2^-k on a noiseless midpoint grid of "
                       f"{spec.representation_points} points",
        "prediction_error": f"holdout of size {spec.holdout_factor} n",
    })


# instability -----------------------------------------------------------------

def _two_feature_fit(eps, lam, data, dic, spec):
    kappa = effective_kappa(dic, data.inputs)
    ops = assemble_empirical(dic, data, [0, 1])
    cfg = SolverConfig(eps=eps, lam=lam, kappa=kappa, kappa_minus=0.0,
                       eta=spec.eta, max_iter=spec.max_iter)
    need = iterations_needed(cfg, float(np.linalg.norm(ops.moment)))
    if need <= spec.max_iter:
        res = solve(ops, cfg)
        return res.beta, "fixed-point", res.converged
    # the contraction is too weak for the budget; use the exact active-set solve
    return exact_solve(OracleProblem.from_operators(ops, eps, lam)), "exact", True


def _instability_cell(task):
    spec, eps, theta, seed = task
    n = spec.n_schedule[0]
    data, dic = collinear_design(n, theta, spec.noise_model, seed=spec.seed,
                                 signal=spec.signal, key=(_STREAM["instability"], seed))
    beta, method, ok = _two_feature_fit(eps, spec.lam, data, dic, spec)
    b1, b2 = beta.get(0), beta.get(1)
    pattern = {(True, True): "both", (True, False): "first",
               (False, True): "second", (False, False): "none"}[(b1 != 0, b2 != 0)]
    return {"eps": eps, "theta": theta, "seed": seed, "beta_1": b1, "beta_2": b2,
            "support": pattern, "method": method, "converged": ok}


def run_instability_demo(spec: ExperimentSpec, workers: int | None = None) -> ExperimentReport:
    """Sweep ``theta`` around ``pi/4`` on the collinear two-feature design.

    Per seed and ``eps`` the summary lists the angles where both coefficients
    are nonzero (excluding ``pi/4`` itself) and the jump statistic
    ``Delta = |beta(pi/4 + h) - beta(pi/4 - h)|`` with ``h = theta_step``.
    """
    if spec.kind != "instability":
        raise ConfigError("run_instability_demo needs an instability spec")
    thetas = spec.thetas()
    tasks = [(spec, eps, th, seed) for eps in spec.eps_values for th in thetas
             for seed in spec.seeds]
    cells = run_cells(_instability_cell, tasks, workers)
    cells.sort(key=lambda c: (c["eps"], c["seed"], c["theta"]))

    center, h = math.pi / 4, spec.theta_step
    per_seed = []
    for seed in spec.seeds:
        entry = {"seed": seed, "window": {}, "delta": {}}
        for eps in spec.eps_values:
            sel = {c["theta"]: c for c in cells if c["seed"] == seed and c["eps"] == eps}
            entry["window"][repr(eps)] = [th for th, c in sorted(sel.items())
                                          if c["support"] == "both" and th != center]
            up, down = sel[center + h], sel[center - h]
            entry["delta"][repr(eps)] = math.hypot(up["beta_1"] - down["beta_1"],
                                                   up["beta_2"] - down["beta_2"])
        per_seed.append(entry)
    lo, hi = min(spec.eps_values), max(spec.eps_values)
    summary = {"h": h, "per_seed": per_seed, "by_eps": []}
    for eps in spec.eps_values:
        summary["by_eps"].append({
            "eps": eps,
            "window_seeds": sum(bool(e["window"][repr(eps)]) for e in per_seed),
            "delta": _quantiles([e["delta"][repr(eps)] for e in per_seed]),
        })
    if lo != hi:
        ratios = [e["delta"][repr(lo)] / e["delta"][repr(hi)] if e["delta"][repr(hi)] > 0
                  else math.inf for e in per_seed]
        summary["contrast"] = {
            "near_lasso_eps": lo, "elastic_eps": hi,
            "ratios": ratios,
            "fraction_ratio_at_least_5": sum(r >= 5 for r in ratios) / len(ratios),
        }
    return _report(spec, cells, summary, [], {
        "near_lasso": "eps = 1e-6 stands in for eps = 0",
        "solver": "fixed-point iteration when its a-priori count fits max_iter, "
                  "otherwise the exact active-set solve",
    })


# adaptive --------------------------------------------------------------------

def _adaptive_cell(task):
    spec, dic, beta_star, dagger, A, eps, n, seed = task
    noise = spec.noise_model
    gen = GeneratorSpec(dic, beta_star, n, noise, seed=spec.seed)
    data = generate_dataset(gen, key=(_STREAM["adaptive"], n, seed))
    lam0 = spec.lam0 if spec.lam0 is not None else default_lam0(A, eps, n)
    grid = LambdaGrid(lam0, spec.grid_count)
    pcfg = _solver_path_config(spec, dic, eps)
    path = regularization_path(dic, data, grid, pcfg)
    sigma, L = noise.sigma_L
    kappa = effective_kappa(dic, data.inputs)
    inputs = BoundInputs(kappa=kappa, sigma=sigma, L=L, delta=spec.delta, n=n, eps=eps,
                         kappa_minus=spec.kappa_minus, A=A)
    rep = balancing_select(path, inputs, grid)
    errors = [(pt.result.beta - dagger).norm() for pt in path]
    best = int(np.argmin(errors))
    chosen_err = errors[rep.chosen_index]
    return {
        "eps": eps, "n": n, "seed": seed, "lam0": lam0,
        "chosen_index": rep.chosen_index, "chosen_lambda": rep.chosen_lambda,
        "chosen_error": chosen_err, "min_error": errors[best], "min_index": best,
        "ratio": chosen_err / errors[best] if errors[best] > 0 else math.inf,
        "C": rep.C, "errors": errors, "differences": rep.differences,
        "thresholds": rep.thresholds, "support_sizes": rep.support_sizes,
        "at_grid_top": rep.chosen_index == spec.grid_count - 1,
        "converged": all(not pt.failed for pt in path),
    }


def run_adaptive(spec: ExperimentSpec, workers: int | None = None) -> ExperimentReport:
    """Balancing-principle choice on a doubling grid versus the best grid point."""
    if spec.kind != "adaptive":
        raise ConfigError("run_adaptive needs an adaptive spec")
    dic = dictionary_from_config(spec.dictionary)
    beta_star = coefficients_from_json(spec.beta_star)
    tasks, consts = [], []
    for eps in spec.eps_values:
        rep = _representation(spec, dic, beta_star, eps)
        A = approximation_constant(rep.beta, eps, dic.weight)
        consts.append({"eps": eps, "A": A, "beta_dagger": coefficients_to_json(rep.beta)})
        for n in spec.n_schedule:
            for seed in spec.seeds:
                tasks.append((spec, dic, beta_star, rep.beta, A, eps, n, seed))
    cells = run_cells(_adaptive_cell, tasks, workers)
    cells.sort(key=lambda c: (c["eps"], c["n"], c["seed"]))

    summary, flags = {"constants": consts, "by_n": []}, []
    for eps in spec.eps_values:
        for n in spec.n_schedule:
            sel = [c for c in cells if c["eps"] == eps and c["n"] == n]
            top = sum(c["at_grid_top"] for c in sel)
            summary["by_n"].append({
                "eps": eps, "n": n,
                "fraction_ratio_at_most_10": sum(c["ratio"] <= 10 for c in sel) / len(sel),
                "ratio": _quantiles([c["ratio"] for c in sel]),
                "chosen_lambda": _quantiles([c["chosen_lambda"] for c in sel]),
                "grid_top_count": top,
            })
            if top:
                flags.append(f"eps={eps}, n={n}: chosen lam at grid top in {top} of "
                             f"{len(sel)} seeds; the grid may not bracket the balance point")
    if not all(c["converged"] for c in cells):
        flags.append("some path points did not certify convergence")
    return _report(spec, cells, summary, flags, {
        "C": "C_{kappa,sigma,L} sqrt(delta) (1 + A) with A from the representation oracle",
    })


def _report(spec, cells, summary, flags, notes) -> ExperimentReport:
    cfg = spec.to_dict()
    return ExperimentReport(
        kind=spec.kind, config=cfg, cells=cells, summary=summary, flags=flags,
        provenance={"config_hash": config_hash(cfg), "root_seed": spec.seed,
                    "seeds": list(spec.seeds), "notes": notes})


RUNNERS = {"consistency": run_consistency, "instability": run_instability_demo,
           "adaptive": run_adaptive}


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> ExperimentReport:
    return RUNNERS[spec.kind](spec, workers)
