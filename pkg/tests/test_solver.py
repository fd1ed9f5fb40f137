import numpy as np
import pytest
from conftest import random_table_problem
from hypothesis import given, settings
from hypothesis import strategies as st

from enetfp.dictionary import HaarDictionary, TabulatedDictionary, WaveletSpec, effective_kappa
from enetfp.errors import ConfigError, DataError, UnboundedActiveSetError
from enetfp.operators import Dataset, EmpiricalOperators, assemble_empirical
from enetfp.oracle import OracleProblem, exact_solve, exact_solve_dense, ridge_solve
from enetfp.prox import Coefficients
from enetfp.solver import (SolverConfig, banach_bound, compute_active_set, fixed_point_step,
                           iterations_needed, iterates, kkt_residual, lipschitz_constant, solve)


def make_ops(gram, moment, weights, y_norm=1.0):
    gram = np.atleast_2d(np.asarray(gram, float))
    moment = np.asarray(moment, float)
    return EmpiricalOperators(index_set=tuple(range(len(moment))), gram=gram, moment=moment,
                              weights=np.asarray(weights, float), trace=float(np.trace(gram)),
                              y_norm=y_norm, n=1, feature_norms=np.sqrt(np.diag(gram)))


def solved_instance(seed, eps=0.5, lam=0.1):
    rng = np.random.default_rng(seed)
    dic, data = random_table_problem(rng, p=int(rng.integers(2, 15)))
    ops = assemble_empirical(dic, data, compute_active_set(dic, data, lam, eps))
    cfg = SolverConfig(eps=eps, lam=lam, kappa=effective_kappa(dic, data.inputs), eta=1e-12)
    return dic, data, ops, cfg


# active set -------------------------------------------------------------------

def test_active_set_threshold_example():
    # |Y|_n = 1, |phi|_n = 1, eps = lam = 1: admissible weights are <= 4
    table = np.array([[1.0, 1.0, 1.0], [-1.0, -1.0, 1.0]])
    dic = TabulatedDictionary(table, weights=[5.0, 4.0, 4.0 + 1e-9])
    data = Dataset([0.0, 1.0], [1.0, -1.0])
    assert compute_active_set(dic, data, lam=1.0, eps=1.0) == [1]


def test_active_set_drops_vanishing_features_and_keeps_zero_weights():
    dic = TabulatedDictionary(np.array([[0.0, 1.0, 2.0], [0.0, 1.0, 0.0]]), weights=[0.0, 0.0, 1e6])
    data = Dataset([0.0, 1.0], [1.0, 1.0])
    assert compute_active_set(dic, data, lam=1.0, eps=1.0) == [1]


def test_active_set_grows_as_lam_decreases():
    rng = np.random.default_rng(8)
    dic = HaarDictionary(WaveletSpec(max_level=6, a=1.0))
    x = rng.uniform(0, 1, 300)
    data = Dataset(x, np.sin(7 * x) + 0.1 * rng.standard_normal(300))
    sizes = [len(compute_active_set(dic, data, lam, 0.5)) for lam in (4.0, 1.0, 0.25, 0.05, 0.01)]
    assert sizes == sorted(sizes)
    assert sizes[0] < sizes[-1]


def test_unbounded_active_set_requires_growing_weights():
    data = Dataset([0.2, 0.7], [1.0, 0.0])
    with pytest.raises(UnboundedActiveSetError):
        compute_active_set(HaarDictionary(WaveletSpec(max_level=None, a=0.0)), data, 0.1, 1.0)
    ids = compute_active_set(HaarDictionary(WaveletSpec(max_level=None, a=1.0)), data, 0.1, 1.0)
    assert ids and max(j for j, _ in ids) <= 6


def test_unbounded_active_set_matches_truncated_rule():
    rng = np.random.default_rng(9)
    x = rng.uniform(0, 1, 100)
    data = Dataset(x, x ** 2)
    lam, eps = 0.05, 0.5
    gen = compute_active_set(HaarDictionary(WaveletSpec(max_level=None, a=1.0)), data, lam, eps)
    deep = compute_active_set(HaarDictionary(WaveletSpec(max_level=15, a=1.0)), data, lam, eps)
    assert gen == deep


# contraction constants ---------------------------------------------------------

@pytest.mark.parametrize("args, q", [((1.0, 0.0, 1.0, 0.5), 0.5), ((2.0, 2.0, 0.0, 1.0), 0.0),
                                     ((1.0, 0.0, 0.0, 1.0), 1.0)])
def test_lipschitz_examples(args, q):
    assert lipschitz_constant(*args) == q


def test_lipschitz_rejects_kappa_below_kappa_minus():
    with pytest.raises(ConfigError):
        lipschitz_constant(1.0, 2.0, 1.0, 1.0)


def test_config_requires_contraction():
    with pytest.raises(ConfigError):
        SolverConfig(eps=0.0, lam=1.0, kappa=1.0)
    cfg = SolverConfig(eps=0.0, lam=1.0, kappa=1.0, kappa_minus=0.5)
    assert cfg.q < 1


def test_iterations_needed_meets_eta():
    cfg = SolverConfig(eps=0.3, lam=0.2, kappa=2.0, eta=1e-9)
    ell = iterations_needed(cfg, 5.0)
    assert banach_bound(cfg, ell, 5.0) <= 1e-9 < banach_bound(cfg, ell - 1, 5.0)


# fixed-point map ---------------------------------------------------------------

def test_fixed_point_step_example():
    ops = make_ops([[1.0]], [2.0], [1.0])
    cfg = SolverConfig(eps=1.0, lam=1.0, kappa=1.0)
    assert fixed_point_step(ops, Coefficients(), cfg)[0] == pytest.approx(1.0, abs=1e-15)


def test_exact_solution_is_fixed_point():
    for seed in range(10):
        _, _, ops, cfg = solved_instance(seed)
        ref = exact_solve(OracleProblem.from_operators(ops, cfg.eps, cfg.lam))
        step = fixed_point_step(ops, ref, cfg)
        assert (step - ref).norm() <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_map_is_q_contraction(seed):
    _, _, ops, cfg = solved_instance(seed % 97)
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, ops.size)) * 3
    ta = fixed_point_step(ops, Coefficients.from_dense(ops.index_set, a), cfg)
    tb = fixed_point_step(ops, Coefficients.from_dense(ops.index_set, b), cfg)
    assert (ta - tb).norm() <= cfg.q * np.linalg.norm(a - b) * (1 + 1e-12) + 1e-14


def test_step_rejects_foreign_support():
    ops = make_ops([[1.0]], [2.0], [1.0])
    cfg = SolverConfig(eps=1.0, lam=1.0, kappa=1.0)
    with pytest.raises(DataError):
        fixed_point_step(ops, Coefficients({"zzz": 1.0}), cfg)


# solve ---------------------------------------------------------------------------

def test_ridge_matches_linear_solve():
    rng = np.random.default_rng(10)
    dic, data = random_table_problem(rng, n=80, p=10, zero_weights=True)
    ops = assemble_empirical(dic, data)
    cfg = SolverConfig(eps=0.2, lam=0.3, kappa=effective_kappa(dic, data.inputs), eta=1e-13)
    res = solve(ops, cfg)
    want = ridge_solve(OracleProblem.from_operators(ops, 0.2, 0.3))
    assert (res.beta - want).norm() <= 1e-8 * want.norm()
    assert kkt_residual(ops, want, cfg) <= 1e-10


def test_orthonormal_closed_form():
    ops = make_ops(np.eye(3), [2.0, -0.2, -1.0], [1.0, 1.0, 0.5])
    cfg = SolverConfig(eps=1.0, lam=1.0, kappa=3.0, eta=1e-13)
    got = solve(ops, cfg).beta.to_dense(ops.index_set)
    np.testing.assert_allclose(got, [1.5 / 2, 0.0, -0.75 / 2], atol=1e-12)


def test_dead_zone_gives_zero():
    ops = make_ops([[1.0, 0.2], [0.2, 1.0]], [0.4, -0.5], [1.0, 1.0])
    cfg = SolverConfig(eps=1.0, lam=1.0, kappa=1.2)
    res = solve(ops, cfg)
    assert len(res.beta) == 0 and res.converged
    assert kkt_residual(ops, Coefficients(), cfg) == 0.0


def test_solution_within_eta_of_exact_minimizer():
    for seed in range(20):
        _, _, ops, cfg = solved_instance(seed, eps=(0.1, 1.0)[seed % 2])
        res = solve(ops, cfg)
        ref = exact_solve(OracleProblem.from_operators(ops, cfg.eps, cfg.lam))
        assert res.converged
        assert (res.beta - ref).norm() <= cfg.eta + 1e-13


def test_support_within_active_set_on_full_family():
    rng = np.random.default_rng(11)
    for _ in range(10):
        dic, data = random_table_problem(rng)
        lam, eps = 0.05, 0.2
        active = set(compute_active_set(dic, data, lam, eps))
        ops = assemble_empirical(dic, data)
        cfg = SolverConfig(eps=eps, lam=lam, kappa=effective_kappa(dic, data.inputs), eta=1e-10)
        assert solve(ops, cfg).beta.support <= active


def test_warm_start_from_ridge_reaches_same_point():
    _, _, ops, cfg = solved_instance(12)
    cold = solve(ops, cfg)
    start = ridge_solve(OracleProblem(ops.gram, ops.moment, cfg.eps, cfg.lam,
                                      index_set=ops.index_set))
    warm = solve(ops, cfg, start=start)
    assert (cold.beta - warm.beta).norm() <= 2 * cfg.eta


def test_kkt_decreases_with_eta():
    _, _, ops, base = solved_instance(13, eps=0.1, lam=0.05)
    residuals = []
    for eta in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10):
        cfg = SolverConfig(eps=base.eps, lam=base.lam, kappa=base.kappa, eta=eta)
        residuals.append(solve(ops, cfg).kkt_residual)
    assert all(b <= a + 1e-15 for a, b in zip(residuals, residuals[1:]))
    assert residuals[-1] < 1e-9


def test_kkt_grows_linearly_under_perturbation():
    _, _, ops, cfg = solved_instance(14)
    ref = exact_solve_dense(OracleProblem.from_operators(ops, cfg.eps, cfg.lam))
    g = int(np.argmax(np.abs(ref)))
    el = cfg.eps * cfg.lam
    for delta in (1e-3, 1e-4, 1e-5):
        v = ref.copy()
        v[g] += delta
        r = kkt_residual(ops, Coefficients.from_dense(ops.index_set, v), cfg)
        lo = (ops.gram[g, g] + el) * delta
        hi = (np.abs(ops.gram[:, g]).max() + el) * delta
        assert lo - 1e-10 <= r <= hi + 1e-10


def test_max_iter_marks_not_converged():
    _, _, ops, cfg = solved_instance(15, eps=0.01, lam=0.01)
    tight = SolverConfig(eps=cfg.eps, lam=cfg.lam, kappa=cfg.kappa, eta=1e-12, max_iter=3)
    res = solve(ops, tight)
    assert not res.converged and res.stop_reason == "max_iter" and res.iterations == 3


def test_kappa_minus_with_eps_zero():
    rng = np.random.default_rng(16)
    F = rng.standard_normal((60, 4))
    dic = TabulatedDictionary(F)
    data = Dataset(np.arange(60.0), F @ [1.0, 0.0, -2.0, 0.5] + 0.05 * rng.standard_normal(60))
    ops = assemble_empirical(dic, data)
    cfg = SolverConfig(eps=0.0, lam=0.01, kappa=effective_kappa(dic, data.inputs),
                       kappa_minus=ops.kappa_minus(), eta=1e-11)
    res = solve(ops, cfg)
    ref = exact_solve(OracleProblem.from_operators(ops, 0.0, 0.01))
    assert res.converged and (res.beta - ref).norm() <= 1e-10


def test_iterates_start_at_zero():
    _, _, ops, cfg = solved_instance(17)
    gen = iterates(ops, cfg)
    assert not np.any(next(gen))
    assert np.allclose(next(gen), fixed_point_step(ops, Coefficients(), cfg).to_dense(ops.index_set))
