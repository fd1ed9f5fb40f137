"""Contractive fixed-point iteration for the weighted elastic-net estimator.

The estimator minimizes

    (1/n) sum_i |Y_i - f_beta(X_i)|^2 + lam * sum_g (w_g |beta_g| + eps beta_g^2)

and is the unique fixed point of

    T beta = S_lam((tau I - G) beta + b) / (tau + eps lam),   tau = (kappa + kappa_minus) / 2,

where ``G`` and ``b`` are the empirical Gram matrix and moment vector. ``T``
is a contraction with constant ``q = (kappa - kappa_minus) / (kappa +
kappa_minus + 2 eps lam)`` whenever ``eps > 0`` or ``kappa_minus > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .dictionary import Dictionary, HaarDictionary
from .errors import ConfigError, DataError, UnboundedActiveSetError
from .operators import Dataset, EmpiricalOperators, sample_norms
from .prox import Coefficients, soft_threshold_array

# Deepest wavelet level an unbounded dictionary may be truncated to.
MAX_GENERATED_LEVEL = 48


@dataclass(frozen=True)
class SolverConfig:
    eps: float
    lam: float
    kappa: float
    kappa_minus: float = 0.0
    eta: float = 1e-8
    max_iter: int = 200_000
    m_bound: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"lam must be positive, got {self.lam}")
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa}")
        if self.eps < 0:
            raise ConfigError(f"eps must be non-negative, got {self.eps}")
        if self.kappa_minus < 0 or self.kappa_minus > self.kappa:
            raise ConfigError(
                f"need 0 <= kappa_minus <= kappa, got {self.kappa_minus}, {self.kappa}")
        if self.eps == 0 and self.kappa_minus == 0:
            raise ConfigError("eps = 0 with kappa_minus = 0 gives no contraction; "
                              "set eps > 0 or kappa_minus > 0")
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")

    @property
    def tau(self) -> float:
        return 0.5 * (self.kappa + self.kappa_minus)

    @property
    def q(self) -> float:
        return lipschitz_constant(self.kappa, self.kappa_minus, self.eps, self.lam)

    @property
    def certification_tol(self) -> float:
        return max(1e-8, 10.0 * self.eta * (self.kappa + self.eps * self.lam))


@dataclass(frozen=True)
class SolverResult:
    beta: Coefficients
    iterations: int
    a_priori_bound: float
    kkt_residual: float
    active_set_size: int
    converged: bool
    q: float
    stop_reason: str
    last_step: float


def lipschitz_constant(kappa: float, kappa_minus: float, eps: float, lam: float) -> float:
    if kappa <= 0:
        raise ConfigError(f"kappa must be positive, got {kappa}")
    if kappa < kappa_minus:
        raise ConfigError(f"kappa ({kappa}) is smaller than kappa_minus ({kappa_minus})")
    if kappa_minus < 0 or eps < 0 or lam <= 0:
        raise ConfigError("need kappa_minus >= 0, eps >= 0 and lam > 0")
    return (kappa - kappa_minus) / (kappa + kappa_minus + 2.0 * eps * lam)


def banach_bound(cfg: SolverConfig, iteration: int, moment_norm: float) -> float:
    """A-priori distance of the ``iteration``-th cold-start iterate from the
    minimizer: ``q^l |b| / (kappa_minus + eps lam)``."""
    return cfg.q ** iteration * moment_norm / (cfg.kappa_minus + cfg.eps * cfg.lam)


def iterations_needed(cfg: SolverConfig, moment_bound: float) -> int:
    """Smallest ``l`` whose a-priori bound is at most ``eta``, given ``|b| <= moment_bound``."""
    q = cfg.q
    target = moment_bound / ((cfg.kappa_minus + cfg.eps * cfg.lam) * cfg.eta)
    if target <= 1.0 or q == 0.0:
        return 0 if target <= 1.0 else 1
    return max(0, math.ceil(math.log(target) / -math.log(q)))


def compute_active_set(dictionary: Dictionary, data: Dataset, lam: float,
                       eps: float) -> list:
    """Features that can carry a nonzero coefficient at ``lam``.

    Keeps every ``g`` with ``|phi_g|_n != 0`` and
    ``w_g <= 2 |Y|_n (|phi_g|_n + sqrt(eps lam)) / lam``.
    """
    if not lam > 0:
        raise ConfigError(f"lam must be positive, got {lam}")
    if eps < 0:
        raise ConfigError(f"eps must be non-negative, got {eps}")
    M = data.y_norm
    root = math.sqrt(eps * lam)
    if dictionary.finite:
        candidates = dictionary.enumerate()
    else:
        candidates = _generated_candidates(dictionary, data, M, root, lam)
    if not candidates:
        return []
    norms = sample_norms(dictionary, data, candidates)
    w = dictionary.weights(candidates)
    limit = 2.0 * M * (norms + root) / lam
    keep = (norms != 0.0) & (w <= limit)
    return [g for g, k in zip(candidates, keep) if k]


def _generated_candidates(dictionary, data, M, root, lam):
    if not isinstance(dictionary, HaarDictionary):
        raise UnboundedActiveSetError("cannot bound the active set of this dictionary")
    a = dictionary.spec.a
    if a <= 0:
        raise UnboundedActiveSetError(
            "weights do not grow with the level (a <= 0) and there is no level cap")
    # |phi_g|_n <= sup |phi_g| <= 1 for every level since s > 1/2
    w_max = 2.0 * M * (1.0 + root) / lam
    if w_max < 1.0:
        return []
    top = int(math.floor(math.log2(w_max) / a))
    if top > MAX_GENERATED_LEVEL:
        raise UnboundedActiveSetError(
            f"active set reaches level {top}; raise the weight exponent or cap the level")
    x = data.inputs[:, 0]
    out = [(0, 0), (0, 1)]
    for j in range(1, top + 1):
        cells, _ = dictionary.cells(x, j)
        out.extend((j, int(k)) for k in np.unique(cells))
    return out


class _FixedPointMap:
    def __init__(self, ops: EmpiricalOperators, cfg: SolverConfig):
        tau = cfg.tau
        p = ops.size
        self.A = tau * np.eye(p) - ops.gram
        self.b = np.asarray(ops.moment)
        self.thresholds = cfg.lam * np.asarray(ops.weights)
        self.scale = 1.0 / (tau + cfg.eps * cfg.lam)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return soft_threshold_array(self.A @ v + self.b, self.thresholds) * self.scale


def _dense(ops: EmpiricalOperators, beta) -> np.ndarray:
    if beta is None:
        return np.zeros(ops.size)
    if isinstance(beta, Coefficients):
        try:
            return beta.to_dense(ops.index_set)
        except KeyError as exc:
            raise DataError(f"coefficients do not fit the operators: {exc}") from None
    v = np.asarray(beta, dtype=float)
    if v.shape != (ops.size,):
        raise DataError(f"expected a vector of length {ops.size}, got shape {v.shape}")
    return v.copy()


def fixed_point_step(ops: EmpiricalOperators, beta: Coefficients,
                     cfg: SolverConfig) -> Coefficients:
    v = _dense(ops, beta)
    return Coefficients.from_dense(ops.index_set, _FixedPointMap(ops, cfg)(v))


def iterates(ops: EmpiricalOperators, cfg: SolverConfig, start=None) -> Iterator[np.ndarray]:
    """Dense iterates ``beta^0, beta^1, ...`` (unbounded generator)."""
    T = _FixedPointMap(ops, cfg)
    v = _dense(ops, start)
    while True:
        yield v
        v = T(v)


def kkt_residual_dense(gram, moment, weights, eps: float, lam: float,
                       v: np.ndarray) -> float:
    if len(v) == 0:
        return 0.0
    r = moment - gram @ v - eps * lam * v
    half = 0.5 * lam * np.asarray(weights)
    nz = v != 0.0
    res = np.where(nz, np.abs(r - half * np.sign(v)),
                   np.maximum(0.0, np.abs(r) - half))
    return float(np.max(res))


def kkt_residual(ops: EmpiricalOperators, beta: Coefficients, cfg: SolverConfig) -> float:
    """Violation of the optimality conditions
    ``b_g - (G beta)_g - eps lam beta_g in (lam w_g / 2) sgn(beta_g)``,
    with ``sgn(0) = [-1, 1]``."""
    return kkt_residual_dense(ops.gram, ops.moment, ops.weights, cfg.eps, cfg.lam,
                              _dense(ops, beta))


def solve(ops: EmpiricalOperators, cfg: SolverConfig, start=None) -> SolverResult:
    """Iterate ``T`` from ``start`` (zero by default) until the a-priori
    bound or the a-posteriori bound ``q/(1-q) |beta^l - beta^(l-1)|``
    certifies an error of at most ``eta``."""
    T = _FixedPointMap(ops, cfg)
    v = _dense(ops, start)
    cold = not np.any(v)
    q = cfg.q
    ratio = q / (1.0 - q)
    if cold:
        M = cfg.m_bound if cfg.m_bound is not None else float(np.linalg.norm(ops.moment))
        lead = M / (cfg.kappa_minus + cfg.eps * cfg.lam)
    qpow = 1.0
    first_step = None
    step = math.inf
    bound = math.inf
    reason = "max_iter"
    it = 0
    while it < cfg.max_iter:
        new = T(v)
        it += 1
        step = float(np.linalg.norm(new - v))
        v = new
        qpow *= q
        if first_step is None:
            first_step = step
            if not cold:
                lead = first_step / (1.0 - q)
        bound = qpow * lead
        if bound <= cfg.eta:
            reason = "a-priori"
            break
        if step * ratio <= cfg.eta:
            reason = "a-posteriori"
            break
    if ops.size == 0:
        bound = 0.0
    kkt = kkt_residual_dense(ops.gram, ops.moment, ops.weights, cfg.eps, cfg.lam, v)
    converged = reason != "max_iter" and kkt <= cfg.certification_tol
    return SolverResult(
        beta=Coefficients.from_dense(ops.index_set, v), iterations=it,
        a_priori_bound=float(bound), kkt_residual=kkt, active_set_size=ops.size,
        converged=converged, q=q, stop_reason=reason, last_step=step)
