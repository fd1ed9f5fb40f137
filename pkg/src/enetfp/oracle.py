"""Reference solvers, independent of the fixed-point iteration.

* ``ridge_solve``: direct Cholesky solve when all weights vanish.
* ``exact_solve``: feature-sign active-set search; terminates at the exact
  minimizer (up to rounding) in finitely many linear solves.
* ``bruteforce_solve``: exhaustive lattice search for ``p <= 3``.
* ``enet_representation``: minimal-penalty representation of a noiseless
  regression function, reached along a halving sequence of ``lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .dictionary import Dictionary
from .errors import ConfigError, OracleError
from .operators import Dataset, EmpiricalOperators, assemble_empirical, predict
from .prox import Coefficients, PenaltyConfig, penalty_value


@dataclass(frozen=True)
class OracleProblem:
    """Dense problem ``min b^T G b - 2 m^T b + lam sum(w |b| + eps b^2)``."""

    gram: np.ndarray
    moment: np.ndarray
    eps: float
    lam: float
    weights: np.ndarray | None = None
    index_set: tuple | None = None
    y_norm: float | None = None

    def __post_init__(self):
        G = np.asarray(self.gram, dtype=float)
        b = np.asarray(self.moment, dtype=float)
        p = b.shape[0]
        if G.shape != (p, p):
            raise ConfigError(f"gram shape {G.shape} does not match moment length {p}")
        if not np.allclose(G, G.T, rtol=0, atol=1e-12 * max(1.0, np.abs(G).max(initial=0))):
            raise ConfigError("gram must be symmetric")
        w = np.zeros(p) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (p,) or np.any(w < 0):
            raise ConfigError("weights must be a non-negative vector of length p")
        if self.eps < 0 or not self.lam > 0:
            raise ConfigError("need eps >= 0 and lam > 0")
        ids = tuple(range(p)) if self.index_set is None else tuple(self.index_set)
        object.__setattr__(self, "gram", 0.5 * (G + G.T))
        object.__setattr__(self, "moment", b)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "index_set", ids)

    @classmethod
    def from_operators(cls, ops: EmpiricalOperators, eps: float, lam: float):
        return cls(ops.gram, ops.moment, eps, lam, ops.weights, ops.index_set, ops.y_norm)

    @property
    def p(self) -> int:
        return self.moment.shape[0]

    @property
    def hessian(self) -> np.ndarray:
        """Half the Hessian of the smooth part: ``G + eps lam I``."""
        return self.gram + self.eps * self.lam * np.eye(self.p)

    def coefficients(self, v) -> Coefficients:
        return Coefficients.from_dense(self.index_set, v)

    def objective(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.gram @ v - 2.0 * self.moment @ v
                     + self.lam * np.sum(self.weights * np.abs(v) + self.eps * v * v))


def ridge_solve(problem: OracleProblem) -> Coefficients:
    """Solve ``(G + eps lam I) beta = m``; all weights must be zero."""
    if np.any(problem.weights != 0):
        raise ConfigError("ridge_solve needs all weights equal to zero")
    H = problem.hessian
    try:
        c = linalg.cho_factor(H, lower=True)
    except linalg.LinAlgError:
        raise ConfigError("ridge system is singular; use eps > 0") from None
    return problem.coefficients(linalg.cho_solve(c, problem.moment))


def exact_solve(problem: OracleProblem, max_steps: int | None = None) -> Coefficients:
    return problem.coefficients(exact_solve_dense(problem, max_steps))


def exact_solve_dense(problem: OracleProblem, max_steps: int | None = None) -> np.ndarray:
    """Feature-sign search (Lee, Battle, Raina and Ng, 2007) on the elastic-net
    objective. The smooth part is strictly convex when ``eps lam > 0`` or
    ``G`` is positive definite, so every sign-restricted subproblem is a
    linear solve."""
    H = problem.hessian
    b = problem.moment
    lw = problem.lam * problem.weights
    p = problem.p
    x = np.zeros(p)
    theta = np.zeros(p)
    active = np.zeros(p, dtype=bool)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)), float(lw.max(initial=0.0)))
    tol = 1e-11 * scale
    max_steps = 50 * (p + 1) if max_steps is None else max_steps
    F = problem.objective

    for _ in range(max_steps):
        grad = 2.0 * (H @ x - b)
        viol = np.where(x == 0.0, np.abs(grad) - lw, -np.inf)
        i = int(np.argmax(viol)) if p else 0
        if p and viol[i] > tol:
            theta[i] = -np.sign(grad[i])
            active[i] = True
        elif _nonzero_optimal(grad, x, lw, tol):
            return x
        for _ in range(max_steps):
            idx = np.flatnonzero(active)
            rhs = b[idx] - 0.5 * lw[idx] * theta[idx]
            try:
                sol = linalg.solve(H[np.ix_(idx, idx)], rhs, assume_a="pos")
            except (linalg.LinAlgError, ValueError):
                sol = np.linalg.lstsq(H[np.ix_(idx, idx)], rhs, rcond=None)[0]
            x = _line_search(F, x, idx, sol)
            active = x != 0.0
            theta = np.sign(x)
            grad = 2.0 * (H @ x - b)
            if _nonzero_optimal(grad, x, lw, tol):
                break
        else:
            raise OracleError("feature-sign inner loop did not terminate")
    raise OracleError("feature-sign search did not terminate", last_iterates=(x,))


def _nonzero_optimal(grad, x, lw, tol) -> bool:
    nz = x != 0.0
    return bool(np.all(np.abs(grad[nz] + lw[nz] * np.sign(x[nz])) <= tol))


def _line_search(F, x, idx, sol):
    """Best of the target point and every sign-change point on the segment."""
    cur = x[idx]
    candidates = [(1.0, None)]
    for pos, (c, s) in enumerate(zip(cur, sol)):
        if c != 0.0 and np.sign(c) != np.sign(s):
            t = c / (c - s)
            if 0.0 < t < 1.0:
                candidates.append((t, pos))
    best_x, best_f = None, math.inf
    for t, pos in sorted(candidates, key=lambda c: c[0]):
        trial = x.copy()
        seg = cur + t * (sol - cur)
        if pos is not None:
            seg[pos] = 0.0
        trial[idx] = seg
        f = F(trial)
        if f < best_f:
            best_x, best_f = trial, f
    return best_x


def coercivity_box(problem: OracleProblem) -> float:
    """Per-coordinate bound on the minimizer: ``eps lam beta_g^2 <= |Y|_n^2``.

    Without ``y_norm`` the weaker ``|beta| <= 2 |m| / (eps lam)`` is used.
    """
    el = problem.eps * problem.lam
    if el <= 0:
        raise ConfigError("coercivity box needs eps lam > 0")
    if problem.y_norm is not None:
        return problem.y_norm / math.sqrt(el)
    return 2.0 * float(np.linalg.norm(problem.moment)) / el


def bruteforce_solve(problem: OracleProblem, box: float | None = None,
                     step: float = 1e-3) -> Coefficients:
    """Lattice minimizer over ``{k step : |k step| <= box}^p`` (``p <= 3``).

    Ties go to the lexicographically smallest lattice point.
    """
    v, _ = bruteforce_solve_dense(problem, box, step)
    return problem.coefficients(v)


def bruteforce_solve_dense(problem: OracleProblem, box: float | None = None,
                           step: float = 1e-3):
    p = problem.p
    if p > 3:
        raise ConfigError(f"lattice search supports p <= 3, got {p}")
    need = coercivity_box(problem)
    box = need if box is None else box
    if box < need:
        raise ConfigError(f"box {box} does not cover the minimizer; need >= {need}")
    K = int(math.ceil(box / step))
    axis = np.arange(-K, K + 1) * step
    G, b, lw = problem.hessian, problem.moment, problem.lam * problem.weights
    # separable part of the objective for each coordinate
    sep = [G[i, i] * axis ** 2 - 2.0 * b[i] * axis + lw[i] * np.abs(axis) for i in range(p)]
    if p == 0:
        return np.zeros(0), 0.0
    if p == 1:
        k = int(np.argmin(sep[0]))
        return np.array([axis[k]]), float(sep[0][k])

    def plane(fixed=None):
        # objective over (second-to-last, last) coordinates, given the first
        i, j = p - 2, p - 1
        Z = sep[i][:, None] + sep[j][None, :] + 2.0 * G[i, j] * np.outer(axis, axis)
        if fixed is not None:
            v0 = fixed
            Z = Z + sep[0][v0] + 2.0 * axis[v0] * (G[0, i] * axis[:, None] + G[0, j] * axis[None, :])
        return Z

    best_f, best = math.inf, None
    firsts = [None] if p == 2 else range(len(axis))
    for f0 in firsts:
        Z = plane(f0)
        k = int(np.argmin(Z))
        if Z.flat[k] < best_f:
            best_f = float(Z.flat[k])
            a, c = divmod(k, len(axis))
            best = ([] if f0 is None else [axis[f0]]) + [axis[a], axis[c]]
    return np.array(best), best_f


@dataclass(frozen=True)
class RepresentationResult:
    beta: Coefficients
    lam: float
    achieved_tol: float
    steps: int
    constraint_residual: float
    history: list = field(default_factory=list, repr=False)


def enet_representation(dictionary: Dictionary, inputs, beta_star: Coefficients,
                        eps: float, lam_init: float = 1.0, tol: float = 1e-7,
                        max_steps: int = 60, index_set=None) -> RepresentationResult:
    """Approximate the minimal-penalty coefficients reproducing ``f_beta_star``
    on ``inputs`` by exact penalized solves at ``lam_init 2^-k``, stopping
    once consecutive solutions differ by at most ``tol``."""
    if not eps > 0:
        raise ConfigError("enet_representation needs eps > 0")
    X = np.asarray(inputs, dtype=float)
    f_star = predict(dictionary, beta_star, X)
    data = Dataset(X, f_star)
    ops = assemble_empirical(dictionary, data, index_set)
    lam = lam_init
    prev = exact_solve_dense(OracleProblem.from_operators(ops, eps, lam))
    history = [(lam, prev)]
    for k in range(1, max_steps + 1):
        lam = lam / 2.0
        cur = exact_solve_dense(OracleProblem.from_operators(ops, eps, lam))
        history.append((lam, cur))
        diff = float(np.linalg.norm(cur - prev))
        # two zero solutions only mean lam is still above the dead zone
        if diff <= tol and (np.any(cur) or not np.any(f_star)):
            beta = Coefficients.from_dense(ops.index_set, cur)
            resid = predict(dictionary, beta, X) - f_star
            return RepresentationResult(
                beta=beta, lam=lam, achieved_tol=diff, steps=k,
                constraint_residual=float(np.sqrt(np.mean(np.sum(resid ** 2, axis=1)))),
                history=history)
        prev = cur
    raise OracleError(f"representation did not settle to {tol} within {max_steps} halvings",
                      last_iterates=(history[-2][1], history[-1][1]))


def population_minimizer(dictionary: Dictionary, beta_star: Coefficients, eps: float,
                         lam: float, inputs, index_set=None) -> Coefficients:
    """Stand-in for the distribution-level minimizer: exact solve on a large
    noiseless sample ``inputs`` drawn from the design law."""
    X = np.asarray(inputs, dtype=float)
    data = Dataset(X, predict(dictionary, beta_star, X))
    ops = assemble_empirical(dictionary, data, index_set)
    return exact_solve(OracleProblem.from_operators(ops, eps, lam))


def approximation_constant(beta_dagger: Coefficients, eps: float, weights) -> float:
    """Uniform approximation-error bound ``A = |b|_2 + p_eps(b) / sqrt(eps)``."""
    if not eps > 0:
        raise ConfigError("A needs eps > 0")
    return beta_dagger.norm() + penalty_value(beta_dagger, PenaltyConfig(eps, weights)) / math.sqrt(eps)
