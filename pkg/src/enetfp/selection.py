"""Regularization paths on geometric grids, the balancing-principle choice of
``lam`` and calculators for the probabilistic error bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dictionary import Dictionary, effective_kappa
from .errors import ConfigError, MissingConstantError, SelectionError
from .operators import Dataset, assemble_empirical
from .prox import Coefficients
from .solver import SolverConfig, SolverResult, compute_active_set, solve


@dataclass(frozen=True)
class LambdaGrid:
    """``lam_i = lam0 * 2^i`` for ``i = 0 .. count - 1``."""

    lam0: float
    count: int

    def __post_init__(self):
        if not self.lam0 > 0:
            raise ConfigError(f"lam0 must be positive, got {self.lam0}")
        if self.count < 1:
            raise ConfigError(f"grid needs at least one point, got {self.count}")

    @property
    def values(self) -> np.ndarray:
        return self.lam0 * 2.0 ** np.arange(self.count)


def default_lam0(A: float, eps: float, n: int) -> float:
    """``1 / (A eps sqrt(n))``, the start that keeps the grid below the balance point."""
    if not (A > 0 and eps > 0 and n >= 1):
        raise ConfigError("default lam0 needs A > 0, eps > 0, n >= 1")
    return 1.0 / (A * eps * math.sqrt(n))


@dataclass(frozen=True)
class BoundInputs:
    kappa: float
    sigma: float
    L: float
    delta: float
    n: int
    eps: float
    kappa_minus: float = 0.0
    A: float | None = None
    C: float | None = None
    C_heuristic: bool = False

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")
        if self.sigma < 0 or self.L < 0:
            raise ConfigError("sigma and L must be non-negative")
        if not self.delta > 0 or self.n < 1:
            raise ConfigError("need delta > 0 and n >= 1")
        if self.eps < 0 or self.kappa_minus < 0:
            raise ConfigError("eps and kappa_minus must be non-negative")

    @property
    def c_kappa_sigma_L(self) -> float:
        return constant_kappa_sigma_L(self.kappa, self.sigma, self.L)

    def balancing_constant(self) -> tuple[float, str]:
        """``C`` of the balancing threshold and where it came from.

        Precedence: explicit ``C``; ``C_{kappa,sigma,L} sqrt(delta) (1 + A)``;
        the heuristic ``2 C_{kappa,sigma,L} sqrt(delta)`` if enabled.
        """
        if self.C is not None:
            return float(self.C), "override"
        if self.A is not None:
            return self.c_kappa_sigma_L * math.sqrt(self.delta) * (1.0 + self.A), "A"
        if self.C_heuristic:
            return 2.0 * self.c_kappa_sigma_L * math.sqrt(self.delta), "heuristic"
        raise MissingConstantError(
            "balancing constant unavailable: supply 'C' or 'A' (or enable 'C_heuristic')")


def constant_kappa_sigma_L(kappa: float, sigma: float, L: float) -> float:
    """``max(sqrt(2 kappa) (sigma + L), 3 kappa)``."""
    return max(math.sqrt(2.0 * kappa) * (sigma + L), 3.0 * kappa)


def _require_delta(inputs: BoundInputs):
    if inputs.delta > inputs.n:
        raise ConfigError(f"simplified bounds need delta <= n (delta={inputs.delta}, n={inputs.n})")


def noise_and_gram_bounds(inputs: BoundInputs, simplified: bool = True) -> tuple[float, float]:
    """High-probability bounds on ``|Phi_n^* W|_2`` and ``|Phi_n^* Phi_n - Phi_P^* Phi_P|_HS``.

    Simplified forms (valid for ``delta <= n``)::

        sqrt(2 kappa delta) (sigma + L) / sqrt(n),   3 kappa sqrt(delta) / sqrt(n)

    With ``simplified=False`` the sharper forms
    ``L sqrt(kappa) delta / n + sigma sqrt(kappa) sqrt(2 delta) / sqrt(n)`` and
    ``kappa delta / n + kappa sqrt(2 delta) / sqrt(n)`` are returned.
    Together they hold with probability at least ``1 - 4 exp(-delta)``.
    See :func:`deviation_bound_bounded_target` for the companion bound used
    when the regression function is only assumed bounded.
    """
    k, s, L, d, n = inputs.kappa, inputs.sigma, inputs.L, inputs.delta, inputs.n
    if simplified:
        _require_delta(inputs)
        return (math.sqrt(2.0 * k * d) * (s + L) / math.sqrt(n),
                3.0 * k * math.sqrt(d) / math.sqrt(n))
    rk = math.sqrt(k)
    return (L * rk * d / n + s * rk * math.sqrt(2.0 * d) / math.sqrt(n),
            k * d / n + k * math.sqrt(2.0 * d) / math.sqrt(n))


def deviation_bound_bounded_target(kappa: float, delta: float, n: int, lam: float,
                                   D: float, prediction_error: float) -> float:
    """``sqrt(kappa) delta D / (sqrt(lam) n) + sqrt(2 kappa delta) |f^lam - f*|_P / sqrt(n)``.

    Formula calculator only; ``D`` is the problem-dependent constant bounding
    ``sqrt(lam) sup |f^lam - f*|``.
    """
    if not (lam > 0 and n >= 1 and delta > 0):
        raise ConfigError("need lam > 0, n >= 1, delta > 0")
    return (math.sqrt(kappa) * delta * D / (math.sqrt(lam) * n)
            + math.sqrt(2.0 * kappa * delta) * prediction_error / math.sqrt(n))


def sample_error_bound(inputs: BoundInputs, lam: float, approx_error: float = 0.0) -> float:
    """``C_{kappa,sigma,L} sqrt(delta) / (sqrt(n) (kappa_minus + eps lam)) (1 + approx_error)``."""
    if inputs.eps == 0 and inputs.kappa_minus == 0:
        raise ConfigError("sample error bound needs eps > 0 or kappa_minus > 0")
    if approx_error < 0:
        raise ConfigError("approx_error must be non-negative")
    _require_delta(inputs)
    return (inputs.c_kappa_sigma_L * math.sqrt(inputs.delta)
            / (math.sqrt(inputs.n) * (inputs.kappa_minus + inputs.eps * lam))
            * (1.0 + approx_error))


def finite_dim_rate_bound(inputs: BoundInputs, N_star: int, w_star: float,
                          beta_inf: float, lam: float | None = None) -> float:
    """Error bound for a finite, linearly independent dictionary at ``lam = 1/sqrt(n)``::

        C sqrt(delta) / (sqrt(n) kappa_minus) (1 + D N* / sqrt(n)) + D N* / sqrt(n)

    with ``D = w* / (2 kappa_minus) + eps |beta_dagger|_inf``. Passing ``lam``
    replaces ``1 / sqrt(n)`` in the approximation terms by ``lam``.
    """
    if not inputs.kappa_minus > 0:
        raise ConfigError("finite-dimensional rate needs kappa_minus > 0")
    _require_delta(inputs)
    lam = 1.0 / math.sqrt(inputs.n) if lam is None else lam
    D = w_star / (2.0 * inputs.kappa_minus) + inputs.eps * beta_inf
    approx = D * N_star * lam
    return (inputs.c_kappa_sigma_L * math.sqrt(inputs.delta)
            / (math.sqrt(inputs.n) * inputs.kappa_minus) * (1.0 + approx) + approx)


def adaptive_error_bound(C: float, n: int, eps: float, lam_opt: float) -> float:
    """``20 C / (sqrt(n) eps lam_opt)``, the guarantee at the balanced ``lam``."""
    return 20.0 * C / (math.sqrt(n) * eps * lam_opt)


@dataclass(frozen=True)
class PathConfig:
    """Solver settings shared by every grid point. ``kappa=None`` uses the
    dictionary's bound (raised to cover the sample); ``kappa_minus="exact"``
    uses the smallest eigenvalue of each assembled Gram matrix."""

    eps: float
    kappa: float | None = None
    kappa_minus: float | str = 0.0
    eta: float = 1e-8
    max_iter: int = 200_000
    warm_start: bool = True

    def __post_init__(self):
        if isinstance(self.kappa_minus, str) and self.kappa_minus != "exact":
            raise ConfigError("kappa_minus must be a number or 'exact'")


@dataclass(frozen=True)
class PathPoint:
    lam: float
    active_set: tuple
    result: SolverResult

    @property
    def failed(self) -> bool:
        return not self.result.converged


def solver_config_for(ops, cfg: PathConfig, kappa: float, lam: float) -> SolverConfig:
    km = cfg.kappa_minus
    if km == "exact":
        km = min(ops.kappa_minus(), kappa)
    return SolverConfig(eps=cfg.eps, lam=float(lam), kappa=kappa, kappa_minus=float(km),
                        eta=cfg.eta, max_iter=cfg.max_iter)


def regularization_path(dictionary: Dictionary, data: Dataset, grid: LambdaGrid | Sequence[float],
                        cfg: PathConfig) -> list[PathPoint]:
    """One certified solve per grid value, each on its own active set.

    Grid points run in order; with ``warm_start`` each solve starts from the
    previous solution restricted to the new active set.
    """
    lams = grid.values if isinstance(grid, LambdaGrid) else np.asarray(grid, dtype=float)
    kappa = cfg.kappa if cfg.kappa is not None else effective_kappa(dictionary, data.inputs)
    out = []
    prev: Coefficients | None = None
    for lam in lams:
        ids = compute_active_set(dictionary, data, float(lam), cfg.eps)
        ops = assemble_empirical(dictionary, data, ids)
        scfg = solver_config_for(ops, cfg, kappa, lam)
        start = prev.project(ids) if (cfg.warm_start and prev is not None) else None
        res = solve(ops, scfg, start=start)
        out.append(PathPoint(lam=float(lam), active_set=tuple(ids), result=res))
        prev = res.beta
    return out


@dataclass
class SelectionReport:
    grid: list
    differences: list
    thresholds: list
    chosen_index: int
    chosen_lambda: float
    chosen_beta: Coefficients
    C: float
    C_source: str
    support_sizes: list
    active_set_sizes: list
    n: int
    eps: float
    flags: list = field(default_factory=list)

    def to_dict(self, id_encoder=lambda g: g) -> dict:
        return {
            "grid": list(map(float, self.grid)),
            "differences": list(map(float, self.differences)),
            "thresholds": list(map(float, self.thresholds)),
            "chosen_index": int(self.chosen_index),
            "chosen_lambda": float(self.chosen_lambda),
            "chosen_beta": [[id_encoder(g), float(v)] for g, v in self.chosen_beta.items()],
            "C": float(self.C),
            "C_source": self.C_source,
            "support_sizes": list(map(int, self.support_sizes)),
            "active_set_sizes": list(map(int, self.active_set_sizes)),
            "n": int(self.n),
            "eps": float(self.eps),
            "flags": list(self.flags),
        }


def balancing_differences(betas: Sequence[Coefficients]) -> list[float]:
    """``d_j = |beta_j - beta_(j-1)|_2`` with ``beta_(-1) = beta_0``."""
    out = []
    for j, b in enumerate(betas):
        prev = betas[j - 1] if j > 0 else betas[0]
        out.append((b - prev).norm())
    return out


def balancing_select(path: Sequence[PathPoint], inputs: BoundInputs,
                     grid: LambdaGrid | Sequence[float] | None = None) -> SelectionReport:
    """Largest ``lam_i`` such that ``d_j <= 4 C / (sqrt(n) eps lam_(j-1))``
    for every ``j <= i`` (with ``lam_(-1) = lam_0``)."""
    if not path:
        raise SelectionError("empty path")
    failed = [pt.lam for pt in path if pt.failed]
    if failed:
        raise SelectionError(f"path contains failed solves at lam = {failed}")
    if not inputs.eps > 0:
        raise ConfigError("balancing selection needs eps > 0")
    lams = [pt.lam for pt in path]
    if grid is not None:
        expected = grid.values if isinstance(grid, LambdaGrid) else np.asarray(grid, float)
        if len(expected) != len(lams) or not np.allclose(expected, lams, rtol=1e-12, atol=0):
            raise SelectionError("path does not match the grid")
    C, source = inputs.balancing_constant()
    betas = [pt.result.beta for pt in path]
    diffs = balancing_differences(betas)
    root_n = math.sqrt(inputs.n)
    thresholds = [4.0 * C / (root_n * inputs.eps * lams[max(j - 1, 0)])
                  for j in range(len(lams))]
    chosen = 0
    for i in range(len(lams)):
        if diffs[i] <= thresholds[i]:
            chosen = i
        else:
            break
    flags = ["lambda_minus_one_equals_lambda_0: d_0 compares the first solution with itself"]
    if len(lams) > 1 and chosen == len(lams) - 1:
        flags.append("chosen_at_grid_top: grid may not bracket the balance point")
    return SelectionReport(
        grid=lams, differences=diffs, thresholds=thresholds, chosen_index=chosen,
        chosen_lambda=lams[chosen], chosen_beta=betas[chosen], C=C, C_source=source,
        support_sizes=[len(b) for b in betas],
        active_set_sizes=[pt.result.active_set_size for pt in path],
        n=inputs.n, eps=inputs.eps, flags=flags)
