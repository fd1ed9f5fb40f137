"""Empirical Gram matrix and moment vector over a candidate feature set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dictionary import Dictionary, HaarDictionary
from .errors import ConfigError, DataError
from .prox import Coefficients


@dataclass(frozen=True)
class Dataset:
    """``n`` input/output pairs; inputs ``(n, d)``, outputs ``(n, m)``."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        Y = np.asarray(self.outputs, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2 or Y.ndim != 2:
            raise DataError("inputs and outputs must be 1-d or 2-d arrays")
        if X.shape[0] != Y.shape[0]:
            raise DataError(f"{X.shape[0]} inputs but {Y.shape[0]} outputs")
        if X.shape[0] < 1:
            raise DataError("dataset is empty")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DataError("dataset contains non-finite values")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", Y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def output_dim(self) -> int:
        return self.outputs.shape[1]

    @property
    def y_norm(self) -> float:
        """Empirical norm ``sqrt((1/n) sum_i |Y_i|^2)``."""
        return float(np.sqrt(np.mean(np.sum(self.outputs ** 2, axis=1))))


@dataclass(frozen=True)
class EmpiricalOperators:
    index_set: tuple
    gram: np.ndarray
    moment: np.ndarray
    weights: np.ndarray
    trace: float
    y_norm: float
    n: int
    feature_norms: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.index_set)

    def spectral_bounds(self) -> tuple[float, float]:
        """Smallest and largest eigenvalue of the Gram matrix."""
        if self.size == 0:
            return 0.0, 0.0
        ev = np.linalg.eigvalsh(self.gram)
        return float(ev[0]), float(ev[-1])

    def kappa_minus(self) -> float:
        """Exact lower spectral bound, shaved by a rounding guard and clipped at 0."""
        lo, hi = self.spectral_bounds()
        return max(0.0, lo - 1e-12 * max(hi, 1.0))


def _check_outputs(F: np.ndarray, data: Dataset):
    if F.shape[2] != data.output_dim:
        raise DataError(f"features have output dimension {F.shape[2]}, "
                        f"outputs have {data.output_dim}")


def assemble_empirical(dictionary: Dictionary, data: Dataset,
                       index_set=None) -> EmpiricalOperators:
    """Gram matrix ``(1/n) sum_i <phi_g(X_i), phi_h(X_i)>`` and moment vector
    ``(1/n) sum_i <phi_g(X_i), Y_i>`` restricted to ``index_set``."""
    ids = tuple(dictionary.enumerate() if index_set is None else index_set)
    F = dictionary.design(data.inputs, ids)
    _check_outputs(F, data)
    n, p, m = F.shape
    # stack output components as extra samples: (p, n*m)
    A = np.ascontiguousarray(F.transpose(1, 0, 2).reshape(p, n * m))
    gram = (A @ A.T) / n
    gram = 0.5 * (gram + gram.T)
    moment = (A @ data.outputs.reshape(n * m)) / n
    gram.setflags(write=False)
    moment.setflags(write=False)
    weights = dictionary.weights(ids)
    weights.setflags(write=False)
    diag = np.clip(np.diag(gram), 0.0, None)
    return EmpiricalOperators(
        index_set=ids, gram=gram, moment=moment, weights=weights,
        trace=float(np.sum(diag)), y_norm=data.y_norm, n=n,
        feature_norms=np.sqrt(diag))


def sample_norms(dictionary: Dictionary, data: Dataset, ids) -> np.ndarray:
    """Empirical norms ``|phi_g|_n`` of the given features."""
    F = dictionary.design(data.inputs, list(ids))
    return np.sqrt(np.mean(np.sum(F ** 2, axis=2), axis=0))


def predict(dictionary: Dictionary, beta: Coefficients, x) -> np.ndarray:
    """``f_beta(x) = sum_g beta_g phi_g(x)``.

    A single point gives an ``m``-vector; a batch of points gives ``(n, m)``.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 0 or (X.ndim == 1 and dictionary.input_dim > 1
                             and X.shape[0] == dictionary.input_dim)
    ids = list(beta)
    pts = dictionary._as_points(X)
    if not ids:
        out = np.zeros((pts.shape[0], dictionary.output_dim))
    else:
        F = dictionary.design(pts, ids)
        coef = np.array([beta[g] for g in ids])
        out = np.einsum("npm,p->nm", F, coef)
    return out[0] if single else out


def kernel_eval(dictionary: Dictionary, x, t, max_level: int | None = None) -> np.ndarray:
    """Reproducing kernel ``K(x, t) = sum_g phi_g(x) phi_g(t)^T`` (``m x m``)."""
    if isinstance(dictionary, HaarDictionary):
        return _haar_kernel(dictionary, x, t, max_level)
    if not dictionary.finite:
        raise ConfigError("kernel of an unbounded dictionary needs max_level")
    else:
        ids = dictionary.enumerate()
    m = dictionary.output_dim
    if not ids:
        return np.zeros((m, m))
    Fx = dictionary.design(np.asarray(x, dtype=float).reshape(1, -1), ids)[0]
    Ft = dictionary.design(np.asarray(t, dtype=float).reshape(1, -1), ids)[0]
    return Fx.T @ Ft


def _haar_kernel(dictionary: HaarDictionary, x, t, max_level) -> np.ndarray:
    # one wavelet per level is nonzero at a point, so sum level by level
    J = dictionary.spec.max_level if max_level is None else max_level
    if dictionary.spec.max_level is not None:
        J = min(J, dictionary.spec.max_level)
    if J is None:
        raise ConfigError("kernel of an unbounded dictionary needs max_level")
    pts = dictionary.design(np.array([[float(x)], [float(t)]]), [(0, 0), (0, 1)])[:, :, 0]
    total = float(pts[0] @ pts[1])
    for j in range(1, J + 1):
        c, sign = dictionary.cells(np.array([float(x), float(t)]), j)
        if c[0] == c[1]:
            total += dictionary.level_scale(j) ** 2 * sign[0] * sign[1]
    return np.array([[total]])
