"""Soft-thresholding and the weighted elastic-net penalty.

Thresholds follow the half-threshold convention used throughout the
package: ``S_t(x)`` shrinks ``x`` by ``t / 2`` and zeroes ``|x| <= t / 2``.
With ``t = lam * w`` this matches the optimality conditions of the
objective ``(1/n) sum |Y - f|^2 + lam * sum(w |b| + eps b^2)``.
"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterable, Mapping
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from .errors import ConfigError

FeatureId = Hashable
Weights = Union[Mapping, Callable[[Any], float]]


class Coefficients(Mapping):
    """Finitely supported coefficient vector, a map ``FeatureId -> float``.

    Only nonzero entries are stored. Exact zeros are dropped on
    construction; tiny nonzero values are kept.
    """

    __slots__ = ("_data",)

    def __init__(self, entries: Mapping | Iterable[tuple[Any, float]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        self._data = {k: float(v) for k, v in items if v != 0.0}

    @classmethod
    def from_dense(cls, index_set, values) -> "Coefficients":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(index_set),):
            raise ValueError(
                f"expected {len(index_set)} values, got shape {values.shape}")
        return cls(zip(index_set, values.tolist()))

    def to_dense(self, index_set) -> np.ndarray:
        """Dense vector over ``index_set``; the support must be contained in it."""
        pos = {g: i for i, g in enumerate(index_set)}
        out = np.zeros(len(index_set))
        for g, v in self._data.items():
            try:
                out[pos[g]] = v
            except KeyError:
                raise KeyError(f"feature {g!r} is outside the index set") from None
        return out

    def project(self, index_set) -> "Coefficients":
        """Restriction to ``index_set`` (entries outside are dropped)."""
        keep = set(index_set)
        return Coefficients({g: v for g, v in self._data.items() if g in keep})

    @property
    def support(self) -> frozenset:
        return frozenset(self._data)

    def norm(self, ord=2) -> float:
        if not self._data:
            return 0.0
        return float(np.linalg.norm(np.fromiter(self._data.values(), float), ord))

    def __getitem__(self, key):
        return self._data[key]

    def get(self, key, default=0.0):
        return self._data.get(key, default)

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def __add__(self, other: "Coefficients") -> "Coefficients":
        out = dict(self._data)
        for g, v in other.items():
            out[g] = out.get(g, 0.0) + v
        return Coefficients(out)

    def __sub__(self, other: "Coefficients") -> "Coefficients":
        return self + (-1.0) * other

    def __mul__(self, a: float) -> "Coefficients":
        return Coefficients({g: a * v for g, v in self._data.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, Coefficients):
            return self._data == other._data
        return NotImplemented

    def __repr__(self):
        return f"Coefficients({self._data!r})"


def _weight_lookup(weights: Weights | float) -> Callable[[Any], float]:
    if isinstance(weights, Mapping):
        return lambda g: float(weights[g])
    if callable(weights):
        return lambda g: float(weights(g))
    w = float(weights)
    return lambda g: w


def soft_threshold_scalar(t: float, threshold: float) -> float:
    if threshold < 0:
        raise ConfigError(f"threshold must be non-negative, got {threshold}")
    half = threshold / 2.0
    if t > half:
        return t - half
    if t < -half:
        return t + half
    return 0.0


def soft_threshold_array(values: np.ndarray, thresholds) -> np.ndarray:
    """Componentwise soft-thresholding of a dense vector.

    ``thresholds`` holds the full thresholds ``lam * w``; the kink of each
    component sits at half its threshold.
    """
    half = 0.5 * np.asarray(thresholds, dtype=float)
    return np.where(values > half, values - half,
                    np.where(values < -half, values + half, 0.0))


def soft_threshold_vector(beta: Coefficients, lam: float,
                          weights: Weights | float) -> Coefficients:
    if lam <= 0:
        raise ConfigError(f"lam must be positive, got {lam}")
    w = _weight_lookup(weights)
    return Coefficients(
        {g: soft_threshold_scalar(v, lam * w(g)) for g, v in beta.items()})


@dataclass(frozen=True)
class PenaltyConfig:
    eps: float
    weights: Any = 1.0

    def __post_init__(self):
        if self.eps < 0:
            raise ConfigError(f"eps must be non-negative, got {self.eps}")


def penalty_value(beta: Coefficients, cfg: PenaltyConfig) -> float:
    """``sum_g (w_g |b_g| + eps b_g^2)``."""
    w = _weight_lookup(cfg.weights)
    return float(sum(w(g) * abs(v) + cfg.eps * v * v for g, v in beta.items()))
