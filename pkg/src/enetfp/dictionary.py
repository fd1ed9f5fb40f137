"""Feature dictionaries: explicit families, sample-tabulated families and
rescaled Haar wavelets on [0, 1].

A dictionary enumerates feature ids, evaluates each feature at an input
point (returning an ``output_dim``-vector), carries a non-negative weight
per feature and a bound ``kappa`` on ``sum_g |phi_g(x)|^2``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, DomainError


class Dictionary(ABC):
    output_dim: int = 1
    input_dim: int = 1
    kappa: float | None = None

    #: False for generated families without a level cap.
    finite: bool = True

    @abstractmethod
    def enumerate(self) -> list:
        """Ordered list of feature ids."""

    @abstractmethod
    def _columns(self, X: np.ndarray, ids: Sequence) -> np.ndarray:
        """Feature values at ``X`` (shape ``(n, d)``) as an ``(n, p, m)`` array."""

    @abstractmethod
    def weight(self, gid) -> float:
        ...

    def __contains__(self, gid) -> bool:
        return gid in set(self.enumerate())

    def weights(self, ids: Sequence) -> np.ndarray:
        return np.array([self.weight(g) for g in ids], dtype=float)

    def _check_ids(self, ids):
        known = set(self.enumerate())
        for g in ids:
            if g not in known:
                raise KeyError(f"unknown feature id {g!r}")

    def _as_points(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 0:
            X = X.reshape(1, 1)
        elif X.ndim == 1:
            X = X.reshape(-1, 1) if self.input_dim == 1 else X.reshape(1, -1)
        if X.shape[1] != self.input_dim:
            raise DataError(
                f"inputs have dimension {X.shape[1]}, dictionary expects {self.input_dim}")
        return X

    def design(self, X, ids: Sequence | None = None) -> np.ndarray:
        """Evaluate features ``ids`` at every row of ``X``; shape ``(n, p, m)``."""
        ids = self.enumerate() if ids is None else list(ids)
        return self._columns(self._as_points(X), ids)

    def evaluate(self, gid, x) -> np.ndarray:
        self._check_single(gid)
        return self.design(np.asarray(x, dtype=float).reshape(1, -1), [gid])[0, 0]

    def _check_single(self, gid):
        if gid not in self:
            raise KeyError(f"unknown feature id {gid!r}")


class ExplicitDictionary(Dictionary):
    """Finite family of user-supplied callables.

    Each callable maps one input point (a float when ``input_dim == 1``,
    otherwise a 1-d array) to a float or an ``output_dim``-vector.
    """

    def __init__(self, features: Sequence[Callable], weights=None, ids=None,
                 output_dim: int = 1, input_dim: int = 1, probe_points=None,
                 kappa: float | None = None):
        self._features = list(features)
        self._ids = list(range(len(self._features))) if ids is None else list(ids)
        if len(self._ids) != len(self._features):
            raise ConfigError("ids and features differ in length")
        if len(set(self._ids)) != len(self._ids):
            raise ConfigError("feature ids must be unique")
        w = np.ones(len(self._ids)) if weights is None else np.asarray(weights, float)
        if w.shape != (len(self._ids),):
            raise ConfigError("one weight per feature is required")
        if np.any(w < 0):
            raise ConfigError("weights must be non-negative")
        self._weights = dict(zip(self._ids, w.tolist()))
        self._pos = {g: i for i, g in enumerate(self._ids)}
        self.output_dim = int(output_dim)
        self.input_dim = int(input_dim)
        if kappa is None and probe_points is not None:
            kappa = kappa_bound(self, probe_points)
        self.kappa = kappa

    def enumerate(self):
        return list(self._ids)

    def __contains__(self, gid):
        return gid in self._pos

    def weight(self, gid):
        return self._weights[gid]

    def _columns(self, X, ids):
        out = np.empty((X.shape[0], len(ids), self.output_dim))
        for j, g in enumerate(ids):
            f = self._features[self._pos[g]]
            for i, x in enumerate(X):
                arg = x[0] if self.input_dim == 1 else x
                out[i, j] = np.asarray(f(arg), dtype=float).reshape(self.output_dim)
        return out


class TabulatedDictionary(Dictionary):
    """Features known only through their values on a sample.

    Inputs are integer row indices into the table, so a dataset paired with
    this dictionary uses ``0 .. n-1`` as its inputs.
    """

    def __init__(self, values, weights=None, ids=None):
        values = np.asarray(values, dtype=float)
        if values.ndim == 2:
            values = values[:, :, None]
        if values.ndim != 3:
            raise DataError("table must have shape (n, p) or (n, p, m)")
        self.values = values
        n, p, m = values.shape
        self._ids = list(range(p)) if ids is None else list(ids)
        if len(self._ids) != p or len(set(self._ids)) != p:
            raise ConfigError("need one unique id per table column")
        w = np.ones(p) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (p,):
            raise ConfigError(f"expected {p} weights, got shape {w.shape}")
        if np.any(w < 0):
            raise ConfigError("weights must be non-negative")
        self._weights = dict(zip(self._ids, w.tolist()))
        self._pos = {g: i for i, g in enumerate(self._ids)}
        self.output_dim = m
        self.input_dim = 1
        self.kappa = float(np.max(np.sum(values ** 2, axis=(1, 2)))) if n else 0.0

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def enumerate(self):
        return list(self._ids)

    def __contains__(self, gid):
        return gid in self._pos

    def weight(self, gid):
        return self._weights[gid]

    def _columns(self, X, ids):
        rows = X[:, 0]
        idx = rows.astype(int)
        if np.any(idx != rows) or np.any(idx < 0) or np.any(idx >= self.n_rows):
            raise DomainError("tabulated dictionary inputs must be row indices "
                              f"in [0, {self.n_rows})")
        cols = [self._pos[g] for g in ids]
        return self.values[idx][:, cols, :]


@dataclass(frozen=True)
class WaveletSpec:
    """Rescaled Haar family: levels ``0..max_level`` (``None`` = unbounded),
    rescaling ``2^(-j s)`` and weights ``2^(j a)``."""

    max_level: int | None = 4
    s: float = 1.0
    a: float = 0.0

    def __post_init__(self):
        if self.max_level is not None and self.max_level < 0:
            raise ConfigError(f"max_level must be >= 0, got {self.max_level}")
        if not self.s > 0.5:
            raise ConfigError(
                f"smoothness s must exceed 1/2 for a finite kappa, got {self.s}")


def haar_kappa(s: float, max_level: int | None = None) -> float:
    """Exact ``sup_x sum_g phi_g(x)^2`` for the rescaled Haar family.

    Level 0 contributes 2 (scaling function and mother wavelet); level
    ``j >= 1`` contributes ``2^(j (1 - 2 s))`` since exactly one wavelet per
    level is nonzero at any point.
    """
    if not s > 0.5:
        raise ConfigError(f"smoothness s must exceed 1/2, got {s}")
    r = 2.0 ** (1.0 - 2.0 * s)
    if max_level is None:
        return 2.0 + r / (1.0 - r)
    return 2.0 + sum(r ** j for j in range(1, max_level + 1))


def _haar_mother(t: np.ndarray) -> np.ndarray:
    # t in [0, 1]; right endpoint belongs to the last half-interval
    return np.where(t < 0.5, 1.0, -1.0)


class HaarDictionary(Dictionary):
    """Scaling function plus Haar wavelets on [0, 1], rescaled by ``2^(-j s)``.

    Feature ids are pairs ``(j, k)``: ``(0, 0)`` is the scaling function,
    ``(0, 1)`` the mother wavelet, and ``(j, k)`` for ``j >= 1`` is
    ``2^(-j s) 2^(j/2) psi(2^j x - k)`` with ``k = 0 .. 2^j - 1``.
    """

    output_dim = 1
    input_dim = 1

    def __init__(self, spec: WaveletSpec):
        self.spec = spec
        self.finite = spec.max_level is not None
        self.kappa = haar_kappa(spec.s, spec.max_level)

    @staticmethod
    def level_ids(j: int) -> list:
        if j == 0:
            return [(0, 0), (0, 1)]
        return [(j, k) for k in range(2 ** j)]

    def enumerate(self, max_level: int | None = None):
        J = self.spec.max_level if max_level is None else max_level
        if J is None:
            raise ConfigError("unbounded wavelet dictionary; pass max_level")
        if self.spec.max_level is not None:
            J = min(J, self.spec.max_level)
        return [g for j in range(J + 1) for g in self.level_ids(j)]

    def __contains__(self, gid):
        try:
            j, k = gid
        except (TypeError, ValueError):
            return False
        if not (isinstance(j, (int, np.integer)) and isinstance(k, (int, np.integer))):
            return False
        if j < 0 or (self.spec.max_level is not None and j > self.spec.max_level):
            return False
        return 0 <= k < (2 if j == 0 else 2 ** j)

    def weight(self, gid):
        j, _ = gid
        return 2.0 ** (j * self.spec.a)

    def level_scale(self, j: int) -> float:
        """Absolute value of a level-``j`` feature on its support."""
        return 2.0 ** (-j * self.spec.s) * 2.0 ** (j / 2.0)

    def cells(self, x: np.ndarray, j: int):
        """Support cell index and wavelet sign at level ``j >= 1`` (or the
        mother wavelet for ``j == 0``)."""
        m = 2 ** j
        c = np.minimum(np.floor(x * m), m - 1).astype(np.int64)
        return c, _haar_mother(x * m - c)

    def _columns(self, X, ids):
        x = X[:, 0]
        if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
            raise DomainError("Haar features are defined on [0, 1]")
        out = np.zeros((x.shape[0], len(ids), 1))
        cache = {}
        for col, g in enumerate(ids):
            if g not in self:
                raise KeyError(f"unknown feature id {g!r}")
            j, k = g
            if j == 0 and k == 0:
                out[:, col, 0] = 1.0
                continue
            if j not in cache:
                cache[j] = self.cells(x, j)
            c, sign = cache[j]
            if j == 0:
                out[:, col, 0] = sign
            else:
                out[:, col, 0] = np.where(c == k, self.level_scale(j) * sign, 0.0)
        return out


def haar_dictionary(spec: WaveletSpec) -> HaarDictionary:
    return HaarDictionary(spec)


def kappa_bound(dictionary: Dictionary, probe_points=None) -> float:
    """Upper bound on ``sum_g |phi_g(x)|^2``.

    Wavelet dictionaries use the closed form; other finite dictionaries take
    the maximum over ``probe_points``.
    """
    if isinstance(dictionary, HaarDictionary):
        return haar_kappa(dictionary.spec.s, dictionary.spec.max_level)
    if probe_points is None or len(np.atleast_1d(np.asarray(probe_points, dtype=float))) == 0:
        raise ConfigError("kappa_bound needs a non-empty probe set")
    F = dictionary.design(probe_points)
    return float(np.max(np.sum(F ** 2, axis=(1, 2))))


def local_kappa(dictionary: Dictionary, X) -> np.ndarray:
    """``k(x) = sum_g |phi_g(x)|^2`` at each point of ``X`` (finite dictionaries)."""
    F = dictionary.design(X)
    return np.sum(F ** 2, axis=(1, 2))


def effective_kappa(dictionary: Dictionary, X) -> float:
    """Step constant used by the solver: the dictionary's kappa, raised if
    needed to cover the sample points ``X``."""
    if isinstance(dictionary, HaarDictionary):
        return dictionary.kappa
    sample = float(np.max(local_kappa(dictionary, X))) if len(X) else 0.0
    known = dictionary.kappa or 0.0
    k = max(known, sample)
    if k <= 0.0:
        raise DataError("all features vanish on the sample; kappa is zero")
    return k
