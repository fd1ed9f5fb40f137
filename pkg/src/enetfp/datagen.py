"""Synthetic data: ``Y = f_beta_star(X) + W`` and the collinear two-feature design."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary, TabulatedDictionary
from .errors import ConfigError
from .operators import Dataset, predict
from .prox import Coefficients

NOISE_KINDS = ("gaussian", "bounded-uniform", "none")


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for ``seed`` and an integer cell key.

    Distinct keys give independent streams, so cells can be generated in
    any order or in parallel and still reproduce bit for bit.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "gaussian"
    scale: float = 0.1

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if self.scale < 0:
            raise ConfigError("noise scale must be non-negative")

    @property
    def sigma_L(self) -> tuple[float, float]:
        """A conservative ``(sigma, L)`` pair for the sub-exponential moment condition.

        Gaussian with standard deviation ``s``: ``L = s``, ``sigma^2 = 2 s^2``.
        Uniform on ``[-c, c]``: ``L = c``, ``sigma^2 = 2 c^2 / 3``.
        """
        s = self.scale
        if self.kind == "gaussian":
            return math.sqrt(2.0) * s, s
        if self.kind == "bounded-uniform":
            return math.sqrt(2.0 / 3.0) * s, s
        return 0.0, 0.0

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "none" or self.scale == 0:
            return np.zeros(shape)
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal(shape)
        return rng.uniform(-self.scale, self.scale, size=shape)


@dataclass(frozen=True)
class GeneratorSpec:
    dictionary: Dictionary
    beta_star: Coefficients
    n: int
    noise: NoiseModel = NoiseModel()
    seed: int = 0
    inputs: np.ndarray | None = None
    input_dim: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        for g in self.beta_star:
            if g not in self.dictionary:
                raise ConfigError(f"beta_star uses unknown feature {g!r}")
        if self.inputs is not None and len(self.inputs) != self.n:
            raise ConfigError("provided inputs must have n rows")


def generate_dataset(spec: GeneratorSpec, key: tuple = ()) -> Dataset:
    """Draw ``n`` pairs; inputs uniform on ``[0, 1]^d`` unless provided."""
    rng = make_rng(spec.seed, *key)
    if spec.inputs is not None:
        X = np.asarray(spec.inputs, dtype=float)
    else:
        X = rng.uniform(0.0, 1.0, size=(spec.n, spec.input_dim))
    f = predict(spec.dictionary, spec.beta_star, X)
    W = spec.noise.sample(rng, f.shape)
    return Dataset(X, f + W)


def collinear_design(n: int, theta: float, noise: NoiseModel = NoiseModel(),
                     seed: int = 0, signal: float = 1.0,
                     key: tuple = ()) -> tuple[Dataset, TabulatedDictionary]:
    """Two features with ``phi_2(X_i) = tan(theta) phi_1(X_i)`` on the sample.

    ``phi_1(X_i) = X_i`` with ``X_i`` uniform on ``[0, 1]`` and
    ``Y_i = signal * X_i + W_i``. The draws do not depend on ``theta``, so
    a sweep over ``theta`` with one seed shares inputs and noise.
    """
    if not 0.0 <= theta < math.pi / 2:
        raise ConfigError(f"theta must lie in [0, pi/2), got {theta}")
    if n < 1:
        raise ConfigError("n must be at least 1")
    rng = make_rng(seed, *key)
    u = rng.uniform(0.0, 1.0, size=n)
    W = noise.sample(rng, (n,))
    # tan(pi/4) rounds to 0.999...; keep exact coincidence at the diagonal
    slope = 1.0 if theta == math.pi / 4 else math.tan(theta)
    table = np.column_stack([u, slope * u])
    dictionary = TabulatedDictionary(table, weights=[1.0, 1.0])
    data = Dataset(np.arange(n, dtype=float), signal * u + W)
    return data, dictionary
