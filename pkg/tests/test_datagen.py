import math

import numpy as np
import pytest

from enetfp.datagen import GeneratorSpec, NoiseModel, collinear_design, generate_dataset, make_rng
from enetfp.dictionary import HaarDictionary, WaveletSpec
from enetfp.errors import ConfigError
from enetfp.operators import predict
from enetfp.prox import Coefficients

HAAR = HaarDictionary(WaveletSpec(max_level=3, a=0.5))
STAR = Coefficients({(0, 0): 1.0, (1, 1): -0.5, (3, 2): 2.0})


def test_noiseless_outputs_are_exact():
    data = generate_dataset(GeneratorSpec(HAAR, STAR, 50, noise=NoiseModel("none", 1.0), seed=1))
    np.testing.assert_array_equal(data.outputs, predict(HAAR, STAR, data.inputs))


def test_empty_beta_gives_pure_noise():
    noise = NoiseModel("gaussian", 0.3)
    spec = GeneratorSpec(HAAR, Coefficients(), 40, noise=noise, seed=2)
    data = generate_dataset(spec)
    rng = make_rng(2)
    rng.uniform(0.0, 1.0, size=(40, 1))
    np.testing.assert_array_equal(data.outputs, noise.sample(rng, (40, 1)))


@pytest.mark.parametrize("kind", ["gaussian", "bounded-uniform"])
def test_noise_mean_zero(kind):
    scale = 0.7
    W = NoiseModel(kind, scale).sample(make_rng(3), (100_000,))
    assert abs(W.mean()) <= 4 * scale / math.sqrt(100_000)


@pytest.mark.parametrize("kind", ["gaussian", "bounded-uniform"])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_declared_sigma_L_satisfy_moment_condition(kind, m):
    noise = NoiseModel(kind, 0.5)
    sigma, L = noise.sigma_L
    W = noise.sample(make_rng(4, m), (200_000,))
    empirical = np.mean(np.abs(W) ** m)
    assert empirical <= 0.5 * math.factorial(m) * sigma ** 2 * L ** (m - 2)


def test_sigma_L_values():
    assert NoiseModel("gaussian", 2.0).sigma_L == (pytest.approx(2 * math.sqrt(2)), 2.0)
    assert NoiseModel("bounded-uniform", 3.0).sigma_L == (pytest.approx(math.sqrt(6)), 3.0)
    assert NoiseModel("none", 3.0).sigma_L == (0.0, 0.0)


def test_noise_validation():
    with pytest.raises(ConfigError):
        NoiseModel("cauchy", 1.0)
    with pytest.raises(ConfigError):
        NoiseModel("gaussian", -1.0)


def test_generator_validation():
    with pytest.raises(ConfigError):
        GeneratorSpec(HAAR, Coefficients({(9, 0): 1.0}), 10)
    with pytest.raises(ConfigError):
        GeneratorSpec(HAAR, STAR, 0)
    with pytest.raises(ConfigError):
        GeneratorSpec(HAAR, STAR, 3, inputs=np.zeros((2, 1)))


def test_provided_inputs_are_used():
    X = np.linspace(0, 0.99, 7)[:, None]
    data = generate_dataset(GeneratorSpec(HAAR, STAR, 7, noise=NoiseModel("none"), inputs=X))
    np.testing.assert_array_equal(data.inputs, X)


def test_seed_and_key_determinism():
    spec = GeneratorSpec(HAAR, STAR, 30, seed=5)
    a, b = generate_dataset(spec, key=(1, 2)), generate_dataset(spec, key=(1, 2))
    np.testing.assert_array_equal(a.outputs, b.outputs)
    c = generate_dataset(spec, key=(1, 3))
    assert not np.array_equal(a.outputs, c.outputs)


def test_collinear_diagonal_features_coincide():
    data, dic = collinear_design(25, math.pi / 4, seed=6)
    F = dic.design(data.inputs, [0, 1])[:, :, 0]
    np.testing.assert_array_equal(F[:, 0], F[:, 1])


def test_collinear_zero_angle_kills_second_feature():
    data, dic = collinear_design(25, 0.0, seed=6)
    assert not np.any(dic.design(data.inputs, [1]))


def test_collinear_design_has_rank_one_and_shared_draws():
    for theta in (0.3, 0.7, 1.2):
        data, dic = collinear_design(25, theta, NoiseModel("gaussian", 0.1), seed=7)
        F = dic.design(data.inputs, [0, 1])[:, :, 0]
        assert np.linalg.matrix_rank(F) == 1
        np.testing.assert_allclose(F[:, 1], math.tan(theta) * F[:, 0], rtol=1e-15)
    a, _ = collinear_design(25, 0.3, NoiseModel("gaussian", 0.1), seed=7)
    b, _ = collinear_design(25, 1.2, NoiseModel("gaussian", 0.1), seed=7)
    np.testing.assert_array_equal(a.outputs, b.outputs)


def test_collinear_rejects_right_angle():
    with pytest.raises(ConfigError):
        collinear_design(10, math.pi / 2)
    with pytest.raises(ConfigError):
        collinear_design(10, -0.1)
    with pytest.raises(ConfigError):
        collinear_design(0, 0.5)
