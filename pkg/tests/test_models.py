import math

import numpy as np
import pytest

import oracle
from vqc_lottery.errors import ConfigError, ContractError
from vqc_lottery.losses import softmax
from vqc_lottery.models import (
    ModelSpec,
    bvqc_forward,
    bvqc_probability,
    circuit_expectations,
    count_parameters,
    init_params,
    logits,
    mvqc_forward,
    predict,
    snn_forward,
    split_snn_params,
    split_vqc_params,
)

# (family, features, classes, layers) -> published parameter count
TABLE_COUNTS = [
    ("bvqc", 4, 2, 10, 122),
    ("bvqc", 13, 2, 14, 548),
    ("mvqc", 4, 2, 15, 184),
    ("mvqc", 4, 3, 16, 198),
    ("mvqc", 13, 2, 9, 355),
    ("mvqc", 13, 3, 16, 630),
    ("snn", 4, 2, 1, 170),
    ("snn", 4, 3, 1, 195),
    ("snn", 13, 2, 1, 386),
    ("snn", 13, 3, 1, 411),
]


@pytest.mark.parametrize("family,d,c,layers,expected", TABLE_COUNTS)
def test_parameter_counts(family, d, c, layers, expected):
    spec = ModelSpec(family, d, c, n_layers=layers)
    assert count_parameters(spec) == expected
    assert init_params(spec).shape == (expected,)


def test_prunable_counts():
    assert ModelSpec("mvqc", 13, 3, n_layers=16).n_prunable == 624
    assert ModelSpec("snn", 4, 2).n_prunable == 144


def test_init_is_deterministic_and_seed_dependent():
    spec = ModelSpec("mvqc", 4, 3, n_layers=3, seed=5)
    np.testing.assert_array_equal(init_params(spec), init_params(spec))
    other = ModelSpec("mvqc", 4, 3, n_layers=3, seed=6)
    assert not np.array_equal(init_params(spec), init_params(other))


def test_init_respects_range():
    spec = ModelSpec("mvqc", 4, 3, n_layers=16, init_uniform_range=0.3)
    angles, scale, bias = split_vqc_params(spec, init_params(spec))
    assert np.all(np.abs(angles) <= 0.3)
    np.testing.assert_array_equal(scale, 1.0)
    np.testing.assert_array_equal(bias, 0.0)


def test_zero_range_gives_zero_rotations():
    spec = ModelSpec("bvqc", 4, 2, n_layers=2, init_uniform_range=0.0)
    p = init_params(spec)
    np.testing.assert_array_equal(p[:24], 0.0)
    np.testing.assert_array_equal(p[24:], [1.0, 0.0])


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="cnn", n_features=4, n_classes=3),
        dict(family="bvqc", n_features=4, n_classes=3),
        dict(family="mvqc", n_features=2, n_classes=3),
        dict(family="mvqc", n_features=4, n_classes=3, n_layers=0),
        dict(family="mvqc", n_features=4, n_classes=3, init_uniform_range=-1.0),
        dict(family="mvqc", n_features=21, n_classes=3),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(ConfigError):
        ModelSpec(**kwargs)


def test_spec_round_trip():
    spec = ModelSpec("mvqc", 4, 3, n_layers=2, data_reuploading=True, seed=3)
    assert ModelSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("reupload", [False, True])
@pytest.mark.parametrize("n,layers", [(1, 1), (2, 1), (3, 2)])
def test_expectations_match_dense_oracle(n, layers, reupload, rng):
    spec = ModelSpec("bvqc" if n == 1 else "mvqc", n, 2, n_layers=layers, data_reuploading=reupload)
    params = init_params(spec)
    X = rng.uniform(0, np.pi, size=(4, n))
    got = circuit_expectations(spec, params, X)
    angles, _, _ = split_vqc_params(spec, params)
    for b, x in enumerate(X):
        psi = oracle.circuit_state(x, angles, reupload)
        for k in range(spec.n_outputs):
            assert got[b, k] == pytest.approx(oracle.z_expect(psi, n, k), abs=1e-10)


def test_mvqc_probabilities_sum_to_one(rng):
    spec = ModelSpec("mvqc", 4, 3, n_layers=2)
    probs = mvqc_forward(spec, init_params(spec), rng.uniform(0, np.pi, 4))
    assert probs.sum() == pytest.approx(1.0)
    assert np.all((probs > 0) & (probs < 1))


def test_identity_circuit_gives_uniform_probabilities():
    spec = ModelSpec("mvqc", 4, 3, n_layers=2, init_uniform_range=0.0)
    np.testing.assert_allclose(mvqc_forward(spec, init_params(spec), np.zeros(4)), 1 / 3)


def test_bvqc_identity_logit_and_probability():
    spec = ModelSpec("bvqc", 4, 2, n_layers=2, init_uniform_range=0.0)
    assert bvqc_forward(spec, init_params(spec), np.zeros(4)) == pytest.approx(1.0)
    assert bvqc_probability(0.0) == 0.5


def test_head_is_affine_on_expectations(rng):
    spec = ModelSpec("mvqc", 3, 2, n_layers=1)
    params = init_params(spec)
    X = rng.uniform(0, np.pi, size=(3, 3))
    e = circuit_expectations(spec, params, X)
    params[-4:] = [2.0, -1.0, 0.5, 0.25]
    np.testing.assert_allclose(logits(spec, params, X), e * [2.0, -1.0] + [0.5, 0.25], atol=1e-12)


def test_snn_matches_hand_arithmetic(rng):
    spec = ModelSpec("snn", 4, 3)
    params = rng.normal(size=count_parameters(spec))
    x = rng.normal(size=4)
    w1, w2, b1, b2 = split_snn_params(spec, params)
    hidden = [max(0.0, sum(w1[j, i] * x[i] for i in range(4)) + b1[j]) for j in range(24)]
    z = [sum(w2[k, j] * hidden[j] for j in range(24)) + b2[k] for k in range(3)]
    e = [math.exp(v - max(z)) for v in z]
    np.testing.assert_allclose(snn_forward(spec, params, x), [v / sum(e) for v in e], atol=1e-12)


def test_snn_zero_weights_uniform():
    spec = ModelSpec("snn", 4, 3)
    np.testing.assert_allclose(snn_forward(spec, np.zeros(195), np.ones(4)), 1 / 3)


def test_predict_tie_breaks_to_class_zero():
    spec = ModelSpec("snn", 4, 2)
    assert list(predict(spec, np.zeros(170), np.ones((3, 4)))) == [0, 0, 0]
    bspec = ModelSpec("bvqc", 2, 2, init_uniform_range=0.0)
    params = init_params(bspec)
    params[-2:] = [0.0, 0.0]
    assert list(predict(bspec, params, np.zeros((2, 2)))) == [0, 0]


def test_random_mvqc_is_near_chance():
    # Monte-Carlo check: random circuits on balanced 3-class data average ~1/3
    rng = np.random.default_rng(0)
    X = rng.uniform(0, np.pi, size=(60, 4))
    y = np.repeat([0, 1, 2], 20)
    accs = []
    for seed in range(50):
        spec = ModelSpec("mvqc", 4, 3, n_layers=2, seed=seed)
        accs.append(np.mean(predict(spec, init_params(spec), X) == y))
    assert abs(np.mean(accs) - 1 / 3) < 0.1


def test_contract_errors():
    spec = ModelSpec("mvqc", 4, 3)
    with pytest.raises(ContractError):
        logits(spec, np.zeros(5), np.zeros((1, 4)))
    with pytest.raises(ContractError):
        logits(spec, init_params(spec), np.zeros((1, 3)))
    with pytest.raises(ContractError):
        bvqc_forward(spec, init_params(spec), np.zeros(4))


def test_softmax_invariant_to_shift(rng):
    z = rng.normal(size=(5, 3))
    np.testing.assert_allclose(softmax(z), softmax(z + 100.0), atol=1e-14)
