import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vqc_lottery.errors import ContractError
from vqc_lottery.models import ModelSpec
from vqc_lottery.pruning import (
    apply_mask,
    bits_to_mask,
    initial_mask,
    magnitude_prune,
    mask_to_bits,
    prune_count,
    remaining_weights,
)


def test_initial_masks():
    m = initial_mask(ModelSpec("mvqc", 13, 3, n_layers=16))
    assert m.size == 624 and m.all()
    assert initial_mask(ModelSpec("snn", 4, 2)).size == 144
    assert remaining_weights(m).percent == 100.0


def test_magnitude_prune_example():
    mask = magnitude_prune(np.array([0.5, -0.1, 0.3, -0.9]), np.ones(4, bool), 0.5)
    assert list(mask) == [True, False, False, True]


def test_fraction_zero_is_noop():
    m = np.array([True, False, True])
    np.testing.assert_array_equal(magnitude_prune(np.ones(3), m, 0.0), m)


def test_two_rounds_of_twenty_percent():
    rng = np.random.default_rng(0)
    p = rng.normal(size=100)
    m = np.ones(100, bool)
    for _ in range(2):
        m = magnitude_prune(p, m, 0.2)
    assert m.sum() == 64


def test_ties_prune_lower_index_first():
    assert list(magnitude_prune(np.array([1.0, 1.0, 1.0]), np.ones(3, bool), 0.34)) == [False, True, True]


def test_remaining_weights_after_one_round():
    m = magnitude_prune(np.arange(1.0, 625.0), np.ones(624, bool), 0.2)
    rw = remaining_weights(m)
    assert rw.count == 500
    assert round(rw.percent, 1) == 80.1
    assert remaining_weights(np.zeros(5, bool)) == (0, 0.0)


def test_prune_count_rounding_modes():
    assert prune_count(624, 0.2) == 124
    assert prune_count(100, 0.29) == 29
    assert prune_count(62, 0.2, "floor") == 12
    assert prune_count(62, 0.2, "round") == 12
    assert prune_count(13, 0.5, "round") == 6
    assert prune_count(7, 0.5, "floor") == 3
    with pytest.raises(ContractError):
        prune_count(10, 0.2, "ceil")


def test_apply_mask():
    p = np.array([1.0, 2.0, 3.0, 9.0])
    np.testing.assert_array_equal(apply_mask(p, np.ones(3, bool)), p)
    np.testing.assert_array_equal(apply_mask(p, np.zeros(3, bool)), [0, 0, 0, 9])
    once = apply_mask(p, np.array([True, False, True]))
    np.testing.assert_array_equal(apply_mask(once, np.array([True, False, True])), once)
    with pytest.raises(ContractError):
        apply_mask(p, np.ones(5, bool))


def test_bits_round_trip():
    m = np.array([True, False, False, True])
    assert mask_to_bits(m) == "1001"
    np.testing.assert_array_equal(bits_to_mask("1001"), m)
    with pytest.raises(ContractError):
        bits_to_mask("102")


@given(
    arrays(np.float64, st.integers(1, 60), elements=st.floats(-10, 10)),
    st.floats(0, 1),
    st.data(),
)
def test_prune_properties(params, fraction, data):
    mask = np.array(data.draw(st.lists(st.booleans(), min_size=params.size, max_size=params.size)))
    out = magnitude_prune(params, mask, fraction)
    # only survivors lose bits, and exactly the floor count of them
    assert not np.any(out & ~mask)
    assert mask.sum() - out.sum() == prune_count(int(mask.sum()), fraction)
    if out.any() and (mask & ~out).any():
        assert np.abs(params[mask & ~out]).max() <= np.abs(params[out]).min()
