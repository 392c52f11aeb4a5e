import numpy as np
import pytest

from nonclt import rng


def test_as_generator_passthrough():
    g = np.random.default_rng(1)
    assert rng.as_generator(g) is g
    assert rng.as_generator(5).random() == np.random.default_rng(5).random()


def test_streams_reproducible_and_distinct():
    a = rng.stream(7, 1, 2).random(4)
    np.testing.assert_array_equal(a, rng.stream(7, 1, 2).random(4))
    assert not np.array_equal(a, rng.stream(7, 2, 1).random(4))
    assert not np.array_equal(a, rng.stream(8, 1, 2).random(4))


def test_stream_requires_master():
    with pytest.raises(ValueError):
        rng.stream(None, 1)


def test_child_seed():
    s = rng.child_seed(3, 4)
    assert 0 <= s < 2**64
    assert s == rng.child_seed(3, 4) != rng.child_seed(3, 5)
