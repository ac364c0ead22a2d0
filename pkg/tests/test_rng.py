import numpy as np
import pytest

from zetalab.errors import ParameterError
from zetalab.rng import StreamKey, bernoulli, derive_substream, parse_seed, uniform01


def test_same_key_identical_draws():
    a = derive_substream(StreamKey(1, "a", 0)).uniforms(100)
    b = derive_substream(StreamKey(1, "a", 0)).uniforms(100)
    assert np.array_equal(a, b)


def test_chunked_draws_match_scalar_draws():
    s1 = derive_substream(StreamKey(3, "chunk", 0))
    s2 = derive_substream(StreamKey(3, "chunk", 0))
    block = s1.uniforms(1000)
    scalars = np.array([s2.uniform01() for _ in range(1000)])
    assert np.array_equal(block, scalars)
    assert s1.draws == s2.draws == 1000


def test_distinct_replicas_uncorrelated():
    a = derive_substream(StreamKey(1, "a", 0)).uniforms(10**6)
    b = derive_substream(StreamKey(1, "a", 1)).uniforms(10**6)
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 0.01


def test_distinct_seeds_differ_on_first_draw():
    diffs = 0
    for seed in range(1000):
        u1 = derive_substream(StreamKey(2 * seed, "a", 0)).uniform01()
        u2 = derive_substream(StreamKey(2 * seed + 1, "a", 0)).uniform01()
        diffs += u1 != u2
    assert diffs == 1000


def test_uniform_mean_variance_range():
    u = derive_substream(StreamKey(7, "u", 0)).uniforms(10**6)
    assert abs(u.mean() - 0.5) < 0.002
    assert abs(u.var() - 1.0 / 12.0) < 0.001
    assert u.min() >= 0.0 and u.max() < 1.0


def test_bernoulli_degenerate_consumes_one_uniform():
    s = derive_substream(StreamKey(5, "b", 0))
    assert all(bernoulli(s, 0.0) == 0 for _ in range(50))
    assert all(bernoulli(s, 1.0) == 1 for _ in range(50))
    assert s.draws == 100


def test_bernoulli_band():
    s = derive_substream(StreamKey(5, "b", 1))
    bits = s.bernoulli_block(np.full(10**6, 0.3))
    assert abs(bits.mean() - 0.3) < 0.0014  # 3 sigma binomial band
    assert s.draws == 10**6


def test_bernoulli_is_threshold_on_same_state():
    s1 = derive_substream(StreamKey(9, "map", 0))
    s2 = derive_substream(StreamKey(9, "map", 0))
    for p in (0.1, 0.5, 0.9):
        bit = bernoulli(s1, p)
        assert bit == (uniform01(s2) < p)


def test_parameter_errors():
    with pytest.raises(ParameterError):
        StreamKey(1, "", 0)
    with pytest.raises(ParameterError):
        StreamKey(1, "a", -1)
    s = derive_substream(StreamKey(1, "a", 0))
    with pytest.raises(ParameterError):
        bernoulli(s, 1.5)
    with pytest.raises(ParameterError):
        bernoulli(s, -0.1)


def test_parse_seed_decimal_and_hex():
    assert parse_seed("42") == 42
    assert parse_seed("0xDEADBEEF") == 0xDEADBEEF
    with pytest.raises(ParameterError):
        parse_seed("not-a-seed")


def test_child_key_derivation():
    key = StreamKey(1, "base", 3)
    child = key.child("sub")
    assert child.label == "base/sub" and child.replica == 3
    a = derive_substream(key).uniforms(10)
    b = derive_substream(child).uniforms(10)
    assert not np.array_equal(a, b)
