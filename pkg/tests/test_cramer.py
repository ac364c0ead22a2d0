import hashlib
import math

import mpmath
import numpy as np
import pytest

from zetalab.cramer import (
    IndicatorStream,
    QuasiPrimeSequence,
    counting_moments,
    counting_path,
    li,
    sample_indicators,
    sequence_log_probability,
    sparse_membership_sample,
)
from zetalab.errors import DomainError, ParameterError, ValidationError
from zetalab.rng import StreamKey

# frozen from a scalar straight-line oracle run (one uniform per n, n = 4..1000)
GOLDEN_DIGEST_42 = "3da27435b40b1e587933f47de0535dff6696b9ff0d5d051567e038dd518f68a8"
GOLDEN_POPCOUNT_42 = 144


def test_golden_bit_digest():
    ind = sample_indicators(1000, StreamKey(42, "cramer", 0))
    assert hashlib.sha256(ind.packed.tobytes()).hexdigest() == GOLDEN_DIGEST_42
    assert ind.popcount() == GOLDEN_POPCOUNT_42


def test_vectorized_sampling_matches_scalar_oracle():
    from zetalab.rng import derive_substream

    key = StreamKey(11, "cramer", 2)
    stream = derive_substream(key)
    oracle = [int(stream.uniform01() < 1.0 / math.log(n)) for n in range(4, 501)]
    ind = sample_indicators(500, key)
    assert ind.bools().astype(int).tolist() == oracle


def test_single_bit_boundary():
    ind = sample_indicators(4, StreamKey(1, "cramer", 0))
    assert ind.nbits == 1
    assert ind.bit(4) in (0, 1)


def test_indicator_marginal_rate():
    hits = sum(
        sample_indicators(100, StreamKey(1, "rate", r)).bit(100)
        for r in range(10**4)
    )
    p = 1.0 / math.log(100)
    band = 3.0 * math.sqrt(p * (1 - p) / 10**4)
    assert abs(hits / 10**4 - p) < band


def test_counting_moments_exact_at_4():
    mean, var = counting_moments([4])
    p4 = 1.0 / math.log(4)
    assert mean[0] == pytest.approx(2.0 + p4, abs=1e-15)
    assert var[0] == pytest.approx(p4 * (1 - p4), abs=1e-15)
    assert mean[0] - p4 == pytest.approx(2.0, abs=1e-15)  # empty-sum prefix


def test_counting_path_consistency():
    ind = sample_indicators(10**4, StreamKey(8, "cramer", 0))
    path = counting_path(ind, [16, 100, 10**4])
    # pi equals 2 + popcount at each checkpoint for this realization
    for i, n in enumerate([16, 100, 10**4]):
        assert path.pi[i] == 2 + ind.popcount(n)
    assert (np.diff(path.pi) >= 0).all()
    assert (np.diff(path.mean) > 0).all()
    assert (np.diff(path.var) > 0).all()
    assert np.isfinite(path.lil).all()


def test_lil_undefined_below_16():
    ind = sample_indicators(100, StreamKey(8, "cramer", 1))
    path = counting_path(ind, [4, 15, 16])
    assert np.isnan(path.lil[0]) and np.isnan(path.lil[1])
    assert np.isfinite(path.lil[2])


def test_counting_clt_property():
    # z-scores of Pi(n) at n = 1e6 behave like a standard normal sample
    zs = []
    mean, var = counting_moments([10**6])
    for r in range(200):
        ind = sample_indicators(10**6, StreamKey(17, "clt", r))
        zs.append((2 + ind.popcount() - mean[0]) / math.sqrt(var[0]))
    zs = np.array(zs)
    assert -0.25 < zs.mean() < 0.25
    assert 0.7 < zs.var() < 1.3


def test_checkpoint_validation():
    ind = sample_indicators(100, StreamKey(1, "chk", 0))
    with pytest.raises(ParameterError):
        counting_path(ind, [50, 20])
    with pytest.raises(ParameterError):
        counting_path(ind, [4, 200])
    with pytest.raises(ParameterError):
        counting_path(ind, [3, 50])
    with pytest.raises(ParameterError):
        sample_indicators(3, StreamKey(1, "chk", 0))


def test_li_endpoint_and_oracle():
    assert li(math.e) == 0.0
    # independent quadrature oracle: exponential-integral identity at high precision
    for n in (math.e**2, 100.0, 1e6):
        oracle = float(mpmath.ei(mpmath.log(n)) - mpmath.ei(1))
        assert abs(li(n) - oracle) < 1e-9
    with pytest.raises(DomainError):
        li(2.0)


def test_mean_tracks_li_within_constant():
    cps = [10**4, 10**5, 10**6, 10**7]
    mean, _ = counting_moments(cps)
    for i, n in enumerate(cps):
        assert abs(mean[i] - 2.0 - li(n)) <= 5.0


def test_sequence_log_probability_example():
    lp = sequence_log_probability([2, 3, 6, 11, 12], 12)
    manual = (
        sum(math.log(1 - 1 / math.log(i)) for i in (4, 5))
        + math.log(1 / math.log(6))
        + sum(math.log(1 - 1 / math.log(i)) for i in range(7, 11))
        + math.log(1 / math.log(11))
        + math.log(1 / math.log(12))
    )
    assert lp == pytest.approx(manual, abs=1e-12)


def test_sequence_log_probability_trivial_and_total():
    assert sequence_log_probability([2, 3], 3) == 0.0
    import itertools

    total = 0.0
    for bits in itertools.product([0, 1], repeat=3):
        prefix = [2, 3] + [n for n, b in zip([4, 5, 6], bits) if b]
        total += math.exp(sequence_log_probability(prefix, 6))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_sequence_log_probability_validation():
    with pytest.raises(ValidationError):
        sequence_log_probability([2, 4], 10)
    with pytest.raises(ValidationError):
        sequence_log_probability([2, 3, 20], 10)
    with pytest.raises(ValidationError):
        sequence_log_probability([2, 3, 7, 5], 10)


def test_sparse_membership_singleton_rate():
    x = round(math.exp(10))
    hits = sum(
        int(sparse_membership_sample([x], StreamKey(3, "sparse", r))[0])
        for r in range(10**5)
    )
    p = 0.1  # 1 / ln(e^10)
    band = 3.0 * math.sqrt(p * (1 - p) / 10**5)
    assert abs(hits / 10**5 - 1.0 / math.log(x)) < band


def test_sparse_membership_empty_and_errors():
    assert sparse_membership_sample([], StreamKey(1, "s", 0)).size == 0
    with pytest.raises(ParameterError):
        sparse_membership_sample([3, 10], StreamKey(1, "s", 0))
    with pytest.raises(ParameterError):
        sparse_membership_sample([10, 10], StreamKey(1, "s", 0))


def test_sparse_membership_fibonacci_expectation():
    fib = []
    a, b = 1, 1
    while len(fib) < 30:
        a, b = b, a + b
        if b >= 4:
            fib.append(b)
    expected = sum(1.0 / math.log(f) for f in fib)
    var = sum((1.0 / math.log(f)) * (1 - 1.0 / math.log(f)) for f in fib)
    counts = [
        int(sparse_membership_sample(fib, StreamKey(6, "fib", r)).sum())
        for r in range(1000)
    ]
    band = 3.0 * math.sqrt(var / 1000)
    assert abs(np.mean(counts) - expected) < band


def test_packed_save_load_roundtrip(tmp_path):
    ind = sample_indicators(997, StreamKey(4, "io", 0))
    target = tmp_path / "bits.bin"
    ind.save(target)
    raw = target.read_bytes()
    assert raw[:8] == (997).to_bytes(8, "little")
    back = IndicatorStream.load(target)
    assert back.n_max == 997
    assert np.array_equal(back.packed, ind.packed)
    with pytest.raises(ValidationError):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(raw[:-1])
        IndicatorStream.load(bad)


def test_bools_range_matches_full_unpack():
    ind = sample_indicators(3000, StreamKey(4, "rng", 1))
    full = ind.bools()
    for a, b in ((4, 5), (4, 3001), (100, 1001), (2997, 3001), (9, 26)):
        assert np.array_equal(ind.bools_range(a, b), full[a - 4 : b - 4])


def test_quasiprime_sequence_from_indicators():
    ind = sample_indicators(200, StreamKey(12, "seq", 0))
    seq = QuasiPrimeSequence.from_indicators(ind)
    assert seq.values[0] == 2 and seq.values[1] == 3
    assert (np.diff(seq.values) > 0).all()
    assert seq.values.size == 2 + ind.popcount()
    assert seq.upto(50).size == 2 + ind.popcount(50)
    with pytest.raises(ValidationError):
        QuasiPrimeSequence(np.array([3, 5]))
