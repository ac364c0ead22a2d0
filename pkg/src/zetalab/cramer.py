"""Quasi-prime realizations and their exact counting statistics.

A realization declares each integer n >= 4 "quasi-prime" independently
with probability 1/ln n; 2 and 3 are quasi-prime by fiat.  One stream key
defines one realization: indicator bits are always drawn in increasing n,
so any statistic computed at a cutoff is a view into the same realization,
never a re-sample.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, ParameterError, ValidationError
from .rng import RandomStream, StreamKey, derive_substream

BLOCK = 1 << 22  # values per vectorized block


def _blocks(lo: int, hi: int, block: int = BLOCK):
    """Yield contiguous integer ranges [a, b) covering [lo, hi]."""
    a = lo
    while a <= hi:
        b = min(a + block, hi + 1)
        yield a, b
        a = b


@dataclass
class IndicatorStream:
    """Bernoulli indicators eps_4 .. eps_n_max for one realization."""

    n_max: int
    key: StreamKey
    packed: np.ndarray  # uint8, big-endian bit order, bit 0 <-> n = 4

    @property
    def nbits(self) -> int:
        return self.n_max - 3

    def bools(self, n_hi: int | None = None) -> np.ndarray:
        """Unpacked indicator array for n = 4 .. n_hi (default n_max)."""
        count = self.nbits if n_hi is None else n_hi - 3
        if not 1 <= count <= self.nbits:
            raise ParameterError(f"n_hi outside [4, {self.n_max}]")
        return np.unpackbits(self.packed, count=count).astype(bool)

    def bools_range(self, a: int, b: int) -> np.ndarray:
        """Indicators for n in [a, b); avoids unpacking from the start."""
        if not 4 <= a < b <= self.n_max + 1:
            raise ParameterError(f"range [{a}, {b}) outside [4, {self.n_max + 1})")
        i0, i1 = a - 4, b - 4
        byte0 = i0 >> 3
        bits = np.unpackbits(self.packed[byte0 : (i1 + 7) >> 3], count=i1 - (byte0 << 3))
        return bits[i0 - (byte0 << 3) :].astype(bool)

    def bit(self, n: int) -> int:
        if not 4 <= n <= self.n_max:
            raise ParameterError(f"n={n} outside [4, {self.n_max}]")
        i = n - 4
        return int(self.packed[i >> 3] >> (7 - (i & 7))) & 1

    def popcount(self, n_hi: int | None = None) -> int:
        return int(self.bools(n_hi).sum())

    def save(self, path) -> None:
        """Raw packed dump with an 8-byte little-endian n_max header."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<Q", self.n_max))
            fh.write(self.packed.tobytes())

    @classmethod
    def load(cls, path, key: StreamKey | None = None) -> "IndicatorStream":
        with open(path, "rb") as fh:
            (n_max,) = struct.unpack("<Q", fh.read(8))
            packed = np.frombuffer(fh.read(), dtype=np.uint8).copy()
        expected = (n_max - 3 + 7) // 8
        if packed.size != expected:
            raise ValidationError(
                [f"packed payload has {packed.size} bytes, expected {expected}"]
            )
        return cls(n_max=int(n_max), key=key or StreamKey(0, "loaded"), packed=packed)


def success_probabilities(lo: int, hi: int) -> np.ndarray:
    """P(eps_n = 1) = 1/ln n for n in [lo, hi)."""
    return 1.0 / np.log(np.arange(lo, hi, dtype=np.float64))


def sample_indicators(n_max: int, key: StreamKey) -> IndicatorStream:
    """Draw one realization's indicators for n = 4 .. n_max."""
    if n_max < 4:
        raise ParameterError(f"n_max must be >= 4, got {n_max}")
    stream = derive_substream(key)
    chunks = []
    for a, b in _blocks(4, n_max):
        bits = stream.uniforms(b - a) < success_probabilities(a, b)
        chunks.append(np.packbits(bits))
    return IndicatorStream(n_max=n_max, key=key, packed=np.concatenate(chunks))


@dataclass
class QuasiPrimeSequence:
    """Sorted quasi-primes of one realization, beginning 2, 3."""

    values: np.ndarray  # int64, strictly increasing

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        problems = []
        if v.size < 2 or v[0] != 2 or v[1] != 3:
            problems.append("sequence must start with 2, 3")
        if v.size > 1 and not (np.diff(v) > 0).all():
            problems.append("sequence must be strictly increasing")
        if problems:
            raise ValidationError(problems)
        self.values = v

    @classmethod
    def from_indicators(cls, ind: IndicatorStream, n_hi: int | None = None):
        hits = 4 + np.flatnonzero(ind.bools(n_hi))
        return cls(values=np.concatenate(([2, 3], hits)))

    def upto(self, n: int) -> np.ndarray:
        return self.values[: int(np.searchsorted(self.values, n, side="right"))]


@dataclass
class CountingPath:
    """Counting function, exact moments and LIL ratio at checkpoints."""

    checkpoints: np.ndarray  # int64
    pi: np.ndarray           # realized quasi-prime counts
    mean: np.ndarray         # 2 + sum_{k=4}^{n} 1/ln k
    var: np.ndarray          # sum_{k=4}^{n} (1/ln k)(1 - 1/ln k)
    lil: np.ndarray          # |pi - mean| / (B_n sqrt(2 ln ln n)); NaN below n=16


LIL_MIN_N = 16  # LIL ratio reported only from here on


def counting_moments(checkpoints) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic E[Pi(n)] and Var[Pi(n)] at sorted checkpoints."""
    cps = _validated_checkpoints(checkpoints, n_max=None)
    mean = np.empty(cps.size)
    var = np.empty(cps.size)
    acc_m = 0.0
    acc_v = 0.0
    j = 0
    for a, b in _blocks(4, int(cps[-1])):
        q = success_probabilities(a, b)
        cm = np.cumsum(q)
        cv = np.cumsum(q * (1.0 - q))
        while j < cps.size and cps[j] < b:
            idx = int(cps[j]) - a
            mean[j] = 2.0 + acc_m + cm[idx]
            var[j] = acc_v + cv[idx]
            j += 1
        acc_m += cm[-1]
        acc_v += cv[-1]
    return mean, var


def _validated_checkpoints(checkpoints, n_max) -> np.ndarray:
    cps = np.asarray(checkpoints, dtype=np.int64)
    if cps.size == 0:
        raise ParameterError("checkpoints must be non-empty")
    if not (np.diff(cps) > 0).all():
        raise ParameterError("checkpoints must be strictly increasing")
    if cps[0] < 4:
        raise ParameterError("checkpoints must be >= 4")
    if n_max is not None and cps[-1] > n_max:
        raise ParameterError(f"checkpoint {cps[-1]} beyond sampled n_max={n_max}")
    return cps


def counting_path(ind: IndicatorStream, checkpoints) -> CountingPath:
    """Realized Pi(n), exact moments and the LIL ratio at each checkpoint."""
    cps = _validated_checkpoints(checkpoints, ind.n_max)
    mean, var = counting_moments(cps)
    pi = np.empty(cps.size, dtype=np.int64)
    acc = 2  # the deterministic quasi-primes 2 and 3
    j = 0
    for a, b in _blocks(4, int(cps[-1])):
        counts = np.cumsum(ind.bools_range(a, b))
        while j < cps.size and cps[j] < b:
            pi[j] = acc + counts[int(cps[j]) - a]
            j += 1
        acc += int(counts[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        lil = np.abs(pi - mean) / (np.sqrt(var) * np.sqrt(2.0 * np.log(np.log(cps))))
    lil[cps < LIL_MIN_N] = np.nan
    return CountingPath(checkpoints=cps, pi=pi, mean=mean, var=var, lil=lil)


def li(n: float) -> float:
    """Logarithmic integral from e by adaptive quadrature.

    Evaluated as int_1^{ln n} e^u/u du, which keeps the integrand smooth
    at machine scale.  Absolute error stays below 1e-9 throughout the
    n <= 1e7 range the experiments use; for larger n accuracy is limited
    by float64 ulps of the (large) result.
    """
    if n < math.e:
        raise DomainError(f"li requires n >= e, got {n}")
    if n == math.e:
        return 0.0
    value, err = quad(lambda u: math.exp(u) / u, 1.0, math.log(n),
                      epsabs=1e-10, epsrel=1e-13, limit=200)
    if err > max(1e-9, 64 * np.finfo(float).eps * abs(value)):
        raise DomainError(f"li quadrature error {err:.2e} too large at n={n}")
    return value


def sequence_log_probability(prefix, n: int) -> float:
    """Log-probability that a realization's quasi-primes <= n equal `prefix`.

    The prefix must start 2, 3 and stay within [2, n]; every k in 4..n
    contributes log(1/ln k) if k is in the prefix, else log(1 - 1/ln k).
    """
    values = prefix.values if isinstance(prefix, QuasiPrimeSequence) else np.asarray(
        prefix, dtype=np.int64
    )
    problems = []
    if values.size < 2 or values[0] != 2 or values[1] != 3:
        problems.append("prefix must start with 2, 3")
    if values.size > 1 and not (np.diff(values) > 0).all():
        problems.append("prefix must be strictly increasing")
    if n < 3:
        problems.append(f"n must be >= 3, got {n}")
    if values.size and values[-1] > n:
        problems.append(f"prefix element {values[-1]} exceeds n={n}")
    if problems:
        raise ValidationError(problems)
    members = set(int(v) for v in values[2:])
    total = 0.0
    for a, b in _blocks(4, n):
        lnk = np.log(np.arange(a, b, dtype=np.float64))
        hit = np.isin(np.arange(a, b), np.fromiter(members, dtype=np.int64, count=len(members)))
        total += float(np.sum(np.where(hit, -np.log(lnk), np.log1p(-1.0 / lnk))))
    return total


def membership_bits_from_logs(log_xs: np.ndarray, stream: RandomStream) -> np.ndarray:
    """Independent membership bits with P(bit_k) = 1/log_xs[k].

    Marginally consistent with a full indicator realization; the joint law
    is not (bits here are fresh draws, not views of one realization).
    """
    log_xs = np.asarray(log_xs, dtype=np.float64)
    if log_xs.size == 0:
        return np.zeros(0, dtype=bool)
    if log_xs.min() < math.log(4) - 1e-12:
        raise ParameterError("membership sampling requires all x >= 4")
    if log_xs.size > 1 and not (np.diff(log_xs) > 0).all():
        raise ParameterError("x values must be strictly increasing")
    return stream.uniforms(log_xs.size) < 1.0 / log_xs


def sparse_membership_sample(xs, key: StreamKey) -> np.ndarray:
    """Quasi-prime membership bits at selected integers xs (each >= 4).

    xs may contain arbitrarily large Python integers; only ln x is used.
    """
    logs = np.array([math.log(int(x)) for x in xs], dtype=np.float64)
    return membership_bits_from_logs(logs, derive_substream(key))
