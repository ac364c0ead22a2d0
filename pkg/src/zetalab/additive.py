"""Additive experiments over quasi-prime realizations.

Covers representation of integers as n = A_i + p_j for the thin sequence
A_i = floor(exp(c * i^alpha)), the analytic failure bounds from the
first Borel-Cantelli argument, and hit-counting experiments on sparse
integer sets (Fibonacci numbers, Mersenne-exponent weights, geometric
powers) whose reciprocal-log sums diverge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cramer import IndicatorStream, membership_bits_from_logs
from .errors import ParameterError
from .rng import StreamKey, derive_substream


@dataclass
class ThinSequence:
    """A_i = floor(exp(c * i^alpha)) for i = 0, 1, ... up to n_max.

    `values` keeps one entry per index i (duplicates from flooring are
    retained: the count nu(n) is defined over indices).  Representation
    searches use the deduplicated value set.
    """

    c: float
    alpha: float
    n_max: int
    values: np.ndarray  # int64, one entry per index, non-decreasing

    @property
    def unique_values(self) -> np.ndarray:
        return np.unique(self.values)

    def nu(self, n: int) -> int:
        """#{i : A_i <= n}, duplicates counted."""
        return int(np.searchsorted(self.values, n, side="right"))


def thin_sequence(c: float, alpha: float, n_max: int) -> ThinSequence:
    """Generate the thin sequence up to n_max."""
    if c <= 0:
        raise ParameterError(f"c must be positive, got {c}")
    if not 0 < alpha < 0.5:
        raise ParameterError(
            f"alpha={alpha} outside (0, 1/2); the representation theorem "
            "requires alpha < 1/2"
        )
    if n_max < 1:
        raise ParameterError(f"n_max={n_max} must be >= 1")
    i_limit = int(math.ceil(((math.log(n_max) + 1.0) / c) ** (1.0 / alpha))) + 2
    vals = []
    for i in range(i_limit):
        a = math.floor(math.exp(c * i**alpha))
        if a > n_max:
            break
        vals.append(a)
    return ThinSequence(c=c, alpha=alpha, n_max=n_max,
                        values=np.array(vals, dtype=np.int64))


@dataclass
class CoverageReport:
    """Representation scan over [n_lo, n_hi] for one realization."""

    n_lo: int
    n_hi: int
    covered: np.ndarray       # bool per n
    witness_i: np.ndarray     # thin-sequence index, -1 where uncovered
    witness_j: np.ndarray     # quasi-prime rank (1-based), -1 where uncovered
    witness_p: np.ndarray     # the quasi-prime used, -1 where uncovered
    bound_exp: np.ndarray     # exp(-nu(n)/ln n) per n
    bound_product: np.ndarray # prod_{A_i < n-3} (1 - 1/ln(n - A_i)) per n

    @property
    def failures(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)[~self.covered]

    @property
    def first_full_cover(self):
        """N0: start of the fully covered suffix in range, or None."""
        fails = self.failures
        if fails.size == 0:
            return self.n_lo
        if fails[-1] < self.n_hi:
            return int(fails[-1]) + 1
        return None


def representation_scan(ind: IndicatorStream, thin: ThinSequence,
                        n_lo: int, n_hi: int) -> CoverageReport:
    """Test n = A_i + p_j for every n in [n_lo, n_hi] on one realization."""
    if n_lo < 4:
        raise ParameterError(f"n_lo={n_lo} must be >= 4")
    if n_hi < n_lo:
        raise ParameterError("n_hi must be >= n_lo")
    if n_hi > ind.n_max:
        raise ParameterError(f"n_hi={n_hi} beyond sampled n_max={ind.n_max}")

    ns = np.arange(n_lo, n_hi + 1, dtype=np.int64)
    # quasi-prime membership and rank over [0, n_hi]
    qp = np.zeros(n_hi + 1, dtype=bool)
    qp[2] = qp[3] = True
    bits = ind.bools_range(4, n_hi + 1)
    qp[4:] = bits
    rank = np.zeros(n_hi + 1, dtype=np.int64)
    rank[2] = 1
    rank[3] = 2
    rank[4:] = 2 + np.cumsum(bits)

    uniq, first_idx = np.unique(thin.values, return_index=True)
    covered = np.zeros(ns.size, dtype=bool)
    wit_a = np.full(ns.size, -1, dtype=np.int64)
    for a, i0 in zip(uniq, first_idx):
        cand = ns - a
        valid = cand >= 2
        newly = valid & ~covered
        newly[newly] = qp[cand[newly]]
        covered |= newly
        wit_a[newly] = i0
    witness_p = np.where(wit_a >= 0, ns - thin.values[np.maximum(wit_a, 0)], -1)
    witness_j = np.where(wit_a >= 0, rank[np.maximum(witness_p, 0)], -1)

    nu_n = np.searchsorted(thin.values, ns, side="right")
    with np.errstate(divide="ignore"):
        bound_exp = np.exp(-nu_n / np.log(ns))
    bound_log = np.zeros(ns.size)
    for a in thin.values:  # duplicates contribute per the index count
        cand = ns - a
        mask = cand >= 4
        bound_log[mask] += np.log1p(-1.0 / np.log(cand[mask].astype(np.float64)))
    bound_product = np.exp(bound_log)

    return CoverageReport(
        n_lo=n_lo, n_hi=n_hi, covered=covered,
        witness_i=wit_a, witness_j=witness_j, witness_p=witness_p,
        bound_exp=bound_exp, bound_product=bound_product,
    )


@dataclass
class FailureBound:
    """Analytic bounds on P(no representation at n)."""

    n: int
    nu: int
    exp_bound: float       # exp(-nu(n)/ln n)
    sum_bound: float       # exp(-sum_i 1/ln(n - A_i)), same index range as product
    product_bound: float   # prod_{A_i < n-3} (1 - 1/ln(n - A_i))


def failure_bound(n: int, thin: ThinSequence) -> FailureBound:
    """Bounds at one n; the product over A_i < n-3 is the sharpest."""
    if n < 4:
        raise ParameterError(f"n={n} must be >= 4")
    nu_n = thin.nu(n)
    a = thin.values[thin.values < n - 3].astype(np.float64)
    lnterms = 1.0 / np.log(n - a)
    return FailureBound(
        n=n,
        nu=nu_n,
        exp_bound=math.exp(-nu_n / math.log(n)),
        sum_bound=math.exp(-float(np.sum(lnterms))),
        product_bound=float(np.exp(np.sum(np.log1p(-lnterms)))),
    )


# ---------------------------------------------------------------------------
# Sparse-set infinitude experiments


def _fibonacci_logs(K: int) -> np.ndarray:
    """ln F for the first K Fibonacci numbers >= 4 (exact integers)."""
    logs = []
    a, b = 1, 1
    while len(logs) < K:
        a, b = b, a + b
        if b >= 4:
            logs.append(math.log(b))
    return np.array(logs)


def _first_primes(K: int) -> list[int]:
    primes: list[int] = []
    n = 2
    while len(primes) < K:
        if all(n % p for p in primes if p * p <= n):
            primes.append(n)
        n += 1
    return primes


def _mersenne_exponent_logs(K: int) -> np.ndarray:
    """ln(2^p - 1) for the first K prime exponents with 2^p - 1 >= 4."""
    ln2 = math.log(2.0)
    exponents = [p for p in _first_primes(K + 1) if p >= 3][:K]
    return np.array([p * ln2 + math.log1p(-(2.0 ** (-p))) for p in exponents])


def _power_logs(m: int, c: float, alpha: float, K: int) -> np.ndarray:
    """ln(m^k_i) with k_i = floor(c * i^alpha / ln m), deduplicated."""
    if m < 2:
        raise ParameterError(f"base m={m} must be >= 2")
    if c <= 0 or not 0 < alpha < 1:
        raise ParameterError("custom preset needs c > 0 and 0 < alpha < 1")
    lnm = math.log(m)
    k_min = math.ceil(math.log(4.0) / lnm)
    logs: list[float] = []
    i = 1
    while len(logs) < K:
        k = math.floor(c * i**alpha / lnm)
        i += 1
        if k < k_min:
            continue
        val = k * lnm
        if not logs or val > logs[-1]:
            logs.append(val)
        if i > 10**7:
            raise ParameterError("custom preset grows too slowly to reach K terms")
    return np.array(logs)


def preset_log_weights(xs_spec, K: int) -> np.ndarray:
    """ln x_k for the requested sparse-set preset (or explicit list)."""
    if isinstance(xs_spec, str):
        if xs_spec == "fibonacci":
            return _fibonacci_logs(K)
        if xs_spec == "mersenne-exponents":
            return _mersenne_exponent_logs(K)
        raise ParameterError(f"unknown preset {xs_spec!r}")
    if isinstance(xs_spec, dict):
        return _power_logs(int(xs_spec["m"]), float(xs_spec["c"]),
                           float(xs_spec["alpha"]), K)
    xs = [int(x) for x in xs_spec][:K]
    if any(x < 4 for x in xs):
        raise ParameterError("explicit xs must all be >= 4")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ParameterError("explicit xs must be strictly increasing")
    return np.array([math.log(x) for x in xs])


@dataclass
class InfinitudeResult:
    """Cumulative quasi-prime hit counts on a sparse set, per replica."""

    log_xs: np.ndarray        # ln x_k, k = 1..K
    expected_cum: np.ndarray  # sum_{j<=k} 1/ln x_j
    counts: np.ndarray        # (replicas, K) cumulative hit counts

    def mean_count(self, k: int) -> float:
        """Mean cumulative hits among x_1..x_k across replicas."""
        return float(self.counts[:, k - 1].mean())


def infinitude_experiment(xs_spec, K: int, replicas: int,
                          key: StreamKey) -> InfinitudeResult:
    """Sample membership of x_1..x_K per replica and count hits."""
    if K < 0:
        raise ParameterError("K must be non-negative")
    if replicas < 1:
        raise ParameterError("replicas must be >= 1")
    log_xs = preset_log_weights(xs_spec, K)
    counts = np.zeros((replicas, log_xs.size), dtype=np.int64)
    for r in range(replicas):
        stream = derive_substream(
            StreamKey(key.master_seed, key.label, key.replica + r)
        )
        bits = membership_bits_from_logs(log_xs, stream)
        counts[r] = np.cumsum(bits)
    expected = np.cumsum(1.0 / log_xs) if log_xs.size else np.zeros(0)
    return InfinitudeResult(log_xs=log_xs, expected_cum=expected, counts=counts)
