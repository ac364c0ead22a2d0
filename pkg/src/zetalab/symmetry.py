"""Locally-symmetric pseudo-prime blocks and their zeta analogue.

Block n spans [A_n, A_{n+1}] with A_{n+1} = A_n + 2*B_n and center
C_n = A_n + B_n.  k offsets xi = floor(B_n * eta), eta ~ U(0,1), are drawn
once per block; pseudo-primes are the mirrored pair C_n -/+ xi (the
reflection reuses the same xi values, which is what makes the first-order
terms of sum_j P^(-s) cancel pairwise).  Duplicates are kept with
multiplicity throughout.

Block bookkeeping (A, B, C) is exact Python integer arithmetic, so the
recurrence identities hold for arbitrarily large widths; offsets live in
float64 (exact integers whenever B < 2^53, which covers every regime the
experiments here probe).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ModelIntegrityError, ParameterError
from .rng import StreamKey, derive_substream
from .zeta_random import ComplexEvaluation, _fsum_complex, _log_euler_sum

_INT64_SAFE = 2**62


@dataclass(frozen=True)
class BlockParams:
    """Width exponent, offsets-per-block rule, and number of blocks."""

    beta: float
    n_blocks: int
    k_rule: str = "sqrt"  # "sqrt": k = ceil(sqrt(n)); "const": k = k0
    k0: int = 1

    def __post_init__(self):
        if self.beta <= 0:
            raise ParameterError(f"beta={self.beta} must be positive")
        if self.n_blocks < 1:
            raise ParameterError("n_blocks must be >= 1")
        if self.k_rule not in ("sqrt", "const"):
            raise ParameterError(f"unknown k_rule {self.k_rule!r}")
        if self.k_rule == "const" and self.k0 < 1:
            raise ParameterError("k0 must be >= 1")

    def width(self, n: int) -> int:
        """B_n = floor(n^beta), exact for integer beta."""
        if float(self.beta).is_integer():
            return n ** int(self.beta)
        return max(1, math.floor(math.exp(self.beta * math.log(n))))

    def k(self, n: int) -> int:
        return math.ceil(math.sqrt(n)) if self.k_rule == "sqrt" else self.k0


@dataclass
class SymmetricBlock:
    """One block: bounds, center, sampled offsets, mirrored pseudo-primes."""

    n: int
    A: int
    B: int
    C: int
    k: int
    xi: np.ndarray      # float64 integral offsets in [0, B)
    primes: np.ndarray  # length 2k: C - xi then C + xi; int64 when safe


def _sample_offsets(B: int, k: int, stream) -> np.ndarray:
    u = stream.uniforms(k)
    return np.minimum(float(B) - 1.0, np.floor(float(B) * u))


def _make_block(n: int, A: int, params: BlockParams, key: StreamKey) -> SymmetricBlock:
    B = params.width(n)
    C = A + B
    k = params.k(n)
    stream = derive_substream(
        StreamKey(key.master_seed, f"{key.label}/block{n}", key.replica)
    )
    xi = _sample_offsets(B, k, stream)
    if A + 2 * B < _INT64_SAFE:
        xi_i = xi.astype(np.int64)
        primes = np.concatenate((C - xi_i, C + xi_i))
    else:
        cf = float(C)
        primes = np.concatenate((cf - xi, cf + xi))
    if primes.min() < 2:
        raise ModelIntegrityError(f"pseudo-prime below 2 in block {n}")
    return SymmetricBlock(n=n, A=A, B=B, C=C, k=k, xi=xi, primes=primes)


def iter_blocks(params: BlockParams, key: StreamKey):
    """Blocks 1..n_blocks; A advances by the exact recurrence."""
    A = 1
    for n in range(1, params.n_blocks + 1):
        block = _make_block(n, A, params, key)
        yield block
        A += 2 * block.B


def build_blocks(params: BlockParams, key: StreamKey) -> list[SymmetricBlock]:
    return list(iter_blocks(params, key))


def _ln_primes(block: SymmetricBlock) -> np.ndarray:
    """ln P_{n,j} in mirrored order, accurate even for huge centers."""
    ln_c = math.log(block.C)
    ratio = block.xi / float(block.C)
    return np.concatenate((ln_c + np.log1p(-ratio), ln_c + np.log1p(ratio)))


@dataclass
class FirstSumCheck:
    """Exact block power sum against its symmetry-expansion prediction."""

    n: int
    exact: complex
    predicted: complex
    residual: float


def block_first_sum(block: SymmetricBlock, s: complex) -> FirstSumCheck:
    """Compare sum_j P^(-s) with 2k/C^s + s(s+1) * sum(xi^2) / C^(s+2).

    The prediction uses the realization's own sum(xi^2) (second-order
    term); the residual is then the third-and-higher-order remainder of
    the mirrored Taylor expansion.
    """
    s = complex(s)
    if s.real <= 0:
        raise ParameterError(f"block sum requires sigma > 0, got {s.real}")
    if block.primes.min() < 2:
        raise ModelIntegrityError(f"pseudo-prime below 2 in block {block.n}")
    ln_p = _ln_primes(block)
    if s.imag == 0.0:
        exact = complex(np.sum(np.exp(-s.real * ln_p)))
    else:
        exact = complex(np.sum(np.exp(-s * ln_p)))
    ln_c = math.log(block.C)
    c_pow = complex(np.exp(-s * ln_c))
    c_pow2 = complex(np.exp(-(s + 2.0) * ln_c))
    sum_xi2 = float(np.sum(block.xi * block.xi))
    predicted = 2.0 * block.k * c_pow + s * (s + 1.0) * sum_xi2 * c_pow2
    return FirstSumCheck(
        n=block.n, exact=exact, predicted=predicted,
        residual=abs(exact - predicted),
    )


@dataclass
class CltCheck:
    """Standardized fluctuation statistic of sum(xi^2) across replicas."""

    stats: np.ndarray
    mean: float
    variance: float
    skew: float
    warning: str | None


def clt_fluctuation_check(block: SymmetricBlock, replicas: int,
                          key: StreamKey) -> CltCheck:
    """Resample the block's offsets and standardize sum(xi^2).

    The statistic (sum xi^2 - k B^2/3) / (B^2 sqrt(4k/45)) is asymptotically
    standard normal: E[eta^2] = 1/3 and Var[eta^2] = 4/45 for eta ~ U(0,1).
    """
    if replicas < 1:
        raise ParameterError("replicas must be >= 1")
    B = float(block.B)
    k = block.k
    warning = None
    if k < 30:
        warning = f"k={k} below the CLT regime (need k >= 30)"
    scale = B * B * math.sqrt(4.0 * k / 45.0)
    center = k * B * B / 3.0
    stats = np.empty(replicas)
    for r in range(replicas):
        stream = derive_substream(
            StreamKey(key.master_seed, f"{key.label}/clt-n{block.n}",
                      key.replica + r)
        )
        xi = _sample_offsets(block.B, k, stream)
        stats[r] = (float(np.sum(xi * xi)) - center) / scale
    mean = float(stats.mean())
    var = float(stats.var(ddof=1)) if replicas > 1 else 0.0
    sd = math.sqrt(var) if var > 0 else 1.0
    skew = float(np.mean(((stats - mean) / sd) ** 3)) if replicas > 2 else 0.0
    return CltCheck(stats=stats, mean=mean, variance=var, skew=skew,
                    warning=warning)


def tilde_zeta_partial(blocks, s: complex, M: int | None = None) -> ComplexEvaluation:
    """Euler-product zeta analogue over block pseudo-primes (log route).

    Multiplicity is kept: duplicate offsets contribute duplicate factors.
    """
    s = complex(s)
    if s.real <= 0:
        raise ParameterError(f"tilde zeta requires sigma > 0, got {s.real}")
    blocks = list(blocks)
    if not blocks:
        return ComplexEvaluation(point=s, cutoff=0, order=1,
                                 value=1.0 + 0.0j, log_value=0.0 + 0.0j,
                                 tail_bound=0.0)
    ln_p = np.sort(np.concatenate([_ln_primes(b) for b in blocks]))
    log_value, order, tail = _log_euler_sum(ln_p, s, M)
    return ComplexEvaluation(
        point=s, cutoff=blocks[-1].n, order=order,
        value=complex(np.exp(log_value)), log_value=log_value,
        tail_bound=tail,
    )


def tilde_product_partial(blocks, s: complex) -> complex:
    """Direct product over block pseudo-primes of (1 - P^(-s))^(-1)."""
    from .errors import SingularFactorError

    s = complex(s)
    if s.real <= 0:
        raise ParameterError(f"tilde product requires sigma > 0, got {s.real}")
    value = 1.0 + 0.0j
    for b in blocks:
        factors = 1.0 - np.exp(-s * _ln_primes(b)).astype(complex)
        if np.abs(factors).min() < 1e-14:
            raise SingularFactorError(
                f"singular Euler factor in block {b.n} at s={s}"
            )
        value /= complex(np.prod(factors))
    return value


# ---------------------------------------------------------------------------
# Convergence-region scan

CAUCHY_CRITERION = (
    "partial sums S at checkpoints (N, 2N, 4N): converged iff "
    "|S3-S2| < 1e-6 * (1 + |S3|) and (|S3-S2| < |S2-S1| or |S3-S2| == 0)"
)
_CAUCHY_REL = 1e-6


def _region_cell(args):
    """Partial sums of sum_j P^(-eps) at block-count checkpoints."""
    (master, label, replica, beta, eps_tuple, n_blocks, checkpoints,
     k_rule, k0) = args
    params = BlockParams(beta=beta, n_blocks=n_blocks, k_rule=k_rule, k0=k0)
    key = StreamKey(master, f"{label}/beta{beta:g}", replica)
    sums = np.zeros(len(eps_tuple))
    out = np.zeros((len(eps_tuple), len(checkpoints)))
    cp_idx = 0
    for block in iter_blocks(params, key):
        ln_p = _ln_primes(block)
        for e, eps in enumerate(eps_tuple):
            sums[e] += float(np.sum(np.exp(-eps * ln_p)))
        while cp_idx < len(checkpoints) and block.n == checkpoints[cp_idx]:
            out[:, cp_idx] = sums
            cp_idx += 1
    return out


@dataclass
class RegionScanResult:
    """Convergence flags over the (beta, eps) grid."""

    rows: list                 # per (beta, eps, replica, checkpoint)
    converged: dict            # (beta, eps) -> fraction of replicas flagged
    checkpoints: tuple
    criterion: str = CAUCHY_CRITERION


def convergence_region_scan(beta_list, eps_list, n_blocks: int, replicas: int,
                            key: StreamKey, k_rule: str = "sqrt", k0: int = 1,
                            threads: int = 1) -> RegionScanResult:
    """Scan the (beta, eps) grid with a finite-n Cauchy convergence proxy.

    Blocks are shared across eps within one (beta, replica) cell, so the
    grid columns see the same realizations.
    """
    beta_list = [float(b) for b in beta_list]
    eps_list = [float(e) for e in eps_list]
    if min(eps_list) <= 0:
        raise ParameterError("eps values must be positive")
    if n_blocks < 4:
        raise ParameterError("n_blocks must be >= 4")
    checkpoints = (n_blocks // 4, n_blocks // 2, n_blocks)
    cells = [
        (key.master_seed, key.label, key.replica + r, beta, tuple(eps_list),
         n_blocks, checkpoints, k_rule, k0)
        for beta in beta_list
        for r in range(replicas)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_region_cell, cells))
    else:
        results = [_region_cell(c) for c in cells]

    rows = []
    flags: dict = {}
    idx = 0
    for beta in beta_list:
        for r in range(replicas):
            out = results[idx]
            idx += 1
            for e, eps in enumerate(eps_list):
                s1, s2, s3 = out[e]
                d1, d2 = abs(s2 - s1), abs(s3 - s2)
                ok = bool((d2 < d1 or d2 == 0.0)
                          and d2 < _CAUCHY_REL * (1.0 + abs(s3)))
                flags.setdefault((beta, eps), []).append(ok)
                for cp, val in zip(checkpoints, out[e]):
                    rows.append({
                        "beta": beta, "eps": eps, "replica": key.replica + r,
                        "n_blocks": n_blocks, "checkpoint": cp,
                        "abs_partial": float(val), "converged": int(ok),
                    })
    converged = {ke: float(np.mean(v)) for ke, v in flags.items()}
    return RegionScanResult(rows=rows, converged=converged,
                            checkpoints=checkpoints)
