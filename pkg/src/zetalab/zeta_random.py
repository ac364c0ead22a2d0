"""Random zeta function of a quasi-prime realization.

Evaluates truncated Euler products, their log expansion
sum_m (1/m) sum_p p^(-ms), and the mean/variance series of the random
first power sum S1' = 3^(-s) + sum_{n>=4} eps_n n^(-s).  Includes the
critical-line scan machinery: centered partial sums, deterministic
variance columns, and concentration-decay estimates near sigma = 1/2.

Index convention: the indicator model starts at n = 4, and 3 is always
quasi-prime, so S1' carries a deterministic 3^(-s) term while 2^(-s)
belongs to the full S1 = 2^(-s) + S1'.  Centered quantities subtract the
realization mean, so the deterministic term cancels and only n >= 4
contributes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cramer import BLOCK, IndicatorStream, QuasiPrimeSequence, _blocks, sample_indicators
from .errors import ParameterError, SingularFactorError
from .rng import StreamKey, derive_substream

# Largest cutoff for which a scan replica materializes its bit array and
# evaluates the Euler product; beyond this only streamed S1 statistics.
ZETA_CUTOFF_CAP = 1 << 24

_NEGLECT = 1e-20  # per-element magnitude below which power sums are dropped


@dataclass
class SeriesMoments:
    """Partial mean/variance series of S1' in the Bernoulli-series form."""

    point: complex
    cutoff: int
    mean_partial: complex  # sum_{n=3}^{N} n^(-s) / ln n
    var_partial: float     # sum_{n=3}^{N} (1/ln n)(1 - 1/ln n) n^(-2 sigma)


@dataclass
class ComplexEvaluation:
    """One evaluation of the (log) Euler product at a complex point."""

    point: complex
    cutoff: int
    order: int
    value: complex
    log_value: complex
    tail_bound: float
    warning: str | None = None


def _fsum_complex(parts) -> complex:
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def _powers(ln_n: np.ndarray, s: complex) -> np.ndarray:
    """n^(-s) from ln n; real fast path when s is real."""
    if s.imag == 0.0:
        return np.exp(-s.real * ln_n)
    return np.exp(-s * ln_n)


def _cpow(n: float, s: complex) -> complex:
    """Scalar n^(-s) via the principal branch (n real positive)."""
    return complex(np.exp(-s * math.log(n)))


def s1_partial(ind: IndicatorStream, s: complex, N: int) -> complex:
    """Realized partial sum 3^(-s) + sum_{n=4..N} eps_n n^(-s).

    Block sums are combined with exactly rounded (fsum) accumulation.
    """
    s = complex(s)
    if not 4 <= N <= ind.n_max:
        raise ParameterError(f"N={N} outside [4, {ind.n_max}]")
    parts = [_cpow(3.0, s)]
    for a, b in _blocks(4, N):
        hits = np.flatnonzero(ind.bools_range(a, b))
        if hits.size:
            ln_h = np.log((a + hits).astype(np.float64))
            parts.append(complex(np.sum(_powers(ln_h, s))))
    return _fsum_complex(parts)


def s1_moments(s: complex, N: int) -> SeriesMoments:
    """Deterministic mean and variance series of S1' truncated at N."""
    s = complex(s)
    if N < 3:
        raise ParameterError(f"N={N} must be >= 3")
    mean_parts = []
    var_parts = []
    for a, b in _blocks(3, N):
        ln_n = np.log(np.arange(a, b, dtype=np.float64))
        q = 1.0 / ln_n
        mean_parts.append(complex(np.sum(_powers(ln_n, s) * q)))
        var_parts.append(np.sum(q * (1.0 - q) * np.exp(-2.0 * s.real * ln_n)))
    return SeriesMoments(
        point=s,
        cutoff=N,
        mean_partial=_fsum_complex(mean_parts),
        var_partial=math.fsum(var_parts),
    )


def s1_realization_mean(s: complex, N: int) -> complex:
    """E[S1'] under the implemented convention (eps_3 fixed at 1)."""
    s = complex(s)
    term3 = _cpow(3.0, s)
    return s1_moments(s, N).mean_partial + term3 * (1.0 - 1.0 / math.log(3.0))


def euler_product_partial(seq: QuasiPrimeSequence, s: complex, N: int) -> complex:
    """Direct product over quasi-primes p <= N of (1 - p^(-s))^(-1)."""
    s = complex(s)
    if s.real <= 0.0:
        raise ParameterError(f"euler product requires sigma > 0, got {s.real}")
    p = seq.upto(N)
    if p.size == 0:
        return 1.0 + 0.0j
    factors = 1.0 - _powers(np.log(p.astype(np.float64)), s).astype(complex)
    small = np.abs(factors) < 1e-14
    if small.any():
        bad = p[small][0]
        raise SingularFactorError(f"factor 1 - p^(-s) below 1e-14 at p={bad}, s={s}")
    return complex(1.0 / np.prod(factors))


def _log_euler_sum(ln_p: np.ndarray, s: complex, M: int | None,
                   tail_target: float = 1e-12, m_cap: int = 64):
    """Accumulate sum_{m} (1/m) sum_p p^(-ms) with a certified tail bound.

    ln_p must be ascending (duplicates allowed; multiplicity respected).
    Returns (log_value, order_used, tail_bound).  The geometric tail bound
    uses ratio 2^(-sigma), valid for any p >= 2 and sigma > 0.
    """
    sigma = s.real
    if sigma <= 0.0:
        raise ParameterError(f"log expansion requires sigma > 0, got {sigma}")
    if ln_p.size == 0:
        return 0.0 + 0.0j, 1, 0.0
    r = 2.0 ** (-sigma)
    z1 = _powers(ln_p, s).astype(complex)
    a1 = np.exp(-sigma * ln_p)
    zm = z1.copy()
    am = a1.copy()
    neglected = 0.0
    parts = []
    m = 1
    while True:
        parts.append(complex(np.sum(zm)) / m)
        tail = float(np.sum(am)) * r / ((m + 1) * (1.0 - r))
        done = (m >= M) if M is not None else (tail <= tail_target)
        if done or m >= m_cap or am.size == 0:
            break
        # drop entries already too small to matter; am is descending in p
        keep = int(np.searchsorted(-am, -_NEGLECT))
        if keep < am.size:
            neglected += (am.size - keep) * _NEGLECT * 2.0
            z1, a1, zm, am = z1[:keep], a1[:keep], zm[:keep], am[:keep]
        if am.size:
            zm *= z1
            am *= a1
        m += 1
    return _fsum_complex(parts), m, tail + neglected


def log_zeta_partial(seq: QuasiPrimeSequence, s: complex, N: int,
                     M: int | None = None) -> ComplexEvaluation:
    """Log expansion of the Euler product truncated at cutoff N, order M.

    M=None picks the smallest order whose geometric tail bound drops below
    1e-12 (capped at 64).  For sigma <= 1/2 the higher power sums are no
    longer covered by the convergence argument; the evaluation proceeds
    but carries a warning flag.
    """
    s = complex(s)
    if M is not None and M < 1:
        raise ParameterError(f"M={M} must be >= 1")
    p = seq.upto(N)
    log_value, order, tail = _log_euler_sum(
        np.log(p.astype(np.float64)), s, M
    )
    warning = None
    if s.real <= 0.5 and (M is None or M > 1):
        warning = "sigma <= 1/2: power sums beyond m=1 lack a convergence guarantee"
    return ComplexEvaluation(
        point=s, cutoff=N, order=order, value=complex(np.exp(log_value)),
        log_value=log_value, tail_bound=tail, warning=warning,
    )


# ---------------------------------------------------------------------------
# Critical-line scan


def _multi_checkpoint_moments(sigma: float, t: float, n_list) -> tuple[np.ndarray, np.ndarray]:
    """Centered-scan constants per cutoff: realization mean (n >= 4 part)
    and the Bernoulli-series variance (n >= 3) at each cutoff."""
    s = complex(sigma, t)
    n_list = np.asarray(n_list, dtype=np.int64)
    mean4 = np.empty(n_list.size, dtype=complex)
    var3 = np.empty(n_list.size)
    acc_m = 0.0 + 0.0j
    acc_v = 0.0
    ln3 = math.log(3.0)
    acc_v += (1.0 / ln3) * (1.0 - 1.0 / ln3) * math.exp(-2.0 * sigma * ln3)
    j = 0
    for a, b in _blocks(4, int(n_list[-1])):
        ln_n = np.log(np.arange(a, b, dtype=np.float64))
        q = 1.0 / ln_n
        cm = np.cumsum(_powers(ln_n, s) * q)
        cv = np.cumsum(q * (1.0 - q) * np.exp(-2.0 * sigma * ln_n))
        while j < n_list.size and n_list[j] < b:
            idx = int(n_list[j]) - a
            mean4[j] = acc_m + cm[idx]
            var3[j] = acc_v + cv[idx]
            j += 1
        acc_m += cm[-1]
        acc_v += cv[-1]
    return mean4, var3


def _scan_replica(args):
    """One realization's raw S1 sums (n >= 4) and optional zeta evaluations.

    Returns (raw_s1[sigma][cutoff], zeta[sigma][cutoff] | None).  Top-level
    function so process pools can pickle it.
    """
    (master_seed, label, replica, t, sigmas, n_list, want_zeta) = args
    key = StreamKey(master_seed, label, replica)
    max_n = int(n_list[-1])
    n_sig, n_cut = len(sigmas), len(n_list)
    raw = np.zeros((n_sig, n_cut), dtype=complex)
    zeta = np.full((n_sig, n_cut), np.nan, dtype=complex)
    tails = np.full((n_sig, n_cut), np.nan)

    if max_n <= ZETA_CUTOFF_CAP:
        ind = sample_indicators(max_n, key)
        hits = 4 + np.flatnonzero(ind.bools())
        ln_h = np.log(hits.astype(np.float64))
        for k, n in enumerate(n_list):
            cut = int(np.searchsorted(hits, n, side="right"))
            ln_cut = ln_h[:cut]
            for i, sigma in enumerate(sigmas):
                s = complex(sigma, t)
                raw[i, k] = complex(np.sum(_powers(ln_cut, s)))
                if want_zeta[i]:
                    ln_full = np.concatenate(([math.log(2.0), math.log(3.0)], ln_cut))
                    log_val, _, tail = _log_euler_sum(ln_full, s, None)
                    zeta[i, k] = np.exp(log_val)
                    tails[i, k] = tail
        return raw, zeta, tails

    # streamed path: S1 statistics only
    stream = derive_substream(key)
    acc = np.zeros((n_sig,), dtype=complex)
    prev = 4
    for k, n in enumerate(n_list):
        for a, b in _blocks(prev, int(n)):
            ln_n = np.log(np.arange(a, b, dtype=np.float64))
            u = stream.uniforms(b - a)
            idx = np.flatnonzero(u < 1.0 / ln_n)
            if idx.size:
                ln_sel = ln_n[idx]
                phase = np.exp(-1j * t * ln_sel) if t != 0.0 else None
                for i, sigma in enumerate(sigmas):
                    w = np.exp(-sigma * ln_sel)
                    acc[i] += np.sum(w * phase) if phase is not None else np.sum(w)
        prev = int(n) + 1
        raw[:, k] = acc
    return raw, zeta, tails


@dataclass
class ScanResult:
    """Per-cell rows and across-replica summary of a critical-line scan."""

    rows: list
    summary: list


def critical_line_scan(key: StreamKey, t: float, sigmas, n_list, replicas: int,
                       threads: int = 1) -> ScanResult:
    """Evaluate |zeta_N|, |S1' - E| and var series on a sigma ladder.

    sigmas must be strictly descending (a ladder approaching the critical
    line).  The Euler product column is evaluated only for sigma > 1/2 and
    cutoffs within ZETA_CUTOFF_CAP; other cells carry NaN.  The variance
    column extends to any sigma.
    """
    sigmas = [float(x) for x in sigmas]
    if len(sigmas) == 0 or any(b >= a for a, b in zip(sigmas, sigmas[1:])):
        raise ParameterError("sigmas must be strictly descending")
    if min(sigmas) <= 0.0:
        raise ParameterError("sigmas must be positive")
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 4:
        raise ParameterError("cutoffs must be strictly increasing and >= 4")
    if replicas < 1:
        raise ParameterError("replicas must be >= 1")

    want_zeta = tuple(
        sigma > 0.5 and n_list[-1] <= ZETA_CUTOFF_CAP for sigma in sigmas
    )
    mean4 = {}
    var3 = {}
    for sigma in sigmas:
        mean4[sigma], var3[sigma] = _multi_checkpoint_moments(sigma, t, n_list)

    cells = [
        (key.master_seed, key.label, key.replica + r, t, tuple(sigmas),
         tuple(n_list), want_zeta)
        for r in range(replicas)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_scan_replica, cells))
    else:
        results = [_scan_replica(c) for c in cells]

    rows = []
    for r, (raw, zeta, tails) in enumerate(results):
        for i, sigma in enumerate(sigmas):
            for k, n in enumerate(n_list):
                centered = abs(raw[i, k] - mean4[sigma][k])
                z = zeta[i, k]
                rows.append({
                    "sigma": sigma, "t": t, "N": n, "replica": key.replica + r,
                    "re_zeta": z.real, "im_zeta": z.imag,
                    "abs_zeta": abs(z) if not np.isnan(z.real) else float("nan"),
                    "abs_centered_s1": centered,
                    "var_partial": float(var3[sigma][k]),
                    "tail_bound": float(tails[i, k]),
                })
    summary = []
    for i, sigma in enumerate(sigmas):
        for k, n in enumerate(n_list):
            cen = np.array([
                row["abs_centered_s1"] for row in rows
                if row["sigma"] == sigma and row["N"] == n
            ])
            az = np.array([
                row["abs_zeta"] for row in rows
                if row["sigma"] == sigma and row["N"] == n
            ])
            entry = {
                "sigma": sigma, "N": n,
                "centered_q25": float(np.quantile(cen, 0.25)),
                "centered_q50": float(np.quantile(cen, 0.50)),
                "centered_q75": float(np.quantile(cen, 0.75)),
            }
            if not np.isnan(az).any():
                entry.update({
                    "abs_zeta_q25": float(np.quantile(az, 0.25)),
                    "abs_zeta_q50": float(np.quantile(az, 0.50)),
                    "abs_zeta_q75": float(np.quantile(az, 0.75)),
                })
            summary.append(entry)
    return ScanResult(rows=rows, summary=summary)


def _grid_replica(args):
    """One realization evaluated over a (sigma, t) grid at cutoff N."""
    (master_seed, label, replica, sigmas, ts, N) = args
    key = StreamKey(master_seed, label, replica)
    ind = sample_indicators(N, key)
    hits = 4 + np.flatnonzero(ind.bools())
    ln_h = np.log(hits.astype(np.float64))
    ln_full = np.concatenate(([math.log(2.0), math.log(3.0)], ln_h))
    raw = np.zeros((len(ts), len(sigmas)), dtype=complex)
    zeta = np.full((len(ts), len(sigmas)), np.nan, dtype=complex)
    tails = np.full((len(ts), len(sigmas)), np.nan)
    for j, t in enumerate(ts):
        for i, sigma in enumerate(sigmas):
            s = complex(sigma, t)
            raw[j, i] = complex(np.sum(_powers(ln_h, s)))
            if sigma > 0.5:
                log_val, _, tail = _log_euler_sum(ln_full, s, None)
                zeta[j, i] = np.exp(log_val)
                tails[j, i] = tail
    return raw, zeta, tails


def zeta_grid(key: StreamKey, sigmas, ts, N: int, replicas: int,
              threads: int = 1) -> list[dict]:
    """Rows of zeta/centered-S1 statistics over a (sigma, t) grid.

    One realization per replica is shared by every grid point.
    """
    sigmas = [float(x) for x in sigmas]
    ts = [float(x) for x in ts]
    if min(sigmas) <= 0.0:
        raise ParameterError("sigmas must be positive")
    if N < 4 or N > ZETA_CUTOFF_CAP:
        raise ParameterError(f"N must be in [4, {ZETA_CUTOFF_CAP}]")
    if replicas < 1:
        raise ParameterError("replicas must be >= 1")
    mean4 = {}
    var3 = {}
    for t in ts:
        for sigma in sigmas:
            m, v = _multi_checkpoint_moments(sigma, t, [N])
            mean4[(sigma, t)] = m[0]
            var3[(sigma, t)] = v[0]
    cells = [
        (key.master_seed, key.label, key.replica + r, tuple(sigmas),
         tuple(ts), N)
        for r in range(replicas)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_grid_replica, cells))
    else:
        results = [_grid_replica(c) for c in cells]
    rows = []
    for r, (raw, zeta, tails) in enumerate(results):
        for j, t in enumerate(ts):
            for i, sigma in enumerate(sigmas):
                z = zeta[j, i]
                rows.append({
                    "sigma": sigma, "t": t, "N": N, "replica": key.replica + r,
                    "re_zeta": z.real, "im_zeta": z.imag,
                    "abs_zeta": abs(z) if not np.isnan(z.real) else float("nan"),
                    "abs_centered_s1": abs(raw[j, i] - mean4[(sigma, t)]),
                    "var_partial": float(var3[(sigma, t)]),
                    "tail_bound": float(tails[j, i]),
                })
    return rows


def centered_s1_values(key: StreamKey, sigma: float, t: float, n_list,
                       replicas: int, threads: int = 1) -> np.ndarray:
    """Complex centered sums S1'(N) - E[S1'(N)] per (replica, cutoff).

    Each replica is one realization; entries across cutoffs are nested
    partial sums of that realization.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 4:
        raise ParameterError("cutoffs must be strictly increasing and >= 4")
    mean4, _ = _multi_checkpoint_moments(float(sigma), float(t), n_list)
    cells = [
        (key.master_seed, key.label, key.replica + r, float(t),
         (float(sigma),), tuple(n_list), (False,))
        for r in range(replicas)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_scan_replica, cells))
    else:
        results = [_scan_replica(c) for c in cells]
    out = np.empty((replicas, len(n_list)), dtype=complex)
    for r, (raw, _, _) in enumerate(results):
        out[r] = raw[0] - mean4
    return out


def concentration_decay(key: StreamKey, sigma: float, n_list, replicas: int,
                        level: float = 0.5, t: float = 0.0,
                        threads: int = 1) -> list[float]:
    """Empirical P(|S1' - E[S1']| <= level) at each cutoff in n_list.

    Estimated over nested partial sums: each replica is one realization
    scanned at every cutoff.
    """
    centered = centered_s1_values(key, sigma, t, n_list, replicas,
                                  threads=threads)
    return [float(np.mean(np.abs(centered[:, k]) <= level))
            for k in range(len(list(n_list)))]
