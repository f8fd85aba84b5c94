"""Pair-census clustering analytics for planted energy landscapes.

Three toy models of the low-energy landscape: states scored by
Hamming weight (hwm), by a randomly permuted weight assignment
(rphwm), and by the weight of a random linear image (lshwm).  The
module provides the analytic pair-census growth exponents with their
forbidden regions, the corank distribution of random GF(2) matrices,
and empirical censuses at enumerable sizes to validate both.

Censuses count ordered pairs (each unordered pair twice, diagonal
included), so a shell's counts sum to its squared size.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from numba import njit

from .prng import _next_rand, derive_state

LN2 = math.log(2.0)
PRODUCT_TRUNCATION = 64


def entropy(p: float) -> float:
    """Natural-log binary entropy, S(0) = S(1) = 0 by continuity.

    Evaluated on the sorted pair (p, 1-p) so the p <-> 1-p symmetry
    holds bit-exactly whenever 1-p is itself representable.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("entropy argument outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    q = 1.0 - p
    a, b = (p, q) if p <= q else (q, p)
    return -a * math.log(a) - b * math.log(b)


def phi_hwm(x: float, eps: float) -> float:
    """Pair-census exponent of the weight model.

    Defined only where a weight-eps pair at distance x can close the
    triangle, i.e. x/2 <= min(eps, 1-eps); outside that region the
    census is exactly zero at every N and -inf is returned.
    """
    if not (0.0 <= x <= 1.0 and 0.0 <= eps <= 1.0):
        raise ValueError("phi arguments outside [0, 1]")
    if x / 2.0 > min(eps, 1.0 - eps):
        return -math.inf
    total = entropy(eps)
    if x > 0.0:
        total += eps * entropy(x / (2.0 * eps))
        total += (1.0 - eps) * entropy(x / (2.0 * (1.0 - eps)))
    return total


def phi_scrambled(x: float, eps: float) -> float:
    """Shared exponent of the permuted and linearly scrambled models."""
    if not (0.0 <= x <= 1.0 and 0.0 <= eps <= 1.0):
        raise ValueError("phi arguments outside [0, 1]")
    return -LN2 + entropy(x) + 2.0 * entropy(eps)


def _bisect_entropy(target: float, lo: float, hi: float) -> float:
    # entropy is strictly increasing on [0, 1/2]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if entropy(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def forbidden_onset() -> float:
    """Energy density where scrambled-model forbidden gaps first open.

    Root of S(eps) = ln(2)/2; below it phi_scrambled(x, eps) < 0 for
    an interval of distances.
    """
    return _bisect_entropy(LN2 / 2.0, 0.0, 0.5)


def forbidden_interval(eps: float):
    """Distance band (x_min, x_max) outside which pairs are forbidden.

    phi_scrambled is negative for 0 < x < x_min and x > x_max: pairs
    at this energy density can be neither too close nor too far.
    None when no such exclusion exists.  Endpoints are roots of
    phi_scrambled(x, eps) = 0 to ~1e-12.
    """
    target = LN2 - 2.0 * entropy(eps)
    if target <= 0.0:
        return None
    if target >= LN2:
        return (0.5, 0.5)
    x_min = _bisect_entropy(target, 0.0, 0.5)
    return (x_min, 1.0 - x_min)


def hwm_pair_count(N: int, w: int, d: int) -> int:
    """Ordered pairs of weight-w strings at distance d, exactly.

    Splitting the d differing positions evenly between gained and
    lost ones forces d even.
    """
    if d % 2 or d // 2 > min(w, N - w):
        return 0
    h = d // 2
    return math.comb(N, w) * math.comb(w, h) * math.comb(N - w, h)


def pair_probability_lshwm(N: int, eps: float) -> float:
    """Probability two fixed distinct nonzero states both land at eps.

    Their random-matrix images are independent and uniform, so the
    probability is (C(N, eps N)/2^N)^2, evaluated exactly.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    w = eps * N
    if abs(w - round(w)) > 1e-9:
        raise ValueError("eps N must be an integer")
    w = round(w)
    return float(Fraction(math.comb(N, w), 2 ** N) ** 2)


# ----------------------------------------------------------- rank statistics

def rank_distribution(alpha: int) -> float:
    """Corank probability of a large square uniform GF(2) matrix.

    2^(-alpha^2) times the tail/head products of (1 - 2^-j); the
    infinite product is truncated at j = 64, past double precision.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    num = 1.0
    for j in range(alpha + 1, PRODUCT_TRUNCATION + 1):
        num *= 1.0 - 2.0 ** -j
    den = 1.0
    for j in range(1, alpha + 1):
        den *= 1.0 - 2.0 ** -j
    return 2.0 ** (-alpha * alpha) * num / den


def kernel_statistics() -> tuple[float, float]:
    """Mean and variance of the kernel size 2^alpha under rank_distribution."""
    mean = 0.0
    second = 0.0
    for a in range(PRODUCT_TRUNCATION):
        p = rank_distribution(a)
        mean += 2.0 ** a * p
        second += 4.0 ** a * p
    return mean, second - mean * mean


@njit(cache=True, nogil=True)
def _corank_batch(n, samples, state, counts):
    rows = np.empty(n, dtype=np.uint64)
    mask = np.uint64(0xFFFFFFFFFFFFFFFF) if n == 64 else np.uint64((1 << n) - 1)
    for _ in range(samples):
        for i in range(n):
            rows[i] = _next_rand(state) & mask
        rank = 0
        for col in range(n):
            bit = np.uint64(1) << np.uint64(col)
            piv = -1
            for i in range(rank, n):
                if rows[i] & bit:
                    piv = i
                    break
            if piv < 0:
                continue
            tmp = rows[rank]
            rows[rank] = rows[piv]
            rows[piv] = tmp
            for i in range(rank + 1, n):
                if rows[i] & bit:
                    rows[i] ^= rows[rank]
            rank += 1
        counts[n - rank] += 1


def empirical_corank_counts(n: int, samples: int, seed: str) -> np.ndarray:
    """Corank histogram over uniform random n x n GF(2) matrices."""
    if not 1 <= n <= 64:
        raise ValueError("n must be in 1..64")
    counts = np.zeros(n + 1, dtype=np.int64)
    state = derive_state(seed, "corank")
    _corank_batch(n, samples, state, counts)
    return counts


# --------------------------------------------------------------- census data

class PhaseGrid:
    """Analytic exponent surface with its forbidden-region mask."""

    __slots__ = ("model", "x_grid", "eps_grid", "phi", "forbidden")

    def __init__(self, model: str, x_grid, eps_grid):
        if model not in ("hwm", "rphwm", "lshwm"):
            raise ValueError("unknown model")
        fn = phi_hwm if model == "hwm" else phi_scrambled
        self.model = model
        self.x_grid = np.asarray(x_grid, dtype=float)
        self.eps_grid = np.asarray(eps_grid, dtype=float)
        self.phi = np.empty((len(self.x_grid), len(self.eps_grid)))
        for i, x in enumerate(self.x_grid):
            for j, e in enumerate(self.eps_grid):
                self.phi[i, j] = fn(float(x), float(e))
        self.forbidden = self.phi < 0.0


class PairCensus:
    """Within-shell pair-distance counts, ordered convention.

    counts[d, j] is the number of ordered pairs at Hamming distance d
    among states of energy eps_list[j]*N, summed over disorder
    samples; nonzero_fraction[d, j] is the fraction of samples whose
    own count was nonzero (1.0 for the deterministic hwm census).
    """

    __slots__ = ("model", "N", "eps_list", "counts", "nonzero_fraction",
                 "samples", "meta")

    def __init__(self, model, N, eps_list, counts, nonzero_fraction,
                 samples, meta):
        self.model = model
        self.N = N
        self.eps_list = eps_list
        self.counts = counts
        self.nonzero_fraction = nonzero_fraction
        self.samples = samples
        self.meta = meta


def _weights_from_eps(N: int, eps_list) -> list[int]:
    ws = []
    for e in eps_list:
        w = e * N
        if abs(w - round(w)) > 1e-9:
            raise ValueError("eps grid must align to multiples of 1/N")
        ws.append(round(w))
    return ws


def _popcount_u64(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a)


def _pair_distance_hist(states: np.ndarray, N: int) -> np.ndarray:
    """Ordered pair-distance histogram, diagonal included."""
    hist = np.zeros(N + 1, dtype=np.int64)
    n = states.shape[0]
    if n == 0:
        return hist
    chunk = max(1, (1 << 22) // max(n, 1))
    for lo in range(0, n, chunk):
        block = states[lo:lo + chunk, None] ^ states[None, :]
        d = _popcount_u64(block).ravel()
        hist += np.bincount(d, minlength=N + 1).astype(np.int64)
    return hist


def _shell_states(N: int, w: int) -> np.ndarray:
    states = np.arange(1 << N, dtype=np.uint64)
    return states[_popcount_u64(states) == w]


def hwm_census_exact(N: int, eps_list) -> PairCensus:
    """Deterministic census of the weight model.

    Permutation symmetry makes the distance profile identical from
    every state of a shell, so one reference state's profile times
    the shell size gives the exact ordered count.
    """
    if N > 24:
        raise ValueError("shell enumeration limited to N <= 24")
    ws = _weights_from_eps(N, eps_list)
    counts = np.zeros((N + 1, len(ws)), dtype=np.int64)
    for j, w in enumerate(ws):
        shell = _shell_states(N, w)
        ref = np.uint64((1 << w) - 1)
        d = _popcount_u64(shell ^ ref)
        hist = np.bincount(d, minlength=N + 1).astype(np.int64)
        counts[:, j] = hist * len(shell)
    nz = (counts > 0).astype(float)
    return PairCensus("hwm", N, list(eps_list), counts, nz, 1,
                      {"pairs": "ordered, diagonal included"})


def _census_from_shells(model, N, eps_list, shell_fn, samples, rng):
    ws = _weights_from_eps(N, eps_list)
    counts = np.zeros((N + 1, len(ws)), dtype=np.int64)
    nz = np.zeros((N + 1, len(ws)), dtype=np.int64)
    for _ in range(samples):
        shells = shell_fn(ws, rng)
        for j, shell in enumerate(shells):
            hist = _pair_distance_hist(shell, N)
            counts[:, j] += hist
            nz[:, j] += hist > 0
    return PairCensus(model, N, list(eps_list), counts, nz / samples,
                      samples, {"pairs": "ordered, diagonal included"})


def rphwm_census(N: int, eps_list, samples: int, rng) -> PairCensus:
    """Sampled census under random reassignment of the weight multiset.

    A shell of energy w is then a uniform size-C(N,w) subset of all
    states: draw it directly, urn style.
    """
    if N > 24:
        raise ValueError("shell enumeration limited to N <= 24")

    def shells(ws, rng):
        out = []
        for w in ws:
            size = math.comb(N, w)
            members = rng.choice(1 << N, size=size, replace=False)
            out.append(members.astype(np.uint64))
        return out

    return _census_from_shells("rphwm", N, eps_list, shells, samples, rng)


def _random_image_energies(N: int, rng) -> np.ndarray:
    """Weights of S x over all x, via byte lookup tables of S's columns."""
    cols = rng.integers(0, 1 << N, size=N, dtype=np.uint64)
    lo = np.zeros(256, dtype=np.uint64)
    hi = np.zeros(1 << max(0, N - 8), dtype=np.uint64)
    nlo = min(8, N)
    for b in range(1 << nlo):
        acc = np.uint64(0)
        for i in range(nlo):
            if (b >> i) & 1:
                acc ^= cols[i]
        lo[b] = acc
    for b in range(1 << max(0, N - 8)):
        acc = np.uint64(0)
        for i in range(N - 8):
            if (b >> i) & 1:
                acc ^= cols[8 + i]
        hi[b] = acc
    states = np.arange(1 << N, dtype=np.uint64)
    images = lo[states & np.uint64(0xFF)] ^ hi[states >> np.uint64(8)]
    return _popcount_u64(images)


def lshwm_census(N: int, eps_list, samples: int, rng) -> PairCensus:
    """Sampled census where energy is the weight of a random linear image.

    The zero state maps to zero under every matrix, so nonzero shells
    census only nonzero states.
    """
    if not 8 < N <= 20:
        raise ValueError("lookup-table enumeration needs 8 < N <= 20")

    def shells(ws, rng):
        energies = _random_image_energies(N, rng)
        states = np.arange(1 << N, dtype=np.uint64)
        out = []
        for w in ws:
            shell = states[energies == w]
            if w > 0:
                shell = shell[shell != 0]
            out.append(shell)
        return out

    return _census_from_shells("lshwm", N, eps_list, shells, samples, rng)


def empirical_census(model: str, N: int, eps_list, samples: int,
                     rng) -> PairCensus:
    """Dispatch to the model censuses; hwm ignores samples."""
    if model == "hwm":
        return hwm_census_exact(N, eps_list)
    if model == "rphwm":
        return rphwm_census(N, eps_list, samples, rng)
    if model == "lshwm":
        return lshwm_census(N, eps_list, samples, rng)
    raise ValueError("unknown model")


def lshwm_joint_frequency(N: int, eps: float, x: int, y: int, samples: int,
                          rng) -> float:
    """Monte Carlo joint frequency of two states landing at energy eps N.

    Oracle for pair_probability_lshwm; x and y must be distinct and
    nonzero.
    """
    if x == y or x == 0 or y == 0:
        raise ValueError("states must be distinct and nonzero")
    w = _weights_from_eps(N, [eps])[0]
    hits = 0
    for _ in range(samples):
        cols = rng.integers(0, 1 << N, size=N, dtype=np.uint64)
        ix = np.uint64(0)
        iy = np.uint64(0)
        for i in range(N):
            if (x >> i) & 1:
                ix ^= cols[i]
            if (y >> i) & 1:
                iy ^= cols[i]
        if int(ix).bit_count() == w and int(iy).bit_count() == w:
            hits += 1
    return hits / samples


# ---------------------------------------------------------------- csv output

def write_phase_csv(grid: PhaseGrid, path: str):
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "eps", "phi", "forbidden"])
        for i, x in enumerate(grid.x_grid):
            for j, e in enumerate(grid.eps_grid):
                phi = grid.phi[i, j]
                wr.writerow([f"{x:.6f}", f"{e:.6f}",
                             "-inf" if phi == -math.inf else f"{phi:.9f}",
                             int(grid.forbidden[i, j])])


def write_census_csv(census: PairCensus, path: str):
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "eps", "count", "samples"])
        for j, e in enumerate(census.eps_list):
            for d in range(census.N + 1):
                wr.writerow([f"{d / census.N:.6f}", f"{e:.6f}",
                             int(census.counts[d, j]), census.samples])
