"""Parallel tempering Monte Carlo on p-local spin instances.

A run sweeps N_T replicas on a geometric inverse-temperature ladder,
sequential Metropolis within each sweep, one adjacent-pair exchange
pass per sweep.  The stopping rule is the planted target: quit as
soon as any replica's unsatisfied-term count hits t.  Flip costs are
incremental via a variable-to-terms index and cached per-term signs.

The compiled kernel is the production path; the Replica class and
the Python sweep/exchange functions are the slow reference used by
the oracle tests.
"""

from __future__ import annotations

import math
import time

import numpy as np
from numba import njit

from .gf2 import BitVector
from .prng import _next_rand, _next_unit, derive_state


class PtConfig:
    """Ladder and budget knobs; defaults follow the benchmark setup."""

    __slots__ = ("num_replicas", "beta_min", "beta_max", "max_sweeps",
                 "seed", "repetitions")

    def __init__(self, num_replicas: int = 16, beta_min: float = 0.1,
                 beta_max: float = 1.0, max_sweeps: int = 10_000_000,
                 seed: str = "pt", repetitions: int = 10):
        if num_replicas < 2:
            raise ValueError("need at least two replicas")
        if not (0 < beta_min < beta_max):
            raise ValueError("require 0 < beta_min < beta_max")
        self.num_replicas = num_replicas
        self.beta_min = beta_min
        self.beta_max = beta_max
        self.max_sweeps = max_sweeps
        self.seed = seed
        self.repetitions = repetitions


def beta_ladder(num_replicas: int, beta_min: float, beta_max: float) -> np.ndarray:
    """Geometric ladder: constant ratio between neighbours."""
    i = np.arange(num_replicas)
    return beta_min * (beta_max / beta_min) ** (i / (num_replicas - 1))


class TermTables:
    """Flattened instance arrays shared by kernel and reference paths."""

    __slots__ = ("num_vars", "coeffs", "term_starts", "term_vars",
                 "var_starts", "var_terms", "offset")

    def __init__(self, pl):
        self.num_vars = pl.num_vars
        self.offset = pl.offset
        self.coeffs = np.array([c for c, _ in pl.terms], dtype=np.int64)
        starts = [0]
        flat = []
        for _, vs in pl.terms:
            flat.extend(vs)
            starts.append(len(flat))
        self.term_starts = np.array(starts, dtype=np.int64)
        self.term_vars = np.array(flat, dtype=np.int64)
        by_var = [[] for _ in range(pl.num_vars)]
        for tid, (_, vs) in enumerate(pl.terms):
            for v in vs:
                by_var[v].append(tid)
        vstarts = [0]
        vflat = []
        for lst in by_var:
            vflat.extend(lst)
            vstarts.append(len(vflat))
        self.var_starts = np.array(vstarts, dtype=np.int64)
        self.var_terms = np.array(vflat, dtype=np.int64)


class Replica:
    """One chain: spins, cached term signs and energy, its beta slot."""

    __slots__ = ("spins", "signs", "energy", "beta")

    def __init__(self, spins: np.ndarray, tables: TermTables, beta: float):
        self.spins = spins.astype(np.int8)
        self.beta = beta
        self.recompute(tables)

    def recompute(self, tables: TermTables):
        nT = tables.coeffs.shape[0]
        self.signs = np.empty(nT, dtype=np.int8)
        for tid in range(nT):
            s = 1
            for idx in range(tables.term_starts[tid], tables.term_starts[tid + 1]):
                s *= self.spins[tables.term_vars[idx]]
            self.signs[tid] = s
        self.energy = int(np.dot(tables.coeffs, self.signs))

    def unsat(self, tables: TermTables) -> int:
        return (self.energy + tables.offset) // 2

    def check(self, tables: TermTables):
        """Cached bookkeeping must match recomputation from scratch."""
        signs, energy = self.signs, self.energy
        self.recompute(tables)
        ok = energy == self.energy and np.array_equal(signs, self.signs)
        if not ok:
            raise AssertionError("replica cache drifted from recomputation")


def init_replica(tables: TermTables, beta: float, rng) -> Replica:
    spins = (rng.integers(0, 2, tables.num_vars) * 2 - 1).astype(np.int8)
    return Replica(spins, tables, beta)


def flip_delta(replica: Replica, tables: TermTables, j: int) -> int:
    """Energy change of flipping spin j, from cached term signs."""
    d = 0
    for idx in range(tables.var_starts[j], tables.var_starts[j + 1]):
        tid = tables.var_terms[idx]
        d += tables.coeffs[tid] * replica.signs[tid]
    return -2 * int(d)


def sweep(replica: Replica, tables: TermTables, rng) -> int:
    """Sequential Metropolis pass over all spins; returns accepted count."""
    accepted = 0
    for j in range(tables.num_vars):
        dE = flip_delta(replica, tables, j)
        if dE < 0 or rng.random() < math.exp(-replica.beta * dE):
            replica.spins[j] = -replica.spins[j]
            for idx in range(tables.var_starts[j], tables.var_starts[j + 1]):
                tid = tables.var_terms[idx]
                replica.signs[tid] = -replica.signs[tid]
            replica.energy += dE
            accepted += 1
    return accepted


def replica_exchange(replicas: list, rng) -> list:
    """One pass over adjacent pairs; swap configurations, keep betas.

    Requires replicas sorted by beta.  Returns per-pair swap flags.
    """
    flags = []
    for i in range(len(replicas) - 1):
        a, b = replicas[i], replicas[i + 1]
        f = (b.beta - a.beta) * (b.energy - a.energy)
        do = f >= 0 or rng.random() < math.exp(f)
        if do:
            a.spins, b.spins = b.spins, a.spins
            a.signs, b.signs = b.signs, a.signs
            a.energy, b.energy = b.energy, a.energy
        flags.append(do)
    return flags


class PtResult:
    __slots__ = ("success", "config", "unsat", "sweeps", "wall_time",
                 "cpu_time", "replica", "exchange_attempts",
                 "exchange_accepts", "seed")

    def __init__(self, success, config, unsat, sweeps, wall_time, cpu_time,
                 replica, exchange_attempts, exchange_accepts, seed):
        self.success = success
        self.config = config
        self.unsat = unsat
        self.sweeps = sweeps
        self.wall_time = wall_time
        self.cpu_time = cpu_time
        self.replica = replica
        self.exchange_attempts = exchange_attempts
        self.exchange_accepts = exchange_accepts
        self.seed = seed

    def __repr__(self):
        return (f"PtResult(success={self.success}, sweeps={self.sweeps}, "
                f"wall={self.wall_time:.3f}s)")


@njit(cache=True, nogil=True)
def _pt_kernel(coeffs, term_starts, term_vars, var_starts, var_terms,
               betas, target_e, max_sweeps, state, spins_out, counters,
               ex_attempts, ex_accepts):
    """Full PT run; returns on first replica reaching the target energy.

    counters: [sweeps_done, found_flag, found_replica].
    """
    nR = betas.shape[0]
    nv = var_starts.shape[0] - 1
    nT = coeffs.shape[0]

    # dE is an even integer bounded by the worst per-spin coefficient
    # mass, so Metropolis thresholds tabulate per replica
    max_de = 0
    for j in range(nv):
        mass = 0
        for idx in range(var_starts[j], var_starts[j + 1]):
            c = coeffs[var_terms[idx]]
            mass += c if c >= 0 else -c
        if 2 * mass > max_de:
            max_de = 2 * mass
    accept = np.empty((nR, max_de + 1))
    for r in range(nR):
        for e in range(max_de + 1):
            accept[r, e] = np.exp(-betas[r] * e)

    spins = np.empty((nR, nv), dtype=np.int8)
    signs = np.empty((nR, nT), dtype=np.int8)
    energies = np.zeros(nR, dtype=np.int64)
    for r in range(nR):
        for j in range(nv):
            spins[r, j] = 1 if (_next_rand(state) >> np.uint64(63)) else -1
        e = 0
        for tid in range(nT):
            s = 1
            for idx in range(term_starts[tid], term_starts[tid + 1]):
                s *= spins[r, term_vars[idx]]
            signs[r, tid] = s
            e += coeffs[tid] * s
        energies[r] = e
        if e == target_e:
            for j in range(nv):
                spins_out[j] = spins[r, j]
            counters[1] = 1
            counters[2] = r
            return

    for s in range(max_sweeps):
        for r in range(nR):
            for j in range(nv):
                d = 0
                for idx in range(var_starts[j], var_starts[j + 1]):
                    tid = var_terms[idx]
                    d += coeffs[tid] * signs[r, tid]
                dE = -2 * d
                if dE < 0 or _next_unit(state) < accept[r, dE]:
                    spins[r, j] = -spins[r, j]
                    for idx in range(var_starts[j], var_starts[j + 1]):
                        tid = var_terms[idx]
                        signs[r, tid] = -signs[r, tid]
                    energies[r] += dE
                    if energies[r] == target_e:
                        for jj in range(nv):
                            spins_out[jj] = spins[r, jj]
                        counters[0] = s + 1
                        counters[1] = 1
                        counters[2] = r
                        return
        for i in range(nR - 1):
            f = (betas[i + 1] - betas[i]) * (energies[i + 1] - energies[i])
            ex_attempts[i] += 1
            if f >= 0 or _next_unit(state) < np.exp(f):
                ex_accepts[i] += 1
                for j in range(nv):
                    tmp = spins[i, j]
                    spins[i, j] = spins[i + 1, j]
                    spins[i + 1, j] = tmp
                for tid in range(nT):
                    tmp = signs[i, tid]
                    signs[i, tid] = signs[i + 1, tid]
                    signs[i + 1, tid] = tmp
                etmp = energies[i]
                energies[i] = energies[i + 1]
                energies[i + 1] = etmp
        counters[0] = s + 1


def pt_run(pl, target_unsat: int, cfg: PtConfig, label: str = "run") -> PtResult:
    """Run PT until some replica has exactly target_unsat unsatisfied terms.

    The spin config is decoded to bits via x = (1 - spin)/2.  `label`
    distinguishes repetitions and pool workers under one seed.
    """
    tables = TermTables(pl)
    betas = beta_ladder(cfg.num_replicas, cfg.beta_min, cfg.beta_max)
    target_e = 2 * target_unsat - pl.offset
    state = derive_state(cfg.seed, label)
    spins_out = np.zeros(tables.num_vars, dtype=np.int8)
    counters = np.zeros(3, dtype=np.int64)
    ex_attempts = np.zeros(cfg.num_replicas - 1, dtype=np.int64)
    ex_accepts = np.zeros(cfg.num_replicas - 1, dtype=np.int64)

    t_wall = time.perf_counter()
    t_cpu = time.thread_time()
    _pt_kernel(tables.coeffs, tables.term_starts, tables.term_vars,
               tables.var_starts, tables.var_terms, betas,
               np.int64(target_e), cfg.max_sweeps, state, spins_out,
               counters, ex_attempts, ex_accepts)
    wall = time.perf_counter() - t_wall
    # thread time, so concurrent runs in a pool do not pollute each other
    cpu = time.thread_time() - t_cpu

    success = counters[1] != 0
    config = None
    unsat = None
    if success:
        bits = [(1 - int(v)) // 2 for v in spins_out]
        config = BitVector.from_bits(bits)
        unsat = target_unsat
    return PtResult(bool(success), config, unsat, int(counters[0]), wall,
                    cpu, int(counters[2]) if success else -1,
                    ex_attempts.copy(), ex_accepts.copy(),
                    f"{cfg.seed}/{label}")


@njit(cache=True, nogil=True)
def _histogram_kernel(coeffs, term_starts, term_vars, var_starts, var_terms,
                      beta, sweeps, state, counts):
    """Single-chain Metropolis at one beta, counting states per sweep."""
    nv = var_starts.shape[0] - 1
    nT = coeffs.shape[0]
    spins = np.empty(nv, dtype=np.int8)
    for j in range(nv):
        spins[j] = 1 if (_next_rand(state) >> np.uint64(63)) else -1
    signs = np.empty(nT, dtype=np.int8)
    for tid in range(nT):
        s = 1
        for idx in range(term_starts[tid], term_starts[tid + 1]):
            s *= spins[term_vars[idx]]
        signs[tid] = s
    for _ in range(sweeps):
        for j in range(nv):
            d = 0
            for idx in range(var_starts[j], var_starts[j + 1]):
                d += coeffs[var_terms[idx]] * signs[var_terms[idx]]
            dE = -2 * d
            if dE < 0 or _next_unit(state) < np.exp(-beta * dE):
                spins[j] = -spins[j]
                for idx in range(var_starts[j], var_starts[j + 1]):
                    signs[var_terms[idx]] = -signs[var_terms[idx]]
        idx = 0
        for j in range(nv):
            if spins[j] < 0:
                idx |= 1 << j
        counts[idx] += 1


def single_beta_histogram(pl, beta: float, sweeps: int, seed: str) -> np.ndarray:
    """Empirical state counts from one fixed-temperature chain.

    Diagnostic for the Boltzmann-distribution check; num_vars must be
    small enough to enumerate.
    """
    if pl.num_vars > 20:
        raise ValueError("histogram limited to 20 variables")
    tables = TermTables(pl)
    counts = np.zeros(1 << pl.num_vars, dtype=np.int64)
    state = derive_state(seed, "histogram")
    _histogram_kernel(tables.coeffs, tables.term_starts, tables.term_vars,
                      tables.var_starts, tables.var_terms, beta, sweeps,
                      state, counts)
    return counts
