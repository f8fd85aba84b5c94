"""p-local Ising instances: mapping, energies, locality reduction, scrambling.

A public-key decoding problem becomes a spin Hamiltonian with one
signed term per public-matrix column.  With bits x and spins
sigma_i = 1 - 2 x_i, the Hamming distance to the target word equals
(energy + offset) / 2, so unsat_count is the canonical objective and
the planted message is its unique minimizer.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .gf2 import BitMatrix, BitVector, matvec


class PLocalInstance:
    """Signed multilinear spin Hamiltonian.

    terms: list of (coeff, vars) with vars a sorted tuple of distinct
    variable indices.  offset keeps the bookkeeping identity
    objective(x) = (energy(x) + offset) / 2 true through folding of
    constant terms and through locality reductions (at optimal
    auxiliaries).
    """

    __slots__ = ("num_vars", "terms", "offset", "meta")

    def __init__(self, num_vars: int, terms, offset: int = 0, meta: dict | None = None):
        self.num_vars = num_vars
        self.terms = [(int(c), tuple(v)) for c, v in terms]
        for c, v in self.terms:
            if any(not 0 <= i < num_vars for i in v):
                raise ValueError("variable index out of range")
            if list(v) != sorted(set(v)):
                raise ValueError("term variables must be sorted and distinct")
        self.offset = int(offset)
        self.meta = dict(meta) if meta else {}

    @property
    def p_max(self) -> int:
        return max((len(v) for _, v in self.terms), default=0)

    def copy(self) -> "PLocalInstance":
        return PLocalInstance(self.num_vars, list(self.terms), self.offset, self.meta)

    def canonicalize(self) -> "PLocalInstance":
        """Merge duplicate supports, drop cancellations, sort terms."""
        acc: dict[tuple, int] = {}
        for c, v in self.terms:
            acc[v] = acc.get(v, 0) + c
        terms = sorted((v, c) for v, c in acc.items() if c != 0)
        return PLocalInstance(self.num_vars, [(c, v) for v, c in terms],
                              self.offset, self.meta)

    def masks(self) -> np.ndarray:
        """Term supports as uint64 bitmasks (num_vars <= 64 only)."""
        if self.num_vars > 64:
            raise ValueError("bitmask form limited to 64 variables")
        out = np.zeros(len(self.terms), dtype=np.uint64)
        for idx, (_, v) in enumerate(self.terms):
            m = 0
            for i in v:
                m |= 1 << i
            out[idx] = m
        return out

    def coeffs(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=np.int64)

    def __repr__(self):
        return (f"PLocalInstance(vars={self.num_vars}, terms={len(self.terms)}, "
                f"p_max={self.p_max}, offset={self.offset})")


def map_to_ising(inst) -> PLocalInstance:
    """One signed term per public-matrix column.

    Column i with target bit b contributes coeff -(-1)^b on the spins
    of its support; zero columns are constants and fold into offset,
    keeping (energy + offset) / 2 equal to the Hamming distance.
    """
    cols = inst.G_prime.to_array()
    qp = inst.q_prime.to_bits()
    terms = []
    offset = inst.N
    for i in range(inst.N):
        support = tuple(int(a) for a in np.flatnonzero(cols[:, i]))
        coeff = 1 if qp[i] else -1
        if support:
            terms.append((coeff, support))
        else:
            offset += coeff
    src = hashlib.sha256(
        (inst.seed + "|" + inst.q_prime.to_hex()).encode()
    ).hexdigest()[:16]
    meta = {"source": src, "n": inst.N, "k": inst.k, "target_t": inst.t}
    pl = PLocalInstance(inst.k, terms, offset, meta)
    pl.meta["p_max"] = pl.p_max
    return pl


def energy(pl: PLocalInstance, s: BitVector) -> int:
    """Term sum at spins sigma_i = 1 - 2 bit_i."""
    if s.n != pl.num_vars:
        raise ValueError("configuration length mismatch")
    e = 0
    for c, v in pl.terms:
        par = 0
        for i in v:
            par ^= s.get(i)
        e += -c if par else c
    return e


def unsat_count(pl: PLocalInstance, s: BitVector) -> int:
    """Positive-contribution terms plus folded constants.

    Computed through the offset identity, so it equals the Hamming
    distance for mapped instances and stays meaningful after
    reductions (at optimal auxiliaries).
    """
    e = energy(pl, s) + pl.offset
    if e % 2:
        raise ValueError("offset inconsistent with term sum")
    return e // 2


def energies_over_configs(pl: PLocalInstance, configs: np.ndarray) -> np.ndarray:
    """Vectorized energies for packed uint64 configurations."""
    masks = pl.masks()
    coeffs = pl.coeffs()
    e = np.zeros(configs.size, dtype=np.int64)
    for m, c in zip(masks, coeffs):
        par = (np.bitwise_count(configs & m) & np.uint64(1)).astype(np.int64)
        e += c * (1 - 2 * par)
    return e


def brute_force_ground_states(pl: PLocalInstance) -> tuple[int, list[int]]:
    """Exhaustive minimum over all 2^num_vars configurations.

    Returns (min_energy, argmin configs as packed ints); practical to
    about 24 variables.
    """
    if pl.num_vars > 24:
        raise ValueError("exhaustive search capped at 24 variables")
    configs = np.arange(1 << pl.num_vars, dtype=np.uint64)
    e = energies_over_configs(pl, configs)
    emin = int(e.min())
    return emin, [int(c) for c in np.flatnonzero(e == emin)]


def config_from_int(x: int, n: int) -> BitVector:
    return BitVector.from_bits([(x >> i) & 1 for i in range(n)])


def reduce_to_3local(pl: PLocalInstance) -> PLocalInstance:
    """Split every term of locality > 3 down to locality <= 3.

    Each split halves a product against one fresh auxiliary spin:
    J * sA * sB = min_w [|J| * sA * w - J * w * sB] + |J|, so a
    p-local term costs exactly p - 3 auxiliaries, and the recorded
    offset keeps the objective identity at optimal auxiliaries.
    """
    terms_out = []
    offset = pl.offset
    next_var = pl.num_vars
    stack = list(pl.terms)
    while stack:
        c, v = stack.pop()
        p = len(v)
        if p <= 3:
            terms_out.append((c, v))
            continue
        l = (p + 1) // 2
        w = next_var
        next_var += 1
        offset += abs(c)
        stack.append((abs(c), tuple(sorted(v[:l] + (w,)))))
        stack.append((-c, tuple(sorted((w,) + v[l:]))))
    meta = dict(pl.meta)
    meta["reduced_from"] = pl.num_vars
    meta["p_max"] = 3
    out = PLocalInstance(next_var, sorted(terms_out, key=lambda t: (t[1], t[0])),
                         offset, meta)
    return out


def reduce_to_2local(pl: PLocalInstance) -> PLocalInstance:
    """Replace each 3-local term by a squared-sum penalty.

    With T = s1 + s2 + s3 and one auxiliary spin u per term:
    J s1 s2 s3 = min_u [|J| (s1s2 + s1s3 + s2s3) + J T - 2|J| u T
    - 2 J u] + 3|J|.  Coefficients become {+-|J|, +-2|J|}.
    """
    if pl.p_max > 3:
        raise ValueError("input must be at most 3-local")
    terms_out = []
    offset = pl.offset
    next_var = pl.num_vars
    for c, v in pl.terms:
        if len(v) < 3:
            terms_out.append((c, v))
            continue
        a, b, d = v
        u = next_var
        next_var += 1
        ac = abs(c)
        terms_out.extend([
            (ac, (a, b)), (ac, (a, d)), (ac, (b, d)),
            (c, (a,)), (c, (b,)), (c, (d,)),
            (-2 * ac, (a, u)), (-2 * ac, (b, u)), (-2 * ac, (d, u)),
            (-2 * c, (u,)),
        ])
        offset += 3 * ac
    meta = dict(pl.meta)
    meta["p_max"] = min(pl.p_max, 2)
    return PLocalInstance(next_var, terms_out, offset, meta)


def scramble_plocal(pl: PLocalInstance, S: BitMatrix) -> PLocalInstance:
    """Left-multiply the term adjacency by S, keeping signs.

    Term supports are the columns of a k x M adjacency; replacing each
    column col by S @ col gives H_scrambled(x) == H_original(x @ S)
    for every configuration.  Scrambled-to-empty columns fold into the
    offset; duplicate supports merge (opposite signs cancel).
    """
    for c, _ in pl.terms:
        if abs(c) != 1:
            raise ValueError("scrambling requires unit coefficients")
    if S.rows != pl.num_vars or S.cols != pl.num_vars:
        raise ValueError("scrambler shape mismatch")
    terms = []
    offset = pl.offset
    for c, v in pl.terms:
        col = BitVector.zeros(pl.num_vars)
        for i in v:
            col.set(i, 1)
        newcol = matvec(S, col)
        support = tuple(newcol.support())
        if support:
            terms.append((c, support))
        else:
            offset += c
    meta = dict(pl.meta)
    meta["scrambled"] = True
    out = PLocalInstance(pl.num_vars, terms, offset, meta).canonicalize()
    out.meta["p_max"] = out.p_max
    return out


def conditioned_aux_minima(pl: PLocalInstance, n_original: int) -> np.ndarray:
    """Exact min-over-auxiliaries energy for every original config.

    Conditioning on the first n_original variables turns each term
    into a constant or a signed product over auxiliaries only; the
    auxiliary interaction graphs of the locality reductions are
    term-disjoint trees, so bucket elimination with small separators
    minimizes them exactly.  Vectorized over all 2^n_original
    configurations; returns that energy vector.
    """
    if n_original > 24:
        raise ValueError("conditioning capped at 24 original variables")
    nx = 1 << n_original
    configs = np.arange(nx, dtype=np.uint64)
    base = np.zeros(nx, dtype=np.int64)

    # factors[i] = (aux_vars tuple, table of shape (2,)*len(aux_vars)+(nx,))
    factors: list[tuple[tuple, np.ndarray]] = []
    for c, v in pl.terms:
        orig = [i for i in v if i < n_original]
        aux = tuple(i for i in v if i >= n_original)
        m = np.uint64(0)
        for i in orig:
            m |= np.uint64(1 << i)
        par = (np.bitwise_count(configs & m) & np.uint64(1)).astype(np.int64)
        cvec = c * (1 - 2 * par)
        if not aux:
            base += cvec
            continue
        table = np.zeros((2,) * len(aux) + (nx,), dtype=np.int64)
        for assign in range(1 << len(aux)):
            sign = 1
            idx = []
            for j in range(len(aux)):
                bit = (assign >> j) & 1
                idx.append(bit)
                if bit:
                    sign = -sign
            table[tuple(idx)] = sign * cvec
        factors.append((aux, table))

    remaining = {i for vars_, _ in factors for i in vars_}
    while remaining:
        # min-degree order keeps separators small on the split trees
        def union_size(var):
            s = set()
            for vars_, _ in factors:
                if var in vars_:
                    s.update(vars_)
            return len(s)

        v = min(remaining, key=union_size)
        remaining.discard(v)
        touching = [f for f in factors if v in f[0]]
        rest = [f for f in factors if v not in f[0]]
        union = sorted({i for vars_, _ in touching for i in vars_})
        joined = np.zeros((2,) * len(union) + (nx,), dtype=np.int64)
        for vars_, table in touching:
            expand = [slice(None) if u in vars_ else None for u in union]
            # reorder table axes to match union ordering
            order = [vars_.index(u) for u in union if u in vars_]
            t = np.transpose(table, axes=order + [len(vars_)])
            idx = tuple(expand) + (slice(None),)
            joined = joined + t[idx]
        axis = union.index(v)
        msg = joined.min(axis=axis)
        new_vars = tuple(u for u in union if u != v)
        if new_vars:
            rest.append((new_vars, msg))
        else:
            base += msg
        factors = rest
    for _, table in factors:
        base += table.reshape(nx)
    return base
