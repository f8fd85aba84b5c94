"""McEliece keygen, encryption, decryption, and instance generation.

The public key G' = S G P hides an efficiently decodable Goppa code
behind a row scrambler S and a column permutation P.  An encrypted
word q' = q G' + eps (weight-t error) doubles as a planted-solution
decoding problem: with invertible S the closest codeword is unique.
"""

from __future__ import annotations

import hashlib

import numpy as np

from . import goppa
from .gf2 import (
    BitMatrix,
    BitVector,
    invert,
    mat_mul,
    rank_and_kernel,
    rref,
    sample_invertible,
    sample_matrix,
    sample_permutation,
    vecmat,
)


class PrivateKey:
    __slots__ = ("code", "S", "S_inv", "S_kernel", "P", "P_inv")

    def __init__(self, code, S, S_inv, S_kernel, P):
        self.code = code
        self.S = S
        self.S_inv = S_inv
        self.S_kernel = S_kernel
        self.P = P
        self.P_inv = P.transpose()


class PublicKey:
    __slots__ = ("G_prime", "t", "N", "k")

    def __init__(self, G_prime, t):
        self.G_prime = G_prime
        self.t = t
        self.k = G_prime.rows
        self.N = G_prime.cols


class McElieceInstance:
    """Public data of one planted decoding problem."""

    __slots__ = ("N", "k", "t", "m", "reduction_poly", "G_prime", "q_prime", "seed")

    def __init__(self, N, k, t, m, reduction_poly, G_prime, q_prime, seed):
        self.N = N
        self.k = k
        self.t = t
        self.m = m
        self.reduction_poly = reduction_poly
        self.G_prime = G_prime
        self.q_prime = q_prime
        self.seed = seed

    def __repr__(self):
        return f"McElieceInstance(N={self.N}, k={self.k}, t={self.t}, m={self.m})"


class Solution:
    __slots__ = ("q", "error")

    def __init__(self, q, error):
        self.q = q
        self.error = error


def keygen(N: int, t: int, m: int, rng: np.random.Generator,
           allow_singular_S: bool = False,
           support_rng: np.random.Generator | None = None,
           s_rng: np.random.Generator | None = None,
           p_rng: np.random.Generator | None = None):
    """Sample a key pair; S is rejection-sampled invertible by default.

    In singular mode the left kernel of S is recorded so ground-state
    multiplicity (2^corank planted collisions) stays accountable.
    """
    code = goppa.sample_code(N, t, m, rng, support_rng=support_rng)
    k = code.k
    srng = s_rng if s_rng is not None else rng
    prng = p_rng if p_rng is not None else rng
    if allow_singular_S:
        S = sample_matrix(k, k, srng)
        _, left_kernel = rank_and_kernel(S.transpose())
        S_inv = None if left_kernel else invert(S)
        S_kernel = left_kernel
    else:
        S = sample_invertible(k, srng)
        S_inv = invert(S)
        S_kernel = []
    P = sample_permutation(N, prng)
    G_prime = mat_mul(mat_mul(S, code.G), P)
    return PrivateKey(code, S, S_inv, S_kernel, P), PublicKey(G_prime, t)


def sample_error(N: int, t: int, rng: np.random.Generator) -> BitVector:
    """Uniform weight-exactly-t pattern via Floyd's subset sampling."""
    chosen: set[int] = set()
    for j in range(N - t, N):
        r = int(rng.integers(0, j + 1))
        chosen.add(j if r in chosen else r)
    err = BitVector.zeros(N)
    for j in chosen:
        err.set(j, 1)
    return err


def encrypt(q: BitVector, pub: PublicKey, rng: np.random.Generator):
    if q.n != pub.k:
        raise ValueError("message length mismatch")
    err = sample_error(pub.N, pub.t, rng) if pub.t > 0 else BitVector.zeros(pub.N)
    q_prime = vecmat(q, pub.G_prime) ^ err
    return q_prime, err


def _solve_left(y: BitVector, M: BitMatrix) -> BitVector:
    """One solution x of x M = y (M square, possibly singular)."""
    k = M.rows
    aug = M.transpose().hstack(BitMatrix.from_rows([y]).transpose())
    red, pivots = rref(aug)
    if k in pivots:
        raise ValueError("inconsistent system")
    x = BitVector.zeros(k)
    for i, pc in enumerate(pivots):
        x.set(pc, red.get(i, k))
    return x


def decrypt(q_prime: BitVector, priv: PrivateKey):
    """Recover the message: unpermute, decode, strip error, unscramble.

    Returns (q, error) for invertible S.  In singular mode returns
    (q0, error, kernel) where every q0 + span(kernel) member encrypts
    to the same q_prime.
    """
    code = priv.code
    y = vecmat(q_prime, priv.P_inv)
    err_perm = goppa.decode(y, code)
    codeword = y ^ err_perm
    qS = goppa.message_from_codeword(codeword, code)
    error = vecmat(err_perm, priv.P)
    if priv.S_inv is not None:
        q = vecmat(qS, priv.S_inv)
        if priv.S_kernel:
            return q, error, priv.S_kernel
        return q, error
    q0 = _solve_left(qS, priv.S)
    return q0, error, priv.S_kernel


def _subrng(seed: str, label: str) -> np.random.Generator:
    """Independent stream per role, all derived from one master seed."""
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return np.random.default_rng(np.frombuffer(digest, dtype=np.uint64))


def generate_instance(N: int, t: int, m: int, seed: str,
                      allow_singular_S: bool = False):
    """Deterministic end-to-end instance generation.

    Streams for (message, error, polynomial, support, S, P) are split
    by hashing the master seed with a role label, so identical seeds
    reproduce byte-identical instances and changing one role does not
    shift the others.
    """
    rng_msg = _subrng(seed, "message")
    rng_err = _subrng(seed, "error")
    rng_poly = _subrng(seed, "polynomial")
    rng_supp = _subrng(seed, "support")
    rng_s = _subrng(seed, "scrambler")
    rng_p = _subrng(seed, "permutation")

    priv, pub = keygen(N, t, m, rng_poly, allow_singular_S=allow_singular_S,
                       support_rng=rng_supp, s_rng=rng_s, p_rng=rng_p)
    k = pub.k
    q = BitVector.from_bits(rng_msg.integers(0, 2, size=k, dtype=np.uint8))
    err = sample_error(N, t, rng_err) if t > 0 else BitVector.zeros(N)
    q_prime = vecmat(q, pub.G_prime) ^ err

    inst = McElieceInstance(N, k, t, m, priv.code.ctx.reduction_poly,
                            pub.G_prime, q_prime, seed)
    return inst, Solution(q, err), priv


def private_key_from_parts(code, S: BitMatrix, P: BitMatrix) -> PrivateKey:
    """Rebuild a key from stored parts, recomputing kernel and inverse."""
    _, left_kernel = rank_and_kernel(S.transpose())
    S_inv = None if left_kernel else invert(S)
    return PrivateKey(code, S, S_inv, left_kernel, P)


def _coset_solution_unique(inst) -> bool:
    """True when the planted error is the only weight-<=t coset member."""
    import itertools

    from .isd import public_parity_check

    H, z = public_parity_check(inst)
    arr = H.to_array()
    cols = [int.from_bytes(np.packbits(arr[:, j], bitorder="little").tobytes(),
                           "little") for j in range(inst.N)]
    target = int.from_bytes(np.packbits(z.to_bits(), bitorder="little")
                            .tobytes(), "little")
    found = 0
    for w in range(inst.t + 1):
        for combo in itertools.combinations(range(inst.N), w):
            acc = 0
            for c in combo:
                acc ^= cols[c]
            if acc == target:
                found += 1
                if found > 1:
                    return False
    return found == 1


SYNTHETIC_TRIAL_CAP = 100


def random_linear_instance(N: int, k: int, t: int, seed: str,
                           require_unique: bool = True):
    """Planted instance over a uniform random code, no algebraic structure.

    Solver statistics want parameter sets (any N, k, t) that no
    binary Goppa code reaches; the closed-form attack probabilities
    depend only on the dimensions, not the code.  With require_unique
    the sample is rejected until the planted error is the lone
    weight-<=t coset member, so measured success frequencies match
    the single-solution formulas.  The uniqueness scan enumerates
    C(N, t) sums; keep N and t small.
    """
    if not 0 < k < N or t < 0 or k + t > N:
        raise ValueError("need 0 < k < N and k + t <= N")
    rng_g = _subrng(seed, "generator")
    rng_msg = _subrng(seed, "message")
    rng_err = _subrng(seed, "error")
    for _ in range(SYNTHETIC_TRIAL_CAP):
        G = sample_matrix(k, N, rng_g)
        if len(rank_and_kernel(G.transpose())[1]) > 0:
            continue
        q = BitVector.from_bits(rng_msg.integers(0, 2, size=k, dtype=np.uint8))
        err = sample_error(N, t, rng_err) if t > 0 else BitVector.zeros(N)
        q_prime = vecmat(q, G) ^ err
        inst = McElieceInstance(N, k, t, 0, 0, G, q_prime, seed)
        if require_unique and not _coset_solution_unique(inst):
            continue
        return inst, Solution(q, err)
    raise RuntimeError("no suitable random instance found within the cap")
