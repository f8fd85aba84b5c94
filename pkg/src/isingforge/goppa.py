"""Binary Goppa codes: construction, sampling, and t-error decoding.

A code is defined by an irreducible degree-t polynomial g over GF(2^m)
and N distinct support elements.  The parity check over the field has
entries alpha_j^i / g(alpha_j); expanding each entry over a GF(2) basis
gives a tm x N binary matrix whose kernel is the code.
"""

from __future__ import annotations

import numpy as np

from .gf2 import BitMatrix, BitVector, kernel_from_rref, matvec, rref, vecmat
from .gf2m import (
    FieldContext,
    FieldPoly,
    euclid_stop,
    poly_add,
    poly_eval_arr,
    poly_inv_mod,
    poly_mod,
    poly_mul,
    poly_sqrt_mod_g,
    sample_irreducible,
)

CODE_REJECTION_CAP = 100


class DecodeFailure(Exception):
    """Raised when no error pattern of weight <= t explains the word."""


class GoppaCode:
    """Immutable binary Goppa code with its private structure."""

    __slots__ = ("ctx", "g", "support", "H", "G", "N", "k", "t", "info_positions")

    def __init__(self, ctx, g, support, H, G, info_positions):
        self.ctx = ctx
        self.g = g
        self.support = support
        self.H = H
        self.G = G
        self.N = len(support)
        self.k = G.rows
        self.t = g.degree
        self.info_positions = info_positions

    def __repr__(self):
        return f"GoppaCode(N={self.N}, k={self.k}, t={self.t}, m={self.ctx.m})"


def build_code(ctx: FieldContext, g: FieldPoly, support) -> GoppaCode:
    """Construct the code for a given polynomial and support.

    H is the row-reduced full-rank form of the expanded check matrix;
    G is a kernel basis, systematic on the free-column positions (the
    identity block sits on `info_positions`, so message recovery is a
    plain bit gather).
    """
    supp = np.asarray(support, dtype=np.int64)
    N = supp.size
    if N > ctx.q:
        raise ValueError("support larger than the field")
    if len(np.unique(supp)) != N:
        raise ValueError("support elements must be distinct")
    t = g.degree
    gvals = poly_eval_arr(g, supp)
    if (gvals == 0).any():
        raise ValueError("polynomial vanishes on a support element")

    ginv = ctx.inv_arr(gvals)
    m = ctx.m
    bits = np.zeros((t * m, N), dtype=np.uint8)
    v = ginv.copy()
    for i in range(t):
        for l in range(m):
            bits[i * m + l] = (v >> l) & 1
        if i + 1 < t:
            v = ctx.mul_arr(v, supp)

    expanded = BitMatrix.from_array(bits)
    R, pivots = rref(expanded)
    rank = len(pivots)
    H = BitMatrix(rank, N, R.words[:rank].copy())
    kernel = kernel_from_rref(R, pivots)
    if not kernel:
        raise ValueError("code has dimension zero at these parameters")
    G = BitMatrix.from_rows(kernel)
    info_positions = [c for c in range(N) if c not in set(pivots)]
    return GoppaCode(ctx, g, supp, H, G, info_positions)


def sample_code(N: int, t: int, m: int, rng: np.random.Generator,
                support_rng: np.random.Generator | None = None) -> GoppaCode:
    """Sample a random code, rejecting until k == N - t*m exactly.

    `support_rng` optionally splits the support stream from the
    polynomial stream (instance generation keeps them independent).
    """
    ctx = FieldContext(m)
    if N > ctx.q:
        raise ValueError("N exceeds field size")
    if N - t * m < 1:
        raise ValueError("parameters leave no message bits")
    srng = support_rng if support_rng is not None else rng
    for _ in range(CODE_REJECTION_CAP):
        g = sample_irreducible(t, ctx, rng)
        support = srng.permutation(ctx.q)[:N]
        gvals = poly_eval_arr(g, support)
        if (gvals == 0).any():
            continue
        code = build_code(ctx, g, support)
        if code.k == N - t * m:
            return code
    raise RuntimeError("sample_code: rejection cap exceeded")


def encode(q: BitVector, code: GoppaCode) -> BitVector:
    return vecmat(q, code.G)


def message_from_codeword(c: BitVector, code: GoppaCode) -> BitVector:
    """Invert x -> xG by gathering the systematic positions."""
    return BitVector.from_bits([c.get(j) for j in code.info_positions])


def syndrome_poly(y: BitVector, code: GoppaCode) -> FieldPoly:
    """S(x) = sum over set bits of 1/(x + alpha_i) mod g.

    Each term expands to (g(x) + g(alpha)) / (x + alpha) * g(alpha)^-1,
    a synthetic division, so no per-term modular inversion is needed.
    """
    ctx = code.ctx
    g = code.g
    t = g.degree
    acc = [0] * t
    gc = g.c
    for j in y.support():
        alpha = int(code.support[j])
        ga = 0
        # Horner pass: quotient coefficients of (g(x)+g(alpha))/(x+alpha)
        # appear as the running values, highest degree first.
        quot = [0] * t
        for i in range(t, 0, -1):
            ga = ctx.mul(ga, alpha) ^ gc[i]
            quot[i - 1] = ga
        galpha = ctx.mul(ga, alpha) ^ gc[0]
        scale = ctx.inv(galpha)
        for i in range(t):
            if quot[i]:
                acc[i] ^= ctx.mul(quot[i], scale)
    return FieldPoly(acc, ctx)


def decode(y: BitVector, code: GoppaCode) -> BitVector:
    """Patterson decoding: returns the error pattern of weight <= t.

    Splits the locator as sigma = a^2 + x b^2 with a == b*sqrt(T+x)
    mod g obtained from a partial Euclid run, then locates errors as
    the support roots of sigma.
    """
    if y.n != code.N:
        raise ValueError("word length mismatch")
    ctx = code.ctx
    g = code.g
    t = g.degree

    S = syndrome_poly(y, code)
    if S.is_zero():
        return BitVector.zeros(code.N)

    T = poly_inv_mod(S, g)
    Tx = poly_add(T, FieldPoly.x(ctx))
    if Tx.is_zero():
        sigma = FieldPoly.x(ctx)
    else:
        R = poly_sqrt_mod_g(Tx, g)
        a, b = euclid_stop(g, R, t // 2)
        x_poly = FieldPoly.x(ctx)
        sigma = poly_add(poly_mul(a, a), poly_mul(x_poly, poly_mul(b, b)))

    if sigma.is_zero() or sigma.degree > t:
        raise DecodeFailure("error locator degree out of range")

    vals = poly_eval_arr(sigma, code.support)
    err_pos = np.flatnonzero(vals == 0)
    if err_pos.size != sigma.degree:
        raise DecodeFailure("locator roots not all in support")

    err = BitVector.zeros(code.N)
    for j in err_pos:
        err.set(int(j), 1)
    if not matvec(code.H, y ^ err).is_zero():
        raise DecodeFailure("corrected word fails the parity check")
    return err
