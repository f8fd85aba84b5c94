"""Arithmetic in GF(2^m) and for polynomials over GF(2^m).

Field elements are m-bit integers in polynomial basis.  Polynomials
over the field keep coefficients lowest-degree first.  Multiplication
goes through log/antilog tables for m <= 12 and falls back to
carry-less multiply + reduction above that.
"""

from __future__ import annotations

import numpy as np

TABLE_LIMIT = 12
IRREDUCIBLE_TRIAL_CAP_FACTOR = 100


# ---------------------------------------------------------------- GF(2)[x]
# Polynomials over GF(2) as int bitmasks, bit i = coefficient of x^i.

def gf2x_degree(p: int) -> int:
    return p.bit_length() - 1


def gf2x_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def gf2x_mod(a: int, mod: int) -> int:
    dm = gf2x_degree(mod)
    while gf2x_degree(a) >= dm:
        a ^= mod << (gf2x_degree(a) - dm)
    return a


def gf2x_is_irreducible(p: int) -> bool:
    """Trial division by every polynomial up to half the degree."""
    d = gf2x_degree(p)
    if d <= 0:
        return False
    if d == 1:
        return True
    if p & 1 == 0:
        return False
    for f in range(2, 1 << (d // 2 + 1)):
        if gf2x_degree(f) < 1:
            continue
        if gf2x_mod(p, f) == 0:
            return False
    return True


def lexmin_irreducible(m: int) -> int:
    """Smallest-integer irreducible bitmask of degree m."""
    for low in range(1 << m):
        p = (1 << m) | low
        if gf2x_is_irreducible(p):
            return p
    raise RuntimeError("unreachable: irreducibles exist in every degree")


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# ------------------------------------------------------------- field context

class FieldContext:
    """GF(2^m) defined by an irreducible degree-m reduction polynomial.

    Immutable after construction; tables shareable across threads.
    """

    __slots__ = ("m", "q", "reduction_poly", "generator", "exp", "log")

    def __init__(self, m: int, reduction_poly: int | None = None):
        if not 2 <= m <= 16:
            raise ValueError("extension degree out of supported range")
        if reduction_poly is None:
            reduction_poly = lexmin_irreducible(m)
        if gf2x_degree(reduction_poly) != m or not gf2x_is_irreducible(reduction_poly):
            raise ValueError("reduction polynomial must be irreducible of degree m")
        self.m = m
        self.q = 1 << m
        self.reduction_poly = reduction_poly
        self.generator = 0
        self.exp = None
        self.log = None
        if m <= TABLE_LIMIT:
            self._build_tables()

    def _raw_mul(self, a: int, b: int) -> int:
        return gf2x_mod(gf2x_mul(a, b), self.reduction_poly)

    def _build_tables(self):
        # The lexicographically-least reduction polynomial need not make
        # x primitive (it does not for m=8), so search for a generator.
        order = self.q - 1
        primes = _prime_factors(order)
        gen = 0
        for g in range(2, self.q):
            if all(self._raw_pow(g, order // p) != 1 for p in primes):
                gen = g
                break
        if gen == 0:
            raise RuntimeError("no multiplicative generator found")
        self.generator = gen
        exp = np.zeros(2 * order, dtype=np.int64)
        log = np.zeros(self.q, dtype=np.int64)
        v = 1
        for i in range(order):
            exp[i] = v
            log[v] = i
            v = self._raw_mul(v, gen)
        exp[order:] = exp[:order]
        self.exp = exp
        self.log = log

    def _raw_pow(self, a: int, e: int) -> int:
        r = 1
        while e:
            if e & 1:
                r = self._raw_mul(r, a)
            a = self._raw_mul(a, a)
            e >>= 1
        return r

    # scalar ops

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        if self.exp is not None:
            return int(self.exp[self.log[a] + self.log[b]])
        return self._raw_mul(a, b)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero field element")
        if self.exp is not None:
            return int(self.exp[(self.q - 1) - self.log[a]])
        return self._raw_pow(a, self.q - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        e %= self.q - 1
        if self.exp is not None:
            return int(self.exp[(self.log[a] * e) % (self.q - 1)])
        return self._raw_pow(a, e)

    def sqrt(self, a: int) -> int:
        """Unique square root in characteristic 2: a^(2^(m-1))."""
        return self.pow(a, 1 << (self.m - 1))

    # vectorized ops over numpy int arrays (table path only)

    def mul_arr(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.exp is None:
            raise RuntimeError("vectorized ops need log tables (m <= 12)")
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        nz = (a != 0) & (b != 0)
        la = self.log[np.where(a == 0, 1, a)]
        lb = self.log[np.where(b == 0, 1, b)]
        return np.where(nz, self.exp[la + lb], 0)

    def inv_arr(self, a: np.ndarray) -> np.ndarray:
        if self.exp is None:
            raise RuntimeError("vectorized ops need log tables (m <= 12)")
        a = np.asarray(a, dtype=np.int64)
        if (a == 0).any():
            raise ZeroDivisionError("inverse of zero field element")
        return self.exp[(self.q - 1) - self.log[a]]

    def __repr__(self):
        return f"FieldContext(m={self.m}, poly={bin(self.reduction_poly)})"


# ---------------------------------------------------------- field polynomials

class FieldPoly:
    """Polynomial over GF(2^m); coeffs lowest degree first, trimmed."""

    __slots__ = ("c", "ctx")

    def __init__(self, coeffs, ctx: FieldContext):
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        self.c = c
        self.ctx = ctx

    @classmethod
    def zero(cls, ctx):
        return cls([], ctx)

    @classmethod
    def one(cls, ctx):
        return cls([1], ctx)

    @classmethod
    def x(cls, ctx):
        return cls([0, 1], ctx)

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def is_monic(self) -> bool:
        return bool(self.c) and self.c[-1] == 1

    def monic(self) -> "FieldPoly":
        if self.is_zero() or self.c[-1] == 1:
            return self
        inv = self.ctx.inv(self.c[-1])
        return FieldPoly([self.ctx.mul(inv, a) for a in self.c], self.ctx)

    def copy(self) -> "FieldPoly":
        return FieldPoly(list(self.c), self.ctx)

    def __eq__(self, other):
        return isinstance(other, FieldPoly) and self.c == other.c

    def __hash__(self):
        return hash(tuple(self.c))

    def __repr__(self):
        return f"FieldPoly({self.c})"


def poly_add(P: FieldPoly, Q: FieldPoly) -> FieldPoly:
    n = max(len(P.c), len(Q.c))
    c = [0] * n
    for i, a in enumerate(P.c):
        c[i] ^= a
    for i, a in enumerate(Q.c):
        c[i] ^= a
    return FieldPoly(c, P.ctx)


def poly_mul(P: FieldPoly, Q: FieldPoly) -> FieldPoly:
    if P.is_zero() or Q.is_zero():
        return FieldPoly.zero(P.ctx)
    ctx = P.ctx
    c = [0] * (len(P.c) + len(Q.c) - 1)
    for i, a in enumerate(P.c):
        if a == 0:
            continue
        for j, b in enumerate(Q.c):
            if b:
                c[i + j] ^= ctx.mul(a, b)
    return FieldPoly(c, ctx)


def poly_scale(P: FieldPoly, s: int) -> FieldPoly:
    return FieldPoly([P.ctx.mul(s, a) for a in P.c], P.ctx)


def poly_divmod(A: FieldPoly, B: FieldPoly) -> tuple[FieldPoly, FieldPoly]:
    if B.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    ctx = A.ctx
    r = list(A.c)
    db = B.degree
    lead_inv = ctx.inv(B.c[-1])
    q = [0] * max(len(r) - db, 0)
    for i in range(len(r) - 1, db - 1, -1):
        if r[i] == 0:
            continue
        f = ctx.mul(r[i], lead_inv)
        q[i - db] = f
        for j, b in enumerate(B.c):
            if b:
                r[i - db + j] ^= ctx.mul(f, b)
    return FieldPoly(q, ctx), FieldPoly(r[:db], ctx)


def poly_mod(A: FieldPoly, B: FieldPoly) -> FieldPoly:
    return poly_divmod(A, B)[1]


def poly_gcd(A: FieldPoly, B: FieldPoly) -> FieldPoly:
    a, b = A, B
    while not b.is_zero():
        a, b = b, poly_mod(a, b)
    return a.monic()


def poly_mulmod(A: FieldPoly, B: FieldPoly, mod: FieldPoly) -> FieldPoly:
    return poly_mod(poly_mul(A, B), mod)


def poly_eval(P: FieldPoly, a: int) -> int:
    """Horner evaluation at a field point."""
    ctx = P.ctx
    acc = 0
    for coef in reversed(P.c):
        acc = ctx.mul(acc, a) ^ coef
    return acc


def poly_eval_arr(P: FieldPoly, points: np.ndarray) -> np.ndarray:
    """Vectorized Horner over an array of field points."""
    ctx = P.ctx
    pts = np.asarray(points, dtype=np.int64)
    acc = np.zeros_like(pts)
    for coef in reversed(P.c):
        acc = ctx.mul_arr(acc, pts) ^ coef
    return acc


def poly_inv_mod(A: FieldPoly, mod: FieldPoly) -> FieldPoly:
    """Inverse of A modulo `mod` via extended Euclid."""
    ctx = A.ctx
    r0, r1 = mod, poly_mod(A, mod)
    s0, s1 = FieldPoly.zero(ctx), FieldPoly.one(ctx)
    while not r1.is_zero():
        q, r2 = poly_divmod(r0, r1)
        r0, r1 = r1, r2
        s0, s1 = s1, poly_add(s0, poly_mul(q, s1))
    if r0.degree != 0:
        raise ZeroDivisionError("element not invertible modulo given polynomial")
    return poly_scale(s0, ctx.inv(r0.c[0]))


def euclid_stop(g: FieldPoly, r: FieldPoly, max_deg: int) -> tuple[FieldPoly, FieldPoly]:
    """Partial extended Euclid on (g, r).

    Walks the remainder sequence until its degree drops to max_deg or
    below, returning (a, b) with a == b*r (mod g).
    """
    ctx = g.ctx
    r0, r1 = g, poly_mod(r, g)
    b0, b1 = FieldPoly.zero(ctx), FieldPoly.one(ctx)
    while r1.degree > max_deg:
        q, r2 = poly_divmod(r0, r1)
        r0, r1 = r1, r2
        b0, b1 = b1, poly_add(b0, poly_mul(q, b1))
    return r1, b1


def _poly_square_mod(P: FieldPoly, mod: FieldPoly) -> FieldPoly:
    """Squaring uses the Frobenius: cross terms vanish in char 2."""
    ctx = P.ctx
    c = [0] * (2 * len(P.c) - 1) if P.c else []
    for i, a in enumerate(P.c):
        if a:
            c[2 * i] = ctx.mul(a, a)
    return poly_mod(FieldPoly(c, ctx), mod)


def _poly_pow_q_mod(P: FieldPoly, mod: FieldPoly) -> FieldPoly:
    """P^(2^m) mod `mod` by m successive squarings."""
    out = P
    for _ in range(P.ctx.m):
        out = _poly_square_mod(out, mod)
    return out


def is_irreducible(P: FieldPoly) -> bool:
    """Rabin's criterion over GF(2^m)."""
    t = P.degree
    if t < 1:
        return False
    ctx = P.ctx
    Pm = P.monic()
    x = FieldPoly.x(ctx)
    if t == 1:
        return True
    xr = poly_mod(x, Pm)
    need = {t // d for d in _prime_factors(t)}
    h = xr
    powers = {}
    for i in range(1, t + 1):
        h = _poly_pow_q_mod(h, Pm)
        if i in need:
            powers[i] = h
    if not poly_add(h, xr).is_zero():
        return False
    for n in need:
        if poly_gcd(Pm, poly_add(powers[n], xr)).degree > 0:
            return False
    return True


def sample_irreducible(t: int, ctx: FieldContext, rng: np.random.Generator,
                       return_trials: bool = False):
    """Rejection-sample a monic irreducible of degree exactly t.

    The density of irreducibles among monic degree-t polynomials is
    about 1/t, so expected trials ~ t; the cap flags a broken rng.
    """
    if t < 1:
        raise ValueError("degree must be at least 1")
    cap = IRREDUCIBLE_TRIAL_CAP_FACTOR * t
    for trial in range(1, cap + 1):
        coeffs = [int(v) for v in rng.integers(0, ctx.q, size=t)] + [1]
        P = FieldPoly(coeffs, ctx)
        if is_irreducible(P):
            return (P, trial) if return_trials else P
    raise RuntimeError("sample_irreducible: trial cap exceeded (rng broken?)")


def poly_sqrt_mod_g(P: FieldPoly, g: FieldPoly) -> FieldPoly:
    """Square root in GF(2^m)[x]/(g) for irreducible g.

    The residue field has 2^(m t) elements, so squaring mt-1 times
    applies the inverse Frobenius.
    """
    t = g.degree
    out = poly_mod(P, g)
    for _ in range(P.ctx.m * t - 1):
        out = _poly_square_mod(out, g)
    return out
