"""Truncated free associative algebra F_p<X_1..X_n> / (degree > M).

Units of this algebra model the Zassenhaus quotients: x_i maps to 1 + X_i and
an element of Gamma lies in the k-th term of the series iff its image u has
``zweight(u) >= k`` (the dimension-series description, Jennings).

Coefficients are stored densely by degree. Within degree d a monomial
X_{a_1}...X_{a_d} has index sum (a_t - 1) n^(d-t), which is graded-lex order.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .words import Word

INF = math.inf

#: default cap on n^(M+1); admits n=2 with M<=8 and n=3 with M<=4
COEFF_BUDGET = 512


class BudgetExceeded(RuntimeError):
    """A requested object is larger than the configured budget."""


class ParamMismatch(ValueError):
    pass


@lru_cache(maxsize=None)
def offsets(n: int, M: int) -> tuple[int, ...]:
    """Start of each degree block; offsets[M+1] is the total length."""
    out = [0]
    for d in range(M + 1):
        out.append(out[-1] + n**d)
    return tuple(out)


def check_budget(n: int, M: int, budget: int | None = None) -> None:
    cap = COEFF_BUDGET if budget is None else budget
    if n ** (M + 1) > cap:
        raise BudgetExceeded(f"truncation degree {M} with rank {n} exceeds coefficient budget {cap}")


def monomial_index(mono: tuple[int, ...], n: int) -> int:
    idx = 0
    for a in mono:
        idx = idx * n + (a - 1)
    return idx


def monomial_of(d: int, idx: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(d):
        idx, r = divmod(idx, n)
        out.append(r + 1)
    return tuple(reversed(out))


class TruncSeries:
    """Element of F_p<X>/(deg > M); immutable."""

    __slots__ = ("p", "n", "M", "c")

    def __init__(self, p: int, n: int, M: int, coeffs: np.ndarray | None = None):
        self.p, self.n, self.M = p, n, M
        total = offsets(n, M)[-1]
        if coeffs is None:
            c = np.zeros(total, dtype=np.int64)
        else:
            c = np.asarray(coeffs, dtype=np.int64) % p
            if c.shape != (total,):
                raise ParamMismatch(f"expected {total} coefficients, got {c.shape}")
        c.flags.writeable = False
        self.c = c

    # -- construction
    @classmethod
    def from_dict(cls, p: int, n: int, M: int, terms: Mapping[tuple[int, ...], int]) -> "TruncSeries":
        off = offsets(n, M)
        c = np.zeros(off[-1], dtype=np.int64)
        for mono, v in terms.items():
            d = len(mono)
            if d > M:
                continue
            if any(not 1 <= a <= n for a in mono):
                raise ParamMismatch(f"monomial {mono} out of range")
            c[off[d] + monomial_index(mono, n)] += v
        return cls(p, n, M, c)

    @classmethod
    def one(cls, p: int, n: int, M: int) -> "TruncSeries":
        return cls.from_dict(p, n, M, {(): 1})

    @classmethod
    def gen(cls, i: int, p: int, n: int, M: int) -> "TruncSeries":
        """1 + X_i."""
        return cls.from_dict(p, n, M, {(): 1, (i,): 1})

    def to_dict(self) -> dict[tuple[int, ...], int]:
        off = offsets(self.n, self.M)
        out = {}
        for d in range(self.M + 1):
            blk = self.c[off[d]:off[d + 1]]
            for idx in np.nonzero(blk)[0]:
                out[monomial_of(d, int(idx), self.n)] = int(blk[idx])
        return out

    def block(self, d: int) -> np.ndarray:
        off = offsets(self.n, self.M)
        return self.c[off[d]:off[d + 1]]

    # -- comparisons
    def _params(self) -> tuple[int, int, int]:
        return (self.p, self.n, self.M)

    def _check(self, other: "TruncSeries") -> None:
        if self._params() != other._params():
            raise ParamMismatch(f"{self._params()} vs {other._params()}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return self._params() == other._params() and bool(np.array_equal(self.c, other.c))

    def __hash__(self) -> int:
        return hash((self._params(), self.c.tobytes()))

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        return TruncSeries(self.p, self.n, self.M, self.c + other.c)

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        return TruncSeries(self.p, self.n, self.M, self.c - other.c)

    def __neg__(self) -> "TruncSeries":
        return TruncSeries(self.p, self.n, self.M, -self.c)

    def scale(self, a: int) -> "TruncSeries":
        return TruncSeries(self.p, self.n, self.M, a * self.c)

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        return smul(self, other)

    def is_unit(self) -> bool:
        return int(self.c[0]) % self.p != 0

    def __repr__(self) -> str:
        return f"TruncSeries(p={self.p}, n={self.n}, M={self.M}, {format_series(self)!r})"

    def __str__(self) -> str:
        return format_series(self)


UnitElement = TruncSeries


def smul(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    """Product with all terms of degree > M discarded."""
    a._check(b)
    n, M, p = a.n, a.M, a.p
    off = offsets(n, M)
    out = np.zeros(off[-1], dtype=np.int64)
    for da in range(M + 1):
        A = a.c[off[da]:off[da + 1]]
        if not A.any():
            continue
        for db in range(M + 1 - da):
            B = b.c[off[db]:off[db + 1]]
            if not B.any():
                continue
            d = da + db
            out[off[d]:off[d + 1]] += np.outer(A, B).ravel()
        out %= p
    return TruncSeries(p, n, M, out)


def unit_inv(u: TruncSeries) -> TruncSeries:
    """Inverse of a unit with constant term 1: sum_{i<=M} (1-u)^i."""
    if int(u.c[0]) % u.p != 1:
        raise ValueError("unit_inv expects constant term 1")
    one = TruncSeries.one(u.p, u.n, u.M)
    t = one - u
    acc, term = one, one
    for _ in range(u.M):
        term = smul(term, t)
        acc = acc + term
    return acc


def power(u: TruncSeries, e: int) -> TruncSeries:
    if e < 0:
        return power(unit_inv(u), -e)
    result = TruncSeries.one(u.p, u.n, u.M)
    base = u
    while e:
        if e & 1:
            result = smul(result, base)
        e >>= 1
        if e:
            base = smul(base, base)
    return result


def group_commutator(u: TruncSeries, v: TruncSeries) -> TruncSeries:
    return smul(smul(smul(u, v), unit_inv(u)), unit_inv(v))


def eval_word(w: Word, p: int, n: int, M: int) -> TruncSeries:
    """Image of w under x_i -> 1 + X_i."""
    if w.rank != n:
        raise ParamMismatch(f"word rank {w.rank} != {n}")
    gens = [TruncSeries.gen(i, p, n, M) for i in range(1, n + 1)]
    invs = [unit_inv(g) for g in gens]
    out = TruncSeries.one(p, n, M)
    for a in w.letters:
        out = smul(out, gens[a - 1] if a > 0 else invs[-a - 1])
    return out


def zweight(u: TruncSeries) -> float:
    """Lowest degree of a nonzero term of u - 1; inf when u = 1."""
    off = offsets(u.n, u.M)
    if int(u.c[0]) % u.p != 1:
        return 0
    for d in range(1, u.M + 1):
        if u.c[off[d]:off[d + 1]].any():
            return d
    return INF


def format_series(s: TruncSeries) -> str:
    """Graded-lex printer, e.g. ``1 + X1 X2 + X2 X1``."""
    parts = []
    for mono, v in sorted(s.to_dict().items(), key=lambda kv: (len(kv[0]), kv[0])):
        m = " ".join(f"X{a}" for a in mono)
        if not mono:
            parts.append(str(v))
        elif v == 1:
            parts.append(m)
        else:
            parts.append(f"{v} {m}")
    return " + ".join(parts) if parts else "0"


# ----------------------------------------------------------- Witt numbers

def _mobius(k: int) -> int:
    res, m, d = 1, k, 2
    while d * d <= m:
        if m % d == 0:
            m //= d
            if m % d == 0:
                return 0
            res = -res
        d += 1
    if m > 1:
        res = -res
    return res


def witt_numbers(n: int, kmax: int) -> list[int]:
    """Ranks l_1..l_kmax of the free Lie algebra on n generators."""
    out = []
    for i in range(1, kmax + 1):
        s = sum(_mobius(d) * n ** (i // d) for d in range(1, i + 1) if i % d == 0)
        out.append(s // i)
    return out


def jennings_dims(p: int, n: int, kmax: int) -> tuple[list[int], list[int]]:
    """Layer dimensions d_1..d_kmax and predicted orders |N_1|..|N_kmax|.

    d_k = sum of l_i over pairs with i * p^j = k.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    l = witt_numbers(n, kmax)
    dims = []
    for k in range(1, kmax + 1):
        d, q = 0, 1
        while q <= k:
            if k % q == 0:
                d += l[k // q - 1]
            q *= p
        dims.append(d)
    orders, acc = [], 0
    for d in dims:
        acc += d
        orders.append(p**acc)
    return dims, orders


# ---------------------------------------------------- batched unit algebra
#
# Group code stores units as rows of an (N, D) array holding the degree 1..M
# blocks (the constant term 1 is implicit).


def batch_width(n: int, M: int) -> int:
    return offsets(n, M)[-1] - 1


def rmul_gen_batch(R: np.ndarray, i: int, inverse: bool, p: int, n: int, M: int) -> np.ndarray:
    """Rows u -> u (1 + X_i)^(+-1)."""
    off = [o - 1 for o in offsets(n, M)]  # shift: no constant column
    out = R.copy()
    if not inverse:
        # (u X_i)_{d+1}[w i] = u_d[w]; u_0 = 1
        out[:, off[1] + (i - 1)] += 1
        for d in range(1, M):
            cols = off[d + 1] + np.arange(n**d) * n + (i - 1)
            out[:, cols] += R[:, off[d]:off[d + 1]]
    else:
        # v (1 + X_i) = u  =>  v_d = u_d - (v_{d-1} X_i)
        out[:, off[1] + (i - 1)] -= 1
        for d in range(1, M):
            cols = off[d + 1] + np.arange(n**d) * n + (i - 1)
            out[:, cols] -= out[:, off[d]:off[d + 1]] % p
    out %= p
    return out


def mul_batch(A: np.ndarray, B: np.ndarray, p: int, n: int, M: int) -> np.ndarray:
    """Row-wise products (1 + a)(1 + b) for equally shaped batches."""
    off = [o - 1 for o in offsets(n, M)]
    out = A + B
    N = A.shape[0]
    for da in range(1, M):
        a = A[:, off[da]:off[da + 1]]
        for db in range(1, M + 1 - da):
            b = B[:, off[db]:off[db + 1]]
            d = da + db
            out[:, off[d]:off[d + 1]] += (a[:, :, None] * b[:, None, :]).reshape(N, -1)
        out %= p
    out %= p
    return out


def series_from_row(row: np.ndarray, p: int, n: int, M: int) -> TruncSeries:
    c = np.concatenate([[1], np.asarray(row, dtype=np.int64)])
    return TruncSeries(p, n, M, c)


def row_from_series(u: TruncSeries) -> np.ndarray:
    if int(u.c[0]) % u.p != 1:
        raise ValueError("expected constant term 1")
    return np.array(u.c[1:], dtype=np.int64)


def zweight_rows(R: np.ndarray, n: int, M: int) -> np.ndarray:
    """zweight for every row; inf encoded as M + 1."""
    off = [o - 1 for o in offsets(n, M)]
    w = np.full(R.shape[0], M + 1, dtype=np.int64)
    for d in range(M, 0, -1):
        nz = R[:, off[d]:off[d + 1]].any(axis=1)
        w[nz] = d
    return w


def unit_samples(p: int, n: int, M: int, min_weight: int, rng: np.random.Generator) -> TruncSeries:
    """A uniformly random unit 1 + (terms of degree >= min_weight)."""
    off = offsets(n, M)
    c = rng.integers(0, p, size=off[-1])
    c[: off[min(min_weight, M + 1)]] = 0
    c[0] = 1
    return TruncSeries(p, n, M, c)


def iter_monomials(n: int, d: int) -> Iterable[tuple[int, ...]]:
    for idx in range(n**d):
        yield monomial_of(d, idx, n)
