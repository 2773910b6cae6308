"""Endomorphisms of relatively free quotients, stored as generator images.

Every term of both series is a verbal subgroup, so any choice of images for
x_1..x_n extends to a unique endomorphism; evaluation goes through witness
words and does not depend on which word represents an element.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .quotients import (
    WINF,
    QuotientGroup,
    build_tilde,
    series_group,
)
from .truncalg import BudgetExceeded
from .words import Word, format_word, reduce


class EndoError(ValueError):
    pass


# ------------------------------------------------------------- linear algebra

def rank_mod_p(M: np.ndarray, p: int) -> int:
    return len(rref_mod_p(M, p)[1])


def rref_mod_p(M: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    A = np.array(M, dtype=np.int64) % p
    rows, cols = A.shape
    piv: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        s = r + int(nz[0])
        A[[r, s]] = A[[s, r]]
        A[r] = (A[r] * pow(int(A[r, c]), -1, p)) % p
        for t in range(rows):
            if t != r and A[t, c]:
                A[t] = (A[t] - A[t, c] * A[r]) % p
        piv.append(c)
        r += 1
    return A[:r], piv


def gl_matrices(n: int, p: int) -> list[np.ndarray]:
    """All invertible n x n matrices over F_p, lexicographic in row-major entries."""
    out = []
    for ent in itertools.product(range(p), repeat=n * n):
        M = np.array(ent, dtype=np.int64).reshape(n, n)
        if rank_mod_p(M, p) == n:
            out.append(M)
    return out


# ------------------------------------------------------------------ Endo

@dataclass(frozen=True, eq=False)
class Endo:
    target: QuotientGroup
    images: tuple[int, ...]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Endo):
            return NotImplemented
        return self.target is other.target and self.images == other.images

    def __hash__(self) -> int:
        return hash((id(self.target), self.images))

    def __str__(self) -> str:
        return format_endo(self)

    @property
    def n(self) -> int:
        return self.target.n


def make_endo(G: QuotientGroup, images: Sequence[int | Word]) -> Endo:
    if len(images) != G.n:
        raise EndoError(f"need {G.n} images, got {len(images)}")
    out = []
    for im in images:
        if isinstance(im, Word):
            out.append(G.elem(im))
        else:
            a = int(im)
            if not 0 <= a < G.order:
                raise EndoError(f"image {a} not in group")
            out.append(a)
    return Endo(G, tuple(out))


def identity_endo(G: QuotientGroup) -> Endo:
    return Endo(G, tuple(G.gens()))


def swap_endo(G: QuotientGroup, i: int = 1, j: int = 2) -> Endo:
    ims = G.gens()
    ims[i - 1], ims[j - 1] = ims[j - 1], ims[i - 1]
    return Endo(G, tuple(ims))


def conjugation_endo(G: QuotientGroup, g: int) -> Endo:
    """x -> g x g^-1 on generators."""
    return Endo(G, tuple(G.conj(x, g) for x in G.gens()))


def endo_from_matrix(G: QuotientGroup, M: np.ndarray) -> Endo:
    """x_j -> x_1^M[0,j] ... x_n^M[n-1,j]; induces M on H_p."""
    M = np.asarray(M, dtype=np.int64) % G.p
    if M.shape != (G.n, G.n):
        raise EndoError(f"expected a {G.n}x{G.n} matrix")
    ims = []
    for j in range(G.n):
        letters = [i + 1 for i in range(G.n) for _ in range(int(M[i, j]))]
        ims.append(G.elem(reduce(letters, G.n)))
    return Endo(G, tuple(ims))


def format_endo(f: Endo) -> str:
    G = f.target
    return ", ".join(f"x{i + 1} -> {format_word(G.word(a))}" for i, a in enumerate(f.images))


# ------------------------------------------------------------ evaluation

_TABLE_CAP = 20000


def image_table(f: Endo) -> np.ndarray:
    """f applied to every element, by propagation along witness words."""
    G = f.target
    tables = G.__dict__.setdefault("_image_tables", {})
    got = tables.get(f.images)
    if got is not None:
        return got
    imgs = np.array(f.images, dtype=np.int64)
    letter_img = np.concatenate([imgs, G.inverse[imgs]])
    out = np.zeros(G.order, dtype=np.int64)
    for lv in G.levels:
        out[lv] = G.mul_vec(out[G.parent[lv]], letter_img[G.lcol[lv]])
    if len(tables) > _TABLE_CAP:
        tables.clear()
    tables[f.images] = out
    return out


def image_tables_batch(G: QuotientGroup, ims: np.ndarray) -> np.ndarray:
    """Image tables of many endomorphisms at once; ``ims`` has shape (B, n)."""
    ims = np.asarray(ims, dtype=np.int64)
    letter_img = np.concatenate([ims, G.inverse[ims]], axis=1)
    out = np.zeros((ims.shape[0], G.order), dtype=np.int64)
    for lv in G.levels:
        out[:, lv] = G.mul_vec(out[:, G.parent[lv]], letter_img[:, G.lcol[lv]])
    return out


def apply(f: Endo, g: int) -> int:
    return int(image_table(f)[int(g)])


def apply_word(f: Endo, g: int) -> int:
    """Direct word evaluation; the independent route for well-definedness audits."""
    G = f.target
    out = 0
    for a in G.word(g).letters:
        x = f.images[abs(a) - 1]
        out = G.mul(out, x if a > 0 else G.inv(x))
    return out


def compose(f: Endo, g: Endo) -> Endo:
    """(f o g)(x_i) = f(g(x_i))."""
    if f.target is not g.target:
        raise EndoError("target mismatch")
    T = image_table(f)
    return Endo(f.target, tuple(int(T[a]) for a in g.images))


def equal(f: Endo, g: Endo) -> bool:
    if f.target is not g.target:
        raise EndoError("target mismatch")
    return f.images == g.images


def is_bijective(f: Endo) -> bool:
    return np.unique(image_table(f)).size == f.target.order


def inverse_endo(f: Endo) -> Endo:
    T = image_table(f)
    G = f.target
    if np.unique(T).size != G.order:
        raise EndoError("not an automorphism")
    inv = np.empty(G.order, dtype=np.int64)
    inv[T] = np.arange(G.order)
    return Endo(G, tuple(int(inv[x]) for x in G.gens()))


def power_endo(f: Endo, e: int) -> Endo:
    if e < 0:
        f, e = inverse_endo(f), -e
    out = identity_endo(f.target)
    for _ in range(e):
        out = compose(out, f)
    return out


def endo_commutator(f: Endo, g: Endo) -> Endo:
    """[f, g] = f g f^-1 g^-1."""
    return compose(compose(f, g), compose(inverse_endo(f), inverse_endo(g)))


def endo_order(f: Endo, cap: int = 10**6) -> int:
    e = identity_endo(f.target)
    x, k = f, 1
    while not equal(x, e):
        x = compose(x, f)
        k += 1
        if k > cap:
            raise EndoError("order exceeds cap")
    return k


# ------------------------------------------------------------ H_p action

def hp_matrix(f: Endo) -> np.ndarray:
    """Induced matrix on H_p; column j holds the image of x_j."""
    G = f.target
    return np.stack([G.hp[a] for a in f.images], axis=1) % G.p


def is_aut(f: Endo) -> bool:
    G = f.target
    return rank_mod_p(hp_matrix(f), G.p) == G.n


def ia_level(f: Endo) -> int:
    """Largest k with f(x_i) x_i^-1 in the (k+1)-th term for every i; capped at depth."""
    if not is_aut(f):
        raise EndoError("not an automorphism")
    G = f.target
    w = WINF
    for i, a in enumerate(f.images, start=1):
        d = G.mul(a, G.inv(G.gen(i)))
        w = min(w, int(G.weight[d]))
    return min(w - 1, G.k)


# ----------------------------------------------------- projections, lifts

def projection(big: QuotientGroup, small: QuotientGroup) -> np.ndarray:
    """Memoized on ``big``, keyed by the model name of ``small``."""
    cache = big.__dict__.setdefault("_proj_memo", {})
    if small.name not in cache:
        cache[small.name] = big.projection_to(small)
    return cache[small.name]


def psi(f: Endo, small: QuotientGroup) -> Endo:
    """Reduce an endomorphism of N_{k+1} to N_k."""
    if small.n != f.target.n or small.p != f.target.p:
        raise EndoError("model mismatch")
    P = projection(f.target, small)
    return Endo(small, tuple(int(P[a]) for a in f.images))


def lift(phi: Endo, big: QuotientGroup) -> Endo:
    """Read the witness words of phi's images in the deeper quotient."""
    small = phi.target
    return Endo(big, tuple(big.elem(small.word(a)) for a in phi.images))


# ------------------------------------------------------------ layer basis

@dataclass
class LayerBasis:
    """A basis of the kernel layer L_{k+1} of N_{k+1} -> N_k."""

    group: QuotientGroup
    basis: list[int]
    members: np.ndarray
    coords: dict[int, tuple[int, ...]]
    method: str

    @property
    def dim(self) -> int:
        return len(self.basis)

    def element(self, c: Sequence[int]) -> int:
        G = self.group
        out = 0
        for b, e in zip(self.basis, c):
            out = G.mul(out, G.pow(b, int(e) % G.p))
        return out

    @cached_property
    def elements_by_index(self) -> np.ndarray:
        """Element for every coordinate vector, indexed base p with the first coordinate most significant."""
        p, d = self.group.p, self.dim
        out = np.zeros(p**d, dtype=np.int64)
        for a, c in self.coords.items():
            idx = 0
            for v in c:
                idx = idx * p + v
            out[idx] = a
        return out


def _span_all(G: QuotientGroup, basis: list[int]) -> dict[int, tuple[int, ...]]:
    p = G.p
    out: dict[int, tuple[int, ...]] = {}
    for c in itertools.product(range(p), repeat=len(basis)):
        a = 0
        for b, e in zip(basis, c):
            for _ in range(e):
                a = G.mul(a, b)
        out[a] = c
    return out


def layer_basis(G: QuotientGroup, kernel_mask: np.ndarray | None = None) -> LayerBasis:
    """Deterministic basis of the top layer (weight >= G.k, or the given kernel)."""
    cache = getattr(G, "_layer_basis", None)
    if cache is not None and kernel_mask is None:
        return cache
    mask = G.layer_mask(G.k) if kernel_mask is None else kernel_mask
    members = np.nonzero(mask)[0]
    p = G.p
    d = round(math.log(members.size, p))
    if p**d != members.size:
        raise EndoError("kernel layer is not a p-group of the expected size")
    if G.model == "Z" and kernel_mask is None:
        from .truncalg import offsets

        off = [o - 1 for o in offsets(G.n, G.k)]
        blk = G.reps[members][:, off[G.k]:off[G.k + 1]].astype(np.int64)
        R, _ = rref_mod_p(blk, p)
        basis = [int(x) for x in G.lookup_reps(np.concatenate([np.zeros((R.shape[0], off[G.k]), dtype=np.int64), R], axis=1))]
        method = "rref-graded-lex"
    else:
        basis = []
        span = {0: ()}
        for a in members[1:]:
            if int(a) not in span:
                basis.append(int(a))
                span = _span_all(G, basis)
            if len(basis) == d:
                break
        method = "bfs-greedy"
    coords = _span_all(G, basis)
    if len(coords) != members.size or not all(mask[a] for a in coords):
        raise EndoError("layer basis does not span the kernel")
    out = LayerBasis(G, basis, members, coords, method)
    if kernel_mask is None:
        G._layer_basis = out  # type: ignore[attr-defined]
    return out


# ---------------------------------------------------------------- contexts

@dataclass
class Ctx:
    """(p, n, k, series): the extension Hom(N_1, L_{k+1}) -> Aut N_{k+1} -> Aut N_k."""

    p: int
    n: int
    k: int
    series: str

    def __post_init__(self) -> None:
        if self.series not in ("Z", "S", "tilde"):
            raise ValueError(f"unknown series {self.series}")

    def as_dict(self) -> dict:
        return {"p": self.p, "n": self.n, "k": self.k, "series": self.series}

    @cached_property
    def big(self) -> QuotientGroup:
        if self.series == "tilde":
            return build_tilde(self.p, self.n, self.k).group
        return series_group(self.series, self.p, self.n, self.k + 1)

    @cached_property
    def small(self) -> QuotientGroup:
        if self.series == "tilde":
            return build_tilde(self.p, self.n, self.k).base
        return series_group(self.series, self.p, self.n, self.k)

    @cached_property
    def proj(self) -> np.ndarray:
        return projection(self.big, self.small)

    @cached_property
    def kernel_mask(self) -> np.ndarray:
        return self.proj == 0

    @cached_property
    def basis(self) -> LayerBasis:
        if self.series == "tilde":
            return layer_basis(self.big, self.kernel_mask)
        lb = layer_basis(self.big)
        if not np.array_equal(lb.members, np.nonzero(self.kernel_mask)[0]):
            raise EndoError("top layer differs from the projection kernel")
        return lb

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def hom_size(self) -> int:
        return self.p ** (self.n * self.dim)


# ------------------------------------------------------------ Hom and i

@dataclass(frozen=True)
class HomMatrix:
    """dim L x n matrix over F_p; column j is the image of [x_j]."""

    entries: tuple[tuple[int, ...], ...]
    p: int

    @classmethod
    def from_array(cls, A: np.ndarray, p: int) -> "HomMatrix":
        A = np.asarray(A, dtype=np.int64) % p
        return cls(tuple(tuple(int(v) for v in row) for row in A), p)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(len(self.entries), -1)

    def __add__(self, other: "HomMatrix") -> "HomMatrix":
        return HomMatrix.from_array(self.array() + other.array(), self.p)


@dataclass
class HomSpace:
    ctx: Ctx
    dim: int
    n: int
    p: int

    @property
    def count(self) -> int:
        return self.p ** (self.dim * self.n)

    def matrix(self, idx: int) -> HomMatrix:
        """Decode an index base p, row-major with the first entry most significant."""
        digits = []
        for _ in range(self.dim * self.n):
            idx, r = divmod(idx, self.p)
            digits.append(r)
        A = np.array(digits[::-1], dtype=np.int64).reshape(self.dim, self.n) if self.dim else np.zeros((0, self.n), dtype=np.int64)
        return HomMatrix.from_array(A, self.p)

    def __iter__(self) -> Iterator[HomMatrix]:
        for i in range(self.count):
            yield self.matrix(i)


def hom_space(ctx: Ctx) -> HomSpace:
    return HomSpace(ctx, ctx.dim, ctx.n, ctx.p)


def i_embed(f: HomMatrix, ctx: Ctx) -> Endo:
    """x_j -> f([x_j]) x_j, with f([x_j]) read from column j."""
    A = f.array()
    if A.shape != (ctx.dim, ctx.n):
        raise EndoError(f"expected a {ctx.dim}x{ctx.n} matrix, got {A.shape}")
    G, B = ctx.big, ctx.basis
    ims = []
    for j in range(ctx.n):
        c = B.element(A[:, j])
        ims.append(G.mul(c, G.gen(j + 1)))
    return Endo(G, tuple(ims))


def i_embed_index(idx: np.ndarray, ctx: Ctx) -> np.ndarray:
    """Images of i(f) for many Hom indices at once; returns (len(idx), n)."""
    p, d, n = ctx.p, ctx.dim, ctx.n
    G = ctx.big
    E = ctx.basis.elements_by_index
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty((idx.size, n), dtype=np.int64)
    rest = idx.copy()
    # column j occupies digits j, j+n, j+2n, ... of the row-major layout
    digits = np.empty((idx.size, d * n), dtype=np.int64)
    for t in range(d * n - 1, -1, -1):
        rest, digits[:, t] = np.divmod(rest, p)
    for j in range(n):
        ci = np.zeros(idx.size, dtype=np.int64)
        for r in range(d):
            ci = ci * p + digits[:, r * n + j]
        out[:, j] = G.mul_vec(E[ci], np.full(idx.size, G.gen(j + 1)))
    return out


def kernel_coords(ctx: Ctx, f: Endo) -> HomMatrix | None:
    """If f(x_j) x_j^-1 lies in L_{k+1} for all j, the matrix of those classes."""
    G, B = ctx.big, ctx.basis
    cols = []
    for j, a in enumerate(f.images, start=1):
        c = G.mul(a, G.inv(G.gen(j)))
        if c not in B.coords:
            return None
        cols.append(B.coords[c])
    A = np.array(cols, dtype=np.int64).T.reshape(ctx.dim, ctx.n)
    return HomMatrix.from_array(A, ctx.p)


# ---------------------------------------------------------- enumeration

ENUM_BUDGET = 1 << 20


def enumerate_aut(G: QuotientGroup, budget: int = ENUM_BUDGET) -> list[Endo]:
    """All automorphisms, grouped by their H_p matrix in lexicographic order."""
    fibers: dict[tuple[int, ...], list[int]] = {}
    for a in range(G.order):
        fibers.setdefault(tuple(int(v) for v in G.hp[a]), []).append(a)
    per = (G.order // G.p**G.n) ** G.n
    mats = gl_matrices(G.n, G.p)
    if per * len(mats) > budget:
        raise BudgetExceeded(f"Aut enumeration of size {per * len(mats)} exceeds budget")
    out = []
    for M in mats:
        cols = [fibers[tuple(int(v) for v in M[:, j])] for j in range(G.n)]
        for ims in itertools.product(*cols):
            out.append(Endo(G, tuple(ims)))
    return out


def enumerate_iap(G: QuotientGroup, level: int = 1, budget: int = ENUM_BUDGET) -> list[Endo]:
    """All f with f(x_i) x_i^-1 of weight >= level + 1."""
    mem = np.nonzero(G.layer_mask(level + 1))[0]
    if mem.size**G.n > budget:
        raise BudgetExceeded("IA enumeration exceeds budget")
    xs = G.gens()
    cols = [[G.mul(int(c), x) for c in mem] for x in xs]
    return [Endo(G, tuple(ims)) for ims in itertools.product(*cols)]


def aut_order_by_brute_force(G: QuotientGroup) -> int:
    """Count bijective endomorphisms over all image tuples (small groups only)."""
    cnt = 0
    for ims in itertools.product(range(G.order), repeat=G.n):
        if is_bijective(Endo(G, ims)):
            cnt += 1
    return cnt
