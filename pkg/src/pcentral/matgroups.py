"""Matrix groups over Z/p and Z/p^2, reduction mod p, and complement search.

Group elements are handled in bulk as rows: a matrix is its row-major
entries. The complement search is written against a small row interface so
the same code runs on matrices and on automorphism tables.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .quotients import _bfs
from .truncalg import BudgetExceeded
from .words import Word, parse_word

#: largest group enumerated by generator closure
GROUP_BUDGET = 200_000
#: cap on candidate tuples in a complement search
SEARCH_BUDGET = 1 << 24


class MatError(ValueError):
    pass


# ------------------------------------------------------------ arithmetic

def _prime_power(q: int) -> tuple[int, int]:
    for p in range(2, q + 1):
        if q % p == 0:
            e, r = 0, q
            while r % p == 0:
                r //= p
                e += 1
            if r != 1:
                raise MatError(f"modulus {q} is not a prime power")
            return p, e
    raise MatError(f"bad modulus {q}")


@dataclass(frozen=True)
class MatZq:
    """An n x n matrix with entries reduced mod q."""

    q: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.q < 2:
            raise MatError("modulus must be >= 2")
        n = len(self.entries)
        if any(len(r) != n for r in self.entries):
            raise MatError("matrix must be square")
        if any(not 0 <= v < self.q for r in self.entries for v in r):
            raise MatError("entries must be reduced mod q")

    @classmethod
    def from_array(cls, A: Sequence | np.ndarray, q: int) -> "MatZq":
        A = np.asarray(A, dtype=np.int64) % q
        return cls(q, tuple(tuple(int(v) for v in row) for row in A))

    @classmethod
    def identity(cls, n: int, q: int) -> "MatZq":
        return cls.from_array(np.eye(n, dtype=np.int64), q)

    @property
    def n(self) -> int:
        return len(self.entries)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def flat(self) -> list[int]:
        return [v for r in self.entries for v in r]

    def __mul__(self, other: "MatZq") -> "MatZq":
        return mat_mul(self, other)

    def __str__(self) -> str:
        return "[" + "; ".join(" ".join(str(v) for v in r) for r in self.entries) + f"] mod {self.q}"


def transvection(n: int, i: int, j: int, q: int, t: int = 1) -> MatZq:
    """I + t E_ij with 1-based indices."""
    A = np.eye(n, dtype=np.int64)
    A[i - 1, j - 1] = t
    return MatZq.from_array(A, q)


def mat_mul(a: MatZq, b: MatZq) -> MatZq:
    if a.q != b.q or a.n != b.n:
        raise MatError("shape or modulus mismatch")
    return MatZq.from_array(a.array() @ b.array(), a.q)


def _det_int(A: list[list[int]]) -> int:
    n = len(A)
    if n == 1:
        return A[0][0]
    if n == 2:
        return A[0][0] * A[1][1] - A[0][1] * A[1][0]
    return sum(
        (-1) ** j * A[0][j] * _det_int([row[:j] + row[j + 1:] for row in A[1:]]) for j in range(n)
    )


def mat_det(a: MatZq) -> int:
    return _det_int([list(r) for r in a.entries]) % a.q


def mat_inv(a: MatZq) -> MatZq:
    d = mat_det(a)
    if math.gcd(d, a.q) != 1:
        raise MatError(f"determinant {d} is not a unit mod {a.q}")
    n = a.n
    rows = [list(r) for r in a.entries]
    adj = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            minor = [r[:j] + r[j + 1:] for k, r in enumerate(rows) if k != i]
            adj[j, i] = (-1) ** (i + j) * (_det_int(minor) if minor else 1)
    out = MatZq.from_array(adj * pow(d, -1, a.q), a.q)
    if mat_mul(a, out) != MatZq.identity(n, a.q):
        raise MatError("inverse check failed")
    return out


def rp(a: MatZq) -> MatZq:
    """Entrywise reduction Z/p^2 -> Z/p."""
    p, e = _prime_power(a.q)
    if e != 2:
        raise MatError(f"rp expects modulus p^2, got {a.q}")
    return MatZq.from_array(a.array(), p)


# ---------------------------------------------------------------- rows

class RowOps(Protocol):
    width: int
    identity: np.ndarray

    def mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray: ...
    def inv(self, A: np.ndarray) -> np.ndarray: ...
    def key(self, A: np.ndarray) -> np.ndarray: ...


class MatOps:
    """Row interface for n x n matrices mod q; ``exponent`` kills every element."""

    def __init__(self, n: int, q: int, exponent: int):
        self.n, self.q, self.exponent = n, q, exponent
        self.width = n * n
        self.identity = np.eye(n, dtype=np.int64).ravel()

    def mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        n = self.n
        a = np.asarray(A).reshape(*np.shape(A)[:-1], n, n)
        b = np.asarray(B).reshape(*np.shape(B)[:-1], n, n)
        c = np.matmul(a, b) % self.q
        return c.reshape(*c.shape[:-2], n * n)

    def power(self, A: np.ndarray, e: int) -> np.ndarray:
        out = np.broadcast_to(self.identity, np.shape(A)).copy()
        base = np.asarray(A)
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    def inv(self, A: np.ndarray) -> np.ndarray:
        return self.power(A, self.exponent - 1)

    def key(self, A: np.ndarray) -> np.ndarray:
        A = np.atleast_2d(A)
        out = np.zeros(A.shape[0], dtype=np.int64)
        for j in range(self.width):
            out = out * self.q + A[:, j]
        return out


def eval_relator(ops: RowOps, w: Word, lifts: Sequence[np.ndarray], invs: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate a word in the generator rows; rows may be batched (m, w) or single (w,)."""
    out: np.ndarray = ops.identity
    for a in w.letters:
        out = ops.mul(out, lifts[a - 1] if a > 0 else invs[-a - 1])
    return out


def is_identity_rows(ops: RowOps, A: np.ndarray) -> np.ndarray:
    return np.all(np.atleast_2d(A) == ops.identity, axis=-1)


def closure_rows(ops: RowOps, gens: Sequence[np.ndarray], budget: int) -> np.ndarray:
    """All products of the given rows (a finite group); raises BudgetExceeded past budget."""
    G = np.stack([np.asarray(g) for g in gens])

    def step(R: np.ndarray, c: int) -> np.ndarray:
        return ops.mul(R, G[c])

    data = _bfs(np.asarray(ops.identity, dtype=np.int64), step, ops.key, len(gens), budget)
    return data["reps"]


# --------------------------------------------------------- enumeration

def expected_order(kind: str, n: int, q: int) -> int:
    p, e = _prime_power(q)
    gl_p = math.prod(p**n - p**i for i in range(n))
    gl = p ** ((e - 1) * n * n) * gl_p
    units = q - q // p
    if kind == "GL":
        return gl
    if kind == "SL":
        return gl // units
    if kind == "UT":
        return q ** (n * (n - 1) // 2)
    if kind == "SLp":
        return (gl // units) * p ** (e - 1)
    raise MatError(f"unknown kind {kind}")


def group_generators(kind: str, n: int, q: int) -> list[MatZq]:
    p, _ = _prime_power(q)
    tv = [transvection(n, i, j, q) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    units = [u for u in range(2, q) if math.gcd(u, q) == 1]

    def diag(u: int) -> MatZq:
        A = np.eye(n, dtype=np.int64)
        A[0, 0] = u
        return MatZq.from_array(A, q)

    if kind == "SL":
        return tv
    if kind == "GL":
        return tv + [diag(u) for u in units]
    if kind == "UT":
        return [transvection(n, i, j, q) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    if kind == "SLp":
        return tv + [diag(u) for u in units if u % p == 1]
    raise MatError(f"unknown kind {kind}")


@dataclass
class MatGroup:
    kind: str
    n: int
    q: int
    elems: np.ndarray  # (N, n*n), BFS order, identity first
    keys_sorted: np.ndarray
    idx_sorted: np.ndarray
    gens: list[MatZq]

    @property
    def order(self) -> int:
        return int(self.elems.shape[0])

    @property
    def p(self) -> int:
        return _prime_power(self.q)[0]

    @property
    def ops(self) -> MatOps:
        return MatOps(self.n, self.q, self.order)

    def index(self, rows: np.ndarray) -> np.ndarray:
        """Positions of the given rows; -1 where absent."""
        k = self.ops.key(rows)
        pos = np.minimum(np.searchsorted(self.keys_sorted, k), self.keys_sorted.size - 1)
        hit = self.keys_sorted[pos] == k
        return np.where(hit, self.idx_sorted[pos], -1)

    def contains(self, rows: np.ndarray) -> np.ndarray:
        return self.index(rows) >= 0

    def matrix(self, i: int) -> MatZq:
        return MatZq.from_array(self.elems[i].reshape(self.n, self.n), self.q)


_GROUPS: dict[tuple[str, int, int], MatGroup] = {}


def enumerate_group(kind: str, n: int, q: int, budget: int = GROUP_BUDGET) -> MatGroup:
    """Closure of the standard generators; order checked against the closed formula."""
    memo = (kind, n, q)
    if memo in _GROUPS:
        return _GROUPS[memo]
    want = expected_order(kind, n, q)
    if want > budget:
        raise BudgetExceeded(f"|{kind}_{n}(Z/{q})| = {want} exceeds budget {budget}")
    gens = group_generators(kind, n, q)
    ops = MatOps(n, q, 1)
    G = np.stack([g.array().ravel() for g in gens])

    def step(R: np.ndarray, c: int) -> np.ndarray:
        return ops.mul(R, G[c])

    data = _bfs(ops.identity.astype(np.int64), step, ops.key, len(gens), budget)
    out = MatGroup(kind, n, q, data["reps"], data["keys_sorted"], data["idx_sorted"], gens)
    if out.order != want:
        raise MatError(f"enumerated {out.order} elements, formula gives {want}")
    _GROUPS[memo] = out
    return out


def subgroup_closure(G: MatGroup, gens: Sequence[np.ndarray]) -> np.ndarray:
    if not len(gens):
        return G.ops.identity[None, :].copy()
    return closure_rows(G.ops, list(gens), G.order)


def normal_closure_rows(G: MatGroup, gens: Sequence[np.ndarray]) -> np.ndarray:
    ops = G.ops
    cur = [np.asarray(g) for g in gens]
    G_rows = [g.array().ravel() for g in G.gens]
    G_inv = [ops.inv(g) for g in G_rows]
    while True:
        S = subgroup_closure(G, cur)
        keys = set(ops.key(S).tolist())
        new = []
        for s in cur:
            for g, gi in zip(G_rows, G_inv):
                c = ops.mul(ops.mul(g, s), gi)
                if int(ops.key(c)[0]) not in keys:
                    new.append(c)
                    keys.add(int(ops.key(c)[0]))
        if not new:
            return S
        cur += new


def abelianization_hom_count(G: MatGroup, p: int) -> int:
    """dim over F_p of Hom(G, Z/p), via the index of [G,G]G^p."""
    ops = G.ops
    gs = [g.array().ravel() for g in G.gens]
    inv = [ops.inv(g) for g in gs]
    rels = [ops.power(g, p) for g in gs]
    for a, b in itertools.combinations(range(len(gs)), 2):
        rels.append(ops.mul(ops.mul(ops.mul(gs[a], gs[b]), inv[a]), inv[b]))
    S = normal_closure_rows(G, rels)
    index = G.order // S.shape[0]
    d = round(math.log(index, p)) if index > 1 else 0
    if p**d != index:
        raise MatError(f"index {index} of [G,G]G^p is not a power of {p}")
    return d


def rp_rows(rows: np.ndarray, p: int) -> np.ndarray:
    return np.asarray(rows) % p


def rp_kernel(G: MatGroup) -> np.ndarray:
    """Elements of G reducing to the identity mod p."""
    p = G.p
    mask = np.all(rp_rows(G.elems, p) == G.ops.identity, axis=1)
    return G.elems[mask]


# --------------------------------------------------------- presentations

@dataclass(frozen=True)
class Presentation:
    """Generators (as matrices over F_p) and relators as words in them."""

    name: str
    gens: tuple[MatZq, ...]
    relators: tuple[str, ...]

    def words(self) -> list[Word]:
        return [parse_word(r, len(self.gens)) for r in self.relators]

    def validate(self, base: MatGroup) -> dict:
        """Generators must generate ``base`` and every relator must hold there."""
        ops = base.ops
        rows = [g.array().ravel() for g in self.gens]
        invs = [ops.inv(r) for r in rows]
        hold = [bool(is_identity_rows(ops, eval_relator(ops, w, rows, invs))[0]) for w in self.words()]
        span = subgroup_closure(base, rows).shape[0]
        ok = all(hold) and span == base.order and bool(np.all(base.contains(np.stack(rows))))
        if not ok:
            raise MatError(f"presentation {self.name} fails validation: relators {hold}, span {span}/{base.order}")
        return {"name": self.name, "relators_hold": hold, "generated_order": span}


def _m(rows: list[list[int]], q: int) -> MatZq:
    return MatZq.from_array(rows, q)


def base_presentation(kind: str, n: int, p: int) -> Presentation:
    """Fixture presentations of the search bases, checked at runtime by ``validate``."""
    if kind in ("SL", "GL") and (n, p) == (2, 2):
        return Presentation("S3", (_m([[1, 1], [0, 1]], 2), _m([[1, 0], [1, 1]], 2)), ("x1^2", "x2^2", "(x1*x2)^3"))
    if kind == "SL" and (n, p) == (2, 3):
        return Presentation(
            "2T", (_m([[0, 1], [2, 1]], 3), _m([[0, 2], [1, 1]], 3)), ("x1^3*(x1*x2)^-2", "x2^3*(x1*x2)^-2")
        )
    if kind == "GL" and (n, p) == (2, 3):
        return Presentation(
            "GL(2,3)", (_m([[0, 1], [1, 0]], 3), _m([[1, 0], [1, 1]], 3)), ("x1^2", "x2^3", "(x1*x2)^8", "[(x1*x2)^4,x1]")
        )
    if kind in ("SL", "GL") and (n, p) == (3, 2):
        return Presentation(
            "L(2,7)",
            (_m([[0, 0, 1], [0, 1, 0], [1, 0, 0]], 2), _m([[0, 1, 0], [1, 0, 1], [1, 1, 0]], 2)),
            ("x1^2", "x2^3", "(x1*x2)^7", "[x1,x2]^4"),
        )
    if kind == "SL" and (n, p) == (2, 5):
        return Presentation(
            "2I", (_m([[0, 1], [4, 1]], 5), _m([[0, 4], [1, 3]], 5)), ("x1^3*(x1*x2)^-2", "x2^5*(x1*x2)^-2")
        )
    if kind == "UT" and n == 2:
        return Presentation(f"UT(2,{p})", (transvection(2, 1, 2, p),), (f"x1^{p}",))
    if kind == "UT" and (n, p) == (3, 2):
        return Presentation(
            "UT(3,2)",
            (transvection(3, 1, 2, 2), transvection(3, 1, 3, 2), transvection(3, 2, 3, 2)),
            ("x1^2", "x2^2", "x3^2", "[x1,x2]", "[x3,x2]", "[x1,x3]*x2^-1"),
        )
    raise MatError(f"no presentation fixture for {kind}_{n}(F_{p})")


# ------------------------------------------------------- complement search

@dataclass
class SearchResult:
    status: str  # FOUND | EXHAUSTED
    images: list[np.ndarray] | None
    fiber_sizes: list[int]
    filtered_sizes: list[int]
    tuples_checked: int
    closures_tried: int
    first_index: tuple[int, ...] | None = None

    @property
    def found(self) -> bool:
        return self.status == "FOUND"


def complement_search(
    ops: RowOps,
    fibers: Sequence[np.ndarray],
    relators: Sequence[Word],
    base_order: int,
    budget: int = SEARCH_BUDGET,
) -> SearchResult:
    """Lift each base generator over its fiber so that all relators hold.

    ``fibers[i]`` lists the preimages of generator i in lexicographic order.
    Relators involving one generator prune its fiber first; the rest are
    checked over the product in lexicographic order, the last generator
    batched. A tuple is accepted when its closure has exactly ``base_order``
    elements, so the projection restricted to it is a bijection.
    """
    r = len(fibers)
    for w in relators:
        if w.rank != r:
            raise MatError(f"relator rank {w.rank} does not match {r} generators")
    single: dict[int, list[Word]] = {i: [] for i in range(r)}
    multi: list[Word] = []
    for w in relators:
        used = {abs(a) - 1 for a in w.letters}
        if len(used) == 1:
            single[used.pop()].append(w)
        elif used:
            multi.append(w)
    F, Fi, keep = [], [], []
    for i in range(r):
        X = np.asarray(fibers[i])
        Xi = ops.inv(X)
        mask = np.ones(X.shape[0], dtype=bool)
        for w in single[i]:
            lifts = [X if j == i else ops.identity for j in range(r)]
            invs = [Xi if j == i else ops.identity for j in range(r)]
            mask &= is_identity_rows(ops, eval_relator(ops, w, lifts, invs))
        keep.append(np.nonzero(mask)[0])
        F.append(X[mask])
        Fi.append(Xi[mask])
    total = math.prod(f.shape[0] for f in F)
    if total > budget:
        raise BudgetExceeded(f"complement search needs {total} tuples, budget {budget}")
    res = SearchResult("EXHAUSTED", None, [len(f) for f in fibers], [f.shape[0] for f in F], 0, 0)
    if total == 0:
        return res
    last = r - 1
    for head in itertools.product(*[range(F[i].shape[0]) for i in range(last)]):
        lifts = [F[i][head[i]] for i in range(last)] + [F[last]]
        invs = [Fi[i][head[i]] for i in range(last)] + [Fi[last]]
        ok = np.ones(F[last].shape[0], dtype=bool)
        for w in multi:
            ok &= is_identity_rows(ops, eval_relator(ops, w, lifts, invs))
        res.tuples_checked += F[last].shape[0]
        for j in np.nonzero(ok)[0]:
            gens = [F[i][head[i]] for i in range(last)] + [F[last][j]]
            res.closures_tried += 1
            try:
                size = closure_rows(ops, gens, base_order).shape[0]
            except BudgetExceeded:
                continue
            if size == base_order:
                res.status = "FOUND"
                res.images = gens
                res.first_index = tuple(int(keep[i][head[i]]) for i in range(last)) + (int(keep[last][j]),)
                return res
    return res


def replay_section(
    ops: RowOps,
    images: Sequence[np.ndarray],
    proj_key: Callable[[np.ndarray], np.ndarray],
    base: MatGroup,
    base_gen_rows: Sequence[np.ndarray],
) -> dict:
    """Check s(gh) = s(g)s(h) over all of base and that s lifts each generator."""
    lifts_ok = bool(np.array_equal(proj_key(np.stack(list(images))), base.ops.key(np.stack(list(base_gen_rows)))))
    try:
        C = closure_rows(ops, list(images), base.order)
    except BudgetExceeded:  # the images generate more than |base| elements
        C = None
    bkeys = proj_key(C) if C is not None else None
    bijective = C is not None and C.shape[0] == base.order and np.unique(bkeys).size == base.order
    if not bijective:
        return {"lifts_generators": lifts_ok, "bijective": False, "homomorphism": False, "pairs": 0}
    # s is the inverse of the projection on C
    order = np.argsort(bkeys)
    skeys = bkeys[order]
    B = base.ops
    s_of = lambda keys: C[order[np.searchsorted(skeys, keys)]]  # noqa: E731
    s_base = s_of(B.key(base.elems))
    ok = True
    for a in range(base.order):
        gh = B.mul(base.elems[a], base.elems)
        lhs = s_of(B.key(gh))
        rhs = ops.mul(s_base[a], s_base)
        ok &= bool(np.array_equal(lhs, rhs))
    return {"lifts_generators": lifts_ok, "bijective": True, "homomorphism": ok, "pairs": base.order**2}


# ------------------------------------------------------------ split table

def fibers_over(total: MatGroup, gens: Sequence[MatZq]) -> list[np.ndarray]:
    """Preimages under rp of each generator, sorted lexicographically."""
    p = gens[0].q
    red = rp_rows(total.elems, p)
    out = []
    for g in gens:
        X = total.elems[np.all(red == g.array().ravel(), axis=1)]
        out.append(X[np.lexsort(X.T[::-1])])
    return out


@dataclass
class MatrixSplitCase:
    kind: str
    n: int
    p: int
    expected: str
    status: str = ""
    result: SearchResult | None = None
    replay: dict = field(default_factory=dict)
    presentation: dict = field(default_factory=dict)
    total_order: int = 0
    base_order: int = 0

    @property
    def ok(self) -> bool:
        if self.status != self.expected:
            return False
        return self.status == "EXHAUSTED" or (self.replay.get("homomorphism", False) and self.replay.get("lifts_generators", False))

    def to_json(self) -> dict:
        out = {
            "case": f"{self.kind}_{self.n}(Z/{self.p ** 2}) -> {self.kind}_{self.n}(Z/{self.p})",
            "kind": self.kind,
            "n": self.n,
            "p": self.p,
            "status": self.status,
            "expected": self.expected,
            "total_order": self.total_order,
            "base_order": self.base_order,
            "presentation": self.presentation,
            "pass": self.ok,
        }
        if self.result is not None:
            out["fiber_sizes"] = self.result.fiber_sizes
            out["filtered_sizes"] = self.result.filtered_sizes
            out["tuples_checked"] = self.result.tuples_checked
            if self.result.images is not None:
                out["section"] = [[int(v) for v in row] for row in self.result.images]
                out["replay"] = self.replay
        return out


def matrix_split(kind: str, n: int, p: int, budget: int = SEARCH_BUDGET) -> MatrixSplitCase:
    """Search for a complement of ker r_p in kind_n(Z/p^2)."""
    total = enumerate_group(kind, n, p * p)
    base = enumerate_group(kind, n, p)
    pres = base_presentation(kind, n, p)
    info = pres.validate(base)
    fib = fibers_over(total, pres.gens)
    res = complement_search(total.ops, fib, pres.words(), base.order, budget)
    case = MatrixSplitCase(kind, n, p, "", res.status, res, {}, info, total.order, base.order)
    if res.found:
        case.replay = replay_section(
            total.ops, res.images, lambda R: base.ops.key(rp_rows(R, p)), base, [g.array().ravel() for g in pres.gens]
        )
    return case


#: (kind, n, p, expected verdict)
SPLIT_TABLE = [
    ("SL", 2, 2, "EXHAUSTED"),
    ("SL", 2, 3, "FOUND"),
    ("SL", 3, 2, "FOUND"),
    ("GL", 2, 2, "FOUND"),
    ("GL", 2, 3, "FOUND"),
    ("GL", 3, 2, "FOUND"),
    ("SL", 2, 5, "EXHAUSTED"),
]


def verify_split_tables(cases: Sequence[tuple[str, int, int, str]] = SPLIT_TABLE) -> list[MatrixSplitCase]:
    out = []
    for kind, n, p, want in cases:
        c = matrix_split(kind, n, p)
        c.expected = want
        out.append(c)
    return out
