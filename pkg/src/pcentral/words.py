"""Reduced words in a free group of rank n and the commutator calculus.

Conventions are fixed once here and inherited everywhere else:
``[x, y] = x y x^-1 y^-1`` and ``x^y = y x y^-1``.

A letter is a nonzero signed integer: ``+i`` is x_i, ``-i`` is x_i^-1.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class WordError(ValueError):
    pass


def _free_reduce(letters: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for a in letters:
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """A freely reduced word; ``letters`` holds signed generator indices."""

    letters: tuple[int, ...]
    rank: int
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise WordError(f"rank must be positive, got {self.rank}")
        if self._checked:
            return
        for a in self.letters:
            if a == 0 or abs(a) > self.rank:
                raise WordError(f"letter {a} out of range for rank {self.rank}")
        for a, b in zip(self.letters, self.letters[1:]):
            if a == -b:
                raise WordError("word is not freely reduced; use reduce()")

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        """Letters as (generator index, sign) pairs."""
        return tuple((abs(a), 1 if a > 0 else -1) for a in self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return mul(self, other)

    def __invert__(self) -> "Word":
        return inv(self)

    def __pow__(self, e: int) -> "Word":
        return power(self, e)

    def __str__(self) -> str:
        return format_word(self)


def _mk(letters: tuple[int, ...], rank: int) -> Word:
    return Word(letters, rank, _checked=True)


def reduce(letters: Sequence, rank: int) -> Word:
    """Freely reduce a raw letter sequence.

    Accepts signed ints or (index, sign) pairs.
    """
    flat: list[int] = []
    for a in letters:
        if isinstance(a, tuple):
            i, s = a
            if s not in (1, -1):
                raise WordError(f"bad sign {s}")
            a = i * s
        a = int(a)
        if a == 0 or abs(a) > rank:
            raise WordError(f"letter {a} out of range for rank {rank}")
        flat.append(a)
    return _mk(_free_reduce(flat), rank)


def identity(rank: int) -> Word:
    return _mk((), rank)


def gen(i: int, rank: int) -> Word:
    if not 1 <= i <= rank:
        raise WordError(f"generator {i} out of range for rank {rank}")
    return _mk((i,), rank)


def _same_rank(*ws: Word) -> int:
    r = ws[0].rank
    for w in ws[1:]:
        if w.rank != r:
            raise WordError(f"rank mismatch: {r} vs {w.rank}")
    return r


def mul(u: Word, v: Word) -> Word:
    r = _same_rank(u, v)
    # only the junction can cancel
    a, b = list(u.letters), v.letters
    j = 0
    while a and j < len(b) and a[-1] == -b[j]:
        a.pop()
        j += 1
    return _mk(tuple(a) + b[j:], r)


def inv(u: Word) -> Word:
    return _mk(tuple(-a for a in reversed(u.letters)), u.rank)


def power(u: Word, e: int) -> Word:
    base = u if e >= 0 else inv(u)
    out = identity(u.rank)
    for _ in range(abs(e)):
        out = mul(out, base)
    return out


def product(ws: Iterable[Word], rank: int) -> Word:
    out = identity(rank)
    for w in ws:
        out = mul(out, w)
    return out


def commutator(u: Word, v: Word) -> Word:
    """[u, v] = u v u^-1 v^-1."""
    _same_rank(u, v)
    return mul(mul(mul(u, v), inv(u)), inv(v))


def conjugate(u: Word, v: Word) -> Word:
    """u^v = v u v^-1."""
    _same_rank(u, v)
    return mul(mul(v, u), inv(v))


def alternating_commutator(first: int, second: int, length: int, rank: int | None = None) -> Word:
    """Right-nested [x_first, [x_second, [x_first, ...]]] with ``length`` letters."""
    if first == second:
        raise WordError("alternating commutator needs two distinct generators")
    if length < 1:
        raise WordError("length must be positive")
    r = rank if rank is not None else max(first, second)
    letters = [first if t % 2 == 0 else second for t in range(length)]
    w = gen(letters[-1], r)
    for a in reversed(letters[:-1]):
        w = commutator(gen(a, r), w)
    return w


def exponent_sums(w: Word) -> list[int]:
    s = [0] * w.rank
    for a in w.letters:
        s[abs(a) - 1] += 1 if a > 0 else -1
    return s


# ---------------------------------------------------------------- sampling

def random_word(rank: int, rng: random.Random, max_len: int = 12) -> Word:
    """Uniform length in [0, max_len], uniform letters, then free reduction."""
    length = rng.randint(0, max_len)
    raw = [rng.choice((1, -1)) * rng.randint(1, rank) for _ in range(length)]
    return reduce(raw, rank)


# ---------------------------------------------------------- Hall identities

def _hall_checks(x: Word, y: Word, z: Word) -> dict[str, bool]:
    c, cj, iv, m = commutator, conjugate, inv, mul
    e = identity(x.rank)
    return {
        "1": cj(x, y) == m(c(y, x), x),
        "2": c(y, x) == iv(c(x, y)),
        "3a": c(x, iv(y)) == cj(c(y, x), iv(y)),
        "3b": c(iv(x), y) == cj(c(y, x), iv(x)),
        "4a": c(m(x, y), z) == m(cj(c(y, z), x), c(x, z)),
        "4b": c(x, m(y, z)) == m(c(x, y), cj(c(x, z), y)),
        "5": hall_witt(x, y, z) == e,
    }


def hall_witt(x: Word, y: Word, z: Word) -> Word:
    """[x^y,[z,y]] [y^z,[x,z]] [z^x,[y,x]], trivial in every group."""
    c, cj, m = commutator, conjugate, mul
    return m(m(c(cj(x, y), c(z, y)), c(cj(y, z), c(x, z))), c(cj(z, x), c(y, x)))


def hall_witt_printed(x: Word, y: Word, z: Word) -> Word:
    """[x^y,[y,z]] [y^z,[z,x]] [z^x,[y,x]]: the commonly misprinted variant, NOT a law.

    Kept so tests can show it is nontrivial at (x1, x2, x3).
    """
    c, cj, m = commutator, conjugate, mul
    return m(m(c(cj(x, y), c(y, z)), c(cj(y, z), c(z, x))), c(cj(z, x), c(y, x)))


@dataclass
class HallReport:
    rank: int
    samples: int
    seed: int
    checked: dict[str, int]
    failures: list[tuple[str, str, str, str]]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "samples": self.samples,
            "seed": self.seed,
            "checked": dict(self.checked),
            "failures": [list(f) for f in self.failures],
            "pass": self.ok,
        }


def hall_identity_suite(n: int, samples: int, seed: int, max_len: int = 12) -> HallReport:
    """Check identities (1)-(5) on ``samples`` random triples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = random.Random(seed)
    checked: dict[str, int] = {}
    failures: list[tuple[str, str, str, str]] = []
    for _ in range(samples):
        x, y, z = (random_word(n, rng, max_len) for _ in range(3))
        for name, ok in _hall_checks(x, y, z).items():
            checked[name] = checked.get(name, 0) + 1
            if not ok:
                failures.append((name, format_word(x), format_word(y), format_word(z)))
    return HallReport(n, samples, seed, checked, failures)


def hall_identities_hold(x: Word, y: Word, z: Word) -> dict[str, bool]:
    return _hall_checks(x, y, z)


# ------------------------------------------------------------ text syntax

def format_word(w: Word) -> str:
    """Print with runs grouped into powers: ``x1^2*x2^-1``; ``1`` if empty."""
    if not w.letters:
        return "1"
    parts: list[str] = []
    i = 0
    L = w.letters
    while i < len(L):
        g = abs(L[i])
        s = 1 if L[i] > 0 else -1
        j = i
        while j < len(L) and L[j] == L[i]:
            j += 1
        e = s * (j - i)
        parts.append(f"x{g}" if e == 1 else f"x{g}^{e}")
        i = j
    return "*".join(parts)


_TOKEN = re.compile(r"\s*(x\d+|-?\d+|\^|\*|\[|\]|\(|\)|,)")


def _tokenize(s: str) -> list[str]:
    pos, toks = 0, []
    s = s.rstrip()
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m:
            raise WordError(f"cannot parse word at {s[pos:]!r}")
        toks.append(m.group(1))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, toks: list[str], rank: int):
        self.t, self.i, self.rank = toks, 0, rank

    def peek(self) -> str | None:
        return self.t[self.i] if self.i < len(self.t) else None

    def take(self, want: str | None = None) -> str:
        tok = self.peek()
        if tok is None or (want is not None and tok != want):
            raise WordError(f"expected {want!r}, got {tok!r}")
        self.i += 1
        return tok

    def expr(self) -> Word:
        w = self.term()
        while self.peek() == "*":
            self.take("*")
            w = mul(w, self.term())
        return w

    def term(self) -> Word:
        w = self.atom()
        while self.peek() == "^":
            self.take("^")
            tok = self.take()
            try:
                e = int(tok)
            except ValueError:
                raise WordError(f"bad exponent {tok!r}") from None
            w = power(w, e)
        return w

    def atom(self) -> Word:
        tok = self.take()
        if tok.startswith("x"):
            return gen(int(tok[1:]), self.rank)
        if tok == "1":
            return identity(self.rank)
        if tok == "(":
            w = self.expr()
            self.take(")")
            return w
        if tok == "[":
            a = self.expr()
            self.take(",")
            b = self.expr()
            self.take("]")
            return commutator(a, b)
        raise WordError(f"unexpected token {tok!r}")


def parse_word(s: str, rank: int) -> Word:
    """Parse ``x1*x2^-1``, ``[x1,x2]``, ``(x1*x2)^2`` or ``1``."""
    p = _Parser(_tokenize(s), rank)
    w = p.expr()
    if p.peek() is not None:
        raise WordError(f"trailing input {p.t[p.i:]}")
    return w
