"""Verifiers for the extension Hom(N_1, L_{k+1}) -> Aut N_{k+1} -> Aut N_k.

Each verifier returns a :class:`Report` made of named legs. A leg records
whether it ran exhaustively or on samples and how many checks it made.
Every verifier also runs a negative control that must fail.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import truncalg as ta
from .endos import (
    Ctx,
    Endo,
    EndoError,
    compose,
    conjugation_endo,
    endo_commutator,
    enumerate_aut,
    enumerate_iap,
    format_endo,
    hom_space,
    i_embed,
    i_embed_index,
    ia_level,
    identity_endo,
    image_table,
    inverse_endo,
    is_aut,
    is_bijective,
    lift,
    psi,
    swap_endo,
)
from .truncalg import BudgetExceeded
from .quotients import build_nz, build_tilde, series_group, verify_pcovering
from .words import alternating_commutator

#: pair checks per leg above which a leg switches to sampling
PAIR_CAP = 1 << 22
#: largest Hom space enumerated in full
ENUM_CAP = 1 << 20


@dataclass
class Leg:
    name: str
    mode: str
    count: int
    ok: bool
    detail: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"name": self.name, "mode": self.mode, "count": self.count, "pass": self.ok}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class Report:
    kind: str
    ctx: dict
    legs: list[Leg] = field(default_factory=list)
    witness: dict | None = None
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(l.ok for l in self.legs)

    def leg(self, name: str) -> Leg:
        for l in self.legs:
            if l.name == name:
                return l
        raise KeyError(name)

    def add(self, name: str, mode: str, count: int, ok: bool, **detail: Any) -> Leg:
        lg = Leg(name, mode, int(count), bool(ok), detail)
        self.legs.append(lg)
        return lg

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "pcentral_report": 1,
            "kind": self.kind,
            "ctx": self.ctx,
            "legs": [l.to_json() for l in sorted(self.legs, key=lambda l: l.name)],
            "pass": self.ok,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.data:
            out["data"] = self.data
        return out


# ---------------------------------------------------------------- exactness

@dataclass
class ExactnessReport(Report):
    kernel_size: int = 0
    hom_size: int = 0

    @property
    def i_injective(self) -> bool:
        return self.leg("i_injective").ok

    @property
    def i_homomorphism(self) -> bool:
        return self.leg("i_homomorphism").ok

    @property
    def image_equals_kernel(self) -> bool:
        return self.leg("image_equals_kernel").ok

    @property
    def psi_surjective(self) -> bool:
        return self.leg("psi_surjective").ok

    @property
    def ok(self) -> bool:  # type: ignore[override]
        expect = self.hom_size == self.kernel_size and all(l.ok for l in self.legs)
        return expect


def _hom_digits(ctx: Ctx, idx: np.ndarray) -> np.ndarray:
    p, m = ctx.p, ctx.dim * ctx.n
    D = np.empty((idx.size, m), dtype=np.int64)
    rest = idx.copy()
    for t in range(m - 1, -1, -1):
        rest, D[:, t] = np.divmod(rest, p)
    return D


def _digits_index(ctx: Ctx, D: np.ndarray) -> np.ndarray:
    out = np.zeros(D.shape[0], dtype=np.int64)
    for t in range(D.shape[1]):
        out = out * ctx.p + D[:, t]
    return out


def _tables_for(G, images: np.ndarray) -> np.ndarray:
    return np.stack([image_table(Endo(G, tuple(int(v) for v in row))) for row in images])


def verify_exactness(ctx: Ctx, seed: int = 0) -> ExactnessReport:
    G, H = ctx.big, ctx.small
    hs = hom_space(ctx)
    rep = ExactnessReport("exactness", ctx.as_dict(), hom_size=hs.count)
    rng = np.random.default_rng(seed)

    # (a) i is injective and turns addition into composition
    if hs.count > ENUM_CAP:
        raise BudgetExceeded("Hom space too large to enumerate")
    idx = np.arange(hs.count)
    ims = i_embed_index(idx, ctx)
    rep.add("i_injective", "exhaustive", idx.size, np.unique(ims, axis=0).shape[0] == idx.size)

    D = _hom_digits(ctx, idx)
    ok, count = True, 0
    if idx.size * idx.size <= PAIR_CAP:
        tables = _tables_for(G, ims)
        for a in range(idx.size):
            comp = tables[a][ims]  # i(f_a) o i(f_b), all b
            s = _digits_index(ctx, (D[a] + D) % ctx.p)
            ok &= bool(np.array_equal(comp, ims[s]))
            count += idx.size
        hmode = "exhaustive"
    else:
        asel = rng.choice(idx.size, size=256, replace=False)
        tables = _tables_for(G, ims[asel])
        for t, a in enumerate(asel):
            bsel = rng.integers(0, idx.size, size=256)
            comp = tables[t][ims[bsel]]
            s = _digits_index(ctx, (D[a] + D[bsel]) % ctx.p)
            ok &= bool(np.array_equal(comp, ims[s]))
            count += bsel.size
        hmode = "sampled"
    rep.add("i_homomorphism", hmode, count, ok)

    # (b) ker psi = image of i, by enumerating IA^p(N_{k+1})
    try:
        ia = enumerate_iap(G, 1)
        P = ctx.proj
        xs_small = tuple(H.gens())
        kern = {f.images for f in ia if tuple(int(P[a]) for a in f.images) == xs_small}
        image = {tuple(int(v) for v in row) for row in ims}
        rep.add("image_equals_kernel", "exhaustive", len(ia), kern == image, ia_size=len(ia))
        rep.kernel_size = len(kern)
        rep.add("image_in_iap", "exhaustive", len(ims), image <= {f.images for f in ia})
    except BudgetExceeded:
        rep.kernel_size = -1
        rep.add("image_equals_kernel", "skipped", 0, False, reason="IA^p enumeration over budget")

    # (c) psi o lift = id on Aut N_k
    auts = enumerate_aut(H)
    good = all(psi(lift(phi, G), H) == phi and is_aut(lift(phi, G)) for phi in auts)
    rep.add("psi_surjective", "exhaustive", len(auts), good, aut_small=len(auts))

    # negative control: a matrix that is not the identity must move a generator
    if hs.count > 1:
        f = i_embed(hs.matrix(1), ctx)
        rep.add("control_nonzero_hom_moves_generator", "exhaustive", 1, f != identity_endo(G))
    rep.data = {"kernel_size": rep.kernel_size, "hom_size": hs.count, "dim_L": ctx.dim}
    return rep


# -------------------------------------------------------------- centrality

def _class_of(ctx: Ctx, a: int) -> tuple[int, ...]:
    B = ctx.basis
    if a not in B.coords:
        raise EndoError("element is not in the kernel layer")
    return B.coords[a]


def noncentral_pair(ctx: Ctx) -> tuple[Endo, Endo]:
    """i(f) with f([x_1]) = class of the alternating commutator of length k+1, and the swap."""
    G = ctx.big
    w = alternating_commutator(1, 2, ctx.k + 1, ctx.n)
    c = _class_of(ctx, G.elem(w))
    A = np.zeros((ctx.dim, ctx.n), dtype=np.int64)
    A[:, 0] = c
    from .endos import HomMatrix

    f = i_embed(HomMatrix.from_array(A, ctx.p), ctx)
    return f, swap_endo(G)


def verify_noncentral(ctx: Ctx) -> Report:
    if ctx.n < 2:
        raise ValueError("needs n >= 2")
    rep = Report("noncentral", ctx.as_dict())
    f, h = noncentral_pair(ctx)
    conj = compose(h, compose(f, inverse_endo(h)))
    rep.add("witness_moves", "exhaustive", 1, conj != f)
    rep.add("witness_in_kernel", "exhaustive", 1, psi(f, ctx.small) == identity_endo(ctx.small))
    # control: conjugating by another kernel element changes nothing
    g = i_embed(hom_space(ctx).matrix(hom_space(ctx).count - 1), ctx)
    ctrl = compose(g, compose(f, inverse_endo(g)))
    rep.add("control_kernel_conjugation_trivial", "exhaustive", 1, ctrl == f)
    rep.witness = {"f": format_endo(f), "h": format_endo(h), "h_f_h_inv": format_endo(conj)}
    return rep


def verify_ia_central(ctx: Ctx, seed: int = 0) -> Report:
    """i(Hom) commutes with every element of IA^p(N_{k+1})."""
    G = ctx.big
    rep = Report("ia_central", ctx.as_dict())
    hs = hom_space(ctx)
    ia = enumerate_iap(G, 1)
    rng = np.random.default_rng(seed)
    pairs = len(ia) * hs.count
    if pairs <= PAIR_CAP:
        hidx = np.arange(hs.count)
        gsel = range(len(ia))
        mode = "exhaustive"
    else:
        hidx = np.unique(rng.integers(0, hs.count, size=512))
        gsel = sorted(set(rng.integers(0, len(ia), size=512).tolist()))
        mode = "sampled"
    ims = i_embed_index(hidx, ctx)
    tabs = _tables_for(G, ims)  # (H, N)
    bad = 0
    count = 0
    for gi in gsel:
        g = ia[gi]
        Tg = image_table(g)
        left = Tg[ims]  # g o i(f)
        right = tabs[:, list(g.images)]  # i(f) o g
        bad += int(np.sum(np.any(left != right, axis=1)))
        count += len(hidx)
    rep.add("ia_commutes_with_kernel", mode, count, bad == 0, violations=bad, ia_size=len(ia))
    # control: the swap is not in IA^p and must fail to commute with some i(f)
    h = swap_endo(G)
    Th = image_table(h)
    fails = int(np.sum(np.any(Th[ims] != tabs[:, list(h.images)], axis=1)))
    rep.add("control_swap_does_not_commute", "exhaustive", len(hidx), fails > 0, noncommuting=fails)
    return rep


def verify_action_factorization(ctx: Ctx) -> Report:
    """IA^p acts trivially on L_{k+1}."""
    G = ctx.big
    rep = Report("action_factorization", ctx.as_dict())
    ia = enumerate_iap(G, 1)
    mem = ctx.basis.members
    bad = sum(int(np.any(image_table(f)[mem] != mem)) for f in ia)
    rep.add("iap_fixes_kernel", "exhaustive", len(ia) * mem.size, bad == 0)
    Th = image_table(swap_endo(G))
    rep.add("control_swap_moves_kernel", "exhaustive", mem.size, bool(np.any(Th[mem] != mem)))
    return rep


# ------------------------------------------------------------- lemma checks

def verify_lemma(series: str, p: int, n: int, depth: int, samples: int = 200, seed: int = 0) -> Report:
    """[IA_k, G_l] in G_{k+l} and [IA_k, IA_l] in IA_{k+l}, on random samples."""
    G = series_group(series, p, n, depth)
    rep = Report("lemma", {"series": series, "p": p, "n": n, "depth": depth})
    rng = random.Random(seed)
    xs = G.gens()
    layers = {l: np.nonzero(G.layer_mask(l))[0] for l in range(1, depth + 2)}

    def random_ia(k: int) -> Endo:
        mem = layers[k + 1]
        return Endo(G, tuple(G.mul(int(mem[rng.randrange(mem.size)]), x) for x in xs))

    bad1 = bad2 = 0
    for _ in range(samples):
        k = rng.randint(1, depth)
        l = rng.randint(1, depth)
        f = random_ia(k)
        mem = layers[l]
        g = int(mem[rng.randrange(mem.size)])
        d = G.mul(image_table(f)[g], G.inv(g))
        if G.weight[d] < k + l:
            bad1 += 1
        f2 = random_ia(l)
        c = endo_commutator(f, f2)
        if ia_level(c) < min(k + l, depth):
            bad2 += 1
    rep.add("ia_times_layer", "sampled", samples, bad1 == 0, violations=bad1)
    rep.add("ia_commutator_level", "sampled", samples, bad2 == 0, violations=bad2)
    # control: the swap has IA level 0 and moves x_1 out of the next layer
    h = swap_endo(G)
    rep.add("control_swap_level_zero", "exhaustive", 1, ia_level(h) == 0)
    return rep


def verify_sharpness(k: int, l: int, p: int = 2, n: int = 2) -> Report:
    """[gamma_1, gamma_2] has Zassenhaus weight exactly k + l."""
    if k == l:
        raise ValueError("k = l makes the two alternating commutators equal; pick k != l")
    rep = Report("sharpness", {"p": p, "n": n, "k": k, "l": l})
    M = k + l
    g1 = alternating_commutator(1, 2, k, n)
    g2 = alternating_commutator(2, 1, l, n)
    u1 = ta.eval_word(g1, p, n, M)
    u2 = ta.eval_word(g2, p, n, M)
    c = ta.group_commutator(u1, u2)
    w = ta.zweight(c)
    rep.add("weight_exact", "exhaustive", 1, w == k + l, weight=w, gamma1=str(g1), gamma2=str(g2))
    rep.add("inputs_in_layers", "exhaustive", 2, ta.zweight(u1) >= k and ta.zweight(u2) >= l)
    # the same commutator computed as f(gamma_2) gamma_2^-1 with f = conjugation by gamma_1
    try:
        G = build_nz(p, n, M)
        f = conjugation_endo(G, G.elem(g1))
        a2 = G.elem(g2)
        d = G.mul(image_table(f)[a2], G.inv(a2))
        rep.add("endo_route_agrees", "exhaustive", 1, int(G.weight[d]) == k + l)
    except ta.BudgetExceeded:
        pass
    rep.data = {"leading_terms": ta.format_series(c)}
    return rep


# --------------------------------------------------------------- p-coverings

def verify_pcovering_cases(n: int) -> Report:
    """Tilde quotient over N_1 and N^Z_3 over N^Z_2 at p = 2."""
    rep = Report("pcovering", {"p": 2, "n": n})
    info = build_tilde(2, n, 1)
    rep.add("tilde_over_N1", "exhaustive", info.group.order, verify_pcovering(info.kernel, info.group, info.proj))
    expected = n * (n + 1) // 2  # dim H_2((Z/2)^n; F_2) from the Kunneth formula
    rep.add("tilde_kernel_dim_equals_H2", "exhaustive", 1, info.dim_kernel == expected, dim=info.dim_kernel, h2=expected)
    rep.data["tilde_depth_check"] = info.depth_assertion
    if n == 2:
        from .quotients import Subgroup

        G3, G2 = build_nz(2, n, 3), build_nz(2, n, 2)
        P = G3.projection_to(G2)
        rep.add("NZ3_over_NZ2", "exhaustive", G3.order, verify_pcovering(Subgroup(G3, P == 0), G3, P))
        # control: all of N^Z_2 as kernel of the map to the trivial group is not central
        rep.add(
            "control_noncentral",
            "exhaustive",
            G2.order,
            not verify_pcovering(Subgroup(G2, np.ones(G2.order, dtype=bool)), G2, np.zeros(G2.order, dtype=np.int64)),
        )
    return rep


# ------------------------------------------------------------- stab / hom

def verify_stab_hom(p: int, n: int, k: int = 1, samples: int = 2000, seed: int = 0) -> Report:
    """Kernel of Aut Ñ_{k+1} -> Aut N_k has 2^(n dim L̃) elements, all stabilizing."""
    if p != 2:
        raise ValueError("tilde quotients are enumerated only for p = 2")
    ctx = Ctx(p, n, k, "tilde")
    G, H = ctx.big, ctx.small
    rep = Report("stab_hom", ctx.as_dict())
    L = ctx.basis.members
    expected = p ** (n * ctx.dim)
    rng = np.random.default_rng(seed)
    xs_small = tuple(H.gens())
    P = ctx.proj
    if G.order**n <= 1 << 12:
        import itertools

        kern = []
        for ims in itertools.product(range(G.order), repeat=n):
            if tuple(int(P[a]) for a in ims) != xs_small:
                continue
            f = Endo(G, ims)
            if is_aut(f):
                kern.append(f)
        rep.add("kernel_size", "exhaustive", G.order**n, len(kern) == expected, size=len(kern), expected=expected)
        chk = kern
        mode = "exhaustive"
    else:
        # psi(f) = id forces f(x_i) = c_i x_i with c_i in the kernel layer
        idx = np.arange(expected)
        ims = i_embed_index(idx, ctx)
        distinct = np.unique(ims, axis=0).shape[0]
        rep.add("kernel_size", "constructed", expected, distinct == expected, size=distinct, expected=expected)
        sel = rng.choice(expected, size=min(samples, expected), replace=False)
        chk = [Endo(G, tuple(int(v) for v in ims[s])) for s in sel]
        mode = "sampled"
    bad = 0
    for f in chk:
        T = image_table(f)
        if not np.array_equal(T[L], L) or psi(f, H) != identity_endo(H) or not is_bijective(f):
            bad += 1
    rep.add("kernel_stabilizes", mode, len(chk), bad == 0, violations=bad)
    # d(x) = f(s(x)) s(x)^-1 is additive on N_k
    fib_min = np.full(H.order, -1)
    for a in range(G.order - 1, -1, -1):
        fib_min[P[a]] = a
    sec = fib_min
    coords = ctx.basis.coords
    bad = cnt = 0
    for f in chk[: min(len(chk), 64)]:
        T = image_table(f)

        def d(x: int) -> tuple[int, ...]:
            s = int(sec[x])
            return coords[G.mul(int(T[s]), G.inv(s))]

        for x in range(H.order):
            for y in range(H.order):
                lhs = d(H.mul(x, y))
                rhs = tuple((a + b) % p for a, b in zip(d(x), d(y)))
                cnt += 1
                bad += lhs != rhs
    rep.add("derivation_additive", "sampled" if mode == "sampled" else "exhaustive", cnt, bad == 0, violations=bad)
    h = swap_endo(G)
    rep.add("control_swap_not_in_kernel", "exhaustive", 1, psi(h, H) != identity_endo(H))
    rep.data = {"dim_L_tilde": ctx.dim, "order_total": G.order}
    return rep


# -------------------------------------------------------- Hall congruences

def _rand_lower_central(p: int, n: int, M: int, a: int, rng: random.Random) -> ta.TruncSeries:
    """A random left-normed commutator of a random short words (lies in Gamma_a)."""
    from .words import random_word

    def rw() -> ta.TruncSeries:
        w = random_word(n, rng, 3)
        while not w.letters:
            w = random_word(n, rng, 3)
        return ta.eval_word(w, p, n, M)

    u = rw()
    for _ in range(a - 1):
        u = ta.group_commutator(u, rw())
    return u


def _rand_in_zassenhaus(p: int, n: int, M: int, i: int, rng: random.Random) -> ta.TruncSeries:
    """Product of (Gamma_a element)^(p^b) with a p^b >= i: an element of Gamma^Z_i."""
    out = ta.TruncSeries.one(p, n, M)
    for _ in range(rng.randint(1, 3)):
        b = rng.randint(0, max(0, int(math.log(max(i, 1), p)) + 1))
        a = max(1, -(-i // p**b))
        if a > M:
            continue
        u = _rand_lower_central(p, n, M, a, rng)
        out = ta.smul(out, ta.power(u, p**b))
    return out


@dataclass
class CongruenceReport:
    p: int
    n: int
    M: int
    samples: int
    seed: int
    failures: list[dict]
    checks: dict[str, int]
    exact_cases: int

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "pcentral_report": 1,
            "kind": "hall_congruence",
            "ctx": {"p": self.p, "n": self.n, "M": self.M, "samples": self.samples, "seed": self.seed},
            "checks": self.checks,
            "exact_cases": self.exact_cases,
            "failures": self.failures,
            "pass": self.ok,
        }


def check_hall_congruence(p: int, n: int, samples: int, seed: int, M: int | None = None) -> CongruenceReport:
    """zweight((x y)^(p^j) x^(-p^j)) >= i p^j + k for x of weight i and y of weight i + k."""
    if M is None:
        M = 6 if n == 2 else 4
    ta.check_budget(n, M)
    rng = random.Random(seed)
    nrng = np.random.default_rng(seed)
    fails: list[dict] = []
    checks = {"congruence": 0, "power": 0, "commutator": 0}
    exact = 0
    for s in range(samples):
        i = rng.randint(1, M - 1)
        k = rng.randint(1, M - i)
        if s % 2 == 0:
            x = _rand_in_zassenhaus(p, n, M, i, rng)
            y = _rand_in_zassenhaus(p, n, M, i + k, rng)
        else:
            x = ta.unit_samples(p, n, M, i, nrng)
            y = ta.unit_samples(p, n, M, i + k, nrng)
        js = [j for j in range(0, 4) if i * p**j <= M - k]
        j = rng.choice(js)
        q = p**j
        lhs = ta.smul(ta.power(ta.smul(x, y), q), ta.power(x, -q))
        w = ta.zweight(lhs)
        checks["congruence"] += 1
        if w < i * q + k:
            fails.append({"check": "congruence", "i": i, "k": k, "j": j, "x": str(x), "y": str(y)})
        elif w == i * q + k:
            exact += 1
        wx, wy = ta.zweight(x), ta.zweight(y)
        checks["power"] += 1
        if ta.zweight(ta.power(x, p)) < min(p * wx, M + 1):
            fails.append({"check": "power", "x": str(x)})
        checks["commutator"] += 1
        if ta.zweight(ta.group_commutator(x, y)) < min(wx + wy, M + 1):
            fails.append({"check": "commutator", "x": str(x), "y": str(y)})
    return CongruenceReport(p, n, M, samples, seed, fails, checks, exact)


# --------------------------------------------------------- series checks

def verify_series_inclusions(p: int, n: int, lmax: int) -> Report:
    """S_l in Z_l and Z_{p^(l-1)} in S_l for l <= lmax, inside N^Z_D with D = max(p^(lmax-1), lmax).

    Both inclusions are checked on images modulo the (D+1)-th Zassenhaus term.
    """
    from .quotients import stallings_layers

    D = max(p ** (lmax - 1), lmax)
    st = stallings_layers(p, n, lmax - 1, depth=D)
    A = st.ambient
    rep = Report("series_inclusions", {"p": p, "n": n, "lmax": lmax, "ambient_depth": D})
    for l in range(1, lmax + 1):
        S = st.layers[l - 1]
        gens_ok = all(int(A.weight[g]) >= l for g in S.generators)
        rep.add(f"S{l}_in_Z{l}", "exhaustive", S.order, bool(np.all(A.layer_mask(l)[S.mask])) and gens_ok)
        zl = A.layer_mask(p ** (l - 1))
        rep.add(f"Z{p ** (l - 1)}_in_S{l}", "exhaustive", int(zl.sum()), bool(np.all(S.mask[zl])))
    # control: S_2 is not inside Z_3
    if lmax >= 2 and D >= 3:
        rep.add("control_S2_not_in_Z3", "exhaustive", 1, not bool(np.all(A.layer_mask(3)[st.layers[1].mask])))
    rep.data = {"stallings_orders": [S.order for S in st.layers], "ambient_order": A.order}
    return rep


def check_series_properties(series: str, p: int, n: int, k: int, samples: int, seed: int) -> Report:
    """Random pairs in N_k: [G_a, G_b] in G_(a+b); p-th powers move Z weight a to pa and S weight a to a+1."""
    G = series_group(series, p, n, k)
    rng = np.random.default_rng(seed)
    rep = Report("series_properties", {"series": series, "p": p, "n": n, "k": k, "samples": samples, "seed": seed})
    a = rng.integers(1, G.order, size=samples)
    b = rng.integers(1, G.order, size=samples)
    wa, wb = G.weight[a].astype(np.int64), G.weight[b].astype(np.int64)
    comm = np.array([G.comm(int(x), int(y)) for x, y in zip(a, b)])
    pw = np.array([G.pow(int(x), p) for x in a])
    bound_c = np.minimum(wa + wb, k + 1)
    bound_p = np.minimum(p * wa if series == "Z" else wa + 1, k + 1)
    bad_c = int(np.sum(G.weight[comm] < bound_c))
    bad_p = int(np.sum(G.weight[pw] < bound_p))
    rep.add("commutator_weight", "sampled", samples, bad_c == 0, violations=bad_c)
    rep.add("power_weight", "sampled", samples, bad_p == 0, violations=bad_p)
    if k >= 3:
        # control: the commutator bound raised by one must fail somewhere
        over = int(np.sum(G.weight[comm] < np.minimum(wa + wb + 1, k + 1)))
        rep.add("control_bound_plus_one_fails", "sampled", samples, over > 0)
    return rep
