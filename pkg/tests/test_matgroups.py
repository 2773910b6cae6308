from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sympy.combinatorics.coset_table import coset_enumeration_r
from sympy.combinatorics.fp_groups import FpGroup
from sympy.combinatorics.free_groups import free_group

from pcentral import matgroups as mg
from pcentral.truncalg import BudgetExceeded


def test_matzq_basics():
    a = mg.MatZq.from_array([[1, 2], [3, 4]], 9)
    assert mg.mat_det(a) == (4 - 6) % 9
    assert mg.mat_mul(a, mg.mat_inv(a)) == mg.MatZq.identity(2, 9)
    assert mg.rp(a).q == 3 and mg.rp(a).flat() == [1, 2, 0, 1]
    with pytest.raises(mg.MatError):
        mg.mat_inv(mg.MatZq.from_array([[3, 0], [0, 1]], 9))
    with pytest.raises(mg.MatError):
        mg.enumerate_group("SL", 2, 6)


def test_transvection():
    t = mg.transvection(3, 1, 3, 4, 2)
    assert t.array()[0, 2] == 2 and mg.mat_det(t) == 1


@pytest.mark.parametrize(
    "kind,n,q,order",
    [("SL", 2, 3, 24), ("GL", 2, 3, 48), ("UT", 3, 2, 8), ("SL", 2, 9, 648), ("GL", 2, 9, 3888), ("SL", 3, 4, 43008), ("GL", 3, 4, 86016), ("SL", 2, 25, 15000), ("SL", 3, 2, 168)],
)
def test_group_orders(kind, n, q, order):
    G = mg.enumerate_group(kind, n, q)
    assert G.order == order == mg.expected_order(kind, n, q)


def test_group_budget():
    with pytest.raises(BudgetExceeded):
        mg.enumerate_group("GL", 3, 9)


@given(st.integers(0, 647), st.integers(0, 647))
def test_reduction_is_homomorphism(a, b):
    G = mg.enumerate_group("SL", 2, 9)
    A, B = G.matrix(a), G.matrix(b)
    assert mg.rp(A * B) == mg.rp(A) * mg.rp(B)


@given(st.integers(0, 647))
def test_batched_inverse(a):
    G = mg.enumerate_group("SL", 2, 9)
    row = G.elems[a : a + 1]
    inv = G.ops.inv(row)
    assert np.array_equal(G.ops.mul(row, inv)[0], np.eye(2, dtype=np.int64).ravel())


@pytest.mark.parametrize("kind,n,p,size", [("SL", 2, 2, 8), ("GL", 2, 2, 16), ("SL", 2, 3, 27)])
def test_rp_kernel_sizes(kind, n, p, size):
    G = mg.enumerate_group(kind, n, p * p)
    assert mg.rp_kernel(G).shape[0] == size


@pytest.mark.parametrize("kind,n,p,dim", [("SL", 2, 2, 1), ("SL", 2, 3, 1), ("SL", 3, 2, 0), ("GL", 2, 2, 1)])
def test_abelianization_dim_mod_p(kind, n, p, dim):
    G = mg.enumerate_group(kind, n, p)
    assert mg.abelianization_hom_count(G, p) == dim


def test_normal_closure_of_transvection_in_sl2_3():
    G = mg.enumerate_group("SL", 2, 3)
    N = mg.normal_closure_rows(G, [mg.transvection(2, 1, 2, 3).array().ravel()])
    assert N.shape[0] == 24


def _sympy_order(pres: mg.Presentation) -> int:
    k = len(pres.gens)
    F, *xs = free_group(" ".join(f"x{i + 1}" for i in range(k)))
    rels = []
    for w in pres.words():
        e = F.identity
        for a in w.letters:
            e = e * (xs[abs(a) - 1] if a > 0 else xs[abs(a) - 1] ** -1)
        rels.append(e)
    C = coset_enumeration_r(FpGroup(F, rels), [], max_cosets=20000)
    C.compress()
    return len(C.table)


@pytest.mark.parametrize(
    "kind,n,p", [("SL", 2, 2), ("SL", 2, 3), ("GL", 2, 3), ("SL", 3, 2), ("SL", 2, 5), ("UT", 3, 2), ("UT", 2, 3)]
)
def test_presentations_valid_and_defining(kind, n, p):
    pres = mg.base_presentation(kind, n, p)
    base = mg.enumerate_group("SL" if kind == "SL" or (kind == "GL" and p == 2) else kind, n, p)
    info = pres.validate(base)
    assert all(info["relators_hold"]) and info["generated_order"] == base.order
    # independent: the abstract group they present has the same order
    assert _sympy_order(pres) == base.order


def test_presentation_validation_rejects_wrong_relator():
    bad = mg.Presentation("bad", mg.base_presentation("SL", 2, 3).gens, ("x1^2",))
    with pytest.raises(mg.MatError):
        bad.validate(mg.enumerate_group("SL", 2, 3))


def test_split_table():
    cases = mg.verify_split_tables()
    got = {(c.kind, c.n, c.p): c.status for c in cases}
    assert got == {(k, n, p): want for k, n, p, want in mg.SPLIT_TABLE}
    for c in cases:
        assert c.ok, c.to_json()
        if c.status == "FOUND":
            assert c.replay["homomorphism"] and c.replay["bijective"] and c.replay["lifts_generators"]


def test_split_found_section_is_deterministic():
    a = mg.matrix_split("SL", 2, 3).to_json()
    b = mg.matrix_split("SL", 2, 3).to_json()
    assert a == b
    assert a["section"] == [[0, 1, 8, 1], [6, 2, 7, 4]]


def test_search_budget():
    total = mg.enumerate_group("SL", 2, 9)
    pres = mg.base_presentation("SL", 2, 3)
    fib = mg.fibers_over(total, pres.gens)
    with pytest.raises(BudgetExceeded):
        mg.complement_search(total.ops, fib, pres.words(), 24, budget=100)


def test_replay_detects_non_homomorphism():
    # control: a non-section tuple (first fiber element paired with a non-lift) is rejected
    total = mg.enumerate_group("SL", 2, 4)
    base = mg.enumerate_group("SL", 2, 2)
    pres = mg.base_presentation("SL", 2, 2)
    fib = mg.fibers_over(total, pres.gens)
    info = mg.replay_section(
        total.ops, [fib[0][0], fib[1][0]], lambda R: base.ops.key(mg.rp_rows(R, 2)), base, [g.array().ravel() for g in pres.gens]
    )
    assert not (info["bijective"] and info["homomorphism"])
