from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcentral import quotients as qt
from pcentral import truncalg as ta
from pcentral.words import parse_word


@pytest.mark.parametrize(
    "p,n,k,order",
    [(2, 2, 1, 4), (2, 2, 2, 32), (2, 2, 3, 128), (2, 2, 4, 8192), (3, 2, 1, 9), (3, 2, 2, 27), (3, 2, 3, 2187), (2, 3, 3, 131072)],
)
def test_build_nz_orders_frozen(p, n, k, order):
    G = qt.build_nz(p, n, k)
    assert G.order == order
    assert G.order == ta.jennings_dims(p, n, k)[1][-1]


def test_group_axioms_small():
    G = qt.build_nz(2, 2, 2)
    T = G.table
    N = G.order
    assert np.array_equal(T[0], np.arange(N)) and np.array_equal(T[:, 0], np.arange(N))
    for a in range(N):
        assert T[a, G.inverse[a]] == 0
    A, B, C = np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij")
    assert np.array_equal(T[T[A, B], C], T[A, T[B, C]])


def test_witness_words_evaluate_to_their_element():
    G = qt.build_nz(3, 2, 3)
    for a in range(0, G.order, 37):
        assert G.elem(G.word(a)) == a
    assert G.word(0).letters == ()


@given(st.integers(0, 2186), st.integers(0, 2186))
def test_mul_agrees_with_word_concatenation(a, b):
    G = qt.build_nz(3, 2, 3)
    assert G.mul(a, b) == G.elem(G.word(a) * G.word(b))


def test_closure_examples():
    G = qt.build_nz(2, 2, 2)
    assert qt.closure(G, []).order == 1
    assert qt.closure(G, G.gens()).order == G.order


def test_normal_closure_of_commutator():
    # the normal closure of [x1,x2] is the derived subgroup, of order 2 (not |G|/p^n = 8)
    G = qt.build_nz(2, 2, 2)
    c = G.elem(parse_word("[x1,x2]", 2))
    assert qt.normal_closure(G, [c]).order == 2


@pytest.mark.parametrize("p,n,k", [(2, 2, 2), (2, 2, 3), (3, 2, 2), (2, 3, 1)])
def test_frattini_index_is_p_to_n(p, n, k):
    G = qt.build_nz(p, n, k)
    F = qt.frattini(G)
    assert G.order // F.order == p**n


def test_frattini_examples():
    assert qt.frattini(qt.build_nz(2, 2, 1)).order == 1
    assert qt.frattini(qt.build_nz(2, 2, 2)).order == 8


@pytest.mark.parametrize("p,n,k", [(2, 2, 4), (3, 2, 3)])
def test_zassenhaus_layers_elementary_abelian(p, n, k):
    G = qt.build_nz(p, n, k)
    for l in range(1, k + 1):
        S = qt.layer(G, l)
        mem = S.members
        nxt = G.layer_mask(l + 1)
        assert np.all(nxt[[G.pow(int(a), p) for a in mem[:200]]])
        assert S.order // int(nxt.sum()) == p ** ta.jennings_dims(p, n, k)[0][l - 1]


@pytest.mark.parametrize("p,n,order", [(2, 2, 32), (3, 2, 243), (2, 3, 512)])
def test_build_ns2_orders(p, n, order):
    assert qt.build_ns2(p, n).order == order


def test_ns2_matches_coset_model():
    pc = qt.build_ns2(2, 2)
    co = qt.build_ns_coset(2, 2, 2)
    assert pc.order == co.order == 32
    phi = np.array([co.elem(pc.word(a)) for a in range(pc.order)])
    assert np.unique(phi).size == pc.order
    for a in range(pc.order):
        for i in range(1, 3):
            assert phi[pc.mul(a, pc.gen(i))] == co.mul(int(phi[a]), co.gen(i))


def test_ns2_collection_rule_p2():
    G = qt.build_ns2(2, 2)
    lhs = G.elem(parse_word("(x1*x2)^2", 2))
    rhs = G.elem(parse_word("x1^2*x2^2*[x2,x1]", 2))
    assert lhs == rhs


@pytest.mark.parametrize("p,n,lmax,dims", [(2, 2, 2, [2, 3]), (2, 3, 2, [3, 6]), (3, 2, 1, [2])])
def test_stallings_layer_dims(p, n, lmax, dims):
    st_ = qt.stallings_layers(p, n, lmax)
    assert st_.dims() == dims
    A = st_.ambient
    for l, S in enumerate(st_.layers, start=1):
        assert np.all(A.layer_mask(l)[S.mask])


def test_stallings_depth_bound():
    assert qt.stallings_depth(2, 2) == 3
    assert qt.stallings_depth(3, 2) == 8


@pytest.mark.parametrize("n,dim", [(2, 3), (3, 6)])
def test_tilde_kernel_dimension_matches_h2(n, dim):
    info = qt.build_tilde(2, n, 1)
    assert info.dim_kernel == dim == math.comb(n + 1, 2)
    assert qt.verify_pcovering(info.kernel, info.group, info.proj)


def test_tilde_rejects_odd_p():
    with pytest.raises(ta.BudgetExceeded):
        qt.build_tilde(3, 2, 1)


def test_pcovering_positive_and_negative():
    big, small = qt.build_nz(2, 2, 3), qt.build_nz(2, 2, 2)
    proj = big.projection_to(small)
    assert qt.verify_pcovering(qt.Subgroup(big, proj == 0, []), big, proj)
    # control: N_3 -> N_1 has a non-central kernel
    proj1 = big.projection_to(qt.build_nz(2, 2, 1))
    rep = qt.check_pcovering(qt.Subgroup(big, proj1 == 0, []), big, proj1)
    assert not rep.central and not rep.ok


def test_pcovering_rejects_non_surjective():
    G = qt.build_nz(2, 2, 2)
    bad = np.zeros(G.order, dtype=np.int64)
    bad[1] = 2
    with pytest.raises(ValueError):
        qt.check_pcovering(qt.Subgroup(G, bad == 0, []), G, bad)


def test_budget_exceeded_for_large_group():
    with pytest.raises(ta.BudgetExceeded):
        qt.build_nz(2, 3, 4)


def test_disk_cache_roundtrip(tmp_path):
    qt.set_cache_dir(str(tmp_path))
    try:
        qt.clear_memory_cache()
        a = qt.build_nz(3, 2, 2)
        assert any(tmp_path.iterdir())
        qt.clear_memory_cache()
        b = qt.build_nz(3, 2, 2)
        assert np.array_equal(a.reps, b.reps) and np.array_equal(a.rmul, b.rmul)
    finally:
        qt.set_cache_dir(None)
        qt.clear_memory_cache()
