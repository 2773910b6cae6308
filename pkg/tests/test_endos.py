from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcentral import endos as en
from pcentral import quotients as qt
from pcentral.endos import Ctx
from pcentral.words import parse_word

G22 = qt.build_nz(2, 2, 2)
G32 = qt.build_nz(3, 2, 2)


def rand_aut(G, seed):
    auts = en.enumerate_aut(G)
    return auts[seed % len(auts)]


def test_gl_counts():
    assert len(en.gl_matrices(2, 2)) == 6
    assert len(en.gl_matrices(2, 3)) == 48
    assert len(en.gl_matrices(3, 2)) == 168


def test_aut_orders_match_brute_force():
    for k in (1, 2):
        G = qt.build_nz(2, 2, k)
        assert len(en.enumerate_aut(G)) == en.aut_order_by_brute_force(G)
    assert len(en.enumerate_aut(G22)) == 384


def test_aut_criterion_equals_bijectivity():
    G = qt.build_nz(2, 2, 2)
    for ims in [(1, 2), (1, 1), (G.gen(1), G.mul(G.gen(1), G.gen(2))), (0, G.gen(2))]:
        f = en.Endo(G, ims)
        assert en.is_aut(f) == en.is_bijective(f)


def test_identity_swap_and_matrix():
    I = en.identity_endo(G22)
    assert np.array_equal(en.hp_matrix(I), np.eye(2, dtype=np.int64))
    S = en.swap_endo(G22)
    assert np.array_equal(en.hp_matrix(S), np.array([[0, 1], [1, 0]]))
    assert en.endo_order(S) == 2
    M = np.array([[1, 1], [0, 1]])
    assert np.array_equal(en.hp_matrix(en.endo_from_matrix(G32, M)), M)


def test_make_endo_validation():
    with pytest.raises(en.EndoError):
        en.make_endo(G22, [1])
    with pytest.raises(en.EndoError):
        en.make_endo(G22, [1, G22.order])
    f = en.make_endo(G22, [parse_word("x2", 2), parse_word("x1", 2)])
    assert f == en.swap_endo(G22)


@given(st.integers(0, 383), st.integers(0, 383), st.integers(0, 383))
def test_composition_associative_and_matches_tables(a, b, c):
    f, g, h = rand_aut(G22, a), rand_aut(G22, b), rand_aut(G22, c)
    assert en.compose(en.compose(f, g), h) == en.compose(f, en.compose(g, h))
    fg = en.compose(f, g)
    tf, tg = en.image_table(f), en.image_table(g)
    assert np.array_equal(en.image_table(fg), tf[tg])


@given(st.integers(0, 383))
def test_inverse(a):
    f = rand_aut(G22, a)
    I = en.identity_endo(G22)
    assert en.compose(f, en.inverse_endo(f)) == I == en.compose(en.inverse_endo(f), f)


@given(st.integers(0, 383), st.integers(0, 31), st.integers(0, 31))
def test_automorphism_is_homomorphism(a, x, y):
    f = rand_aut(G22, a)
    assert en.apply(f, G22.mul(x, y)) == G22.mul(en.apply(f, x), en.apply(f, y))
    assert en.apply(f, x) == en.apply_word(f, x)


@given(st.integers(0, 383), st.integers(0, 383))
def test_hp_matrix_is_multiplicative(a, b):
    f, g = rand_aut(G22, a), rand_aut(G22, b)
    assert np.array_equal(en.hp_matrix(en.compose(f, g)), en.hp_matrix(f) @ en.hp_matrix(g) % 2)


@given(st.integers(0, 47))
def test_psi_lift_is_identity(a):
    N1 = qt.build_nz(3, 2, 1)
    phi = en.enumerate_aut(N1)[a]
    L = en.lift(phi, G32)
    assert en.is_aut(L) and en.psi(L, N1) == phi


def test_conjugation_is_ia():
    f = en.conjugation_endo(G22, G22.gen(1))
    assert en.ia_level(f) >= 1
    assert en.ia_level(en.identity_endo(G22)) == G22.k
    with pytest.raises(en.EndoError):
        en.ia_level(en.Endo(G22, (0, 0)))


def test_endo_commutator_order():
    f = en.conjugation_endo(G22, G22.gen(1))
    g = en.swap_endo(G22)
    c = en.endo_commutator(f, g)
    assert c == en.compose(en.compose(f, g), en.compose(en.inverse_endo(f), en.inverse_endo(g)))


@pytest.mark.parametrize("p,n,k,s,dim", [(2, 2, 1, "Z", 3), (3, 2, 1, "Z", 1), (2, 2, 2, "Z", 2), (2, 2, 1, "S", 3), (3, 2, 1, "S", 3)])
def test_ctx_layer_dims(p, n, k, s, dim):
    ctx = Ctx(p, n, k, s)
    assert ctx.dim == dim
    assert ctx.hom_size == p ** (n * dim)
    assert int(ctx.kernel_mask.sum()) == p**dim


def test_layer_basis_spans_kernel():
    ctx = Ctx(2, 2, 1, "Z")
    B = ctx.basis
    elems = {B.element(c) for c in np.ndindex(*(2,) * B.dim)}
    assert elems == set(np.nonzero(ctx.kernel_mask)[0].tolist())


def test_i_embed_is_ia_and_kernel_coords_invert_it():
    ctx = Ctx(2, 2, 1, "Z")
    H = en.hom_space(ctx)
    I1 = en.identity_endo(ctx.small)
    for f in H:
        e = en.i_embed(f, ctx)
        assert en.is_aut(e)
        assert en.psi(e, ctx.small) == I1
        assert en.kernel_coords(ctx, e) == f


def test_i_embed_index_matches_scalar():
    ctx = Ctx(3, 2, 1, "S")
    idx = np.arange(0, ctx.hom_size, 17)
    batch = en.i_embed_index(idx, ctx)
    H = en.hom_space(ctx)
    for row, i in zip(batch, idx):
        assert tuple(int(v) for v in row) == en.i_embed(H.matrix(int(i)), ctx).images


def test_enumerate_iap_count():
    assert len(en.enumerate_iap(G22)) == 64
