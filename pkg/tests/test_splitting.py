from __future__ import annotations

import copy
import json

import numpy as np
import pytest

from pcentral import quotients as qt
from pcentral import splitting as sp
from pcentral.endos import compose, endo_from_matrix, identity_endo, image_table, is_aut, psi
from pcentral.words import parse_word


def test_fixture_sections():
    rep = sp.verify_fixture_sections()
    assert rep.ok, rep.to_json()
    assert [r["group_order"] for r in rep.rows] == [32, 243, 512, 512]


def test_fixture_section_also_splits_zassenhaus_model_at_2_2():
    # N^Z_2(2,2) and N^S_2(2,2) coincide: both are Gamma modulo Gamma_3 Gamma_2^2 Gamma^4
    Z, S = qt.series_group("Z", 2, 2, 2), qt.series_group("S", 2, 2, 2)
    assert Z.order == S.order == 32
    phi = np.array([S.elem(Z.word(a)) for a in range(Z.order)])
    assert np.unique(phi).size == 32
    s = sp._fixture(Z, ["x1^-1", "x2*x1"])
    N1 = qt.series_group("Z", 2, 2, 1)
    assert is_aut(s) and compose(s, s) == identity_endo(Z) and s != identity_endo(Z)
    assert psi(s, N1) == endo_from_matrix(N1, sp.T_matrix(2, 1, 2))


@pytest.mark.parametrize("series,p,n", [("Z", 3, 2), ("Z", 2, 2), ("S", 2, 2), ("S", 3, 2)])
def test_split_k1_found_and_replays(series, p, n):
    cert = sp.split_k1(series, p, n)
    assert isinstance(cert, sp.SplitCertificate)
    assert cert.level == "sylow" and cert.upgrade is not None and cert.upgrade.level == "full"
    assert sp.certificate_valid(cert) and cert.replay()


def test_split_certificate_json_roundtrip_and_tamper():
    cert = sp.split_k1("Z", 3, 2)
    data = json.loads(json.dumps(cert.to_json(), sort_keys=True))
    assert sp.replay_split(data)
    bad = copy.deepcopy(data)
    bad["section"][0]["images"] = ["x1", "x2"]
    assert not sp.replay_split(bad)


def test_obstruction_23_stallings():
    cert = sp.obstruction_23("S")
    assert cert.ok, cert.checks
    w = cert.witness
    assert w["m_scanned"] == 262144 and w["m_solutions"] == 0 and w["b_solutions"] == 0
    assert w["control_solutions"] > 0
    assert [(r["w"], r["expected"]) for r in w["table"]] == sp.OBSTRUCTION_TABLE


def test_obstruction_table_products_literally():
    G = qt.series_group("S", 2, 3, 2)
    table = image_table(sp._fixture(G, ["x1^-1", "x2", "x3*x1"]))
    for w, want in sp.OBSTRUCTION_TABLE:
        a = G.elem(parse_word(w, 3))
        assert G.mul(a, int(table[a])) == G.elem(parse_word(want, 3))


@pytest.mark.parametrize("p", [2, 3])
def test_nosplit_kge2(p):
    cert = sp.nosplit_kge2("Z", p, 2, 2)
    assert cert.ok, cert.checks
    assert cert.replay()
    data = cert.to_json()
    data["witness"]["c"] = sp._words_of(identity_endo(qt.series_group("Z", p, 2, 3)))
    assert not sp.replay_nosplit(data)


def test_nosplit_kge2_rejects_k1():
    with pytest.raises(ValueError):
        sp.nosplit_kge2("Z", 2, 2, 1)


def test_rules():
    assert sp.published_rule("Z", 3, 2, 1) and not sp.published_rule("Z", 2, 2, 1)
    assert sp.published_rule("S", 2, 2, 1) and sp.published_rule("S", 3, 2, 1)
    assert not sp.published_rule("S", 2, 3, 1) and not sp.published_rule("Z", 3, 2, 2)
    diff = [pt for pt in sp.GRID if sp.published_rule(*pt) != sp.corrected_rule(*pt)]
    assert diff == [("Z", 2, 2, 1)]


def test_grid_subset_matches_corrected_rule():
    rows = sp.verdict_grid([("Z", 3, 2, 1), ("Z", 2, 2, 1), ("Z", 2, 2, 2)])
    for r in rows:
        assert r.valid
        assert r.split == sp.corrected_rule(r.series, r.p, r.n, r.k)
        j = r.to_json()
        assert set(j) >= {"published_rule", "corrected_rule", "verdict", "wall_time_ms"}
