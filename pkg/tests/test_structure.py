from fractions import Fraction as F

import pytest

from fractalforms.scalars import ConfigError
from fractalforms.structure import (
    SelfSimilarStructure,
    build_level,
    embed_level,
    load_structure,
    measure_level,
    structure_from_config,
    structure_to_config,
)


def brute_force_classes(n_cells, b, gluing_pairs):
    """Independent union-find oracle over level-1 slots (cell, label)."""
    parent = {(i, u): (i, u) for i in range(1, n_cells + 1) for u in range(b)}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, c in gluing_pairs:
        parent[find(a)] = find(c)
    return len({find(k) for k in parent})


def test_sg_level_sizes(sg):
    g0 = build_level(sg, 0)
    assert g0.n_vertices == 3
    assert len(g0.cells) == 1
    assert g0.boundary_ids == (0, 1, 2)
    g1 = build_level(sg, 1)
    assert g1.n_vertices == 6
    assert len(g1.cells) == 3
    assert build_level(sg, 2).n_vertices == 15


def test_vicsek_level1_matches_union_find_oracle(vicsek_half):
    # 5 cells x 4 labels with 4 contact identifications
    pairs = [((1, 2), (5, 0)), ((2, 3), (5, 1)), ((3, 0), (5, 2)), ((4, 1), (5, 3))]
    assert brute_force_classes(5, 4, pairs) == 16
    assert build_level(vicsek_half, 1).n_vertices == 16


def test_rebuild_is_deterministic(sg):
    a, b = build_level(sg, 3), build_level(sg, 3)
    assert a.reps == b.reps
    assert a.cells == b.cells
    assert a.address == b.address


def test_word_and_vertex_counts(sg, vicsek_half):
    for S in (sg, vicsek_half):
        for n in range(4):
            g = build_level(S, n)
            assert len(g.words) == S.n_cells ** n
            assert g.n_vertices <= S.b * S.n_cells ** n
            if n >= 1:
                assert g.n_vertices < S.b * S.n_cells ** n  # gluings identify slots


def test_every_vertex_in_a_cell(sg):
    g = build_level(sg, 2)
    seen = set()
    for cell in g.cells:
        seen.update(cell)
    assert seen == set(range(g.n_vertices))


def test_measure_level0_uniform(sg):
    mu = measure_level(sg, 0)
    assert mu.mass == (F(1, 3),) * 3


def test_measure_level1_by_enumeration(sg):
    # independent oracle: sum theta_w / b over incident words
    g = build_level(sg, 1)
    mu = measure_level(sg, 1, g)
    expect = {}
    for k, w in enumerate(g.words):
        for vid in g.cells[k]:
            expect[vid] = expect.get(vid, F(0)) + F(1, 3) / 3
    assert tuple(expect[v] for v in range(g.n_vertices)) == mu.mass
    corners = {g.address[((i,) * 1, i - 1)] for i in (1, 2, 3)}
    for vid in range(g.n_vertices):
        assert mu[vid] == (F(1, 9) if vid in corners else F(2, 9))
    assert mu.total() == 1


def test_measure_vicsek_contact_mass(vicsek_half):
    g = build_level(vicsek_half, 1)
    mu = measure_level(vicsek_half, 1, g)
    contact = g.address[((5,), 0)]  # psi_5(p1) = psi_1(p3)
    assert mu[contact] == F(2, 20)
    assert mu.total() == 1


def test_embed_identity_and_corners(sg):
    assert embed_level(sg, 0, 0) == (0, 1, 2)
    g0, g1 = build_level(sg, 0), build_level(sg, 1)
    emb = embed_level(sg, 0, 1, g0, g1)
    assert tuple(emb) == g1.boundary_ids


def test_embed_composes(sg):
    e01 = embed_level(sg, 0, 1)
    e12 = embed_level(sg, 1, 2)
    e02 = embed_level(sg, 0, 2)
    assert tuple(e12[x] for x in e01) == tuple(e02)


def test_embed_injective(vicsek_half):
    emb = embed_level(vicsek_half, 1, 3)
    assert len(set(emb)) == len(emb)


def test_gluing_closure_and_roundtrip(sg):
    cfg = structure_to_config(sg)
    again = structure_from_config(cfg)
    assert again == sg


def test_invalid_configs_rejected():
    base = {
        "n_cells": 2,
        "boundary": ["a", "b"],
        "gluing": [[[1, "b"], [2, "a"]]],
        "resistance": ["1", "1"],
        "theta": ["1/2", "1/2"],
    }
    structure_from_config(base)  # sanity: the base config is fine

    bad = dict(base, theta=["1/2", "1/3"])
    with pytest.raises(ConfigError, match="sum to 1"):
        structure_from_config(bad)

    bad = dict(base, gluing=[[[1, "b"], [3, "a"]]])
    with pytest.raises(ConfigError, match="invalid cell"):
        structure_from_config(bad)

    bad = dict(base, gluing=[[[1, "zz"], [2, "a"]]])
    with pytest.raises(ConfigError, match="unknown boundary label"):
        structure_from_config(bad)

    bad = dict(base, n_cells=1, gluing=[], resistance=["1"], theta=["1"])
    with pytest.raises(ConfigError):
        structure_from_config(bad)

    # disconnected level-1 cell graph
    bad = dict(base, gluing=[])
    with pytest.raises(ConfigError, match="disconnected"):
        structure_from_config(bad)

    # identifies two labels of one cell
    bad = dict(base, gluing=[[[1, "a"], [2, "a"]], [[2, "a"], [1, "b"]]])
    with pytest.raises(ConfigError, match="within one cell"):
        structure_from_config(bad)


def test_family_block_validation(sg):
    cfg = structure_to_config(sg)
    cfg["family"] = {"vee": []}
    with pytest.raises(ConfigError, match="at least one edge"):
        structure_from_config(cfg)
    cfg["family"] = {"vee": [["p1", "p3"]],
                     "template": [["p1", "p3", "2"]]}
    with pytest.raises(ConfigError, match="must be '1' or 'v'"):
        structure_from_config(cfg)


def test_load_structure_from_path(tmp_path):
    import json

    from fractalforms.configs import load_config

    path = tmp_path / "sg.json"
    path.write_text(json.dumps(load_config("sierpinski")))
    S = load_structure(path)
    assert S.n_cells == 3
