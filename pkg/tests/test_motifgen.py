import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hiercpi.molio import AtomGraph, Bond
from hiercpi.motifgen import (
    averaging_matrix, decompose_compound, decompose_protein, find_ring_bonds, motif_init_embedding,
    summarize,
)
from molecules import COMPOUNDS, PROTEINS, mol, residue_graph, ALA, GLY


# ---------------------------------------------------------------- oracles

def cycle_bonds_oracle(g: AtomGraph) -> set[int]:
    """Bonds lying on at least one simple cycle, by explicit cycle enumeration."""
    G = nx.Graph()
    G.add_nodes_from(range(len(g)))
    G.add_edges_from((b.i, b.j) for b in g.bonds)
    on_cycle = set()
    for cyc in nx.simple_cycles(G):
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            on_cycle.add((min(a, b), max(a, b)))
    return {k for k, b in enumerate(g.bonds) if (b.i, b.j) in on_cycle}


def union_find_parts(n: int, edges) -> set[frozenset]:
    parent = list(range(n))

    def root(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        parent[root(i)] = root(j)
    groups: dict[int, set] = {}
    for v in range(n):
        groups.setdefault(root(v), set()).add(v)
    return {frozenset(s) for s in groups.values()}


def compound_oracle(g: AtomGraph) -> set[frozenset]:
    ring = cycle_bonds_oracle(g)
    kept = [(b.i, b.j) for k, b in enumerate(g.bonds)
            if b.order in ("double", "triple", "aromatic") or k in ring]
    return union_find_parts(len(g), kept)


def parts(mg) -> set[frozenset]:
    return {frozenset(m) for m in mg.motifs}


# ---------------------------------------------------------------- hand cases

@pytest.mark.parametrize("name", sorted(COMPOUNDS))
def test_compound_matches_hand_partition(name):
    g, expected = COMPOUNDS[name]
    assert parts(decompose_compound(g)) == expected


@pytest.mark.parametrize("name", sorted(COMPOUNDS))
def test_compound_matches_oracle(name):
    g, _ = COMPOUNDS[name]
    assert find_ring_bonds(g) == cycle_bonds_oracle(g)
    assert parts(decompose_compound(g)) == compound_oracle(g)


@pytest.mark.parametrize("name", sorted(PROTEINS))
def test_protein_matches_hand_partition(name):
    g, expected = PROTEINS[name]
    mg = decompose_protein(g)
    assert parts(mg) == expected
    assert mg.warnings == ()


def test_benzene_summary():
    s = summarize(decompose_compound(COMPOUNDS["benzene"][0]))
    assert (s["motifs"], s["cut_bonds"], s["size_histogram"]) == (1, 0, {6: 1})


def test_ethane_summary():
    mg = decompose_compound(COMPOUNDS["ethane"][0])
    assert (len(mg), mg.cut_bonds, mg.motif_edges) == (2, (0,), ((0, 1),))


def test_motif_edges_follow_cut_bonds():
    g, _ = COMPOUNDS["bibenzyl"]
    mg = decompose_compound(g)
    # ring A - C12 - C13 - ring B: a path of four motifs
    assert len(mg.motif_edges) == 3
    degree = np.bincount(np.array(mg.motif_edges).ravel(), minlength=len(mg))
    assert sorted(degree.tolist()) == [1, 1, 2, 2]


def test_kinds():
    mg = decompose_protein(PROTEINS["ala_phe"][0])
    by_first = dict(zip((m[0] for m in mg.motifs), mg.kinds))
    assert by_first[0] == "backbone" and by_first[5] == "backbone"
    assert by_first[4] == "chain" and by_first[10] == "ring"


def test_incomplete_backbone_falls_back_to_compound_rule():
    # an Ala with its carbonyl O missing: N-CA-C and CA-CB are all single, acyclic
    g = residue_graph([("ALA", ["N", "CA", "C", "CB"], [(0, 1), (1, 2), (1, 3)])], [])
    mg = decompose_protein(g)
    assert parts(mg) == {frozenset({i}) for i in range(4)}
    assert len(mg.warnings) == 1 and "ALA1" in mg.warnings[0]


def test_centroids_and_parent():
    g, _ = COMPOUNDS["toluene"]
    mg = decompose_compound(g)
    for m, members in enumerate(mg.motifs):
        np.testing.assert_allclose(mg.centroids[m], g.coords[list(members)].mean(axis=0), rtol=0, atol=1e-12)
        assert all(mg.parent[i] == m for i in members)


def test_averaging_matrix_and_init_embedding():
    g, _ = COMPOUNDS["acetone"]
    mg = decompose_compound(g)
    A = averaging_matrix(mg)
    np.testing.assert_allclose(A.sum(axis=1), 1.0)
    x = np.arange(len(g) * 2, dtype=float).reshape(len(g), 2)
    emb = motif_init_embedding(mg, x)
    for m, members in enumerate(mg.motifs):
        np.testing.assert_allclose(emb[m], x[list(members)].mean(axis=0))


def test_json_roundtrip_shape():
    mg = decompose_protein(residue_graph([GLY, ALA], [(2, 4)]))
    d = json.loads(mg.to_json())
    assert d["motifs"] == [list(m) for m in mg.motifs]
    assert len(d["centroids"]) == len(mg)


def test_empty_motif_rule_on_single_atom():
    mg = decompose_compound(mol("O", []))
    assert mg.motifs == ((0,),) and mg.motif_edges == ()


# ---------------------------------------------------------------- properties

@st.composite
def random_graphs(draw):
    n = draw(st.integers(1, 12))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=min(len(pairs), 16))) if pairs else []
    orders = draw(st.lists(st.sampled_from(["single", "single", "double", "aromatic", "triple"]),
                           min_size=len(chosen), max_size=len(chosen)))
    return mol(" ".join(["C"] * n), [(i, j, o) for (i, j), o in zip(chosen, orders)])


@settings(max_examples=150, deadline=None)
@given(random_graphs())
def test_partition_properties(g):
    mg = decompose_compound(g)
    flat = sorted(i for m in mg.motifs for i in m)
    assert flat == list(range(len(g)))  # disjoint cover
    assert parts(mg) == compound_oracle(g)
    assert find_ring_bonds(g) == cycle_bonds_oracle(g)
    # every kept bond lies inside one motif
    for k, b in enumerate(g.bonds):
        if k not in mg.cut_bonds:
            assert mg.parent[b.i] == mg.parent[b.j]
    # determinism
    assert decompose_compound(g) == mg


@settings(max_examples=60, deadline=None)
@given(random_graphs(), st.randoms(use_true_random=False))
def test_partition_is_relabelling_equivariant(g, rnd):
    perm = list(range(len(g)))
    rnd.shuffle(perm)
    inv = {old: new for new, old in enumerate(perm)}
    h = AtomGraph(tuple(g.atoms[o] for o in perm),
                  tuple(Bond(inv[b.i], inv[b.j], b.order) for b in g.bonds),
                  g.coords[perm])
    mapped = {frozenset(inv[i] for i in m) for m in decompose_compound(g).motifs}
    assert parts(decompose_compound(h)) == mapped
