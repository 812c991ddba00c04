"""Motif graphs: partition an atom graph by bond-breaking rules.

Compound rule: cut every single bond that is not on a ring; keep double,
triple, aromatic and ring bonds. Motifs are the connected components of the
kept-bond graph, each placed at the centroid of its atoms.

Protein rule: each residue's backbone {N, CA, C, O} is one motif; bonds from
the backbone into the sidechain (CA-CB, and CD-N in proline) and all
inter-residue bonds are cut; the sidechain then follows the compound rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .molio import AtomGraph, residue_groups
from .residues import BACKBONE_NAMES

KEEP_ORDERS = frozenset({"double", "triple", "aromatic"})


@dataclass(frozen=True, eq=False)
class MotifGraph:
    motifs: tuple[tuple[int, ...], ...]
    motif_edges: tuple[tuple[int, int], ...]
    centroids: np.ndarray
    parent: np.ndarray
    kinds: tuple[str, ...]
    cut_bonds: tuple[int, ...] = ()
    warnings: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.motifs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MotifGraph):
            return NotImplemented
        return (self.motifs == other.motifs and self.motif_edges == other.motif_edges
                and np.array_equal(self.centroids, other.centroids)
                and np.array_equal(self.parent, other.parent) and self.kinds == other.kinds)

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "motifs": [list(m) for m in self.motifs],
            "edges": [list(e) for e in self.motif_edges],
            "centroids": self.centroids.tolist(),
            "kinds": list(self.kinds),
            "cut_bonds": list(self.cut_bonds),
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def find_ring_bonds(g: AtomGraph) -> set[int]:
    """Indices of bonds lying on some cycle, i.e. every bond that is not a bridge."""
    n = len(g.atoms)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, b in enumerate(g.bonds):
        adj[b.i].append((b.j, k))
        adj[b.j].append((b.i, k))
    disc = [-1] * n
    low = [0] * n
    bridges: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        # frames: (vertex, bond index used to enter it, neighbour cursor)
        stack = [(root, -1, 0)]
        while stack:
            v, via, cur = stack[-1]
            if cur < len(adj[v]):
                stack[-1] = (v, via, cur + 1)
                w, k = adj[v][cur]
                if k == via:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, k, 0))
                else:
                    low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.add(via)
    return set(range(len(g.bonds))) - bridges


def _components(n: int, edges: list[tuple[int, int]]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    label = [-1] * n
    comps = []
    for s in range(n):
        if label[s] != -1:
            continue
        label[s] = len(comps)
        members, todo = [s], [s]
        while todo:
            v = todo.pop()
            for w in adj[v]:
                if label[w] == -1:
                    label[w] = label[s]
                    members.append(w)
                    todo.append(w)
        comps.append(sorted(members))
    return comps


def _assemble(g: AtomGraph, keep: list[bool], ring_bonds: set[int],
              backbone_atoms: set[int] = frozenset(), warnings=()) -> MotifGraph:
    kept = [(b.i, b.j) for b, k in zip(g.bonds, keep) if k]
    comps = sorted(_components(len(g.atoms), kept), key=lambda c: c[0])
    parent = np.empty(len(g.atoms), dtype=np.int64)
    for m, members in enumerate(comps):
        parent[members] = m
    edges, cuts = set(), []
    for k, b in enumerate(g.bonds):
        if keep[k]:
            continue
        cuts.append(k)
        a, c = int(parent[b.i]), int(parent[b.j])
        if a != c:
            edges.add((min(a, c), max(a, c)))
    ring_atoms = {x for k in ring_bonds if keep[k] for x in (g.bonds[k].i, g.bonds[k].j)}
    kinds = []
    for members in comps:
        if backbone_atoms and members[0] in backbone_atoms:
            kinds.append("backbone")
        elif any(i in ring_atoms for i in members):
            kinds.append("ring")
        else:
            kinds.append("chain")
    centroids = np.array([g.coords[members].mean(axis=0) for members in comps]).reshape(-1, 3)
    return MotifGraph(tuple(tuple(c) for c in comps), tuple(sorted(edges)), centroids, parent,
                      tuple(kinds), tuple(cuts), tuple(warnings))


def _compound_keep(g: AtomGraph, ring_bonds: set[int]) -> list[bool]:
    return [b.order in KEEP_ORDERS or k in ring_bonds for k, b in enumerate(g.bonds)]


def decompose_compound(g: AtomGraph) -> MotifGraph:
    ring = find_ring_bonds(g)
    return _assemble(g, _compound_keep(g, ring), ring)


def decompose_protein(g: AtomGraph) -> MotifGraph:
    ring = find_ring_bonds(g)
    keep = _compound_keep(g, ring)
    residue_of = np.empty(len(g.atoms), dtype=np.int64)
    backbone: set[int] = set()
    warnings = []
    for r, idx in enumerate(residue_groups(g.atoms)):
        residue_of[idx] = r
        names = {g.atoms[i].name for i in idx if g.atoms[i].backbone_flag}
        if BACKBONE_NAMES <= names:
            backbone.update(i for i in idx if g.atoms[i].backbone_flag)
        else:
            a = g.atoms[idx[0]]
            warnings.append(f"residue {a.residue_name}{a.residue_id} lacks backbone atoms "
                            f"{sorted(BACKBONE_NAMES - names)}; compound rule applied")
    for k, b in enumerate(g.bonds):
        if residue_of[b.i] != residue_of[b.j]:
            keep[k] = False
        elif (b.i in backbone) != (b.j in backbone):
            keep[k] = False
        elif b.i in backbone and b.j in backbone:
            keep[k] = True
    return _assemble(g, keep, ring, backbone, warnings)


def averaging_matrix(mg: MotifGraph, n_atoms: int | None = None) -> np.ndarray:
    """Row-stochastic (motifs x atoms) matrix whose rows average member atoms."""
    n = len(mg.parent) if n_atoms is None else n_atoms
    A = np.zeros((len(mg.motifs), n))
    for m, members in enumerate(mg.motifs):
        A[m, list(members)] = 1.0 / len(members)
    return A


def motif_init_embedding(mg: MotifGraph, atom_embeddings) -> np.ndarray:
    """Mean of member-atom vectors for every motif."""
    x = np.asarray(atom_embeddings, dtype=np.float64)
    if x.shape[0] != len(mg.parent):
        raise ValueError(f"need {len(mg.parent)} atom embeddings, got {x.shape[0]}")
    return np.stack([x[list(m)].mean(axis=0) for m in mg.motifs])


def summarize(mg: MotifGraph) -> dict:
    sizes = [len(m) for m in mg.motifs]
    hist: dict[int, int] = {}
    for s in sizes:
        hist[s] = hist.get(s, 0) + 1
    return {"motifs": len(mg.motifs), "cut_bonds": len(mg.cut_bonds), "edges": len(mg.motif_edges),
            "size_histogram": dict(sorted(hist.items()))}
