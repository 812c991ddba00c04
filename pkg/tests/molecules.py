"""Hand-built heavy-atom molecules with hand-derived motif partitions.

Coordinates are only placeholders on a loose grid; partitions never depend
on them. Expected partitions are written out by hand from the bond rules:
compound graphs keep double/triple/aromatic bonds and ring bonds; protein
graphs keep each residue backbone whole and cut backbone-sidechain and
inter-residue bonds.
"""

from __future__ import annotations

import numpy as np

from hiercpi.molio import Atom, AtomGraph, Bond


def _coords(n: int) -> np.ndarray:
    k = np.arange(n, dtype=float)
    return np.stack([1.5 * k, np.sin(k), 0.3 * (k % 3)], axis=1)


def mol(elements: str, bonds: list[tuple]) -> AtomGraph:
    """``elements`` is a space separated symbol list; bonds are (i, j[, order])."""
    els = elements.split()
    bl = [Bond(b[0], b[1], b[2] if len(b) > 2 else "single") for b in bonds]
    return AtomGraph(tuple(Atom(e) for e in els), tuple(bl), _coords(len(els)))


def ring(start: int, size: int, order: str = "single") -> list[tuple]:
    return [(start + k, start + (k + 1) % size, order) for k in range(size)]


# name -> (graph, expected motifs as a set of frozensets)
COMPOUNDS: dict[str, tuple[AtomGraph, set]] = {}


def _add(name, g, parts):
    COMPOUNDS[name] = (g, {frozenset(p) for p in parts})


_add("methane", mol("C", []), [{0}])
_add("ethane", mol("C C", [(0, 1)]), [{0}, {1}])
_add("propane", mol("C C C", [(0, 1), (1, 2)]), [{0}, {1}, {2}])
_add("isobutane", mol("C C C C", [(0, 1), (0, 2), (0, 3)]), [{0}, {1}, {2}, {3}])
_add("ethanol", mol("C C O", [(0, 1), (1, 2)]), [{0}, {1}, {2}])
_add("ethylene", mol("C C", [(0, 1, "double")]), [{0, 1}])
_add("acetonitrile", mol("C C N", [(0, 1), (1, 2, "triple")]), [{0}, {1, 2}])
# acetone: C1-C0(=O3)-C2
_add("acetone", mol("C C C O", [(0, 1), (0, 2), (0, 3, "double")]), [{0, 3}, {1}, {2}])
# acetic acid: C0-C1(=O2)-O3
_add("acetic_acid", mol("C C O O", [(0, 1), (1, 2, "double"), (1, 3)]), [{0}, {1, 2}, {3}])
_add("benzene", mol("C C C C C C", ring(0, 6, "aromatic")), [set(range(6))])
_add("cyclohexane", mol("C C C C C C", ring(0, 6)), [set(range(6))])
_add("cyclopropane", mol("C C C", ring(0, 3)), [{0, 1, 2}])
_add("toluene", mol("C C C C C C C", ring(0, 6, "aromatic") + [(0, 6)]), [set(range(6)), {6}])
_add("phenol", mol("C C C C C C O", ring(0, 6, "aromatic") + [(3, 6)]), [set(range(6)), {6}])
_add("benzaldehyde", mol("C C C C C C C O", ring(0, 6, "aromatic") + [(0, 6), (6, 7, "double")]),
     [set(range(6)), {6, 7}])
_add("styrene", mol("C C C C C C C C", ring(0, 6, "aromatic") + [(0, 6), (6, 7, "double")]),
     [set(range(6)), {6, 7}])
_add("pyridine", mol("N C C C C C", ring(0, 6, "aromatic")), [set(range(6))])
_add("cyclohexanone", mol("C C C C C C O", ring(0, 6) + [(0, 6, "double")]), [set(range(7))])
# naphthalene skeleton: two fused six-rings sharing the 0-5 bond, all single
_add("naphthalene_skeleton",
     mol("C C C C C C C C C C", ring(0, 6) + [(5, 6), (6, 7), (7, 8), (8, 9), (9, 0)]),
     [set(range(10))])
_add("biphenyl", mol(" ".join(["C"] * 12), ring(0, 6, "aromatic") + ring(6, 6, "aromatic") + [(0, 6)]),
     [set(range(6)), set(range(6, 12))])
# norbornane: bridged bicycle, every bond on a cycle
_add("norbornane", mol("C C C C C C C", [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 6), (6, 3)]),
     [set(range(7))])
# spiropentane: two three-rings sharing atom 0
_add("spiropentane", mol("C C C C C", ring(0, 3) + [(0, 3), (3, 4), (4, 0)]), [set(range(5))])
# methyl acetate: C0-C1(=O2)-O3-C4
_add("methyl_acetate", mol("C C O O C", [(0, 1), (1, 2, "double"), (1, 3), (3, 4)]),
     [{0}, {1, 2}, {3}, {4}])
# two fragments (a salt-like input): ethylene + chloride
_add("two_fragments", mol("C C Cl", [(0, 1, "double")]), [{0, 1}, {2}])
# 1,2-diphenylethane: rings joined through a single-bond chain
_add("bibenzyl", mol(" ".join(["C"] * 14), ring(0, 6, "aromatic") + ring(6, 6, "aromatic")
                      + [(0, 12), (12, 13), (13, 6)]),
     [set(range(6)), set(range(6, 12)), {12}, {13}])


# ------------------------------------------------------------------ proteins

def residue_graph(residues: list[tuple[str, list[str], list[tuple]]],
                  peptide_links: list[tuple]) -> AtomGraph:
    """Residues as (name, atom names, intra bonds by local index); links by global index."""
    atoms, bonds, offset = [], [], 0
    for rid, (resname, names, intra) in enumerate(residues, start=1):
        for nm in names:
            atoms.append(Atom(nm[0], rid, resname, nm in ("N", "CA", "C", "O"), nm, "A"))
        bonds += [Bond(offset + b[0], offset + b[1], b[2] if len(b) > 2 else "single") for b in intra]
        offset += len(names)
    bonds += [Bond(i, j) for i, j in peptide_links]
    return AtomGraph(tuple(atoms), tuple(bonds), _coords(len(atoms)))


_BB = [(0, 1), (1, 2), (2, 3, "double")]  # N-CA, CA-C, C=O
GLY = ("GLY", ["N", "CA", "C", "O"], _BB)
ALA = ("ALA", ["N", "CA", "C", "O", "CB"], _BB + [(1, 4)])
SER = ("SER", ["N", "CA", "C", "O", "CB", "OG"], _BB + [(1, 4), (4, 5)])
PHE = ("PHE", ["N", "CA", "C", "O", "CB", "CG", "CD1", "CD2", "CE1", "CE2", "CZ"],
       _BB + [(1, 4), (4, 5), (5, 6, "aromatic"), (5, 7, "aromatic"), (6, 8, "aromatic"),
              (7, 9, "aromatic"), (8, 10, "aromatic"), (9, 10, "aromatic")])
PRO = ("PRO", ["N", "CA", "C", "O", "CB", "CG", "CD"], _BB + [(1, 4), (4, 5), (5, 6), (6, 0)])
ASP = ("ASP", ["N", "CA", "C", "O", "CB", "CG", "OD1", "OD2"],
       _BB + [(1, 4), (4, 5), (5, 6, "double"), (5, 7)])

PROTEINS: dict[str, tuple[AtomGraph, set]] = {
    "gly": (residue_graph([GLY], []), {frozenset({0, 1, 2, 3})}),
    "ala": (residue_graph([ALA], []), {frozenset({0, 1, 2, 3}), frozenset({4})}),
    "ser": (residue_graph([SER], []), {frozenset({0, 1, 2, 3}), frozenset({4}), frozenset({5})}),
    "phe": (residue_graph([PHE], []),
            {frozenset({0, 1, 2, 3}), frozenset({4}), frozenset(range(5, 11))}),
    # proline: CA-CB and CD-N cut; CB-CG-CD stay on the pyrrolidine ring, so they form one motif
    "pro": (residue_graph([PRO], []), {frozenset({0, 1, 2, 3}), frozenset({4, 5, 6})}),
    "asp": (residue_graph([ASP], []),
            {frozenset({0, 1, 2, 3}), frozenset({4}), frozenset({5, 6}), frozenset({7})}),
    # Gly-Ala: C(2) of Gly to N(4) of Ala
    "gly_ala": (residue_graph([GLY, ALA], [(2, 4)]),
                {frozenset({0, 1, 2, 3}), frozenset({4, 5, 6, 7}), frozenset({8})}),
    # Ala-Phe
    "ala_phe": (residue_graph([ALA, PHE], [(2, 5)]),
                {frozenset({0, 1, 2, 3}), frozenset({4}), frozenset({5, 6, 7, 8}), frozenset({9}),
                 frozenset(range(10, 16))}),
}
