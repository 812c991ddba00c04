"""Random small compound-protein complexes for tests and demos.

Geometry is only loosely chemical: atoms are grown outward from a bonded
neighbour at a fixed bond length while avoiding clashes. Labels are a fixed
deterministic function of the structure so that a model can, in principle,
learn them.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .molio import (
    Atom, AtomGraph, Bond, Complex, infer_protein_bonds, min_cross_distance, validate_complex,
    write_pdb, write_sdf,
)
from .residues import BACKBONE_NAMES, RESIDUE_TEMPLATES, template_atom_names

SYNTH_RESIDUES = ("GLY", "ALA", "SER", "VAL", "LEU", "PHE", "THR", "ASP", "LYS", "CYS", "ASN")
_COMPOUND_ELEMENTS = ("C",) * 7 + ("N", "O", "O", "S", "Cl")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _grow(rng, placed: list[np.ndarray], anchor: np.ndarray, length: float,
          drift: np.ndarray | None = None, clash: float = 1.25) -> np.ndarray:
    best, best_gap = None, -1.0
    for _ in range(60):
        d = rng.normal(size=3)
        if drift is not None:
            d = _unit(d) + drift
        p = anchor + length * _unit(d)
        gap = min((np.linalg.norm(p - q) for q in placed if q is not anchor), default=9.9)
        if gap >= clash:
            return p
        if gap > best_gap:
            best, best_gap = p, gap
    return best


def synth_protein(rng: np.random.Generator, min_atoms: int = 20, max_atoms: int = 60) -> AtomGraph:
    target = int(rng.integers(min_atoms, max_atoms + 1))
    residues = []
    count = 0
    while True:
        name = SYNTH_RESIDUES[int(rng.integers(len(SYNTH_RESIDUES)))]
        size = len(template_atom_names(name))
        if count + size > max_atoms:
            if count >= min_atoms:
                break
            name, size = "GLY", 4
        residues.append(name)
        count += size
        if count >= target:
            break

    atoms, pos = [], []
    drift = 0.9 * _unit(rng.normal(size=3))
    prev_c = None
    for r, resname in enumerate(residues, start=1):
        names = template_atom_names(resname)
        where: dict[str, np.ndarray] = {}
        partners = {}
        for a, b, _ in RESIDUE_TEMPLATES[resname]:
            partners.setdefault(b, a)
        for nm in names:
            if nm == "N":
                if prev_c is None:
                    p = np.zeros(3)
                else:
                    p = _grow(rng, pos, prev_c, 1.33, drift)
            else:
                anchor = where[partners[nm]]
                p = _grow(rng, pos, anchor, 1.5, drift if nm in ("CA", "C") else None)
            where[nm] = p
            pos.append(p)
            atoms.append(Atom(nm[0], r, resname, nm in BACKBONE_NAMES, nm, "A"))
        prev_c = where["C"]
    coords = np.round(np.array(pos), 3)
    return AtomGraph(tuple(atoms), tuple(infer_protein_bonds(atoms, coords)), coords)


def synth_compound(rng: np.random.Generator, min_atoms: int = 5, max_atoms: int = 20) -> AtomGraph:
    n = int(rng.integers(min_atoms, max_atoms + 1))
    elements, pos, bonds, degree = [], [], [], []
    if n >= 8 and rng.random() < 0.6:
        for k in range(6):
            ang = k * math.pi / 3
            pos.append(np.array([1.39 * math.cos(ang), 1.39 * math.sin(ang), 0.0]))
            elements.append("C")
            degree.append(2)
        for k in range(6):
            bonds.append(Bond(k, (k + 1) % 6, "aromatic"))
    else:
        pos.append(np.zeros(3))
        elements.append("C")
        degree.append(0)
    while len(elements) < n:
        open_ = [i for i, d in enumerate(degree) if d < 3 and elements[i] != "Cl"]
        if not open_:
            # every valence used (e.g. a triple bond on the seed carbon): stop short
            break
        anchor = open_[int(rng.integers(len(open_)))]
        el = _COMPOUND_ELEMENTS[int(rng.integers(len(_COMPOUND_ELEMENTS)))]
        order = "single"
        if el == "O" and elements[anchor] == "C" and degree[anchor] <= 2 and rng.random() < 0.5:
            order = "double"
        elif el == "C" and elements[anchor] == "C" and degree[anchor] <= 1 and rng.random() < 0.1:
            order = "triple"
        p = _grow(rng, pos, pos[anchor], 1.5)
        bonds.append(Bond(anchor, len(elements), order))
        pos.append(p)
        elements.append(el)
        degree[anchor] += 2 if order != "single" else 1
        degree.append(3 if el == "Cl" else (2 if order == "double" else 3 if order == "triple" else 1))
    return AtomGraph(tuple(Atom(e) for e in elements), tuple(bonds), np.round(np.array(pos), 4))


def _random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def dock_near(rng, compound: AtomGraph, protein: AtomGraph,
              lo: float = 3.0, hi: float = 4.5) -> AtomGraph:
    """Place the compound rigidly so its closest approach to the protein lies in [lo, hi]."""
    pc = protein.coords
    center = pc.mean(axis=0)
    base = compound.coords - compound.coords.mean(axis=0)
    for _ in range(200):
        anchor = pc[int(rng.integers(len(pc)))]
        u = anchor - center
        u = _unit(u) if np.linalg.norm(u) > 1e-6 else _unit(rng.normal(size=3))
        u = _unit(u + 0.3 * rng.normal(size=3))
        body = base @ _random_rotation(rng).T
        for step in np.arange(14.0, 0.0, -0.25):
            xyz = body + anchor + step * u
            d = min_cross_distance(xyz, pc)
            if d < lo:
                break
            if d <= hi:
                return compound.with_coords(np.round(xyz, 4))
    raise RuntimeError("could not place compound near protein")


def pseudo_affinity(compound: AtomGraph, protein: AtomGraph) -> float:
    """Deterministic pKa-like label in [2, 12] from contacts, size and polarity."""
    diff = compound.coords[:, None, :] - protein.coords[None, :, :]
    d = np.sqrt((diff ** 2).sum(-1))
    contacts = float((d < 5.0).sum())
    polar = sum(e in ("N", "O") for e in compound.elements)
    aromatic = sum(b.order == "aromatic" for b in compound.bonds)
    value = (3.0 + 0.45 * math.sqrt(contacts) + 0.12 * len(compound)
             + 0.25 * polar + 0.1 * aromatic - 0.4 * (d.min() - 3.5))
    return round(float(min(12.0, max(2.0, value))), 4)


def synth_complex(rng: np.random.Generator, id: str = "",
                  compound_atoms: tuple[int, int] = (5, 20),
                  protein_atoms: tuple[int, int] = (20, 60)) -> Complex:
    protein = synth_protein(rng, *protein_atoms)
    compound = dock_near(rng, synth_compound(rng, *compound_atoms), protein)
    return validate_complex(compound, protein, pseudo_affinity(compound, protein), id)


def synth_dataset(n: int, seed: int, **kw) -> list[Complex]:
    rng = np.random.default_rng(seed)
    return [synth_complex(rng, f"synth{k:04d}", **kw) for k in range(n)]


def write_dataset(complexes: list[Complex], out_dir: str, labeled: bool = True) -> str:
    """Write SDF/PDB pairs and a JSON-lines manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = os.path.join(out_dir, "manifest.jsonl")
    with open(manifest, "w") as fh:
        for c in complexes:
            lig, prot = f"{c.id}_ligand.sdf", f"{c.id}_protein.pdb"
            with open(os.path.join(out_dir, lig), "w") as f:
                f.write(write_sdf(c.compound, c.id))
            with open(os.path.join(out_dir, prot), "w") as f:
                f.write(write_pdb(c.protein))
            row = {"id": c.id, "compound_path": lig, "protein_path": prot,
                   "affinity": c.affinity if labeled else None}
            fh.write(json.dumps(row) + "\n")
    return manifest
