"""Heavy-atom molecular graphs: SDF/PDB readers, writers and complex validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .residues import BACKBONE_NAMES, RESIDUE_TEMPLATES

BOND_ORDERS = ("single", "double", "triple", "aromatic")
_SDF_BOND_CODES = {1: "single", 2: "double", 3: "triple", 4: "aromatic"}
_SDF_BOND_OUT = {v: k for k, v in _SDF_BOND_CODES.items()}
_HYDROGENS = frozenset({"H", "D", "T"})

VALIDITY_CUTOFF = 6.0  # Å, closed: a complex at exactly 6.0 is accepted
PEPTIDE_BOND_MAX = 2.0
NONSTANDARD_BOND_MAX = 1.9


class ParseError(ValueError):
    """Malformed molecular input. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif path:
            where += " "
        super().__init__(where + message)


class ComplexRejected(ValueError):
    def __init__(self, min_distance: float, cutoff: float = VALIDITY_CUTOFF):
        self.min_distance = min_distance
        self.cutoff = cutoff
        super().__init__(f"minimum compound-protein distance {min_distance:.4f} Å exceeds {cutoff} Å")


@dataclass(frozen=True)
class Atom:
    element: str
    residue_id: int | None = None
    residue_name: str | None = None
    backbone_flag: bool | None = None
    name: str | None = None
    chain: str | None = None
    insertion: str = ""


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    order: str = "single"


@dataclass(frozen=True, eq=False)
class AtomGraph:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    coords: np.ndarray

    def __post_init__(self):
        atoms = tuple(self.atoms)
        coords = np.array(self.coords, dtype=np.float64).reshape(-1, 3)
        coords.setflags(write=False)
        n = len(atoms)
        if coords.shape[0] != n:
            raise ValueError(f"coords has {coords.shape[0]} rows for {n} atoms")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coords contain non-finite values")
        for a in atoms:
            if a.element in _HYDROGENS:
                raise ValueError("hydrogen atoms are not allowed (heavy-atom graphs only)")
        seen = set()
        norm = []
        for b in self.bonds:
            if not (0 <= b.i < n and 0 <= b.j < n):
                raise ValueError(f"bond ({b.i}, {b.j}) out of range for {n} atoms")
            if b.i == b.j:
                raise ValueError(f"self-loop on atom {b.i}")
            if b.order not in BOND_ORDERS:
                raise ValueError(f"unknown bond order {b.order!r}")
            key = (min(b.i, b.j), max(b.i, b.j))
            if key in seen:
                raise ValueError(f"duplicate bond {key}")
            seen.add(key)
            norm.append(Bond(key[0], key[1], b.order))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "bonds", tuple(norm))
        object.__setattr__(self, "coords", coords)

    def __len__(self) -> int:
        return len(self.atoms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AtomGraph):
            return NotImplemented
        return (self.atoms == other.atoms and self.bonds == other.bonds
                and np.array_equal(self.coords, other.coords))

    __hash__ = None

    @property
    def elements(self) -> list[str]:
        return [a.element for a in self.atoms]

    def with_coords(self, coords) -> "AtomGraph":
        return replace(self, coords=np.asarray(coords, dtype=np.float64))


@dataclass(frozen=True)
class Complex:
    compound: AtomGraph
    protein: AtomGraph
    affinity: float | None = None
    id: str = ""
    min_distance: float = field(default=math.nan, compare=False)


# ------------------------------------------------------------------- elements

def normalize_element(symbol: str) -> str:
    s = symbol.strip()
    if not s:
        return ""
    return s[0].upper() + s[1:].lower()


def _heavy_subgraph(atoms: list[Atom], bonds: list[Bond], coords: list) -> AtomGraph:
    keep = [i for i, a in enumerate(atoms) if a.element not in _HYDROGENS]
    remap = {old: new for new, old in enumerate(keep)}
    new_bonds = [Bond(remap[b.i], remap[b.j], b.order) for b in bonds
                 if b.i in remap and b.j in remap]
    return AtomGraph(tuple(atoms[i] for i in keep), tuple(new_bonds),
                     np.array([coords[i] for i in keep], dtype=np.float64).reshape(-1, 3))


# ------------------------------------------------------------------------ SDF

def _sdf_int(field_text: str, what: str, line: int) -> int:
    try:
        return int(field_text)
    except ValueError:
        raise ParseError(f"malformed {what}: {field_text.strip()!r}", line) from None


def parse_sdf(text: str) -> AtomGraph:
    """Read the first V2000 record of an SDF/MOL text into a heavy-atom graph."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise ParseError("truncated record: missing counts line", len(lines) + 1)
    counts = lines[3]
    if "V3000" in counts:
        raise ParseError("V3000 records are not supported", 4)
    n_atoms = _sdf_int(counts[0:3], "counts line", 4)
    n_bonds = _sdf_int(counts[3:6], "counts line", 4)
    if n_atoms < 0 or n_bonds < 0:
        raise ParseError("malformed counts line: negative count", 4)
    block_end = 4 + n_atoms + n_bonds
    for k in range(4, min(block_end, len(lines))):
        if lines[k].startswith("M  END") or lines[k].startswith("$$$$"):
            raise ParseError(f"atom/bond count mismatch: counts line declares {n_atoms} atoms "
                             f"and {n_bonds} bonds", k + 1)
    if len(lines) < block_end:
        raise ParseError(f"atom/bond count mismatch: counts line declares {n_atoms} atoms "
                         f"and {n_bonds} bonds but the record ends early", len(lines) + 1)

    atoms, coords = [], []
    for k in range(4, 4 + n_atoms):
        ln = lines[k]
        try:
            xyz = [float(ln[0:10]), float(ln[10:20]), float(ln[20:30])]
            sym = ln[31:34].strip()
        except ValueError:
            parts = ln.split()
            try:
                xyz = [float(p) for p in parts[:3]]
                sym = parts[3]
            except (ValueError, IndexError):
                raise ParseError(f"malformed atom line: {ln.strip()!r}", k + 1) from None
        if not sym:
            raise ParseError("atom line has no element symbol", k + 1)
        atoms.append(Atom(element=normalize_element(sym)))
        coords.append(xyz)

    bonds = []
    seen = set()
    for k in range(4 + n_atoms, block_end):
        ln = lines[k]
        i = _sdf_int(ln[0:3], "bond line", k + 1)
        j = _sdf_int(ln[3:6], "bond line", k + 1)
        code = _sdf_int(ln[6:9], "bond line", k + 1)
        if not (1 <= i <= n_atoms and 1 <= j <= n_atoms):
            raise ParseError(f"bond references atom outside 1..{n_atoms}: ({i}, {j})", k + 1)
        if i == j:
            raise ParseError(f"bond from atom {i} to itself", k + 1)
        if code not in _SDF_BOND_CODES:
            raise ParseError(f"unknown bond type code {code}", k + 1)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(f"duplicate bond {key}", k + 1)
        seen.add(key)
        bonds.append(Bond(i - 1, j - 1, _SDF_BOND_CODES[code]))
    return _heavy_subgraph(atoms, bonds, coords)


def write_sdf(g: AtomGraph, title: str = "") -> str:
    out = [title, "  hiercpi", ""]
    out.append(f"{len(g.atoms):3d}{len(g.bonds):3d}  0  0  0  0  0  0  0  0999 V2000")
    for a, (x, y, z) in zip(g.atoms, g.coords):
        out.append(f"{x:10.4f}{y:10.4f}{z:10.4f} {a.element:<3s} 0  0  0  0  0  0  0  0  0  0  0  0")
    for b in g.bonds:
        out.append(f"{b.i + 1:3d}{b.j + 1:3d}{_SDF_BOND_OUT[b.order]:3d}  0")
    out.append("M  END")
    out.append("$$$$")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------------------ PDB

_TWO_LETTER = {"Cl", "Br", "Fe", "Zn", "Mg", "Mn", "Ca", "Na", "Cu", "Co", "Ni", "Se", "Cd",
               "Hg", "Li", "Al", "Si", "Pt", "Au", "Ag", "Sr", "Ba", "Cs", "Rb", "Mo"}


def _pdb_element(line: str, name_field: str) -> str:
    el = line[76:78].strip() if len(line) >= 78 else ""
    if el:
        return normalize_element(el)
    if name_field[0] == " " or name_field[0].isdigit():
        return normalize_element(name_field[1])
    if name_field[0] in "HD" and len(name_field.strip()) == 4:
        return "H"
    two = normalize_element(name_field[0:2])
    return two if two in _TWO_LETTER else normalize_element(name_field[0])


def parse_pdb(text: str) -> AtomGraph:
    """Read ATOM records (first model only) into a heavy-atom protein graph."""
    atoms, coords = [], []
    seen_names = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("ENDMDL") and atoms:
            break
        if not line.startswith("ATOM  "):
            continue
        line = line.ljust(80)
        name_field = line[12:16]
        resname = line[17:20].strip()
        chain = line[21].strip()
        try:
            resseq = int(line[22:26])
        except ValueError:
            raise ParseError(f"non-numeric residue number {line[22:26]!r}", lineno) from None
        icode = line[26].strip()
        try:
            xyz = [float(line[30:38]), float(line[38:46]), float(line[46:54])]
        except ValueError:
            raise ParseError(f"non-numeric coordinate field {line[30:54].strip()!r}", lineno) from None
        if not all(math.isfinite(v) for v in xyz):
            raise ParseError("non-finite coordinate", lineno)
        name = name_field.strip()
        key = (chain, resseq, icode, name)
        if key in seen_names:
            # alternate location of an atom already read
            continue
        seen_names.add(key)
        element = _pdb_element(line, name_field)
        atoms.append(Atom(element=element, residue_id=resseq, residue_name=resname,
                          backbone_flag=name in BACKBONE_NAMES, name=name, chain=chain or None,
                          insertion=icode))
        coords.append(xyz)
    if not atoms:
        raise ParseError("no ATOM records")
    heavy = [i for i, a in enumerate(atoms) if a.element not in _HYDROGENS]
    atoms = [atoms[i] for i in heavy]
    xyz = np.array([coords[i] for i in heavy], dtype=np.float64).reshape(-1, 3)
    if not atoms:
        raise ParseError("no heavy-atom ATOM records")
    return AtomGraph(tuple(atoms), tuple(infer_protein_bonds(atoms, xyz)), xyz)


def residue_groups(atoms: Sequence[Atom]) -> list[list[int]]:
    """Atom indices grouped by residue, in order of first appearance."""
    groups: dict[tuple, list[int]] = {}
    for i, a in enumerate(atoms):
        groups.setdefault((a.chain, a.residue_id, a.insertion, a.residue_name), []).append(i)
    return list(groups.values())


def infer_protein_bonds(atoms: Sequence[Atom], coords: np.ndarray) -> list[Bond]:
    bonds: dict[tuple[int, int], str] = {}

    def put(i, j, order):
        key = (min(i, j), max(i, j))
        bonds.setdefault(key, order)

    groups = residue_groups(atoms)
    for idx in groups:
        resname = atoms[idx[0]].residue_name
        by_name = {atoms[i].name: i for i in idx}
        template = RESIDUE_TEMPLATES.get(resname)
        if template is not None:
            for a, b, order in template:
                if a in by_name and b in by_name:
                    put(by_name[a], by_name[b], order)
        else:
            for p in range(len(idx)):
                for q in range(p + 1, len(idx)):
                    i, j = idx[p], idx[q]
                    if np.linalg.norm(coords[i] - coords[j]) < NONSTANDARD_BOND_MAX:
                        put(i, j, "single")
    for prev, nxt in zip(groups, groups[1:]):
        if atoms[prev[0]].chain != atoms[nxt[0]].chain:
            continue
        c = next((i for i in prev if atoms[i].name == "C"), None)
        n = next((i for i in nxt if atoms[i].name == "N"), None)
        if c is not None and n is not None and np.linalg.norm(coords[c] - coords[n]) < PEPTIDE_BOND_MAX:
            put(c, n, "single")
    return [Bond(i, j, o) for (i, j), o in sorted(bonds.items())]


def _pdb_name_field(name: str, element: str) -> str:
    if len(name) >= 4 or len(element) == 2:
        return f"{name:<4s}"[:4]
    return f" {name:<3s}"


def write_pdb(g: AtomGraph) -> str:
    out = []
    for k, (a, (x, y, z)) in enumerate(zip(g.atoms, g.coords), start=1):
        name = a.name or a.element
        out.append(
            f"ATOM  {k:5d} {_pdb_name_field(name, a.element)} {a.residue_name or 'UNK':>3s} "
            f"{(a.chain or ' ')[:1]}{(a.residue_id if a.residue_id is not None else 1):4d}"
            f"{(a.insertion or ' ')[:1]}   {x:8.3f}{y:8.3f}{z:8.3f}  1.00  0.00          "
            f"{a.element.upper():>2s}"
        )
    out.append("END")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- JSON / files

def graph_to_dict(g: AtomGraph) -> dict:
    return {
        "atoms": [{"element": a.element, "residue_id": a.residue_id, "residue_name": a.residue_name,
                   "backbone_flag": a.backbone_flag, "name": a.name, "chain": a.chain,
                   "insertion": a.insertion} for a in g.atoms],
        "bonds": [{"i": b.i, "j": b.j, "order": b.order} for b in g.bonds],
        "coords": g.coords.tolist(),
    }


def graph_from_dict(d: dict) -> AtomGraph:
    atoms = tuple(Atom(element=a["element"], residue_id=a.get("residue_id"),
                       residue_name=a.get("residue_name"), backbone_flag=a.get("backbone_flag"),
                       name=a.get("name"), chain=a.get("chain"), insertion=a.get("insertion", ""))
                  for a in d["atoms"])
    bonds = tuple(Bond(int(b["i"]), int(b["j"]), b.get("order", "single")) for b in d["bonds"])
    return AtomGraph(atoms, bonds, np.array(d["coords"], dtype=np.float64).reshape(-1, 3))


def graph_to_json(g: AtomGraph) -> str:
    return json.dumps(graph_to_dict(g))


def graph_from_json(text: str) -> AtomGraph:
    return graph_from_dict(json.loads(text))


def read_molecule(path) -> AtomGraph:
    """Dispatch on extension: .sdf/.mol → SDF, .pdb → PDB, .json → graph JSON."""
    path = str(path)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path=path) from None
    low = path.lower()
    try:
        if low.endswith((".sdf", ".mol", ".sd")):
            return parse_sdf(text)
        if low.endswith((".pdb", ".ent")):
            return parse_pdb(text)
        if low.endswith(".json"):
            return graph_from_json(text)
    except ParseError as exc:
        raise ParseError(str(exc), exc.line, path) from None
    raise ParseError("unrecognised file extension", path=path)


# ------------------------------------------------------------------ complexes

def min_cross_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = a[:, None, :] - b[None, :, :]
    return float(np.sqrt((diff * diff).sum(-1).min()))


def validate_complex(compound: AtomGraph, protein: AtomGraph, affinity: float | None = None,
                     id: str = "", cutoff: float = VALIDITY_CUTOFF) -> Complex:
    """Accept the pair iff some compound/protein heavy-atom pair lies within ``cutoff``.

    Raises ``ComplexRejected`` carrying the minimum distance otherwise.
    """
    if len(compound) == 0 or len(protein) == 0:
        raise ValueError("compound and protein must be non-empty")
    d = min_cross_distance(compound.coords, protein.coords)
    if d > cutoff:
        raise ComplexRejected(d, cutoff)
    return Complex(compound, protein, affinity, id, d)


def load_manifest(path) -> list[dict]:
    """JSON-lines manifest rows: ``{id, compound_path, protein_path, affinity}``.

    Relative paths are resolved against the manifest's directory.
    """
    import os

    base = os.path.dirname(os.path.abspath(str(path)))
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno, str(path)) from None
            for key in ("compound_path", "protein_path"):
                if key not in row:
                    raise ParseError(f"missing key {key!r}", lineno, str(path))
                if not os.path.isabs(row[key]):
                    row[key] = os.path.join(base, row[key])
            row.setdefault("id", f"row{lineno}")
            row.setdefault("affinity", None)
            rows.append(row)
    return rows


def load_complexes(rows: Iterable[dict], log=None) -> tuple[list[Complex], list[tuple[str, str]]]:
    """Read and validate manifest rows; returns accepted complexes and (id, reason) skips."""
    ok, skipped = [], []
    for row in rows:
        try:
            c = read_molecule(row["compound_path"])
            p = read_molecule(row["protein_path"])
            aff = row.get("affinity")
            ok.append(validate_complex(c, p, None if aff is None else float(aff), str(row["id"])))
        except (ParseError, ComplexRejected, ValueError) as exc:
            skipped.append((str(row.get("id")), str(exc)))
            if log is not None:
                log.warning("skipping complex %s: %s", row.get("id"), exc)
    return ok, skipped
