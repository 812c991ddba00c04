"""Heavy-atom bond templates for the 20 standard amino acids.

Each entry lists intra-residue bonds by PDB atom name as ``(a, b, order)``.
The backbone ``N-CA``, ``CA-C``, ``C=O`` and terminal ``C-OXT`` bonds are
shared and added for every residue.
"""

BACKBONE_NAMES = frozenset({"N", "CA", "C", "O"})

_BACKBONE = [("N", "CA", "single"), ("CA", "C", "single"), ("C", "O", "double"),
             ("C", "OXT", "single")]

_RING6 = [("CG", "CD1", "aromatic"), ("CG", "CD2", "aromatic"), ("CD1", "CE1", "aromatic"),
          ("CD2", "CE2", "aromatic"), ("CE1", "CZ", "aromatic"), ("CE2", "CZ", "aromatic")]

_SIDECHAINS: dict[str, list[tuple[str, str, str]]] = {
    "GLY": [],
    "ALA": [("CA", "CB", "single")],
    "SER": [("CA", "CB", "single"), ("CB", "OG", "single")],
    "CYS": [("CA", "CB", "single"), ("CB", "SG", "single")],
    "VAL": [("CA", "CB", "single"), ("CB", "CG1", "single"), ("CB", "CG2", "single")],
    "THR": [("CA", "CB", "single"), ("CB", "OG1", "single"), ("CB", "CG2", "single")],
    "LEU": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "CD1", "single"),
            ("CG", "CD2", "single")],
    "ILE": [("CA", "CB", "single"), ("CB", "CG1", "single"), ("CB", "CG2", "single"),
            ("CG1", "CD1", "single")],
    "MET": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "SD", "single"),
            ("SD", "CE", "single")],
    "PRO": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "CD", "single"),
            ("CD", "N", "single")],
    "PHE": [("CA", "CB", "single"), ("CB", "CG", "single")] + _RING6,
    "TYR": [("CA", "CB", "single"), ("CB", "CG", "single")] + _RING6 + [("CZ", "OH", "single")],
    "TRP": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "CD1", "aromatic"),
            ("CG", "CD2", "aromatic"), ("CD1", "NE1", "aromatic"), ("NE1", "CE2", "aromatic"),
            ("CD2", "CE2", "aromatic"), ("CE2", "CZ2", "aromatic"), ("CD2", "CE3", "aromatic"),
            ("CE3", "CZ3", "aromatic"), ("CZ2", "CH2", "aromatic"), ("CZ3", "CH2", "aromatic")],
    "HIS": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "ND1", "aromatic"),
            ("CG", "CD2", "aromatic"), ("ND1", "CE1", "aromatic"), ("CD2", "NE2", "aromatic"),
            ("CE1", "NE2", "aromatic")],
    "ASP": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "OD1", "double"),
            ("CG", "OD2", "single")],
    "ASN": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "OD1", "double"),
            ("CG", "ND2", "single")],
    "GLU": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "CD", "single"),
            ("CD", "OE1", "double"), ("CD", "OE2", "single")],
    "GLN": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "CD", "single"),
            ("CD", "OE1", "double"), ("CD", "NE2", "single")],
    "LYS": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "CD", "single"),
            ("CD", "CE", "single"), ("CE", "NZ", "single")],
    "ARG": [("CA", "CB", "single"), ("CB", "CG", "single"), ("CG", "CD", "single"),
            ("CD", "NE", "single"), ("NE", "CZ", "single"), ("CZ", "NH1", "double"),
            ("CZ", "NH2", "single")],
}

RESIDUE_TEMPLATES: dict[str, list[tuple[str, str, str]]] = {
    name: _BACKBONE + side for name, side in _SIDECHAINS.items()
}

STANDARD_RESIDUES = frozenset(RESIDUE_TEMPLATES)


def template_atom_names(resname: str) -> list[str]:
    """Heavy-atom names of a standard residue in first-appearance order (OXT excluded)."""
    seen: list[str] = []
    for a, b, _ in RESIDUE_TEMPLATES[resname]:
        for n in (a, b):
            if n != "OXT" and n not in seen:
                seen.append(n)
    return seen
