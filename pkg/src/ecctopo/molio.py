"""
Molecular input: a self-contained SMILES subset, the plain JSON graph
format, per-atom subatomic composition and graph enrichment features.

The SMILES grammar covered here:

- organic-subset atoms ``B C N O P S F Cl Br I`` and aromatic ``b c n o p s``
- bracket atoms with isotope, hydrogen count (ignored) and charge, e.g.
  ``[13C]``, ``[O-]``, ``[NH4+]``, ``[nH]``
- bond symbols ``- = # :``, branches ``( )``, ring closures ``0-9`` and ``%nn``

Stereochemistry, wildcard atoms, explicit hydrogen atoms and the ``.``
component separator are rejected with ``SmilesSyntaxError``. Aromaticity is
purely syntactic: lowercase atoms and ``:`` bonds set the aromatic flags.
Implicit hydrogens are never materialized.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from .exceptions import (
    DuplicateBondError,
    InvalidCompositionError,
    SchemaError,
    SmilesSyntaxError,
    UnknownElementError,
)

logger = logging.getLogger(__name__)

BOND_ORDERS: Tuple[str, ...] = ('single', 'double', 'triple', 'aromatic')
BOND_SYMBOLS: Dict[str, str] = {'-': 'single', '=': 'double', '#': 'triple', ':': 'aromatic'}

ORGANIC_TWO_LETTER = ('Cl', 'Br')
ORGANIC_ONE_LETTER = ('B', 'C', 'N', 'O', 'P', 'S', 'F', 'I')
AROMATIC_SYMBOLS = ('b', 'c', 'n', 'o', 'p', 's')

DEFAULT_ELEMENT_TABLE = Path(__file__).parent / 'data' / 'elements.csv'
ELEMENT_TABLE_ENV = 'ECCTOPO_ELEMENT_TABLE'


# ==================== ELEMENT TABLE ====================

@lru_cache(maxsize=None)
def load_element_table(path: Optional[str] = None) -> Dict[str, Tuple[int, int]]:
    """Load the element table: symbol -> (atomic number, most-abundant mass number).

    The table path defaults to the packaged ``data/elements.csv`` and can be
    overridden with the ``ECCTOPO_ELEMENT_TABLE`` environment variable.
    """
    if path is None:
        path = os.environ.get(ELEMENT_TABLE_ENV, str(DEFAULT_ELEMENT_TABLE))
    df = pd.read_csv(path, dtype={'symbol': str})
    missing = {'symbol', 'atomic_number', 'mass_number'} - set(df.columns)
    if missing:
        raise ValueError(f"element table {path} lacks columns {sorted(missing)}")

    table = {}
    for row in df.itertuples(index=False):
        z, a = int(row.atomic_number), int(row.mass_number)
        if z < 1 or a < z:
            raise ValueError(f"element table {path}: bad row for {row.symbol}")
        table[str(row.symbol).strip()] = (z, a)
    logger.debug("loaded %d elements from %s", len(table), path)
    return table


def supported_elements() -> Tuple[str, ...]:
    return tuple(sorted(load_element_table()))


# ==================== DOMAIN TYPES ====================

@dataclass(frozen=True)
class Atom:
    """Heavy atom of a molecular graph."""

    index: int
    element: str
    formal_charge: int = 0
    isotope: Optional[int] = None
    aromatic: bool = False


@dataclass(frozen=True)
class Bond:
    """Undirected typed bond; ``a`` and ``b`` are atom indices."""

    a: int
    b: int
    order: str = 'single'

    def __post_init__(self):
        if self.order not in BOND_ORDERS:
            raise ValueError(f"unknown bond order {self.order!r}")
        if self.a == self.b:
            raise DuplicateBondError(self.a, self.b)

    @property
    def endpoints(self) -> Tuple[int, int]:
        return (min(self.a, self.b), max(self.a, self.b))


@dataclass(frozen=True)
class AtomComposition:
    protons: int
    neutrons: int
    electrons: int


@dataclass(frozen=True)
class MolecularGraph:
    """Simple undirected molecular graph G = (V, E) over heavy atoms."""

    atoms: Tuple[Atom, ...] = ()
    bonds: Tuple[Bond, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'atoms', tuple(self.atoms))
        object.__setattr__(self, 'bonds', tuple(self.bonds))
        n = len(self.atoms)
        for i, atom in enumerate(self.atoms):
            if atom.index != i:
                raise ValueError(f"atom at position {i} has index {atom.index}")
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise ValueError(f"bond {bond.a}-{bond.b} references a missing atom")
            if bond.endpoints in seen:
                raise DuplicateBondError(*bond.endpoints)
            seen.add(bond.endpoints)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_atoms, dtype=np.int64)
        for bond in self.bonds:
            deg[bond.a] += 1
            deg[bond.b] += 1
        return deg

    def adjacency(self) -> List[List[int]]:
        """Sorted neighbour lists."""
        nbrs: List[List[int]] = [[] for _ in range(self.n_atoms)]
        for bond in self.bonds:
            nbrs[bond.a].append(bond.b)
            nbrs[bond.b].append(bond.a)
        return [sorted(x) for x in nbrs]

    def bond_index(self) -> Dict[Tuple[int, int], int]:
        """(low, high) endpoint pair -> bond ordinal."""
        return {bond.endpoints: i for i, bond in enumerate(self.bonds)}

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        for atom in self.atoms:
            G.add_node(atom.index, element=atom.element, charge=atom.formal_charge,
                       aromatic=atom.aromatic)
        for i, bond in enumerate(self.bonds):
            G.add_edge(bond.a, bond.b, order=bond.order, index=i)
        return G

    def relabel(self, perm: Sequence[int]) -> 'MolecularGraph':
        """Return the graph with old atom ``i`` moved to index ``perm[i]``.

        Bonds are re-sorted by their new endpoint pairs.
        """
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(self.n_atoms)):
            raise ValueError("perm must be a permutation of the atom indices")
        atoms: List[Optional[Atom]] = [None] * self.n_atoms
        for old, atom in enumerate(self.atoms):
            atoms[perm[old]] = Atom(perm[old], atom.element, atom.formal_charge,
                                    atom.isotope, atom.aromatic)
        bonds = sorted(
            (Bond(*sorted((perm[b.a], perm[b.b])), order=b.order) for b in self.bonds),
            key=lambda b: b.endpoints,
        )
        return MolecularGraph(tuple(atoms), tuple(bonds))


def graph_to_dict(g: MolecularGraph) -> Dict:
    """Plain-schema dictionary of a graph (inverse of ``parse_graph_file``)."""
    atoms = []
    for atom in g.atoms:
        record = {'element': atom.element, 'charge': atom.formal_charge,
                  'aromatic': atom.aromatic}
        if atom.isotope is not None:
            record['isotope'] = atom.isotope
        atoms.append(record)
    bonds = [{'a': b.a, 'b': b.b, 'order': b.order} for b in g.bonds]
    return {'atoms': atoms, 'bonds': bonds}


def graph_to_json(g: MolecularGraph) -> str:
    """Canonical serialization: sorted keys, no insignificant whitespace."""
    return json.dumps(graph_to_dict(g), sort_keys=True, separators=(',', ':'))


# ==================== COMPOSITION ====================

def element_composition(element: str, formal_charge: int = 0,
                        isotope: Optional[int] = None) -> AtomComposition:
    """Protons, neutrons and electrons of an atom.

    Args:
        element: Chemical symbol present in the element table.
        formal_charge: Charge in elementary units.
        isotope: Mass number; defaults to the most abundant isotope.

    Returns:
        ``AtomComposition(Z, A - Z, Z - charge)``.

    Raises:
        UnknownElementError: If the symbol is not in the table.
        InvalidCompositionError: If the isotope or charge yields a negative count.

    Example:
        >>> element_composition("O", -1)
        AtomComposition(protons=8, neutrons=8, electrons=9)
    """
    table = load_element_table()
    if element not in table:
        raise UnknownElementError(f"unknown element {element!r}")
    z, most_abundant = table[element]
    mass = most_abundant if isotope is None else int(isotope)
    if mass < z:
        raise InvalidCompositionError(
            f"isotope {mass} of {element} is below atomic number {z}")
    electrons = z - int(formal_charge)
    if electrons < 0:
        raise InvalidCompositionError(
            f"charge {formal_charge} leaves {element} with negative electrons")
    return AtomComposition(protons=z, neutrons=mass - z, electrons=electrons)


def atom_composition(atom: Atom) -> AtomComposition:
    return element_composition(atom.element, atom.formal_charge, atom.isotope)


# ==================== SMILES ====================

@dataclass
class _AtomDraft:
    element: str
    charge: int = 0
    isotope: Optional[int] = None
    aromatic: bool = False


@dataclass
class _SmilesParser:
    text: str
    pos: int = 0
    atoms: List[_AtomDraft] = field(default_factory=list)
    bonds: Dict[Tuple[int, int], str] = field(default_factory=dict)
    bond_order: List[Tuple[int, int]] = field(default_factory=list)

    def fail(self, message: str, position: Optional[int] = None):
        raise SmilesSyntaxError(self.pos if position is None else position, message)

    # -- bonds --------------------------------------------------------------

    def default_order(self, a: int, b: int) -> str:
        if self.atoms[a].aromatic and self.atoms[b].aromatic:
            return 'aromatic'
        return 'single'

    def add_bond(self, a: int, b: int, order: Optional[str], position: int):
        if a == b:
            self.fail("ring closure bonds an atom to itself", position)
        key = (min(a, b), max(a, b))
        if key in self.bonds:
            raise DuplicateBondError(key[0], key[1], position)
        if order is None:
            order = self.default_order(a, b)
        elif order == 'aromatic':
            self.atoms[a].aromatic = True
            self.atoms[b].aromatic = True
        self.bonds[key] = order
        self.bond_order.append(key)

    # -- atoms --------------------------------------------------------------

    def read_digits(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        return self.text[start:self.pos]

    def parse_organic(self) -> _AtomDraft:
        s, i = self.text, self.pos
        if s[i:i + 2] in ORGANIC_TWO_LETTER:
            self.pos += 2
            return _AtomDraft(s[i:i + 2])
        if s[i] in ORGANIC_ONE_LETTER:
            self.pos += 1
            return _AtomDraft(s[i])
        if s[i] in AROMATIC_SYMBOLS:
            self.pos += 1
            return _AtomDraft(s[i].upper(), aromatic=True)
        if s[i] == 'H':
            self.fail("explicit hydrogen atoms are not supported")
        self.fail(f"unknown element {s[i]!r} (use a bracket atom)")

    def parse_bracket(self) -> _AtomDraft:
        s, start = self.text, self.pos
        table = load_element_table()
        self.pos += 1
        if self.pos >= len(s):
            self.fail("malformed bracket atom", start)

        digits = self.read_digits()
        isotope = int(digits) if digits else None

        if self.pos >= len(s) or not s[self.pos].isalpha():
            self.fail("malformed bracket atom: missing element symbol")
        c = s[self.pos]
        if c.islower():
            pair = s[self.pos:self.pos + 2]
            if len(pair) == 2 and pair.isalpha() and pair.islower():
                self.fail(f"unknown aromatic element {pair!r}")
            if c not in AROMATIC_SYMBOLS:
                self.fail(f"unknown aromatic element {c!r}")
            draft = _AtomDraft(c.upper(), aromatic=True)
            self.pos += 1
        else:
            symbol = c
            if self.pos + 1 < len(s) and s[self.pos + 1].islower():
                symbol = s[self.pos:self.pos + 2]
            if symbol == 'H':
                self.fail("explicit hydrogen atoms are not supported")
            if symbol not in table:
                self.fail(f"unknown element {symbol!r}")
            draft = _AtomDraft(symbol)
            self.pos += len(symbol)

        if draft.element not in table:
            self.fail(f"unknown element {draft.element!r}", start)
        if isotope is not None and isotope < table[draft.element][0]:
            self.fail(f"isotope {isotope} is below the atomic number of {draft.element}", start)
        draft.isotope = isotope

        if self.pos < len(s) and s[self.pos] == '@':
            self.fail("stereochemistry is not supported")
        if self.pos < len(s) and s[self.pos] == 'H':
            self.pos += 1
            self.read_digits()
        if self.pos < len(s) and s[self.pos] in '+-':
            sign = 1 if s[self.pos] == '+' else -1
            symbol = s[self.pos]
            self.pos += 1
            digits = self.read_digits()
            if digits:
                draft.charge = sign * int(digits)
            else:
                count = 1
                while self.pos < len(s) and s[self.pos] == symbol:
                    count += 1
                    self.pos += 1
                draft.charge = sign * count
        if draft.charge > table[draft.element][0]:
            self.fail(f"charge {draft.charge:+d} leaves {draft.element} with negative electrons",
                      start)
        if self.pos >= len(s) or s[self.pos] != ']':
            self.fail("malformed bracket atom: expected ']'")
        self.pos += 1
        return draft

    # -- driver -------------------------------------------------------------

    def read_ring_number(self) -> int:
        s = self.text
        if s[self.pos] == '%':
            digits = s[self.pos + 1:self.pos + 3]
            if len(digits) != 2 or not digits.isdigit():
                self.fail("malformed ring-closure number after '%'")
            self.pos += 3
            return int(digits)
        self.pos += 1
        return int(s[self.pos - 1])

    def parse(self) -> MolecularGraph:
        s = self.text
        if not s:
            self.fail("empty SMILES", 0)
        for i, ch in enumerate(s):
            if not ch.isascii() or ch.isspace():
                self.fail(f"unexpected character {ch!r}", i)

        prev: Optional[int] = None
        pending: Optional[Tuple[str, int]] = None
        branches: List[Tuple[int, int]] = []
        open_rings: Dict[int, Tuple[int, Optional[str], int]] = {}

        while self.pos < len(s):
            c = s[self.pos]
            if c == '(':
                if prev is None:
                    self.fail("branch must follow an atom")
                if pending is not None:
                    self.fail("bond symbol before '('")
                branches.append((prev, self.pos))
                self.pos += 1
                if self.pos < len(s) and s[self.pos] == ')':
                    self.fail("empty branch")
            elif c == ')':
                if not branches:
                    self.fail("unbalanced ')'")
                if pending is not None:
                    self.fail("dangling bond before ')'", pending[1])
                prev, _ = branches.pop()
                self.pos += 1
            elif c in BOND_SYMBOLS:
                if prev is None:
                    self.fail("bond symbol without a preceding atom")
                if pending is not None:
                    self.fail("consecutive bond symbols")
                pending = (BOND_SYMBOLS[c], self.pos)
                self.pos += 1
            elif c.isdigit() or c == '%':
                if prev is None:
                    self.fail("ring closure without a preceding atom")
                at = self.pos
                number = self.read_ring_number()
                order = pending[0] if pending else None
                pending = None
                if number in open_rings:
                    other, other_order, _ = open_rings.pop(number)
                    if order and other_order and order != other_order:
                        self.fail(f"conflicting bond orders for ring closure {number}", at)
                    self.add_bond(other, prev, order or other_order, at)
                else:
                    open_rings[number] = (prev, order, at)
            elif c == '[' or c.isalpha():
                at = self.pos
                draft = self.parse_bracket() if c == '[' else self.parse_organic()
                self.atoms.append(draft)
                idx = len(self.atoms) - 1
                if prev is not None:
                    self.add_bond(prev, idx, pending[0] if pending else None, at)
                pending = None
                prev = idx
            elif c == '.':
                self.fail("multi-component '.' separator is not supported")
            elif c in '/\\@':
                self.fail("stereochemistry is not supported")
            elif c == '*':
                self.fail("wildcard atoms are not supported")
            else:
                self.fail(f"unexpected character {c!r}")

        if pending is not None:
            self.fail("dangling bond at end of input", pending[1])
        if branches:
            self.fail("unbalanced '('", branches[-1][1])
        if open_rings:
            number, (_, _, at) = min(open_rings.items(), key=lambda kv: kv[1][2])
            self.fail(f"unmatched ring closure {number}", at)

        atoms = tuple(
            Atom(i, d.element, d.charge, d.isotope, d.aromatic) for i, d in enumerate(self.atoms)
        )
        bonds = tuple(Bond(a, b, self.bonds[(a, b)]) for a, b in self.bond_order)
        return MolecularGraph(atoms, bonds)


def parse_smiles(text: str) -> MolecularGraph:
    """Parse a SMILES string from the supported subset into a heavy-atom graph.

    Raises:
        SmilesSyntaxError: Unbalanced parentheses, unmatched ring closures,
            unknown elements, malformed bracket atoms or unsupported syntax.
        DuplicateBondError: If a pair of atoms would be bonded twice.

    Example:
        >>> g = parse_smiles("CC(=O)O")
        >>> [b.order for b in g.bonds]
        ['single', 'double', 'single']
    """
    return _SmilesParser(text.strip()).parse()


def read_smiles_file(path: Path) -> Iterator[Tuple[int, str, str]]:
    """Yield ``(line number, molecule id, smiles)`` from a SMILES list file.

    Blank lines and lines starting with ``#`` are skipped. An optional second
    whitespace-separated column is taken as the molecule id; otherwise the id
    is ``mol<line number>``.
    """
    with open(path, 'r') as f:
        for line_no, line in enumerate(f, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith('#'):
                continue
            parts = stripped.split()
            mol_id = parts[1] if len(parts) > 1 else f"mol{line_no}"
            yield line_no, mol_id, parts[0]


# ==================== PLAIN GRAPH FILES ====================

def _field(record: Dict, key: str, kinds, path: str, default=None, required=False):
    if key not in record:
        if required:
            raise SchemaError(f"{path}.{key}", "missing required field")
        return default
    value = record[key]
    # bool is an int subclass; keep the two apart
    if isinstance(value, bool) and bool not in kinds:
        raise SchemaError(f"{path}.{key}", f"expected {kinds[0].__name__}, got bool")
    if not isinstance(value, kinds):
        raise SchemaError(f"{path}.{key}",
                          f"expected {kinds[0].__name__}, got {type(value).__name__}")
    return value


def parse_graph_file(text: str) -> MolecularGraph:
    """Parse the plain JSON graph schema.

    Schema::

        {"atoms": [{"element": "C", "charge": 0, "isotope": 13, "aromatic": false}],
         "bonds": [{"a": 0, "b": 1, "order": "single"}]}

    Raises:
        SchemaError: With the path of the offending field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError('$', f"invalid JSON: {e.msg} (line {e.lineno})") from e
    if not isinstance(doc, dict):
        raise SchemaError('$', "top level must be an object")

    raw_atoms = _field(doc, 'atoms', (list,), '$', required=True)
    raw_bonds = _field(doc, 'bonds', (list,), '$', default=[])
    table = load_element_table()

    atoms = []
    for i, rec in enumerate(raw_atoms):
        path = f"atoms[{i}]"
        if not isinstance(rec, dict):
            raise SchemaError(path, "expected an object")
        element = _field(rec, 'element', (str,), path, required=True)
        if element not in table:
            raise SchemaError(f"{path}.element", f"unknown element {element!r}")
        charge = _field(rec, 'charge', (int,), path, default=0)
        if charge > table[element][0]:
            raise SchemaError(f"{path}.charge",
                              f"charge {charge} leaves {element} with negative electrons")
        isotope = _field(rec, 'isotope', (int,), path, default=None)
        if isotope is not None and isotope < table[element][0]:
            raise SchemaError(f"{path}.isotope", "isotope below atomic number")
        aromatic = _field(rec, 'aromatic', (bool,), path, default=False)
        atoms.append(Atom(i, element, charge, isotope, aromatic))

    bonds = []
    seen = set()
    for i, rec in enumerate(raw_bonds):
        path = f"bonds[{i}]"
        if not isinstance(rec, dict):
            raise SchemaError(path, "expected an object")
        a = _field(rec, 'a', (int,), path, required=True)
        b = _field(rec, 'b', (int,), path, required=True)
        for key, value in (('a', a), ('b', b)):
            if not 0 <= value < len(atoms):
                raise SchemaError(f"{path}.{key}", f"atom index {value} out of range")
        if a == b:
            raise SchemaError(path, "self-loop bond")
        order = _field(rec, 'order', (str,), path, default='single')
        if order not in BOND_ORDERS:
            raise SchemaError(f"{path}.order", f"unknown bond order {order!r}")
        key = (min(a, b), max(a, b))
        if key in seen:
            raise SchemaError(path, f"duplicate bond between atoms {key[0]} and {key[1]}")
        seen.add(key)
        bonds.append(Bond(a, b, order))

    return MolecularGraph(tuple(atoms), tuple(bonds))


def load_graph_file(path: Path) -> MolecularGraph:
    with open(path, 'r') as f:
        return parse_graph_file(f.read())


# ==================== ENRICHMENT ====================

@dataclass(frozen=True)
class AtomFeatures:
    degree: int
    aromatic: int
    formal_charge: int
    in_ring: int


@dataclass(frozen=True)
class BondFeatures:
    order_onehot: Tuple[int, int, int, int]
    rotatable: int
    in_ring: int


@dataclass(frozen=True)
class AnnotatedGraph:
    """Molecular graph enriched with per-atom and per-bond features."""

    graph: MolecularGraph
    atom_features: Tuple[AtomFeatures, ...]
    bond_features: Tuple[BondFeatures, ...]

    def atom_matrix(self) -> np.ndarray:
        """n_atoms x 4 float matrix: degree, aromatic, formal charge, in ring."""
        if not self.atom_features:
            return np.zeros((0, 4))
        return np.array([[f.degree, f.aromatic, f.formal_charge, f.in_ring]
                         for f in self.atom_features], dtype=float)

    def bond_matrix(self) -> np.ndarray:
        """n_bonds x 6 float matrix: order one-hot (4), rotatable, in ring."""
        if not self.bond_features:
            return np.zeros((0, 6))
        return np.array([list(f.order_onehot) + [f.rotatable, f.in_ring]
                         for f in self.bond_features], dtype=float)


def annotate(g: MolecularGraph) -> AnnotatedGraph:
    """Compute degree, ring membership, rotatable flags and bond-order one-hots.

    An edge is in a ring iff it is not a bridge; an atom is in a ring iff it
    touches a ring edge. A bond is rotatable iff it is single, acyclic and
    both endpoints have degree >= 2.
    """
    degrees = g.degrees()
    bridges = {(min(u, v), max(u, v)) for u, v in nx.bridges(g.to_networkx())}

    bond_ring = [0 if bond.endpoints in bridges else 1 for bond in g.bonds]
    atom_ring = [0] * g.n_atoms
    for bond, ring in zip(g.bonds, bond_ring):
        if ring:
            atom_ring[bond.a] = atom_ring[bond.b] = 1

    atom_features = tuple(
        AtomFeatures(int(degrees[a.index]), int(a.aromatic), a.formal_charge, atom_ring[a.index])
        for a in g.atoms
    )
    bond_features = []
    for bond, ring in zip(g.bonds, bond_ring):
        onehot = tuple(int(bond.order == o) for o in BOND_ORDERS)
        rotatable = int(bond.order == 'single' and not ring
                        and degrees[bond.a] >= 2 and degrees[bond.b] >= 2)
        bond_features.append(BondFeatures(onehot, rotatable, ring))
    return AnnotatedGraph(g, atom_features, tuple(bond_features))
