"""
Molecular lifting: molecular graph -> 3-dimensional cell complex.

Construction per atom ``a`` (the "digon-sphere" construction):

- three 0-cells ``p_a, n_a, e_a`` (proton, neutron, electron points)
- three 1-cells forming the oriented triangle ``p -> n -> e -> p``
- one 2-cell (atom disk) bounded by the triangle

Per bond ``(a, b)`` with ``a < b``:

- two parallel 1-cells ``u_ab, v_ab`` from ``e_a`` to ``e_b``
- two 2-cells ``F_ab = u - v`` and ``F'_ab = v - u``; ``F + F'`` is a 2-cycle

3-cells are attached to rings (chordless or fundamental cycles up to
``ring_size_max`` atoms) and, optionally, to atom pairs at an exact hop
distance; both are bounded by ``sum(F + F')`` over the bonds they cover.

Cell ids are ordinals within their dimension:

=====  =====================================================
dim    ids
=====  =====================================================
0      ``3a + {0, 1, 2}``
1      triangle edges ``3a + {0, 1, 2}``; bond links ``3N + 2b + {0, 1}``
2      atom disks ``a``; bond faces ``N + 2b + {0, 1}``
3      rings first, then k-hop cells
=====  =====================================================
"""

import json
import logging
from collections import Counter, deque
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionOutOfRangeError, InvalidComplexError
from .molio import BOND_ORDERS, AtomComposition, MolecularGraph, atom_composition

logger = logging.getLogger(__name__)

MAX_DIM = 3
PARTICLES = ('proton', 'neutron', 'electron')
CANONICAL_LEAF_CAP = 2048

Incidence = Tuple[Tuple[int, int], ...]


class CellKind(str, Enum):
    PARTICLE_POINT = 'particle-point'
    ATOM_SHELL_EDGE = 'atom-shell-edge'
    BOND_LINK_EDGE = 'bond-link-edge'
    ATOM_DISK = 'atom-disk'
    BOND_FACE = 'bond-face'
    RING_VOLUME = 'ring-volume'
    KHOP_VOLUME = 'khop-volume'

    @property
    def dim(self) -> int:
        return _KIND_DIM[self]


_KIND_DIM = {
    CellKind.PARTICLE_POINT: 0,
    CellKind.ATOM_SHELL_EDGE: 1,
    CellKind.BOND_LINK_EDGE: 1,
    CellKind.ATOM_DISK: 2,
    CellKind.BOND_FACE: 2,
    CellKind.RING_VOLUME: 3,
    CellKind.KHOP_VOLUME: 3,
}


@dataclass(frozen=True)
class Cell:
    """One cell of the complex.

    ``provenance`` holds the atom indices the cell was built from: the atom
    for atom cells, the bond endpoints for bond cells, the ring atoms or
    the hop path for 3-cells.
    """

    id: int
    dim: int
    kind: CellKind
    provenance: Tuple[int, ...]
    label: str = ''


@dataclass(frozen=True)
class LiftConfig:
    """Which 3-cells to attach.

    Attributes:
        include_rings: Attach one 3-cell per ring.
        khop: Attach one 3-cell per atom pair at exactly this hop distance.
            Values below 2 disable k-hop cells.
        ring_size_max: Longest ring (in atoms) that receives a 3-cell.
    """

    include_rings: bool = True
    khop: int = 0
    ring_size_max: int = 8

    def __post_init__(self):
        if self.khop < 0:
            raise ValueError(f"khop must be >= 0, got {self.khop}")
        if self.ring_size_max < 3:
            raise ValueError(f"ring_size_max must be >= 3, got {self.ring_size_max}")

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'LiftConfig':
        return cls(**data)


@dataclass(frozen=True)
class BoundaryMatrix:
    """Sparse signed incidence matrix of one boundary map.

    Rows are indexed by (k-1)-cells, columns by k-cells.
    """

    rows: int
    cols: int
    entries: Tuple[Tuple[int, int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'entries', tuple(
            (int(r), int(c), int(v)) for r, c, v in self.entries))
        seen = set()
        for r, c, v in self.entries:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"entry ({r}, {c}) outside a {self.rows}x{self.cols} matrix")
            if v not in (-1, 1):
                raise ValueError(f"coefficient {v} at ({r}, {c}) is not +1 or -1")
            if (r, c) in seen:
                raise ValueError(f"duplicate entry ({r}, {c})")
            seen.add((r, c))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @classmethod
    def from_dense(cls, dense) -> 'BoundaryMatrix':
        arr = np.asarray(dense, dtype=np.int64)
        rows, cols = np.nonzero(arr)
        return cls(arr.shape[0], arr.shape[1],
                   tuple(zip(rows.tolist(), cols.tolist(), arr[rows, cols].tolist())))

    def to_sparse(self) -> sp.csc_matrix:
        if not self.entries:
            return sp.csc_matrix((self.rows, self.cols), dtype=np.int64)
        r, c, v = zip(*self.entries)
        return sp.csc_matrix((v, (r, c)), shape=self.shape, dtype=np.int64)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.int64)
        for r, c, v in self.entries:
            out[r, c] = v
        return out


@dataclass(frozen=True)
class CellComplex:
    """Cells of dimensions 0..3 with signed boundary incidence.

    Attributes:
        cells: ``cells[k]`` is the ordered tuple of k-cells.
        boundaries: ``boundaries[k][i]`` lists ``(face id, coefficient)``
            for k-cell ``i``; ``boundaries[0]`` is all empty.
        composition: Per-atom subatomic counts behind the particle points.
    """

    cells: Tuple[Tuple[Cell, ...], ...]
    boundaries: Tuple[Tuple[Incidence, ...], ...]
    composition: Tuple[AtomComposition, ...] = ()

    @property
    def n_atoms(self) -> int:
        return len(self.composition)

    def n_cells(self, k: int) -> int:
        return len(self.cells[k]) if 0 <= k <= MAX_DIM else 0

    def counts(self) -> Tuple[int, int, int, int]:
        return tuple(self.n_cells(k) for k in range(MAX_DIM + 1))

    def cells_of_kind(self, kind: CellKind) -> List[Cell]:
        return [c for c in self.cells[kind.dim] if c.kind == kind]

    def bond_pairs(self) -> List[Tuple[int, int]]:
        """Atom adjacency recovered from the bond-link 1-cells."""
        pairs = set()
        for cell in self.cells_of_kind(CellKind.BOND_LINK_EDGE):
            faces = [face // 3 for face, _ in self.boundaries[1][cell.id]]
            pairs.add((min(faces), max(faces)))
        return sorted(pairs)


@dataclass(frozen=True)
class Violation:
    check: str
    dim: int
    cell: int
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_invalid(self):
        if self.violations:
            first = self.violations[0]
            raise InvalidComplexError(
                f"{first.check} violated at dim {first.dim}, cell {first.cell}: {first.message}"
            )


# ==================== RINGS AND PATHS ====================

def _canonical_cycle(cycle: Sequence[int]) -> Tuple[int, ...]:
    """Rotate to start at the smallest atom, walking towards its smaller neighbour."""
    cycle = list(cycle)
    i = cycle.index(min(cycle))
    rotated = cycle[i:] + cycle[:i]
    if rotated[-1] < rotated[1]:
        rotated = [rotated[0]] + rotated[:0:-1]
    return tuple(rotated)


def _cycle_edges(cycle: Sequence[int]) -> frozenset:
    return frozenset(
        (min(cycle[i], cycle[i - 1]), max(cycle[i], cycle[i - 1])) for i in range(len(cycle))
    )


def ring_cycles(g: MolecularGraph, cfg: Optional[LiftConfig] = None) -> List[Tuple[int, ...]]:
    """Rings that receive a 3-cell.

    The union, deduplicated by edge set, of all chordless cycles and of the
    fundamental cycle basis, restricted to 3..ring_size_max atoms. Each ring
    is returned as an atom cycle starting at its smallest atom; rings are
    sorted by (size, atoms).
    """
    cfg = cfg or LiftConfig()
    if g.n_bonds < 3:
        return []
    G = g.to_networkx()
    found: Dict[frozenset, Tuple[int, ...]] = {}

    candidates = list(nx.chordless_cycles(G, length_bound=cfg.ring_size_max))
    candidates += [c for c in nx.cycle_basis(G) if len(c) <= cfg.ring_size_max]
    for cycle in candidates:
        if len(cycle) < 3:
            continue
        found.setdefault(_cycle_edges(cycle), _canonical_cycle(cycle))
    return sorted(found.values(), key=lambda c: (len(c), c))


def _bfs_tree(adjacency: List[List[int]], source: int) -> Tuple[List[int], List[int]]:
    """Hop distances and BFS parents from ``source`` (neighbours in index order)."""
    n = len(adjacency)
    dist = [-1] * n
    parent = [-1] * n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adjacency[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                parent[w] = u
                queue.append(w)
    return dist, parent


def khop_paths(g: MolecularGraph, khop: int) -> List[Tuple[int, ...]]:
    """One shortest path per atom pair at hop distance exactly ``khop``.

    Paths come from a BFS that visits neighbours in ascending index order, so
    ties resolve towards the lowest-index predecessor. Pairs are ordered by
    (source, target); empty when ``khop < 2``.
    """
    if khop < 2:
        return []
    adjacency = g.adjacency()
    paths = []
    for i in range(g.n_atoms):
        dist, parent = _bfs_tree(adjacency, i)
        for j in range(i + 1, g.n_atoms):
            if dist[j] != khop:
                continue
            path = [j]
            while path[-1] != i:
                path.append(parent[path[-1]])
            paths.append(tuple(reversed(path)))
    return paths


# ==================== LIFT ====================

def lift(g: MolecularGraph, cfg: Optional[LiftConfig] = None) -> CellComplex:
    """Lift a molecular graph to its cell complex.

    Args:
        g: Molecular graph.
        cfg: Ring and k-hop options; defaults to ``LiftConfig()``.

    Returns:
        Complex with ``(3N, 3N + 2M, N + 2M, rings + khop)`` cells.

    Example:
        >>> lift(parse_smiles("CC")).counts()
        (6, 8, 4, 0)
    """
    cfg = cfg or LiftConfig()
    n, m = g.n_atoms, g.n_bonds

    cells0 = tuple(
        Cell(3 * a + j, 0, CellKind.PARTICLE_POINT, (a,), particle)
        for a in range(n) for j, particle in enumerate(PARTICLES)
    )

    cells1: List[Cell] = []
    bnd1: List[Incidence] = []
    for a in range(n):
        p, nu, e = 3 * a, 3 * a + 1, 3 * a + 2
        for label, (tail, head) in zip(('p-n', 'n-e', 'e-p'), ((p, nu), (nu, e), (e, p))):
            cells1.append(Cell(len(cells1), 1, CellKind.ATOM_SHELL_EDGE, (a,), label))
            bnd1.append(tuple(sorted(((tail, -1), (head, 1)))))
    for bond in g.bonds:
        lo, hi = bond.endpoints
        for label in ('u', 'v'):
            cells1.append(Cell(len(cells1), 1, CellKind.BOND_LINK_EDGE, (lo, hi), label))
            bnd1.append(((3 * lo + 2, -1), (3 * hi + 2, 1)))

    cells2: List[Cell] = []
    bnd2: List[Incidence] = []
    for a in range(n):
        cells2.append(Cell(a, 2, CellKind.ATOM_DISK, (a,), 'disk'))
        bnd2.append(((3 * a, 1), (3 * a + 1, 1), (3 * a + 2, 1)))
    for b, bond in enumerate(g.bonds):
        u, v = 3 * n + 2 * b, 3 * n + 2 * b + 1
        for label, sign in (('F', 1), ("F'", -1)):
            cells2.append(Cell(len(cells2), 2, CellKind.BOND_FACE, bond.endpoints, label))
            bnd2.append(((u, sign), (v, -sign)))

    bond_index = g.bond_index()

    def sphere_sum(atoms: Sequence[int], closed: bool) -> Incidence:
        steps = range(len(atoms)) if closed else range(1, len(atoms))
        faces = []
        for i in steps:
            x, y = atoms[i - 1], atoms[i]
            b = bond_index[(min(x, y), max(x, y))]
            faces += [(n + 2 * b, 1), (n + 2 * b + 1, 1)]
        return tuple(sorted(faces))

    cells3: List[Cell] = []
    bnd3: List[Incidence] = []
    if cfg.include_rings:
        for ring in ring_cycles(g, cfg):
            cells3.append(Cell(len(cells3), 3, CellKind.RING_VOLUME, ring, f"ring{len(ring)}"))
            bnd3.append(sphere_sum(ring, closed=True))
    for path in khop_paths(g, cfg.khop):
        cells3.append(Cell(len(cells3), 3, CellKind.KHOP_VOLUME, path, f"hop{cfg.khop}"))
        bnd3.append(sphere_sum(path, closed=False))

    composition = tuple(atom_composition(atom) for atom in g.atoms)
    X = CellComplex(
        cells=(cells0, tuple(cells1), tuple(cells2), tuple(cells3)),
        boundaries=(tuple(() for _ in cells0), tuple(bnd1), tuple(bnd2), tuple(bnd3)),
        composition=composition,
    )
    logger.debug("lifted %d atoms / %d bonds to counts %s", n, m, X.counts())
    return X


def boundary_matrix(X: CellComplex, k: int) -> BoundaryMatrix:
    """Signed incidence matrix of the boundary map from k-cells to (k-1)-cells.

    Raises:
        DimensionOutOfRangeError: Unless ``1 <= k <= 3``.
    """
    if not 1 <= k <= MAX_DIM:
        raise DimensionOutOfRangeError(f"boundary map dimension must be in 1..3, got {k}")
    entries = [(face, col, coeff)
               for col, faces in enumerate(X.boundaries[k]) for face, coeff in faces]
    return BoundaryMatrix(X.n_cells(k - 1), X.n_cells(k), tuple(entries))


# ==================== VALIDATION ====================

def _incidence_violations(X: CellComplex, k: int) -> List[Violation]:
    found: Dict[str, Violation] = {}
    n_faces = X.n_cells(k - 1)

    def note(check, cell, message):
        found.setdefault(check, Violation(check, k, cell, message))

    for cell_id, faces in enumerate(X.boundaries[k]):
        ids = [face for face, _ in faces]
        if len(set(ids)) != len(ids):
            note('duplicate-face', cell_id, "a face appears twice in the boundary")
        for face, coeff in faces:
            if coeff not in (-1, 1):
                note('coefficient', cell_id, f"coefficient {coeff} on face {face}")
            if not 0 <= face < n_faces:
                note('face-range', cell_id, f"face {face} is not a {k - 1}-cell")
    return list(found.values())


def _sparse(X: CellComplex, k: int) -> sp.csc_matrix:
    rows, cols, vals = [], [], []
    for col, faces in enumerate(X.boundaries[k]):
        for face, coeff in faces:
            rows.append(face)
            cols.append(col)
            vals.append(coeff)
    return sp.csc_matrix((vals, (rows, cols)), shape=(X.n_cells(k - 1), X.n_cells(k)),
                         dtype=np.int64)


def validate(X: CellComplex) -> ValidationReport:
    """Check the complex is a valid chain complex.

    Never raises; every failed check contributes its first offending cell.
    Checks: per-dimension bookkeeping (ids, dims, kinds), coefficients in
    {+1, -1}, faces of dimension k-1, no repeated faces, and boundary of
    boundary equal to zero over the integers.
    """
    violations: List[Violation] = []
    if len(X.cells) != MAX_DIM + 1 or len(X.boundaries) != MAX_DIM + 1:
        return ValidationReport((Violation('structure', -1, -1, "expected dimensions 0..3"),))

    for k in range(MAX_DIM + 1):
        if len(X.boundaries[k]) != len(X.cells[k]):
            violations.append(Violation('structure', k, -1, "boundary list length != cell count"))
        for i, cell in enumerate(X.cells[k]):
            if cell.id != i or cell.dim != k or cell.kind.dim != k:
                violations.append(Violation('cell-dim', k, i, f"cell {cell.id} of kind "
                                            f"{cell.kind.value} misfiled"))
                break
    if any(X.boundaries[0]):
        violations.append(Violation('face-range', 0, 0, "0-cells cannot have faces"))
    if violations:
        return ValidationReport(tuple(violations))

    well_formed = {}
    for k in range(1, MAX_DIM + 1):
        local = _incidence_violations(X, k)
        violations += local
        well_formed[k] = not local

    for k in range(1, MAX_DIM):
        if not (well_formed[k] and well_formed[k + 1]):
            continue
        product = (_sparse(X, k) @ _sparse(X, k + 1)).tocsc()
        product.eliminate_zeros()
        if product.nnz:
            col = int(np.min(product.nonzero()[1]))
            violations.append(Violation(
                'boundary-of-boundary', k + 1, col,
                f"composed boundary {k}∘{k + 1} is nonzero on {k + 1}-cell {col}"))

    return ValidationReport(tuple(violations))


def dump_complex(X: CellComplex) -> str:
    """Structured-text debug dump of cells and boundaries (not a stable format)."""
    doc = {
        'counts': list(X.counts()),
        'composition': [asdict(c) for c in X.composition],
        'dimensions': [
            [
                {'id': c.id, 'kind': c.kind.value, 'label': c.label,
                 'provenance': list(c.provenance),
                 'boundary': [list(f) for f in X.boundaries[k][c.id]]}
                for c in X.cells[k]
            ]
            for k in range(MAX_DIM + 1)
        ],
    }
    return json.dumps(doc, indent=1)


# ==================== CANONICAL ORDER ====================

def _dense_rank(keys: Sequence) -> List[int]:
    order = {key: r for r, key in enumerate(sorted(set(keys)))}
    return [order[key] for key in keys]


class _CanonicalSearch:
    """Colour refinement with individualization, keeping the smallest certificate."""

    def __init__(self, g: MolecularGraph, leaf_cap: int):
        self.g = g
        self.n = g.n_atoms
        self.leaf_cap = leaf_cap
        self.leaves = 0
        degrees = g.degrees()
        self.atom_keys = [
            (a.element, a.formal_charge, -1 if a.isotope is None else a.isotope,
             int(a.aromatic), int(degrees[a.index]))
            for a in g.atoms
        ]
        self.neighbors: List[List[Tuple[int, int]]] = [[] for _ in range(self.n)]
        self.edges = []
        for bond in g.bonds:
            rank = BOND_ORDERS.index(bond.order)
            self.neighbors[bond.a].append((bond.b, rank))
            self.neighbors[bond.b].append((bond.a, rank))
            self.edges.append((bond.a, bond.b, rank))
        self.best: Optional[Tuple] = None
        self.best_colors: Optional[List[int]] = None

    def refine(self, colors: List[int]) -> List[int]:
        while True:
            keys = [
                (colors[v], tuple(sorted((rank, colors[u]) for u, rank in self.neighbors[v])))
                for v in range(self.n)
            ]
            refined = _dense_rank(keys)
            if len(set(refined)) == len(set(colors)):
                return refined
            colors = refined

    def certificate(self, colors: List[int]) -> Tuple:
        atoms = [None] * self.n
        for v, c in enumerate(colors):
            atoms[c] = self.atom_keys[v]
        edges = sorted(
            (min(colors[a], colors[b]), max(colors[a], colors[b]), rank)
            for a, b, rank in self.edges
        )
        return (tuple(atoms), tuple(edges))

    def search(self, colors: List[int]):
        if self.leaves >= self.leaf_cap:
            return
        sizes = Counter(colors)
        if len(sizes) == self.n:
            self.leaves += 1
            cert = self.certificate(colors)
            if self.best is None or cert < self.best:
                self.best, self.best_colors = cert, colors
            return
        target = min(c for c, size in sizes.items() if size > 1)
        for v in [i for i in range(self.n) if colors[i] == target]:
            keys = [(colors[u], 0 if u == v or colors[u] != target else 1)
                    for u in range(self.n)]
            self.search(self.refine(_dense_rank(keys)))

    def run(self) -> List[int]:
        if self.n == 0:
            return []
        self.search(self.refine(_dense_rank(self.atom_keys)))
        if self.leaves >= self.leaf_cap:
            logger.warning("canonical labeling hit the %d-leaf cap on a %d-atom graph; "
                           "using the best labeling found so far", self.leaf_cap, self.n)
        return self.best_colors


def canonical_order(g: MolecularGraph, leaf_cap: int = CANONICAL_LEAF_CAP) -> List[int]:
    """Permutation ``perm`` (old index -> new index) giving a canonical atom order.

    Isomorphic graphs map to identical relabeled graphs as long as the
    search finishes within ``leaf_cap`` leaves.
    """
    return _CanonicalSearch(g, leaf_cap).run()


def canonical_relabel(g: MolecularGraph, leaf_cap: int = CANONICAL_LEAF_CAP) -> MolecularGraph:
    """Relabel atoms into canonical order; bonds are sorted by endpoints."""
    return g.relabel(canonical_order(g, leaf_cap))
