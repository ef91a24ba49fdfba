"""
Linear algebra over lifted complexes.

Exact part: ranks of boundary maps over the rationals (fraction-free
Bareiss elimination on Python integers), Betti numbers, and a GF(2)
cross-check for torsion. Numerical part: Hodge Laplacians, a cyclic Jacobi
eigensolver, sampled chain matrices and their spectra, degree centrality
over skeleta and all-pairs shortest paths on the molecular graph.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .exceptions import (
    DimensionOutOfRangeError,
    EmptyDimensionError,
    NonConvergenceError,
)
from .lifting import MAX_DIM, BoundaryMatrix, CellComplex, boundary_matrix, validate
from .molio import MolecularGraph

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 100
KERNEL_EPS = 1e-8

__all__ = [
    'BoundaryMatrix', 'SymmetricMatrix', 'ChainMatrix', 'SpectrumSummary',
    'CentralitySummary', 'PathSummary', 'rational_rank', 'gf2_rank',
    'betti_numbers', 'euler_characteristic', 'torsion_diagnostics',
    'hodge_laplacian', 'sym_eigs', 'top_k_eigs', 'kernel_dimensions',
    'sample_chain_matrix', 'spectral_chains', 'degree_centrality', 'apsp',
]


# ==================== TYPES ====================

@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Dense real symmetric matrix; ``values`` is symmetrized on construction."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        scale = max(1.0, float(np.abs(arr).max(initial=0.0)))
        if not np.allclose(arr, arr.T, rtol=0.0, atol=1e-12 * scale):
            raise ValueError("matrix is not symmetric")
        object.__setattr__(self, 'values', (arr + arr.T) / 2.0)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def lower(self) -> np.ndarray:
        """Packed lower triangle, row by row."""
        return self.values[np.tril_indices(self.n)]

    @classmethod
    def from_lower(cls, n: int, packed: Sequence[float]) -> 'SymmetricMatrix':
        out = np.zeros((n, n))
        out[np.tril_indices(n)] = packed
        return cls(out + np.tril(out, -1).T)


@dataclass(frozen=True, eq=False)
class ChainMatrix:
    """Sampled formal sums over the k-cells, one per row."""

    values: np.ndarray
    k: int
    walk_len: int
    seed: int

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_cells(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SpectrumSummary:
    """Eigenvalues in descending order, zero-padded to ``top_k``."""

    eigenvalues: Tuple[float, ...]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.eigenvalues, dtype=float)


@dataclass(frozen=True, eq=False)
class CentralitySummary:
    values: np.ndarray
    mean: float
    std: float
    max: float

    def summary(self) -> Tuple[float, float, float]:
        return (self.mean, self.std, self.max)


@dataclass(frozen=True, eq=False)
class PathSummary:
    """Distance matrix (``inf`` for unreachable pairs) and its summaries."""

    distances: np.ndarray
    mean: float
    diameter: float
    wiener: float
    n_pairs: int = 0

    def summary(self) -> Tuple[float, float, float]:
        return (self.mean, self.diameter, self.wiener)


MatrixLike = Union[BoundaryMatrix, np.ndarray, Sequence[Sequence[int]]]


def _as_int_array(B: MatrixLike) -> np.ndarray:
    if isinstance(B, BoundaryMatrix):
        return B.to_dense()
    if sp.issparse(B):
        return np.asarray(B.todense(), dtype=np.int64)
    arr = np.asarray(B)
    if arr.ndim != 2:
        arr = arr.reshape(0, 0) if arr.size == 0 else arr.reshape(1, -1)
    return arr.astype(np.int64)


# ==================== EXACT RANKS ====================

def rational_rank(B: MatrixLike) -> int:
    """Rank over the rationals by fraction-free (Bareiss) elimination.

    Entries stay Python integers throughout; every division is exact.

    Example:
        >>> rational_rank([[1, 1, 1], [1, 1, 1], [1, 1, 1]])
        1
    """
    A = _as_int_array(B).astype(object)
    m, n = A.shape
    # drop all-zero rows and columns up front
    A = A[np.any(A != 0, axis=1)][:, np.any(A != 0, axis=0)] if A.size else A
    m, n = A.shape

    rank, prev = 0, 1
    for col in range(n):
        if rank == m:
            break
        nonzero = np.nonzero(A[rank:, col])[0]
        if nonzero.size == 0:
            continue
        pivot = rank + int(nonzero[0])
        if pivot != rank:
            A[[rank, pivot]] = A[[pivot, rank]]
        p = A[rank, col]
        below = A[rank + 1:, col].copy()
        A[rank + 1:, col + 1:] = (
            p * A[rank + 1:, col + 1:] - np.outer(below, A[rank, col + 1:])
        ) // prev
        A[rank + 1:, col] = 0
        prev = p
        rank += 1
    return rank


def gf2_rank(B: MatrixLike) -> int:
    """Rank over GF(2) by XOR elimination on the parity of the entries."""
    A = (_as_int_array(B) % 2).astype(np.uint8)
    m, n = A.shape
    rank = 0
    for col in range(n):
        if rank == m:
            break
        rows = np.nonzero(A[rank:, col])[0]
        if rows.size == 0:
            continue
        pivot = rank + int(rows[0])
        if pivot != rank:
            A[[rank, pivot]] = A[[pivot, rank]]
        mask = A[:, col].astype(bool)
        mask[rank] = False
        A[mask] ^= A[rank]
        rank += 1
    return rank


def _boundary_ranks(X: CellComplex, rank_fn=rational_rank) -> Dict[int, int]:
    ranks = {0: 0, MAX_DIM + 1: 0}
    for k in range(1, MAX_DIM + 1):
        B = boundary_matrix(X, k)
        ranks[k] = rank_fn(B) if B.entries else 0
    return ranks


def betti_numbers(X: CellComplex) -> Tuple[int, int, int, int]:
    """Betti numbers over the rationals.

    ``beta_k = |C_k| - rank d_k - rank d_{k+1}``.

    Raises:
        InvalidComplexError: If the complex fails ``validate``.

    Example:
        >>> betti_numbers(lift(parse_smiles("CC")))
        (1, 0, 1, 0)
    """
    validate(X).raise_if_invalid()
    ranks = _boundary_ranks(X)
    return tuple(X.n_cells(k) - ranks[k] - ranks[k + 1] for k in range(MAX_DIM + 1))


def euler_characteristic(X: CellComplex) -> int:
    return sum((-1) ** k * X.n_cells(k) for k in range(MAX_DIM + 1))


def torsion_diagnostics(X: CellComplex) -> List[Dict]:
    """Compare rational and GF(2) ranks of every boundary map.

    A disagreement means 2-torsion in the integral homology; it is logged
    as a warning and reported with ``agree = False``.
    """
    rational = _boundary_ranks(X, rational_rank)
    mod2 = _boundary_ranks(X, gf2_rank)
    report = []
    for k in range(1, MAX_DIM + 1):
        agree = rational[k] == mod2[k]
        if not agree:
            logger.warning("boundary map %d: rational rank %d != GF(2) rank %d (torsion)",
                           k, rational[k], mod2[k])
        report.append({'dim': k, 'rank_q': rational[k], 'rank_gf2': mod2[k], 'agree': agree})
    return report


# ==================== LAPLACIANS AND EIGENSOLVER ====================

def hodge_laplacian(X: CellComplex, k: int) -> SymmetricMatrix:
    """``L_k = B_k^T B_k + B_{k+1} B_{k+1}^T``, dropping the terms past either end.

    Raises:
        DimensionOutOfRangeError: Unless ``0 <= k <= 3``.
    """
    if not 0 <= k <= MAX_DIM:
        raise DimensionOutOfRangeError(f"Laplacian dimension must be in 0..3, got {k}")
    n = X.n_cells(k)
    L = sp.csc_matrix((n, n), dtype=np.int64)
    if k >= 1:
        down = boundary_matrix(X, k).to_sparse()
        L = L + down.T @ down
    if k < MAX_DIM:
        up = boundary_matrix(X, k + 1).to_sparse()
        L = L + up @ up.T
    return SymmetricMatrix(L.toarray().astype(float))


def _round_robin(n: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Circle-method schedule: n-1 (or n) rounds of disjoint index pairs."""
    players = list(range(n + (n % 2)))
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < n and b < n]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def sym_eigs(
    M: Union[SymmetricMatrix, np.ndarray],
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps visit every off-diagonal pair once, grouped into rounds of
    disjoint pairs that are rotated together. Iteration stops once every
    off-diagonal magnitude is below ``tol * ||M||_F``.

    Args:
        M: Symmetric matrix.
        tol: Relative off-diagonal tolerance.
        max_sweeps: Sweep limit.

    Returns:
        ``(eigenvalues ascending, eigenvectors as columns)``.

    Raises:
        NonConvergenceError: If the limit is reached first.
    """
    A = (M.values if isinstance(M, SymmetricMatrix) else SymmetricMatrix(M).values).copy()
    n = A.shape[0]
    V = np.eye(n)
    if n == 0:
        return np.zeros(0), V
    norm = float(np.linalg.norm(A, 'fro'))
    if norm == 0.0:
        return np.zeros(n), V
    threshold = tol * norm
    rounds = _round_robin(n)
    off_mask = ~np.eye(n, dtype=bool)

    for sweep in range(max_sweeps + 1):
        if n == 1 or np.max(np.abs(A[off_mask])) < threshold:
            order = np.argsort(np.diag(A), kind='stable')
            logger.debug("Jacobi converged after %d sweeps (n=%d)", sweep, n)
            return np.diag(A)[order], V[:, order]
        if sweep == max_sweeps:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = apq != 0.0
            with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
                theta = np.where(active, (A[q, q] - A[p, p]) / (2.0 * apq), 0.0)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(active & np.isfinite(theta), t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c

            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq

    raise NonConvergenceError(
        f"Jacobi did not converge in {max_sweeps} sweeps (n={n}, "
        f"max off-diagonal {np.max(np.abs(A[off_mask])):.3e}, threshold {threshold:.3e})"
    )


def top_k_eigs(M: Union[SymmetricMatrix, np.ndarray], top_k: int,
               tol: float = DEFAULT_TOL) -> SpectrumSummary:
    """Largest ``top_k`` eigenvalues, descending, zero-padded."""
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    values, _ = sym_eigs(M, tol=tol)
    top = list(values[::-1][:top_k])
    return SpectrumSummary(tuple(float(v) for v in top) + (0.0,) * (top_k - len(top)))


def kernel_dimensions(X: CellComplex, eps: float = KERNEL_EPS) -> Tuple[int, int, int, int]:
    """Number of eigenvalues below ``eps`` of each Hodge Laplacian."""
    dims = []
    for k in range(MAX_DIM + 1):
        values, _ = sym_eigs(hodge_laplacian(X, k))
        dims.append(int(np.sum(values < eps)))
    return tuple(dims)


# ==================== CHAIN SAMPLING ====================

def _cell_adjacency(X: CellComplex, k: int) -> List[np.ndarray]:
    """k-cells sharing a (k-1)-face or a (k+1)-coface, as sorted neighbour arrays."""
    n = X.n_cells(k)
    adj = sp.csr_matrix((n, n), dtype=np.int64)
    if k >= 1:
        down = abs(boundary_matrix(X, k).to_sparse())
        adj = adj + down.T @ down
    if k < MAX_DIM:
        up = abs(boundary_matrix(X, k + 1).to_sparse())
        adj = adj + up @ up.T
    adj = sp.csr_matrix(adj - sp.diags(adj.diagonal()))
    adj.eliminate_zeros()
    adj.sort_indices()
    return [adj.indices[adj.indptr[i]:adj.indptr[i + 1]] for i in range(n)]


def sample_chain_matrix(X: CellComplex, k: int, n_samples: int, walk_len: int,
                        seed: int) -> ChainMatrix:
    """Sample formal sums over the k-cells by parity-signed random walks.

    Each row starts at a uniformly drawn k-cell and walks ``walk_len``
    cells (start included) on the k-cell adjacency graph, stopping early at
    a cell with no neighbours. The cell reached at step ``s`` gets
    coefficient ``(-1)**s``; a revisit overwrites the earlier coefficient.
    The stream is seeded with ``(seed, k)``.

    Raises:
        DimensionOutOfRangeError: Unless ``0 <= k <= 3``.
        EmptyDimensionError: If there are no k-cells.
    """
    if not 0 <= k <= MAX_DIM:
        raise DimensionOutOfRangeError(f"chain dimension must be in 0..3, got {k}")
    if X.n_cells(k) == 0:
        raise EmptyDimensionError(f"no {k}-cells to sample from")
    if n_samples < 0 or walk_len < 1:
        raise ValueError("n_samples must be >= 0 and walk_len >= 1")
    if seed < 0:
        raise ValueError(f"seed must be a non-negative 64-bit integer, got {seed}")

    n = X.n_cells(k)
    neighbors = _cell_adjacency(X, k)
    rng = np.random.default_rng([seed, k])
    C = np.zeros((n_samples, n), dtype=np.int8)
    for row in range(n_samples):
        cell = int(rng.integers(n))
        C[row, cell] = 1
        for step in range(1, walk_len):
            options = neighbors[cell]
            if options.size == 0:
                break
            cell = int(options[rng.integers(options.size)])
            C[row, cell] = 1 if step % 2 == 0 else -1
    return ChainMatrix(C, k, walk_len, seed)


def spectral_chains(C: Union[ChainMatrix, np.ndarray], top_k: int) -> SpectrumSummary:
    """Top eigenvalues of the scaled Gram matrix ``C^T C / max(1, n_samples)``.

    The smaller of ``C^T C`` and ``C C^T`` is decomposed; both share the
    nonzero spectrum and the remainder is zero padding either way.
    """
    values = C.values if isinstance(C, ChainMatrix) else np.asarray(C)
    values = np.atleast_2d(values).astype(float)
    n_samples, n_cells = values.shape
    gram = values.T @ values if n_cells <= n_samples else values @ values.T
    return top_k_eigs(gram / max(1, n_samples), top_k)


# ==================== CENTRALITY AND PATHS ====================

def degree_centrality(X: CellComplex, k: int) -> CentralitySummary:
    """Share of (k+1)-cells incident to each k-cell, with (mean, std, max).

    Raises:
        DimensionOutOfRangeError: Unless ``0 <= k <= 2``.
    """
    if not 0 <= k < MAX_DIM:
        raise DimensionOutOfRangeError(f"centrality dimension must be in 0..2, got {k}")
    counts = np.zeros(X.n_cells(k))
    for faces in X.boundaries[k + 1]:
        for face, _ in faces:
            counts[face] += 1
    values = counts / max(1, X.n_cells(k + 1))
    if values.size == 0:
        return CentralitySummary(values, 0.0, 0.0, 0.0)
    return CentralitySummary(values, float(values.mean()), float(values.std()),
                             float(values.max()))


def apsp(g: MolecularGraph) -> PathSummary:
    """All-pairs hop distances on the molecular graph.

    Unreachable pairs are ``inf`` and left out of the summaries: mean finite
    distance over unordered pairs, diameter, and Wiener index.
    """
    n = g.n_atoms
    D = np.full((n, n), np.inf)
    for source, lengths in nx.all_pairs_shortest_path_length(g.to_networkx()):
        for target, d in lengths.items():
            D[source, target] = d
    upper = D[np.triu_indices(n, 1)]
    finite = upper[np.isfinite(upper)]
    if finite.size == 0:
        return PathSummary(D, 0.0, 0.0, 0.0, 0)
    return PathSummary(D, float(finite.mean()), float(finite.max()), float(finite.sum()),
                       int(finite.size))
