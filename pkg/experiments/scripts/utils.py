"""
Shared helpers for the experiment scripts: import path setup, random
molecular graphs and the published comparison rows.
"""

import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / 'src'))

from ecctopo.molio import Atom, Bond, MolecularGraph  # noqa: E402

RESULTS_DIR = ROOT / 'experiments' / 'results'
PUBLISHED_ROWS = ROOT / 'experiments' / 'data' / 'published_nb_rows.csv'

ELEMENTS = ('C', 'C', 'C', 'C', 'N', 'O', 'S', 'F', 'Cl')
BOND_ORDERS = ('single', 'single', 'double', 'aromatic')


def random_molecular_graph(
    rng: np.random.Generator,
    max_atoms: int = 20,
    extra_bonds: int = 4,
    p_disconnected: float = 0.1,
) -> MolecularGraph:
    """
    Random simple molecular graph: a random spanning tree plus chords.

    Args:
        rng: Seeded generator.
        max_atoms: Upper bound on heavy atoms.
        extra_bonds: Upper bound on chords added to the tree.
        p_disconnected: Chance that each tree edge is dropped.

    Returns:
        Molecular graph with atom elements drawn from a carbon-heavy mix.
    """
    n = int(rng.integers(1, max_atoms + 1))
    atoms = [Atom(i, ELEMENTS[int(rng.integers(len(ELEMENTS)))]) for i in range(n)]
    edges = set()
    for i in range(1, n):
        if rng.random() >= p_disconnected:
            edges.add((int(rng.integers(i)), i))
    if n >= 3:
        for _ in range(int(rng.integers(0, extra_bonds + 1))):
            a, b = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
            edges.add((a, b))
    bonds = [Bond(a, b, BOND_ORDERS[int(rng.integers(len(BOND_ORDERS)))])
             for a, b in sorted(edges)]
    return MolecularGraph(tuple(atoms), tuple(bonds))


def random_corpus(n_graphs: int, seed: int = 42, **kwargs) -> List[MolecularGraph]:
    rng = np.random.default_rng(seed)
    return [random_molecular_graph(rng, **kwargs) for _ in range(n_graphs)]


def load_published_rows(path: Optional[Path] = None) -> pd.DataFrame:
    """Published 5-fold comparison rows: dataset, loss, delta, t, ci_low, ci_high, p_holm."""
    return pd.read_csv(path or PUBLISHED_ROWS)
