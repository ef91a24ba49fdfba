"""
Shared fixtures. ``src`` is put on the import path so the tests run from a
plain checkout: ``pytest tests/``.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / 'src'))

from ecctopo.molio import Atom, Bond, MolecularGraph, parse_smiles  # noqa: E402

ELEMENTS = ('C', 'C', 'C', 'N', 'O', 'S')


def random_molecule(rng: np.random.Generator, max_atoms: int = 12, extra_edges: int = 3,
                    connected: bool = True) -> MolecularGraph:
    """Random simple molecular graph: a random tree plus a few chords."""
    n = int(rng.integers(1, max_atoms + 1))
    atoms = [Atom(i, ELEMENTS[int(rng.integers(len(ELEMENTS)))]) for i in range(n)]
    edges = set()
    for i in range(1, n):
        if connected or rng.random() < 0.8:
            j = int(rng.integers(i))
            edges.add((j, i))
    for _ in range(int(rng.integers(0, extra_edges + 1))):
        if n < 3:
            break
        a, b = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
        edges.add((a, b))
    orders = ('single', 'double', 'aromatic')
    bonds = [Bond(a, b, orders[int(rng.integers(len(orders)))]) for a, b in sorted(edges)]
    return MolecularGraph(tuple(atoms), tuple(bonds))


def random_permutation(rng: np.random.Generator, n: int):
    return [int(x) for x in rng.permutation(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_molecule():
    return random_molecule


@pytest.fixture
def make_permutation():
    return random_permutation


@pytest.fixture
def benzene():
    return parse_smiles('c1ccccc1')


@pytest.fixture
def ethane():
    return parse_smiles('CC')


@pytest.fixture
def methane():
    return parse_smiles('C')


@pytest.fixture
def naphthalene():
    return parse_smiles('c1ccc2ccccc2c1')


@pytest.fixture
def data_dir():
    return ROOT / 'data'
