"""Tests for SMILES parsing, graph files, composition and enrichment."""

import json

import networkx as nx
import pytest

from ecctopo.exceptions import (
    DuplicateBondError,
    InvalidCompositionError,
    SchemaError,
    SmilesSyntaxError,
    UnknownElementError,
)
from ecctopo.molio import (
    Atom,
    AtomComposition,
    Bond,
    MolecularGraph,
    annotate,
    atom_composition,
    element_composition,
    graph_to_dict,
    graph_to_json,
    load_element_table,
    parse_graph_file,
    parse_smiles,
    read_smiles_file,
    supported_elements,
)

CORPUS_COUNTS = {
    'methane': (1, 0), 'ethane': (2, 1), 'propane': (3, 2), 'butane': (4, 3),
    'isobutane': (4, 3), 'neopentane': (5, 4), 'ethene': (2, 1), 'ethyne': (2, 1),
    'methanol': (2, 1), 'ethanol': (3, 2), 'acetic_acid': (4, 3), 'formic_acid': (3, 2),
    'acetone': (4, 3), 'methylamine': (2, 1), 'acetonitrile': (3, 2),
    'carbon_dioxide': (3, 2), 'cyclopropane': (3, 3), 'cyclobutane': (4, 4),
    'cyclopentane': (5, 5), 'cyclohexane': (6, 6), 'benzene': (6, 6), 'toluene': (7, 7),
    'phenol': (7, 7), 'pyridine': (6, 6), 'pyrrole': (5, 5), 'furan': (5, 5),
    'thiophene': (5, 5), 'naphthalene': (10, 11), 'anthracene': (14, 16),
    'norbornane': (7, 8), 'aspirin': (13, 13), 'caffeine': (14, 15),
    'triethylamine': (7, 6), 'chloroform': (4, 3), 'tetrafluoromethane': (5, 4),
    'dibromoethane': (4, 3), 'diiodomethane': (3, 2), 'sulfuric_acid': (5, 4),
    'phosphoric_acid': (5, 4), 'boric_acid': (4, 3), 'ammonium': (1, 0),
    'acetate': (4, 3), 'tetramethylammonium': (5, 4), 'methane_13c': (1, 0),
    'glycine': (5, 4), 'alanine': (6, 5), 'decalin': (10, 11), 'biphenyl': (12, 13),
    'spirodecane': (10, 11), 'cyclohexane_pct': (6, 6),
}


@pytest.fixture
def corpus(data_dir):
    return {mol_id: parse_smiles(smi) for _, mol_id, smi in
            read_smiles_file(data_dir / 'molecules.smi')}


# ==================== SMILES ====================

def test_parse_acetic_acid():
    g = parse_smiles('CC(=O)O')
    assert [a.element for a in g.atoms] == ['C', 'C', 'O', 'O']
    assert [(b.a, b.b, b.order) for b in g.bonds] == [
        (0, 1, 'single'), (1, 2, 'double'), (1, 3, 'single')]


def test_parse_benzene_is_aromatic(benzene):
    assert benzene.n_atoms == 6 and benzene.n_bonds == 6
    assert all(a.aromatic and a.element == 'C' for a in benzene.atoms)
    assert {b.order for b in benzene.bonds} == {'aromatic'}
    assert benzene.degrees().tolist() == [2] * 6


def test_parse_bracket_atoms():
    g = parse_smiles('[NH4+]')
    assert g.atoms[0] == Atom(0, 'N', formal_charge=1)
    g = parse_smiles('[13CH4]')
    assert g.atoms[0].isotope == 13
    g = parse_smiles('[O-]C(=O)C')
    assert g.atoms[0].formal_charge == -1
    g = parse_smiles('[S+3]')
    assert g.atoms[0].formal_charge == 3
    assert parse_smiles('[O--]').atoms[0].formal_charge == -2


def test_parse_aromatic_nh():
    g = parse_smiles('c1cc[nH]c1')
    assert g.atoms[3].element == 'N' and g.atoms[3].aromatic


def test_parse_percent_ring_closure():
    a = parse_smiles('C%10CCCCC%10')
    b = parse_smiles('C1CCCCC1')
    assert graph_to_json(a) == graph_to_json(b)


def test_parse_explicit_single_between_aromatic_rings():
    g = parse_smiles('c1ccc(cc1)-c1ccccc1')
    orders = {b.endpoints: b.order for b in g.bonds}
    assert orders[(3, 6)] == 'single'
    assert sum(o == 'aromatic' for o in orders.values()) == 12


def test_parse_strips_whitespace():
    assert parse_smiles('  CCO\n').n_atoms == 3


@pytest.mark.parametrize('smiles,position', [
    ('C1CC', 1),
    ('C(C', 1),
    ('C)C', 1),
    ('', 0),
])
def test_smiles_syntax_error_positions(smiles, position):
    with pytest.raises(SmilesSyntaxError) as excinfo:
        parse_smiles(smiles)
    assert excinfo.value.position == position


@pytest.mark.parametrize('smiles', [
    '[Fe]', '[13C', '[2C]', 'C.C', 'C[C@H]C', 'C/C=C/C', '*', '[H]', 'H', 'C11',
    'C=1CC-1', 'C()C', 'C=', '=C', '[se]', 'X', 'C==C', '[C+7]', '[O+++++++++]',
])
def test_smiles_rejected(smiles):
    with pytest.raises(SmilesSyntaxError):
        parse_smiles(smiles)


def test_smiles_duplicate_bond():
    with pytest.raises(DuplicateBondError):
        parse_smiles('C1C1')


def test_duplicate_bond_is_a_value_error():
    with pytest.raises(ValueError):
        parse_smiles('C12CC12')


# ==================== CORPUS ====================

def test_corpus_counts(corpus):
    assert set(corpus) == set(CORPUS_COUNTS)
    for mol_id, (n_atoms, n_bonds) in CORPUS_COUNTS.items():
        g = corpus[mol_id]
        assert (g.n_atoms, g.n_bonds) == (n_atoms, n_bonds), mol_id


def test_corpus_cycle_rank(corpus):
    for mol_id, g in corpus.items():
        G = g.to_networkx()
        components = nx.number_connected_components(G)
        assert len(nx.cycle_basis(G)) == g.n_bonds - g.n_atoms + components, mol_id


def test_read_smiles_file_ids(tmp_path):
    path = tmp_path / 'in.smi'
    path.write_text('# header\nCCO ethanol\n\nc1ccccc1\n')
    records = list(read_smiles_file(path))
    assert records == [(2, 'ethanol', 'CCO'), (4, 'mol4', 'c1ccccc1')]


# ==================== GRAPH TYPES ====================

def test_bond_self_loop_rejected():
    with pytest.raises(DuplicateBondError):
        Bond(1, 1)


def test_graph_rejects_duplicate_and_dangling_bonds():
    atoms = (Atom(0, 'C'), Atom(1, 'C'))
    with pytest.raises(DuplicateBondError):
        MolecularGraph(atoms, (Bond(0, 1), Bond(1, 0)))
    with pytest.raises(ValueError):
        MolecularGraph(atoms, (Bond(0, 2),))


def test_relabel_moves_atoms_and_sorts_bonds():
    g = parse_smiles('CCO')
    h = g.relabel([2, 0, 1])
    assert [a.element for a in h.atoms] == ['C', 'O', 'C']
    assert [b.endpoints for b in h.bonds] == [(0, 1), (0, 2)]
    with pytest.raises(ValueError):
        g.relabel([0, 0, 1])


def test_graph_file_round_trip(corpus):
    g = corpus['caffeine']
    back = parse_graph_file(json.dumps(graph_to_dict(g)))
    assert graph_to_json(back) == graph_to_json(g)


def test_graph_json_is_canonical():
    text = graph_to_json(parse_smiles('CO'))
    assert ' ' not in text
    assert text.index('"atoms"') < text.index('"bonds"')


@pytest.mark.parametrize('doc,path', [
    ({'atoms': [{'element': 'C'}], 'bonds': [{'a': 0, 'b': 5}]}, 'bonds[0].b'),
    ({'atoms': [{'element': 'Xx'}]}, 'atoms[0].element'),
    ({'atoms': [{'element': 'C', 'charge': 'one'}]}, 'atoms[0].charge'),
    ({'atoms': [{'element': 'C', 'charge': 100}]}, 'atoms[0].charge'),
    ({'atoms': [{'element': 'C', 'aromatic': 1}]}, 'atoms[0].aromatic'),
    ({'atoms': [{'element': 'C'}, {'element': 'C'}],
      'bonds': [{'a': 0, 'b': 1, 'order': 'quadruple'}]}, 'bonds[0].order'),
    ({'bonds': []}, '$.atoms'),
])
def test_graph_file_schema_errors(doc, path):
    with pytest.raises(SchemaError) as excinfo:
        parse_graph_file(json.dumps(doc))
    assert excinfo.value.path == path


def test_graph_file_invalid_json():
    with pytest.raises(SchemaError) as excinfo:
        parse_graph_file('{"atoms": [')
    assert excinfo.value.path == '$'


# ==================== COMPOSITION ====================

@pytest.mark.parametrize('element,charge,isotope,expected', [
    ('C', 0, None, (6, 6, 6)),
    ('C', 0, 13, (6, 7, 6)),
    ('O', -1, None, (8, 8, 9)),
    ('N', 1, None, (7, 7, 6)),
    ('H', 0, None, (1, 0, 1)),
    ('Cl', 0, None, (17, 18, 17)),
])
def test_element_composition(element, charge, isotope, expected):
    assert element_composition(element, charge, isotope) == AtomComposition(*expected)


def test_composition_is_linear_in_charge():
    base = element_composition('S')
    for q in range(-2, 7):
        comp = element_composition('S', q)
        assert comp.protons == base.protons and comp.neutrons == base.neutrons
        assert comp.electrons == base.electrons - q


def test_composition_errors():
    with pytest.raises(UnknownElementError):
        element_composition('Fe')
    with pytest.raises(InvalidCompositionError):
        element_composition('C', isotope=4)
    with pytest.raises(InvalidCompositionError):
        element_composition('H', 2)
    # hand-built atoms bypass the parsers
    with pytest.raises(InvalidCompositionError):
        atom_composition(Atom(0, 'C', 7))
    with pytest.raises(InvalidCompositionError):
        atom_composition(Atom(0, 'C', 0, 4))


def test_fully_stripped_atom_parses():
    g = parse_smiles('[C+6]')
    assert g.atoms[0].formal_charge == 6
    assert atom_composition(g.atoms[0]) == AtomComposition(6, 6, 0)


def test_atom_composition_from_smiles():
    g = parse_smiles('[13C]')
    assert atom_composition(g.atoms[0]) == AtomComposition(6, 7, 6)


def test_element_table_override(tmp_path):
    path = tmp_path / 'elements.csv'
    path.write_text('symbol,atomic_number,mass_number\nC,6,12\nSi,14,28\n')
    table = load_element_table(str(path))
    assert table == {'C': (6, 12), 'Si': (14, 28)}
    assert 'Si' not in supported_elements()


# ==================== ENRICHMENT ====================

def test_annotate_benzene(benzene):
    ann = annotate(benzene)
    atoms = ann.atom_matrix()
    assert atoms.shape == (6, 4)
    assert atoms[:, 0].tolist() == [2.0] * 6
    assert atoms[:, 1].tolist() == [1.0] * 6
    assert atoms[:, 3].tolist() == [1.0] * 6
    bonds = ann.bond_matrix()
    assert bonds.shape == (6, 6)
    assert bonds[:, 3].tolist() == [1.0] * 6
    assert bonds[:, 4].tolist() == [0.0] * 6
    assert bonds[:, 5].tolist() == [1.0] * 6


def test_annotate_ethane(ethane):
    ann = annotate(ethane)
    assert ann.atom_matrix().tolist() == [[1, 0, 0, 0], [1, 0, 0, 0]]
    assert ann.bond_matrix().tolist() == [[1, 0, 0, 0, 0, 0]]


def test_annotate_butane_middle_bond_rotatable():
    ann = annotate(parse_smiles('CCCC'))
    assert [f.rotatable for f in ann.bond_features] == [0, 1, 0]
    assert all(f.in_ring == 0 for f in ann.atom_features)


def test_annotate_toluene_ring_membership():
    ann = annotate(parse_smiles('Cc1ccccc1'))
    assert [f.in_ring for f in ann.atom_features] == [0, 1, 1, 1, 1, 1, 1]
    assert ann.bond_features[0].in_ring == 0
    assert ann.bond_features[0].rotatable == 0


def test_annotate_charge_column():
    ann = annotate(parse_smiles('C[N+](C)(C)C'))
    assert ann.atom_matrix()[1].tolist() == [4.0, 0.0, 1.0, 0.0]


def test_annotate_single_atom(methane):
    ann = annotate(methane)
    assert ann.atom_matrix().tolist() == [[0, 0, 0, 0]]
    assert ann.bond_matrix().shape == (0, 6)
