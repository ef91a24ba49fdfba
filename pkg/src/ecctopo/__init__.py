"""
ecctopo: topological molecular featurization (ECC) and cross-validated
model-comparison statistics.
"""

from .ecc import ECCConfig, ECCVector, degree_histogram, ecc_features, read_features, write_features
from .exceptions import ECCError
from .lifting import CellComplex, LiftConfig, boundary_matrix, lift, validate
from .molio import MolecularGraph, annotate, element_composition, parse_graph_file, parse_smiles
from .spectral import betti_numbers, hodge_laplacian, sym_eigs, top_k_eigs
from .statlab import bootstrap_ci, compare_to_control, holm_adjust, kfold_split, nb_test

__version__ = '0.1.0'

__all__ = [
    'ECCConfig', 'ECCVector', 'degree_histogram', 'ecc_features', 'read_features',
    'write_features', 'ECCError', 'CellComplex', 'LiftConfig', 'boundary_matrix', 'lift',
    'validate', 'MolecularGraph', 'annotate', 'element_composition', 'parse_graph_file',
    'parse_smiles', 'betti_numbers', 'hodge_laplacian', 'sym_eigs', 'top_k_eigs',
    'bootstrap_ci', 'compare_to_control', 'holm_adjust', 'kfold_split', 'nb_test',
]
