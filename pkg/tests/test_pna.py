"""Tests for PNA aggregation, layers, batch norm and weight files."""

import json
import math

import numpy as np
import pytest

from ecctopo.exceptions import NonFiniteWeightsError, ShapeMismatchError
from ecctopo.molio import Atom, MolecularGraph, parse_smiles
from ecctopo.pna import (
    N_BLOCKS,
    BatchNormParams,
    PNALayer,
    PNALayerWeights,
    batch_norm_inference,
    degree_scalers,
    load_weights,
    mean_pool,
    pna_aggregate,
    pna_forward,
    pna_stack,
    save_weights,
)


def brute_force_aggregate(H, g, delta):
    """Per-node loop over neighbour lists."""
    n, f = H.shape
    out = np.zeros((n, N_BLOCKS * f))
    for v, nbrs in enumerate(g.adjacency()):
        if not nbrs:
            continue
        rows = H[nbrs]
        mean = rows.mean(axis=0)
        stats = [mean, rows.min(axis=0), rows.max(axis=0),
                 np.sqrt(((rows - mean) ** 2).mean(axis=0))]
        amp = math.log(len(nbrs) + 1) / delta
        out[v] = np.concatenate([s * c for s in stats for c in (1.0, amp, 1.0 / amp)])
    return out


def _layer(f_in, f_out, rng, delta=1.0, batch_norm=None):
    weights = PNALayerWeights(rng.normal(size=(N_BLOCKS * f_in, f_out)),
                              rng.normal(size=f_out), delta)
    return PNALayer(weights, batch_norm)


# ==================== AGGREGATION ====================

def test_isobutane_star():
    g = parse_smiles('CC(C)C')
    H = np.array([[1.0], [2.0], [3.0], [4.0]])
    out = pna_aggregate(H, g, delta=math.log(4.0))
    std = math.sqrt(14.0) / 3.0
    np.testing.assert_allclose(out[1], [8 / 3] * 3 + [1.0] * 3 + [4.0] * 3 + [std] * 3)
    np.testing.assert_allclose(out[0], [2.0, 1.0, 4.0] * 3 + [0.0] * 3)


def test_degree_scalers():
    amp, att = degree_scalers(np.array([1, 3]), math.log(4.0))
    np.testing.assert_allclose(amp, [0.5, 1.0])
    np.testing.assert_allclose(att, [2.0, 1.0])


def test_isolated_atoms_get_zero_rows():
    g = MolecularGraph((Atom(0, 'C'), Atom(1, 'O')), ())
    out = pna_aggregate(np.ones((2, 3)), g, delta=1.0)
    assert out.shape == (2, 36)
    assert not out.any()


def test_single_neighbour():
    g = parse_smiles('CO')
    H = np.array([[1.0, -2.0], [5.0, 7.0]])
    out = pna_aggregate(H, g, delta=1.0).reshape(2, N_BLOCKS, 2)
    s = math.log(2.0)
    np.testing.assert_allclose(out[0, 0], [5.0, 7.0])
    np.testing.assert_allclose(out[0, 1], [5.0 * s, 7.0 * s])
    np.testing.assert_allclose(out[0, 2], [5.0 / s, 7.0 / s])
    np.testing.assert_allclose(out[0, 9:], 0.0)


def test_aggregate_matches_brute_force(rng, make_molecule):
    for _ in range(100):
        g = make_molecule(rng, connected=bool(rng.random() < 0.8))
        H = rng.normal(size=(g.n_atoms, 3))
        delta = float(rng.uniform(0.5, 2.0))
        np.testing.assert_allclose(pna_aggregate(H, g, delta),
                                   brute_force_aggregate(H, g, delta), rtol=1e-12, atol=1e-12)


def test_aggregate_is_exactly_permutation_equivariant(rng, make_molecule, make_permutation):
    for _ in range(50):
        g = make_molecule(rng)
        H = rng.normal(size=(g.n_atoms, 4))
        perm = make_permutation(rng, g.n_atoms)
        H_perm = np.empty_like(H)
        H_perm[perm] = H
        out = pna_aggregate(H, g, 1.3)
        out_perm = pna_aggregate(H_perm, g.relabel(perm), 1.3)
        assert np.array_equal(out_perm[perm], out)


def test_aggregate_errors(benzene):
    with pytest.raises(ShapeMismatchError):
        pna_aggregate(np.ones((5, 2)), benzene, 1.0)
    with pytest.raises(ValueError):
        pna_aggregate(np.ones((6, 2)), benzene, 0.0)
    with pytest.raises(ValueError):
        pna_aggregate(np.full((6, 2), np.nan), benzene, 1.0)


# ==================== LAYERS ====================

def test_selector_weights_pick_blocks(benzene, rng):
    H = rng.normal(size=(6, 2))
    W = PNALayerWeights(np.eye(N_BLOCKS * 2), np.zeros(N_BLOCKS * 2), delta=1.0)
    out = pna_forward(H, benzene, W, activation='identity')
    np.testing.assert_allclose(out, pna_aggregate(H, benzene, 1.0))
    # column 12 of the block layout is the unscaled max of feature 0
    select = np.zeros((N_BLOCKS * 2, 1))
    select[12, 0] = 1.0
    picked = pna_forward(H, benzene, PNALayerWeights(select, [0.5], 1.0), activation='identity')
    expected = [max(H[n, 0] for n in nbrs) + 0.5 for nbrs in benzene.adjacency()]
    np.testing.assert_allclose(picked[:, 0], expected)


def test_relu_activation(benzene):
    H = np.abs(np.random.default_rng(0).normal(size=(6, 1))) + 0.1
    W = PNALayerWeights(-np.eye(N_BLOCKS), np.zeros(N_BLOCKS), delta=1.0)
    assert not pna_forward(H, benzene, W).any()
    with pytest.raises(ValueError):
        pna_forward(H, benzene, W, activation='tanh')


def test_layer_weight_validation():
    with pytest.raises(ShapeMismatchError):
        PNALayerWeights(np.zeros((13, 2)), np.zeros(2), 1.0)
    with pytest.raises(ShapeMismatchError):
        PNALayerWeights(np.zeros((12, 2)), np.zeros(3), 1.0)
    with pytest.raises(NonFiniteWeightsError):
        PNALayerWeights(np.full((12, 2), np.inf), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        PNALayerWeights(np.zeros((12, 2)), np.zeros(2), 0.0)
    W = PNALayerWeights(np.zeros((24, 5)), np.zeros(5), 1.0)
    assert (W.in_features, W.out_features) == (2, 5)


def test_forward_width_mismatch(benzene):
    W = PNALayerWeights(np.zeros((24, 1)), np.zeros(1), 1.0)
    with pytest.raises(ShapeMismatchError):
        pna_forward(np.ones((6, 3)), benzene, W)


# ==================== BATCH NORM AND STACKS ====================

def test_batch_norm_inference():
    params = BatchNormParams(mean=[1.0, 0.0], var=[4.0, 1.0], gamma=[2.0, 1.0],
                             beta=[0.0, 1.0], eps=0.0)
    out = batch_norm_inference([[1.0, 2.0], [5.0, -1.0]], params)
    np.testing.assert_allclose(out, [[0.0, 3.0], [4.0, 0.0]])
    with pytest.raises(ShapeMismatchError):
        batch_norm_inference(np.ones((2, 3)), params)
    with pytest.raises(ShapeMismatchError):
        BatchNormParams([0.0], [1.0, 1.0], [1.0], [0.0])
    with pytest.raises(NonFiniteWeightsError):
        BatchNormParams([np.nan], [1.0], [1.0], [0.0])


def test_mean_pool():
    assert mean_pool([[1.0, 2.0], [3.0, 6.0]]).tolist() == [2.0, 4.0]
    assert mean_pool(np.zeros((0, 3))).tolist() == [0.0, 0.0, 0.0]


def test_stack_with_identity_batch_norm(naphthalene, rng):
    H = rng.normal(size=(10, 4))
    plain = [_layer(4, 8, rng), _layer(8, 3, rng)]
    identity = BatchNormParams(np.zeros(3), np.ones(3), np.ones(3), np.zeros(3), eps=0.0)
    normed = [plain[0], PNALayer(plain[1].weights, identity)]
    nodes, pooled = pna_stack(H, naphthalene, plain)
    assert nodes.shape == (10, 3)
    assert np.all(nodes >= 0.0)
    np.testing.assert_allclose(pooled, nodes.mean(axis=0))
    np.testing.assert_allclose(pna_stack(H, naphthalene, normed)[0], nodes)


def test_stack_matches_layer_by_layer(benzene, rng):
    H = rng.normal(size=(6, 2))
    layers = [_layer(2, 5, rng), _layer(5, 4, rng)]
    expected = pna_forward(pna_forward(H, benzene, layers[0].weights), benzene,
                           layers[1].weights)
    np.testing.assert_allclose(pna_stack(H, benzene, layers)[0], expected)


# ==================== WEIGHT FILES ====================

def test_weight_file_round_trip(tmp_path, rng):
    bn = BatchNormParams(rng.normal(size=3), rng.uniform(0.5, 2.0, size=3),
                         rng.normal(size=3), rng.normal(size=3), eps=1e-3)
    layers = [_layer(2, 4, rng, delta=1.7), _layer(4, 3, rng, batch_norm=bn)]
    path = save_weights(layers, tmp_path / 'w' / 'weights.json')
    loaded = load_weights(path)
    assert len(loaded) == 2
    for a, b in zip(layers, loaded):
        assert np.array_equal(a.weights.weight, b.weights.weight)
        assert np.array_equal(a.weights.bias, b.weights.bias)
        assert a.weights.delta == b.weights.delta
    assert loaded[0].batch_norm is None
    assert np.array_equal(loaded[1].batch_norm.var, bn.var)
    assert loaded[1].batch_norm.eps == 1e-3


def _write(tmp_path, doc):
    path = tmp_path / 'weights.json'
    path.write_text(json.dumps(doc))
    return path


def test_weight_file_bad_shapes(tmp_path):
    short = {'layers': [{'weight': {'shape': [12, 2], 'values': [0.0] * 23},
                         'bias': [0.0, 0.0], 'delta': 1.0}]}
    with pytest.raises(ShapeMismatchError):
        load_weights(_write(tmp_path, short))

    broken_chain = {'layers': [
        {'weight': {'shape': [12, 2], 'values': [0.0] * 24}, 'bias': [0.0, 0.0], 'delta': 1.0},
        {'weight': {'shape': [12, 1], 'values': [0.0] * 12}, 'bias': [0.0], 'delta': 1.0},
    ]}
    with pytest.raises(ShapeMismatchError):
        load_weights(_write(tmp_path, broken_chain))

    no_bias = {'layers': [{'weight': {'shape': [12, 1], 'values': [0.0] * 12}, 'delta': 1.0}]}
    with pytest.raises(ShapeMismatchError):
        load_weights(_write(tmp_path, no_bias))


def test_weight_file_non_finite(tmp_path):
    doc = {'layers': [{'weight': {'shape': [12, 1], 'values': [0.0] * 11 + [float('nan')]},
                       'bias': [0.0], 'delta': 1.0}]}
    path = tmp_path / 'weights.json'
    path.write_text(json.dumps(doc))
    with pytest.raises(NonFiniteWeightsError):
        load_weights(path)
