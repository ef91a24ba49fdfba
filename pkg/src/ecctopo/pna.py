"""
Forward-only principal neighbourhood aggregation (PNA) over molecular graphs.

Each node aggregates its neighbours' rows with mean, min, max and
population std; every aggregate is emitted three times, scaled by
``1``, ``S(d)`` and ``1 / S(d)`` where ``S(d) = log(d + 1) / delta`` and ``d``
is the node degree. Block order::

    mean*[1, S, 1/S] | min*[1, S, 1/S] | max*[1, S, 1/S] | std*[1, S, 1/S]

Weights are supplied from outside (no training here); a layer is
``activation(aggregate @ W + b)``, optionally followed by inference-mode
batch norm in a stack.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import NonFiniteWeightsError, ShapeMismatchError
from .molio import MolecularGraph

logger = logging.getLogger(__name__)

AGGREGATORS = ('mean', 'min', 'max', 'std')
SCALERS = ('identity', 'amplification', 'attenuation')
N_BLOCKS = len(AGGREGATORS) * len(SCALERS)
ACTIVATIONS = ('relu', 'identity')


@dataclass(frozen=True, eq=False)
class PNALayerWeights:
    """Linear map ``(12 f) -> f_out`` with bias and the degree normalizer delta."""

    weight: np.ndarray
    bias: np.ndarray
    delta: float

    def __post_init__(self):
        weight = np.asarray(self.weight, dtype=float)
        bias = np.asarray(self.bias, dtype=float).reshape(-1)
        if weight.ndim != 2 or weight.shape[0] % N_BLOCKS:
            raise ShapeMismatchError(
                f"weight must be (12*f, f_out), got shape {weight.shape}")
        if bias.shape[0] != weight.shape[1]:
            raise ShapeMismatchError(
                f"bias has length {bias.shape[0]}, weight has {weight.shape[1]} outputs")
        if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias))):
            raise NonFiniteWeightsError("weight or bias contains NaN/inf")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be a positive finite number, got {self.delta}")
        object.__setattr__(self, 'weight', weight)
        object.__setattr__(self, 'bias', bias)
        object.__setattr__(self, 'delta', float(self.delta))

    @property
    def in_features(self) -> int:
        return self.weight.shape[0] // N_BLOCKS

    @property
    def out_features(self) -> int:
        return self.weight.shape[1]


@dataclass(frozen=True, eq=False)
class BatchNormParams:
    mean: np.ndarray
    var: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    eps: float = 1e-5

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, k), dtype=float).reshape(-1)
                  for k in ('mean', 'var', 'gamma', 'beta')]
        if len({a.shape[0] for a in arrays}) != 1:
            raise ShapeMismatchError("batch-norm vectors differ in length")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise NonFiniteWeightsError("batch-norm parameters contain NaN/inf")
        for key, arr in zip(('mean', 'var', 'gamma', 'beta'), arrays):
            object.__setattr__(self, key, arr)


@dataclass(frozen=True, eq=False)
class PNALayer:
    weights: PNALayerWeights
    batch_norm: Optional[BatchNormParams] = None


def _check_features(H, g: MolecularGraph) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != g.n_atoms:
        raise ShapeMismatchError(
            f"feature matrix of shape {H.shape} does not match {g.n_atoms} atoms")
    if not np.all(np.isfinite(H)):
        raise ValueError("node features must be finite")
    return H


def degree_scalers(degrees: np.ndarray, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Amplification ``log(d+1)/delta`` and attenuation ``delta/log(d+1)``, for d >= 1."""
    log_d = np.log(np.asarray(degrees, dtype=float) + 1.0)
    return log_d / delta, delta / log_d


def pna_aggregate(H, g: MolecularGraph, delta: float) -> np.ndarray:
    """Multi-aggregator, degree-scaled neighbourhood aggregation.

    Args:
        H: ``n_atoms x f`` node features.
        g: Molecular graph supplying the neighbourhoods.
        delta: Average log-degree normalizer, > 0.

    Returns:
        ``n_atoms x 12 f`` matrix; rows of isolated atoms are zero.

    Raises:
        ShapeMismatchError: If ``H`` does not have one row per atom.
    """
    H = _check_features(H, g)
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    n, f = H.shape
    out = np.zeros((n, N_BLOCKS * f))
    if g.n_bonds == 0 or f == 0:
        return out

    ends = np.array([bond.endpoints for bond in g.bonds], dtype=np.int64)
    src = np.concatenate([ends[:, 0], ends[:, 1]])
    tgt = np.concatenate([ends[:, 1], ends[:, 0]])
    deg = np.bincount(tgt, minlength=n)
    nodes = np.nonzero(deg)[0]
    order = np.argsort(tgt, kind='stable')
    tgt_sorted = tgt[order]
    messages = H[src[order]]
    # sort each column within its node segment so sums do not depend on atom order
    for j in range(f):
        messages[:, j] = messages[np.lexsort((messages[:, j], tgt_sorted)), j]

    starts = np.concatenate([[0], np.cumsum(deg)[:-1]])[nodes]
    counts = deg[nodes][:, None].astype(float)
    mean = np.add.reduceat(messages, starts, axis=0) / counts
    low = np.minimum.reduceat(messages, starts, axis=0)
    high = np.maximum.reduceat(messages, starts, axis=0)
    centered = messages - np.repeat(mean, deg[nodes], axis=0)
    std = np.sqrt(np.add.reduceat(centered * centered, starts, axis=0) / counts)

    amplify, attenuate = degree_scalers(deg[nodes], delta)
    blocks = []
    for agg in (mean, low, high, std):
        blocks += [agg, agg * amplify[:, None], agg * attenuate[:, None]]
    out[nodes] = np.hstack(blocks)
    return out


def _activate(Z: np.ndarray, activation: str) -> np.ndarray:
    if activation == 'relu':
        return np.maximum(Z, 0.0)
    if activation == 'identity':
        return Z
    raise ValueError(f"unknown activation {activation!r}; choose from {ACTIVATIONS}")


def pna_forward(H, g: MolecularGraph, W: PNALayerWeights,
                activation: str = 'relu') -> np.ndarray:
    """One PNA layer: ``activation(pna_aggregate(H) @ W.weight + W.bias)``.

    Raises:
        ShapeMismatchError: If the feature width does not match the weights.
    """
    H = _check_features(H, g)
    if H.shape[1] != W.in_features:
        raise ShapeMismatchError(
            f"features have width {H.shape[1]}, weights expect {W.in_features}")
    return _activate(pna_aggregate(H, g, W.delta) @ W.weight + W.bias, activation)


def batch_norm_inference(X, params: BatchNormParams) -> np.ndarray:
    """``(x - mean) / sqrt(var + eps) * gamma + beta`` with frozen statistics."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.mean.shape[0]:
        raise ShapeMismatchError(
            f"input of shape {X.shape} does not match {params.mean.shape[0]} channels")
    return (X - params.mean) / np.sqrt(params.var + params.eps) * params.gamma + params.beta


def mean_pool(H) -> np.ndarray:
    """Graph readout: column means (zeros for a graph without atoms)."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape[0] == 0:
        return np.zeros(H.shape[1])
    return H.mean(axis=0)


def pna_stack(H, g: MolecularGraph, layers: Sequence[PNALayer],
              activation: str = 'relu') -> Tuple[np.ndarray, np.ndarray]:
    """Run layers in order (linear, optional batch norm, activation).

    Returns:
        ``(node features, mean-pooled graph vector)``.
    """
    out = _check_features(H, g)
    for i, layer in enumerate(layers):
        out = pna_forward(out, g, layer.weights, activation='identity')
        if layer.batch_norm is not None:
            out = batch_norm_inference(out, layer.batch_norm)
        out = _activate(out, activation)
        logger.debug("PNA layer %d -> width %d", i, out.shape[1])
    return out, mean_pool(out)


# ==================== WEIGHT FILES ====================

def _matrix(record: dict, where: str) -> np.ndarray:
    try:
        rows, cols = (int(x) for x in record['shape'])
        values = np.asarray(record['values'], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise ShapeMismatchError(f"{where}: needs 'shape' [rows, cols] and 'values'") from e
    if values.ndim != 1 or values.shape[0] != rows * cols:
        raise ShapeMismatchError(
            f"{where}: {values.size} values do not fill shape ({rows}, {cols})")
    return values.reshape(rows, cols)


def _vector(record: dict, key: str, where: str) -> np.ndarray:
    if key not in record:
        raise ShapeMismatchError(f"{where}: missing '{key}'")
    arr = np.asarray(record[key], dtype=float)
    if arr.ndim != 1:
        raise ShapeMismatchError(f"{where}.{key}: expected a flat list")
    return arr


def load_weights(path: Path) -> List[PNALayer]:
    """Load layers from a JSON weight file.

    Format::

        {"layers": [{"weight": {"shape": [12*f, f_out], "values": [...row-major...]},
                     "bias": [...], "delta": 1.0,
                     "batch_norm": {"mean": [...], "var": [...],
                                    "gamma": [...], "beta": [...], "eps": 1e-5}}]}

    Consecutive layers must chain (``f_out`` of one is ``f`` of the next).
    """
    with open(path, 'r') as f:
        doc = json.load(f)
    layers = []
    for i, rec in enumerate(doc.get('layers', [])):
        where = f"layers[{i}]"
        weights = PNALayerWeights(
            weight=_matrix(rec.get('weight', {}), f"{where}.weight"),
            bias=_vector(rec, 'bias', where),
            delta=float(rec.get('delta', 0.0)),
        )
        bn = None
        if rec.get('batch_norm') is not None:
            bn_rec = rec['batch_norm']
            bn = BatchNormParams(*(_vector(bn_rec, k, f"{where}.batch_norm")
                                   for k in ('mean', 'var', 'gamma', 'beta')),
                                 eps=float(bn_rec.get('eps', 1e-5)))
            if bn.mean.shape[0] != weights.out_features:
                raise ShapeMismatchError(f"{where}.batch_norm: width does not match layer")
        if layers and layers[-1].weights.out_features != weights.in_features:
            raise ShapeMismatchError(f"{where}: input width {weights.in_features} does not "
                                     f"follow output width {layers[-1].weights.out_features}")
        layers.append(PNALayer(weights, bn))
    logger.debug("loaded %d PNA layers from %s", len(layers), path)
    return layers


def save_weights(layers: Sequence[PNALayer], path: Path) -> Path:
    doc = {'layers': []}
    for layer in layers:
        w = layer.weights
        rec = {
            'weight': {'shape': list(w.weight.shape), 'values': w.weight.reshape(-1).tolist()},
            'bias': w.bias.tolist(),
            'delta': w.delta,
        }
        if layer.batch_norm is not None:
            bn = layer.batch_norm
            rec['batch_norm'] = {'mean': bn.mean.tolist(), 'var': bn.var.tolist(),
                                 'gamma': bn.gamma.tolist(), 'beta': bn.beta.tolist(),
                                 'eps': bn.eps}
        doc['layers'].append(rec)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(doc, f, indent=2)
    return path
