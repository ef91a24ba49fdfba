"""
ECC feature assembly, degree histograms and the feature file format.

Layout of an ECC vector (defaults give 71 used entries padded to 96):

==================  ===================  =================================
segment             length               content
==================  ===================  =================================
betti               4                    Betti numbers b0..b3
laplacian_0..3      top_k each           largest Hodge Laplacian eigenvalues
chains_1, chains_2  top_k each           spectral chains of dims 1 and 2
centrality_0..2     3 each               (mean, std, max) degree centrality
apsp                3                    mean, diameter, Wiener / pairs
degree_histogram    max_degree + 1       atoms per degree, last bin clamps
==================  ===================  =================================

Binary feature file (little-endian)::

    b"ECC1" | u64 record count | u64 pad_to |
    per record: u32 id length | utf-8 id | pad_to x f64
"""

import io
import logging
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .exceptions import FormatVersionMismatchError, LengthMismatchError, PadOverflowError
from .lifting import LiftConfig, canonical_relabel, lift
from .molio import MolecularGraph
from .spectral import (
    apsp,
    betti_numbers,
    degree_centrality,
    hodge_laplacian,
    sample_chain_matrix,
    spectral_chains,
    top_k_eigs,
)
from .utils import save_json

logger = logging.getLogger(__name__)

MAGIC = b'ECC1'
CHAIN_DIMS = (1, 2)
MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class ECCConfig:
    """Budgets and seeds for ECC featurization.

    Attributes:
        top_k: Eigenvalues kept per Laplacian and per chain matrix.
        chain_samples: Random-walk rows per chain matrix.
        chain_walk_len: Cells visited per walk, start included.
        seed: Seed for chain sampling.
        pad_to: Total vector length.
        lift: Lifting options.
        max_degree: Last degree-histogram bin.
        canonical: Relabel atoms canonically before lifting so the full
            vector does not depend on the input atom order.
    """

    top_k: int = 8
    chain_samples: int = 64
    chain_walk_len: int = 8
    seed: int = 42
    pad_to: int = 96
    lift: LiftConfig = field(default_factory=LiftConfig)
    max_degree: int = 6
    canonical: bool = True

    def __post_init__(self):
        for name in ('top_k', 'chain_samples', 'chain_walk_len', 'pad_to', 'max_degree'):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.pad_to < self.assembled_length:
            raise PadOverflowError(
                f"pad_to={self.pad_to} is smaller than the assembled length "
                f"{self.assembled_length}"
            )

    @property
    def assembled_length(self) -> int:
        return sum(length for _, length in segment_lengths(self.top_k, self.max_degree))

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'ECCConfig':
        data = dict(data)
        if isinstance(data.get('lift'), dict):
            data['lift'] = LiftConfig.from_dict(data['lift'])
        return cls(**data)


@dataclass(frozen=True)
class Segment:
    name: str
    offset: int
    length: int


def segment_lengths(top_k: int, max_degree: int) -> List[Tuple[str, int]]:
    parts = [('betti', 4)]
    parts += [(f'laplacian_{k}', top_k) for k in range(4)]
    parts += [(f'chains_{k}', top_k) for k in CHAIN_DIMS]
    parts += [(f'centrality_{k}', 3) for k in range(3)]
    parts += [('apsp', 3), ('degree_histogram', max_degree + 1)]
    return parts


def layout_for(cfg: ECCConfig) -> Tuple[Segment, ...]:
    segments, offset = [], 0
    for name, length in segment_lengths(cfg.top_k, cfg.max_degree):
        segments.append(Segment(name, offset, length))
        offset += length
    return tuple(segments)


@dataclass(frozen=True, eq=False)
class ECCVector:
    """Fixed-length feature vector with its segment layout."""

    values: np.ndarray
    layout: Tuple[Segment, ...] = ()

    @property
    def pad_to(self) -> int:
        return int(self.values.shape[0])

    @property
    def assembled_length(self) -> int:
        return sum(s.length for s in self.layout)

    def segment(self, name: str) -> np.ndarray:
        for seg in self.layout:
            if seg.name == name:
                return self.values[seg.offset:seg.offset + seg.length]
        raise KeyError(name)

    def to_bytes(self) -> bytes:
        return np.asarray(self.values, dtype='<f8').tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ECCVector):
            return NotImplemented
        return self.layout == other.layout and self.to_bytes() == other.to_bytes()


@dataclass(frozen=True)
class DegreeHistogram:
    counts: Tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


def degree_histogram(g: MolecularGraph, max_degree: int) -> DegreeHistogram:
    """Atoms per degree; degrees above ``max_degree`` land in the last bin."""
    if max_degree < 1:
        raise ValueError(f"max_degree must be >= 1, got {max_degree}")
    degrees = np.minimum(g.degrees(), max_degree)
    counts = np.bincount(degrees, minlength=max_degree + 1)
    return DegreeHistogram(tuple(int(c) for c in counts))


def ecc_features(g: MolecularGraph, cfg: ECCConfig = None) -> ECCVector:
    """Assemble the ECC vector of a molecule.

    Args:
        g: Molecular graph.
        cfg: Budgets and seeds; defaults to ``ECCConfig()``.

    Returns:
        Vector of length ``cfg.pad_to``, zero past the assembled segments.

    Raises:
        PadOverflowError: If the segments do not fit into ``pad_to``.
    """
    cfg = cfg or ECCConfig()
    if cfg.canonical:
        g = canonical_relabel(g)
    X = lift(g, cfg.lift)

    parts: Dict[str, Sequence[float]] = {'betti': betti_numbers(X)}
    for k in range(4):
        parts[f'laplacian_{k}'] = top_k_eigs(hodge_laplacian(X, k), cfg.top_k).eigenvalues
    for k in CHAIN_DIMS:
        if X.n_cells(k) == 0:
            parts[f'chains_{k}'] = (0.0,) * cfg.top_k
            continue
        C = sample_chain_matrix(X, k, cfg.chain_samples, cfg.chain_walk_len, cfg.seed)
        parts[f'chains_{k}'] = spectral_chains(C, cfg.top_k).eigenvalues
    for k in range(3):
        parts[f'centrality_{k}'] = degree_centrality(X, k).summary()

    paths = apsp(g)
    n_pairs = g.n_atoms * (g.n_atoms - 1) / 2
    parts['apsp'] = (paths.mean, paths.diameter, paths.wiener / n_pairs if n_pairs else 0.0)
    parts['degree_histogram'] = degree_histogram(g, cfg.max_degree).counts

    layout = layout_for(cfg)
    values = np.zeros(cfg.pad_to)
    for seg in layout:
        chunk = np.asarray(parts[seg.name], dtype=float)
        if chunk.shape != (seg.length,):
            raise PadOverflowError(f"segment {seg.name} has {chunk.size} values, "
                                   f"expected {seg.length}")
        values[seg.offset:seg.offset + seg.length] = chunk
    return ECCVector(values, layout)


# ==================== FEATURE FILES ====================

def _values_of(vec) -> np.ndarray:
    return np.asarray(vec.values if isinstance(vec, ECCVector) else vec, dtype='<f8')


def write_features(batch: Sequence[Tuple[str, ECCVector]], path: Path,
                   pad_to: int = None) -> Path:
    """Write ``(molecule id, vector)`` records in the binary feature format.

    ``pad_to`` is only needed for an empty batch; otherwise it is taken from
    the vectors, which must all share it.

    Raises:
        LengthMismatchError: If vector lengths differ.
    """
    arrays = [(mol_id, _values_of(vec)) for mol_id, vec in batch]
    lengths = {arr.shape[0] for _, arr in arrays}
    if pad_to is not None:
        lengths.add(pad_to)
    if len(lengths) > 1:
        raise LengthMismatchError(f"records have differing lengths {sorted(lengths)}")
    width = lengths.pop() if lengths else 0

    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack('<QQ', len(arrays), width))
    for mol_id, arr in arrays:
        encoded = mol_id.encode('utf-8')
        buf.write(struct.pack('<I', len(encoded)))
        buf.write(encoded)
        buf.write(arr.tobytes())

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(buf.getvalue())
    logger.debug("wrote %d records (pad_to=%d) to %s", len(arrays), width, path)
    return path


def read_features(path: Path) -> List[Tuple[str, np.ndarray]]:
    """Read records written by ``write_features``.

    Raises:
        FormatVersionMismatchError: On a wrong magic header.
        LengthMismatchError: On truncated or trailing data.
    """
    with open(path, 'rb') as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise FormatVersionMismatchError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 20:
        raise LengthMismatchError(f"{path}: truncated header")
    count, width = struct.unpack_from('<QQ', data, 4)

    records = []
    offset = 20
    for i in range(count):
        if offset + 4 > len(data):
            raise LengthMismatchError(f"{path}: record {i} is truncated")
        (id_len,) = struct.unpack_from('<I', data, offset)
        offset += 4
        end = offset + id_len + 8 * width
        if end > len(data):
            raise LengthMismatchError(f"{path}: record {i} is truncated")
        mol_id = data[offset:offset + id_len].decode('utf-8')
        values = np.frombuffer(data, dtype='<f8', count=width, offset=offset + id_len).copy()
        records.append((mol_id, values))
        offset = end
    if offset != len(data):
        raise LengthMismatchError(f"{path}: {len(data) - offset} trailing bytes after "
                                  f"{count} records")
    return records


def export_features_json(batch: Sequence[Tuple[str, ECCVector]], path: Path,
                         cfg: ECCConfig = None) -> Path:
    """Human-readable mirror of a feature file."""
    layout = layout_for(cfg) if cfg is not None else ()
    doc = {
        'format': MAGIC.decode('ascii'),
        'pad_to': cfg.pad_to if cfg is not None else (
            _values_of(batch[0][1]).shape[0] if batch else 0),
        'layout': [asdict(s) for s in layout],
        'records': [{'id': mol_id, 'values': _values_of(vec).tolist()} for mol_id, vec in batch],
    }
    return save_json(doc, path)


def features_to_frame(batch: Sequence[Tuple[str, ECCVector]],
                      layout: Sequence[Segment] = ()) -> pd.DataFrame:
    """One row per molecule, columns named ``<segment>_<i>`` when a layout is given."""
    if not batch:
        return pd.DataFrame()
    width = _values_of(batch[0][1]).shape[0]
    if layout:
        columns = [f"{s.name}_{i}" for s in layout for i in range(s.length)]
        columns += [f"pad_{i}" for i in range(width - len(columns))]
    else:
        columns = [f"f{i}" for i in range(width)]
    return pd.DataFrame(
        [_values_of(vec) for _, vec in batch],
        index=pd.Index([mol_id for mol_id, _ in batch], name='id'),
        columns=columns,
    )
