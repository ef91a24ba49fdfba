#!/usr/bin/env python3
"""
Command-line entry point.

Usage:
    python -m ecctopo featurize --input data/molecules.smi --out results/features.ecc
    python -m ecctopo featurize --input graphs/ --kind graph-files --out f.ecc --jobs 4
    python -m ecctopo stats --input data/fold_losses.csv --control ECC --out results/stats
    python -m ecctopo inspect "c1ccccc1"

Exit codes: 0 success, 2 unreadable or malformed input, 3 unwritable
output, 4 unknown control model.
"""

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .ecc import (
    ECCConfig,
    ECCVector,
    ecc_features,
    export_features_json,
    layout_for,
    write_features,
)
from .exceptions import ECCError, UnknownControlError
from .lifting import LiftConfig, lift, ring_cycles, validate
from .molio import parse_graph_file, parse_smiles, read_smiles_file
from .spectral import (
    betti_numbers,
    euler_characteristic,
    hodge_laplacian,
    kernel_dimensions,
    top_k_eigs,
    torsion_diagnostics,
)
from .statlab import (
    compare_to_control,
    comparisons_frame,
    dataset_verdict,
    read_fold_losses,
    subsample_indices,
    write_comparisons,
)
from .utils import RunLogger, generate_run_report, save_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_BAD_OUTPUT = 3
EXIT_UNKNOWN_CONTROL = 4

INPUT_KINDS = ('smiles-list', 'graph-files')


@dataclass(frozen=True)
class RunConfig:
    """One featurization run.

    Attributes:
        inputs: SMILES list files, or graph files / directories of ``*.json``.
        kind: ``smiles-list`` or ``graph-files``.
        out: Binary feature file; ``<out>.json`` and ``<out>.config.json``
            are written next to it.
        ecc: Featurization budgets and seeds.
        jobs: Worker processes.
        verbosity: 0 warnings, 1 info, 2 debug.
        max_molecules: Keep a seeded subsample of at most this many molecules.
    """

    inputs: Tuple[Path, ...]
    out: Path
    kind: str = 'smiles-list'
    ecc: ECCConfig = field(default_factory=ECCConfig)
    jobs: int = 1
    verbosity: int = 0
    max_molecules: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'inputs', tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, 'out', Path(self.out))
        if self.kind not in INPUT_KINDS:
            raise ValueError(f"kind must be one of {INPUT_KINDS}, got {self.kind!r}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if self.max_molecules is not None and self.max_molecules < 1:
            raise ValueError(f"max_molecules must be >= 1, got {self.max_molecules}")

    def missing_inputs(self) -> List[Path]:
        return [p for p in self.inputs if not p.exists()]


@dataclass(frozen=True)
class MoleculeTask:
    mol_id: str
    source: str
    payload: str
    kind: str


def _featurize_task(args: Tuple[MoleculeTask, ECCConfig]) -> Tuple[Optional[np.ndarray], str]:
    """Worker: parse and featurize one molecule; domain errors come back as text."""
    task, cfg = args
    try:
        g = parse_smiles(task.payload) if task.kind == 'smiles-list' \
            else parse_graph_file(task.payload)
        return ecc_features(g, cfg).values, ''
    except ECCError as e:
        return None, f"{type(e).__name__}: {e}"


def load_tasks(cfg: RunConfig) -> List[MoleculeTask]:
    """Collect molecules in input order. Raises OSError on unreadable input."""
    tasks = []
    for path in cfg.inputs:
        if cfg.kind == 'smiles-list':
            for line_no, mol_id, smiles in read_smiles_file(path):
                tasks.append(MoleculeTask(mol_id, f"{path}:{line_no}", smiles, cfg.kind))
        else:
            files = sorted(path.glob('*.json')) if path.is_dir() else [path]
            for file in files:
                tasks.append(MoleculeTask(file.stem, str(file), file.read_text(), cfg.kind))
    return tasks


def featurize_tasks(tasks: Sequence[MoleculeTask], ecc_cfg: ECCConfig,
                    jobs: int = 1) -> List[Tuple[Optional[np.ndarray], str]]:
    """Featurize in input order, fanning out over ``jobs`` processes."""
    work = [(task, ecc_cfg) for task in tasks]
    progress = dict(total=len(work), desc='featurize', unit='mol', disable=None)
    if jobs == 1 or len(work) < 2:
        return [_featurize_task(w) for w in tqdm(work, **progress)]
    chunksize = max(1, len(work) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(tqdm(pool.map(_featurize_task, work, chunksize=chunksize), **progress))


def cmd_featurize(cfg: RunConfig, log: Optional[RunLogger] = None) -> int:
    """Featurize every parseable molecule; failures are logged and skipped."""
    start = time.time()
    if log is None:
        try:
            log = RunLogger(f"{cfg.out.name}_featurize", cfg.out.parent,
                            echo=cfg.verbosity > 0)
        except OSError as e:
            print(f"❌ cannot write to {cfg.out.parent}: {e}", file=sys.stderr)
            return EXIT_BAD_OUTPUT
    log.section("FEATURIZE")

    missing = cfg.missing_inputs()
    if missing:
        log.error(f"input not found: {', '.join(str(p) for p in missing)}")
        return EXIT_BAD_INPUT
    try:
        tasks = load_tasks(cfg)
    except (OSError, UnicodeDecodeError) as e:
        log.error(f"cannot read input: {e}")
        return EXIT_BAD_INPUT
    if cfg.max_molecules is not None and len(tasks) > cfg.max_molecules:
        keep = subsample_indices(len(tasks), cfg.max_molecules, cfg.ecc.seed)
        log.info(f"subsampled {len(keep)} of {len(tasks)} molecules")
        tasks = [tasks[i] for i in keep]

    results = featurize_tasks(tasks, cfg.ecc, cfg.jobs)
    layout = layout_for(cfg.ecc)
    records, failures = [], []
    for task, (values, error) in zip(tasks, results):
        if values is None:
            failures.append({'id': task.mol_id, 'source': task.source,
                             'status': 'error', 'error_message': error})
            log.warning(f"skipped {task.source} ({task.mol_id}): {error}")
        else:
            records.append((task.mol_id, ECCVector(values, layout)))

    try:
        write_features(records, cfg.out, pad_to=cfg.ecc.pad_to)
        export_features_json(records, Path(f"{cfg.out}.json"), cfg.ecc)
        save_json(cfg.ecc.to_dict(), Path(f"{cfg.out}.config.json"))
    except OSError as e:
        log.error(f"cannot write output {cfg.out}: {e}")
        return EXIT_BAD_OUTPUT

    report = {
        'parsed': len(records),
        'failed': len(failures),
        'written': len(records),
        'wall_time_s': round(time.time() - start, 3),
        'failures': failures,
    }
    log.metric('parsed', report['parsed'])
    log.metric('failed', report['failed'])
    log.metric('written', report['written'])
    log.metric('wall time', report['wall_time_s'], 's')
    generate_run_report(f"{cfg.out.name}_featurize", report, cfg.out.parent)
    log.finalize()
    return EXIT_OK


def cmd_stats(fold_loss_path: Path, control: str, alpha: float, out_dir: Path,
              echo: bool = True) -> int:
    """Write one comparison table per loss family plus ``summary.json``."""
    out_dir = Path(out_dir)
    try:
        table = read_fold_losses(fold_loss_path)
        results = compare_to_control(table, control, alpha)
    except UnknownControlError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_UNKNOWN_CONTROL
    except (OSError, ValueError) as e:
        print(f"❌ cannot use fold losses {fold_loss_path}: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT

    verdict = dataset_verdict(results['mae'], results['rmse'], alpha)
    summary = {
        'control': control,
        'alpha': alpha,
        'folds': table.K,
        'competitors': len(table.models) - 1,
        'verdict': verdict,
        'families': {
            kind: {'n_significant': sum(bool(c.reject) for c in family),
                   'min_p_holm': min(c.p_holm for c in family)}
            for kind, family in results.items()
        },
    }
    try:
        write_comparisons(results, out_dir)
        save_json(summary, out_dir / 'summary.json')
    except OSError as e:
        print(f"❌ cannot write to {out_dir}: {e}", file=sys.stderr)
        return EXIT_BAD_OUTPUT

    if echo:
        for kind, family in results.items():
            print(f"\n📊 {kind.upper()}: NB-corrected one-sided tests vs {control}")
            print(comparisons_frame(family).to_string(index=False, float_format='%.4g'))
        print(f"\n🎯 Verdict: {verdict}")
    return EXIT_OK


def cmd_inspect(molecule: str, cfg: ECCConfig, kind: str = 'smiles') -> int:
    """Print cell counts, Betti numbers, spectra and the feature layout."""
    try:
        g = parse_smiles(molecule) if kind == 'smiles' else parse_graph_file(
            Path(molecule).read_text())
    except (ECCError, OSError) as e:
        print(f"❌ cannot parse molecule: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT

    X = lift(g, cfg.lift)
    report = validate(X)
    print(f"atoms: {g.n_atoms}  bonds: {g.n_bonds}  rings: {len(ring_cycles(g, cfg.lift))}")
    print(f"cell counts: {X.counts()}")
    print(f"valid chain complex: {report.ok}")
    for v in report.violations:
        print(f"   {v.check} at dim {v.dim}, cell {v.cell}: {v.message}")
    if not report.ok:
        return EXIT_BAD_INPUT
    print(f"betti: {betti_numbers(X)}")
    print(f"euler characteristic: {euler_characteristic(X)}")
    print(f"laplacian kernel dims: {kernel_dimensions(X)}")
    print(f"torsion-free (Q vs GF(2) ranks agree): "
          f"{all(d['agree'] for d in torsion_diagnostics(X))}")
    for k in range(4):
        spectrum = top_k_eigs(hodge_laplacian(X, k), cfg.top_k).eigenvalues
        print(f"L{k} top-{cfg.top_k}: " + ' '.join(f"{v:.4f}" for v in spectrum))
    print("layout:")
    for seg in layout_for(cfg):
        print(f"   {seg.name:<18} offset {seg.offset:>3}  length {seg.length}")
    print(f"   {'padding':<18} offset {cfg.assembled_length:>3}  "
          f"length {cfg.pad_to - cfg.assembled_length}")
    return EXIT_OK


# ==================== ARGUMENTS ====================

def _add_ecc_flags(parser: argparse.ArgumentParser):
    defaults = ECCConfig()
    parser.add_argument('--top-k', type=int, default=defaults.top_k,
                        help=f'Eigenvalues per spectrum (default: {defaults.top_k})')
    parser.add_argument('--chain-samples', type=int, default=defaults.chain_samples,
                        help=f'Random walks per chain matrix (default: {defaults.chain_samples})')
    parser.add_argument('--chain-walk-len', type=int, default=defaults.chain_walk_len,
                        help=f'Cells per walk (default: {defaults.chain_walk_len})')
    parser.add_argument('--seed', type=int, default=defaults.seed,
                        help=f'Chain-sampling seed (default: {defaults.seed})')
    parser.add_argument('--pad-to', type=int, default=defaults.pad_to,
                        help=f'Feature vector length (default: {defaults.pad_to})')
    parser.add_argument('--khop', type=int, default=defaults.lift.khop,
                        help='Hop distance for k-hop 3-cells, < 2 disables (default: 0)')
    parser.add_argument('--ring-max', type=int, default=defaults.lift.ring_size_max,
                        help=f'Largest ring size (default: {defaults.lift.ring_size_max})')
    parser.add_argument('--no-rings', action='store_true', help='Do not attach ring 3-cells')
    parser.add_argument('--max-degree', type=int, default=defaults.max_degree,
                        help=f'Last degree-histogram bin (default: {defaults.max_degree})')
    parser.add_argument('--no-canonical', action='store_true',
                        help='Skip canonical atom relabeling')


def ecc_config_from_args(args: argparse.Namespace) -> ECCConfig:
    return ECCConfig(
        top_k=args.top_k,
        chain_samples=args.chain_samples,
        chain_walk_len=args.chain_walk_len,
        seed=args.seed,
        pad_to=args.pad_to,
        lift=LiftConfig(include_rings=not args.no_rings, khop=args.khop,
                        ring_size_max=args.ring_max),
        max_degree=args.max_degree,
        canonical=not args.no_canonical,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='ecctopo',
        description='Topological molecular featurization and comparison statistics')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='More logging (-v info, -vv debug)')
    sub = parser.add_subparsers(dest='command', required=True)

    feat = sub.add_parser('featurize', help='Write ECC vectors for a molecule corpus')
    feat.add_argument('--input', type=Path, nargs='+', required=True,
                      help='SMILES list file(s) or graph file(s)/directories')
    feat.add_argument('--kind', choices=INPUT_KINDS, default='smiles-list',
                      help='Input format (default: smiles-list)')
    feat.add_argument('--out', type=Path, required=True, help='Feature file to write')
    feat.add_argument('--jobs', type=int, default=1, help='Worker processes (default: 1)')
    feat.add_argument('--max-molecules', type=int, default=None,
                      help='Featurize a seeded subsample of at most N molecules')
    _add_ecc_flags(feat)

    stats = sub.add_parser('stats', help='NB-corrected tests of competitors vs a control')
    stats.add_argument('--input', type=Path, required=True,
                       help='Fold-loss file with header model,fold,mae,rmse')
    stats.add_argument('--control', required=True, help='Control model name')
    stats.add_argument('--alpha', type=float, default=0.05, help='Level (default: 0.05)')
    stats.add_argument('--out', type=Path, required=True, help='Output directory')

    inspect = sub.add_parser('inspect', help='Dump the lifted complex of one molecule')
    inspect.add_argument('molecule', help='SMILES string, or a graph file with --kind graph-file')
    inspect.add_argument('--kind', choices=('smiles', 'graph-file'), default='smiles')
    _add_ecc_flags(inspect)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    if args.command == 'stats':
        return cmd_stats(args.input, args.control, args.alpha, args.out)

    try:
        ecc_cfg = ecc_config_from_args(args)
        if args.command == 'inspect':
            return cmd_inspect(args.molecule, ecc_cfg, args.kind)
        run = RunConfig(inputs=tuple(args.input), out=args.out, kind=args.kind, ecc=ecc_cfg,
                        jobs=args.jobs, verbosity=args.verbose,
                        max_molecules=args.max_molecules)
    except ValueError as e:
        print(f"❌ invalid configuration: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return cmd_featurize(run)


if __name__ == '__main__':
    sys.exit(main())
