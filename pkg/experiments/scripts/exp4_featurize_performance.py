#!/usr/bin/env python3
"""
Experiment 4: Featurization throughput

Featurizes the bundled SMILES corpus (repeated to the requested size) with
1..N worker processes and records wall time and molecules per second.
Every parallel run must return exactly the serial vectors.

Usage:
    python exp4_featurize_performance.py --n-molecules 2000 --jobs 1 2 4
    python exp4_featurize_performance.py --quick
"""

import argparse
import time
from typing import Dict, List

import numpy as np
import pandas as pd

from utils import RESULTS_DIR, ROOT

from ecctopo.cli import RunConfig, featurize_tasks, load_tasks
from ecctopo.ecc import ECCConfig
from ecctopo.utils import RunLogger, generate_run_report, save_csv, save_json, summary_stats


class FeaturizeBenchmark:
    """Serial against process-pool featurization."""

    def __init__(self, n_molecules: int = 2000, jobs: List[int] = (1, 2, 4),
                 n_repeats: int = 3):
        self.n_molecules = n_molecules
        self.jobs = list(jobs)
        self.n_repeats = n_repeats
        self.output_dir = RESULTS_DIR / 'exp4_featurize_performance'
        self.log = RunLogger('exp4_featurize_performance', self.output_dir)

    def load(self):
        corpus = ROOT / 'data' / 'molecules.smi'
        tasks = load_tasks(RunConfig(inputs=(corpus,), out=self.output_dir / 'unused.ecc'))
        reps = -(-self.n_molecules // len(tasks))
        return (tasks * reps)[:self.n_molecules]

    def run(self) -> Dict:
        self.log.section(f"EXPERIMENT 4: FEATURIZE THROUGHPUT ({self.n_molecules} molecules)")
        tasks = self.load()
        cfg = ECCConfig()

        reference = None
        rows = []
        for jobs in self.jobs:
            times = []
            for _ in range(self.n_repeats):
                start = time.perf_counter()
                results = featurize_tasks(tasks, cfg, jobs)
                times.append(time.perf_counter() - start)
            vectors = np.stack([v for v, _ in results if v is not None])
            if reference is None:
                reference = vectors
            stats = summary_stats(times)
            rows.append({
                'jobs': jobs,
                'mean_s': stats['mean'],
                'std_s': stats['std'],
                'mol_per_s': self.n_molecules / stats['mean'],
                'identical_to_serial': bool(np.array_equal(vectors, reference)),
            })
            self.log.metric(f"jobs={jobs}", f"{rows[-1]['mol_per_s']:.1f}", ' mol/s')

        df = pd.DataFrame(rows)
        df['speedup'] = df['mean_s'].iloc[0] / df['mean_s']
        save_csv(df, self.output_dir / 'throughput.csv')

        summary = {
            'n_molecules': self.n_molecules,
            'n_repeats': self.n_repeats,
            'throughput': df.to_dict(orient='records'),
        }
        checks = {
            f"jobs={r['jobs']} identical": {'expected': True, 'actual': r['identical_to_serial'],
                                            'passed': r['identical_to_serial']}
            for r in rows
        }
        for name, check in checks.items():
            self.log.validation(name, check['passed'])

        save_json(summary, self.output_dir / 'summary.json')
        generate_run_report('exp4_featurize_performance', summary, self.output_dir, checks)
        self.log.finalize()
        return summary


def main():
    parser = argparse.ArgumentParser(description='Featurization throughput benchmark')
    parser.add_argument('--n-molecules', type=int, default=2000)
    parser.add_argument('--jobs', type=int, nargs='+', default=[1, 2, 4])
    parser.add_argument('--n-repeats', type=int, default=3)
    parser.add_argument('--quick', action='store_true',
                        help='Quick run: 100 molecules, jobs 1 and 2, one repeat')
    args = parser.parse_args()

    if args.quick:
        benchmark = FeaturizeBenchmark(100, [1, 2], 1)
    else:
        benchmark = FeaturizeBenchmark(args.n_molecules, args.jobs, args.n_repeats)
    summary = benchmark.run()
    return 0 if all(r['identical_to_serial'] for r in summary['throughput']) else 1


if __name__ == '__main__':
    raise SystemExit(main())
