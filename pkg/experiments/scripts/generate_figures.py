#!/usr/bin/env python3
"""
Figures (300 DPI, PNG and PDF) for the featurization and statistics results.

1. Forest plot of the corrected paired comparisons on the bundled fold losses
2. Hodge Laplacian spectra of a few ring systems
3. Featurization throughput (needs exp4 results)

Usage:
    python generate_figures.py
"""

import json
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from utils import RESULTS_DIR, ROOT

from ecctopo.lifting import LiftConfig, lift
from ecctopo.molio import parse_smiles
from ecctopo.spectral import hodge_laplacian, sym_eigs
from ecctopo.statlab import compare_to_control, comparisons_frame, read_fold_losses

plt.rcParams.update({
    'font.size': 11,
    'axes.labelsize': 12,
    'axes.titlesize': 13,
    'legend.fontsize': 10,
    'figure.dpi': 300,
    'savefig.dpi': 300,
    'savefig.bbox': 'tight',
    'savefig.pad_inches': 0.1,
    'axes.grid': True,
    'grid.alpha': 0.3,
    'grid.linestyle': '--',
})

sns.set_palette("colorblind")

SPECTRUM_MOLECULES = {
    'benzene': 'c1ccccc1',
    'naphthalene': 'c1ccc2ccccc2c1',
    'norbornane': 'C1CC2CCC1C2',
}


def _save(fig, output_dir: Path, name: str):
    fig.savefig(output_dir / f'{name}.png')
    fig.savefig(output_dir / f'{name}.pdf')
    plt.close(fig)


def figure_forest(output_dir: Path, control: str = 'ECC'):
    """Mean fold difference and 95% interval per competitor, one panel per loss."""
    table = read_fold_losses(ROOT / 'data' / 'fold_losses.csv')
    results = compare_to_control(table, control)

    fig, axes = plt.subplots(1, len(results), figsize=(6 * len(results), 6), sharey=False)
    for ax, (kind, family) in zip(np.atleast_1d(axes), results.items()):
        frame = comparisons_frame(family).iloc[::-1]
        y = np.arange(len(frame))
        colors = ['#2ca02c' if c.reject else '#7f7f7f' for c in reversed(family)]
        ax.errorbar(frame['delta'], y,
                    xerr=[frame['delta'] - frame['ci_low'], frame['ci_high'] - frame['delta']],
                    fmt='none', ecolor='black', capsize=4, linewidth=1.2)
        ax.scatter(frame['delta'], y, c=colors, s=50, zorder=3, edgecolor='black')
        ax.axvline(0.0, color='red', linestyle='--', linewidth=1.5, alpha=0.7)
        ax.set_yticks(y)
        ax.set_yticklabels(frame['comparison'])
        ax.set_xlabel(f'{kind.upper()} difference (competitor - {control})', fontweight='bold')
        ax.set_title(f'{kind.upper()}: corrected paired test, Holm', fontweight='bold')

    fig.tight_layout()
    _save(fig, output_dir, 'figure1_nb_forest')
    print("✅ Figure 1: corrected comparison forest plot")


def figure_spectra(output_dir: Path):
    """Sorted eigenvalues of L0..L3 for each molecule."""
    records = []
    for name, smiles in SPECTRUM_MOLECULES.items():
        X = lift(parse_smiles(smiles), LiftConfig())
        for k in range(4):
            values, _ = sym_eigs(hodge_laplacian(X, k))
            records += [{'molecule': name, 'dim': f'L{k}', 'index': i, 'eigenvalue': v}
                        for i, v in enumerate(np.sort(values))]
    df = pd.DataFrame(records)

    grid = sns.relplot(data=df, x='index', y='eigenvalue', hue='molecule', col='dim',
                       col_wrap=2, kind='line', marker='o', markersize=3,
                       facet_kws={'sharex': False, 'sharey': False}, height=3.2, aspect=1.4)
    grid.set_titles('{col_name}')
    grid.figure.suptitle('Hodge Laplacian spectra of the lifted complexes',
                         fontweight='bold', y=1.02)
    _save(grid.figure, output_dir, 'figure2_laplacian_spectra')
    print("✅ Figure 2: Laplacian spectra")


def figure_throughput(output_dir: Path):
    summary_file = RESULTS_DIR / 'exp4_featurize_performance' / 'summary.json'
    if not summary_file.exists():
        print("⚠️  Figure 3 skipped: run exp4_featurize_performance.py first")
        return
    with open(summary_file) as f:
        df = pd.DataFrame(json.load(f)['throughput'])

    fig, ax = plt.subplots(figsize=(7, 5))
    bars = ax.bar(df['jobs'].astype(str), df['mol_per_s'], color='#1f77b4', alpha=0.8,
                  edgecolor='black', linewidth=1.2)
    for bar, speedup in zip(bars, df['speedup']):
        ax.text(bar.get_x() + bar.get_width() / 2., bar.get_height(), f'{speedup:.2f}x',
                ha='center', va='bottom', fontweight='bold')
    ax.set_xlabel('Worker processes', fontweight='bold')
    ax.set_ylabel('Molecules per second', fontweight='bold')
    ax.set_title('Featurization throughput', fontweight='bold')
    fig.tight_layout()
    _save(fig, output_dir, 'figure3_throughput')
    print("✅ Figure 3: featurization throughput")


def generate_all_figures():
    output_dir = RESULTS_DIR / 'figures'
    output_dir.mkdir(parents=True, exist_ok=True)

    print("=" * 60)
    print("GENERATING FIGURES")
    print("=" * 60)
    figure_forest(output_dir)
    figure_spectra(output_dir)
    figure_throughput(output_dir)
    print(f"\n📁 Figures saved to: {output_dir}")


if __name__ == '__main__':
    generate_all_figures()
