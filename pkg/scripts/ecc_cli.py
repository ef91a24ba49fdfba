#!/usr/bin/env python3
"""
Run the ecctopo command line without installing the package.

Usage:
    python scripts/ecc_cli.py featurize --input data/molecules.smi --out results/molecules.ecc
    python scripts/ecc_cli.py stats --input data/fold_losses.csv --control ECC --out results/stats
    python scripts/ecc_cli.py inspect "c1ccccc1"
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from ecctopo.cli import main  # noqa: E402

if __name__ == '__main__':
    sys.exit(main())
