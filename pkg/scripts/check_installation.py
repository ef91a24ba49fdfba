#!/usr/bin/env python3
"""
Installation check for ecctopo.

Tests:
1. Runtime dependencies import
2. SMILES parsing and lifting
3. Betti numbers of benzene
4. ECC vector of a small molecule
5. Corrected paired test on a worked example

Usage:
    python scripts/check_installation.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))


def check_installation() -> bool:
    print("=" * 60)
    print("ecctopo Installation Test")
    print("=" * 60)
    print()

    print("Test 1: Dependencies...")
    from ecctopo.utils import check_dependencies
    if not check_dependencies():
        return False

    print("\nTest 2: Parsing and lifting benzene...")
    try:
        from ecctopo.lifting import lift, validate
        from ecctopo.molio import parse_smiles
        X = lift(parse_smiles('c1ccccc1'))
        assert validate(X).ok
        print(f"✓ PASS: cell counts {X.counts()}")
    except Exception as e:
        print(f"✗ FAIL: {e}")
        return False

    print("\nTest 3: Betti numbers...")
    from ecctopo.spectral import betti_numbers
    betti = betti_numbers(X)
    if betti != (1, 1, 5, 0):
        print(f"✗ FAIL: expected (1, 1, 5, 0), got {betti}")
        return False
    print(f"✓ PASS: betti {betti}")

    print("\nTest 4: ECC vector of ethanol...")
    try:
        from ecctopo.ecc import ECCConfig, ecc_features
        vec = ecc_features(parse_smiles('CCO'), ECCConfig())
        print(f"✓ PASS: length {vec.pad_to}, assembled {vec.assembled_length}")
    except Exception as e:
        print(f"✗ FAIL: {e}")
        return False

    print("\nTest 5: Corrected paired test...")
    from ecctopo.statlab import nb_test
    result = nb_test([1.0, 2.0, 3.0, 4.0, 5.0])
    print(f"✓ PASS: t = {result.t_nb:.4f}, p = {result.p:.4g}")

    print()
    print("=" * 60)
    print("✅ All installation checks passed")
    print("=" * 60)
    return True


if __name__ == '__main__':
    sys.exit(0 if check_installation() else 1)
