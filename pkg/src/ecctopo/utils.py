"""
Shared utilities: timing, JSON/CSV persistence and the run logger used by
the command line and the experiment scripts.
"""

import json
import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


@contextmanager
def timer(name: str = "Operation", log: Optional["RunLogger"] = None):
    """Context manager that reports the wall time of a stage."""
    start = time.time()
    if log is not None:
        log.info(f"{name}...")
    yield
    elapsed = time.time() - start
    if log is not None:
        log.success(f"{name} done in {elapsed:.2f}s")
    else:
        logger.info("%s done in %.2fs", name, elapsed)


def _to_builtin(value: Any) -> Any:
    """json.dump fallback for numpy scalars/arrays and paths."""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def save_json(data: Dict, filepath: Path, indent: int = 2) -> Path:
    """Write ``data`` as JSON with sorted keys, creating parent dirs."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, 'w') as f:
        json.dump(data, f, indent=indent, sort_keys=True, default=_to_builtin)
        f.write('\n')
    return filepath


def load_json(filepath: Path) -> Dict:
    with open(filepath, 'r') as f:
        return json.load(f)


def save_csv(df: pd.DataFrame, filepath: Path) -> Path:
    """Write a DataFrame as CSV without the index."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(filepath, index=False, float_format='%.10g')
    return filepath


def summary_stats(values: Sequence[float]) -> Dict[str, float]:
    """(mean, population std, max) of a sequence; zeros when empty."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return {'mean': 0.0, 'std': 0.0, 'max': 0.0}
    return {
        'mean': float(np.mean(arr)),
        'std': float(np.std(arr)),
        'max': float(np.max(arr)),
    }


class RunLogger:
    """Section-aware logger for batch runs.

    Every message is echoed to stdout and appended to ``<name>_log.txt``
    inside ``output_dir``. Timestamps and wall times only ever go to this
    log, never into primary outputs.
    """

    def __init__(self, name: str, output_dir: Path, echo: bool = True):
        self.name = name
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.log_file = self.output_dir / f"{name}_log.txt"
        self.echo = echo
        self.start_time = time.time()

        self._write_header()

    def _write_header(self):
        header = (
            f"\n{'=' * 60}\n"
            f"RUN: {self.name}\n"
            f"Date: {pd.Timestamp.now()}\n"
            f"{'=' * 60}"
        )
        self._write(header)

    def _write(self, message: str):
        if self.echo:
            print(message)
        with open(self.log_file, 'a') as f:
            f.write(message + '\n')

    def section(self, title: str):
        self._write(f"\n{'=' * 60}\n{title}\n{'=' * 60}")

    def info(self, message: str):
        self._write(f"ℹ️  {message}")

    def success(self, message: str):
        self._write(f"✅ {message}")

    def warning(self, message: str):
        self._write(f"⚠️  {message}")

    def error(self, message: str):
        self._write(f"❌ {message}")

    def metric(self, name: str, value: Any, unit: str = ''):
        self._write(f"   {name}: {value}{unit}")

    def validation(self, check: str, passed: bool, details: str = ''):
        symbol = '✅' if passed else '❌'
        status = 'PASS' if passed else 'FAIL'
        message = f"   {check}: {symbol} {status}"
        if details:
            message += f" ({details})"
        self._write(message)

    def finalize(self) -> float:
        elapsed = time.time() - self.start_time
        self._write(
            f"\n{'=' * 60}\n"
            f"RUN COMPLETE\n"
            f"Total time: {elapsed:.2f}s ({elapsed / 60:.1f}min)\n"
            f"Log saved to: {self.log_file}\n"
            f"{'=' * 60}"
        )
        return elapsed


def generate_run_report(
    run_name: str,
    results: Dict,
    output_dir: Path,
    checks: Optional[Dict[str, Dict]] = None,
) -> Path:
    """Write a markdown report with raw results and a table of checks.

    Args:
        run_name: Used for the report title and file name.
        results: JSON-serializable results dictionary.
        output_dir: Destination directory.
        checks: ``{check_name: {'expected': ..., 'actual': ..., 'passed': bool}}``.

    Returns:
        Path of the written report.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    report = f"# Report: {run_name}\n\n"
    report += f"**Date**: {pd.Timestamp.now()}\n\n"

    report += "## Results\n\n"
    report += "```json\n"
    report += json.dumps(results, indent=2, sort_keys=True, default=_to_builtin)
    report += "\n```\n\n"

    if checks:
        report += "## Checks\n\n"
        report += "| Check | Expected | Actual | Status |\n"
        report += "|-------|----------|--------|--------|\n"
        for check_name, data in checks.items():
            status = '✅ PASS' if data.get('passed') else '❌ FAIL'
            report += (
                f"| {check_name} | {data.get('expected', '')} | "
                f"{data.get('actual', '')} | {status} |\n"
            )
        report += "\n"

    report_file = output_dir / f"{run_name}_report.md"
    with open(report_file, 'w') as f:
        f.write(report)
    return report_file


def check_dependencies() -> bool:
    """Report whether the runtime dependencies import cleanly."""
    required = {
        'numpy': 'NumPy',
        'scipy': 'SciPy',
        'pandas': 'pandas',
        'networkx': 'NetworkX',
        'statsmodels': 'statsmodels',
        'tqdm': 'tqdm',
    }

    missing = []
    for package, name in required.items():
        try:
            __import__(package)
            print(f"✅ {name}")
        except ImportError:
            print(f"❌ {name} - NOT INSTALLED")
            missing.append(package)

    if missing:
        print("\n⚠️  Install the missing packages:")
        print(f"   pip install {' '.join(missing)}")
        return False

    print("\n✅ All dependencies are installed!")
    return True
