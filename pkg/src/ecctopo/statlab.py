"""
Evaluation statistics for cross-validated model comparison.

- deterministic K-fold splitting (splitmix64 + Fisher-Yates)
- Nadeau-Bengio corrected one-sided paired t-tests against a control model
- Holm step-down adjustment per loss family
- percentile bootstrap confidence intervals for MAE / RMSE

Sign convention: differences are ``competitor - control``, so a positive
mean difference favours the control (lower loss is better).
"""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special, stats
from statsmodels.stats.multitest import multipletests

from .exceptions import (
    BadKError,
    BadLengthError,
    BadPError,
    LengthMismatchError,
    SchemaError,
    UnknownControlError,
)
from .utils import save_csv

logger = logging.getLogger(__name__)

LOSS_KINDS = ('mae', 'rmse')
FOLD_LOSS_COLUMNS = ('model', 'fold', 'mae', 'rmse')
COMPARISON_COLUMNS = ('comparison', 'delta', 't_nb', 'ci_low', 'ci_high', 'p', 'p_holm')
VERDICT_SUPERIOR = 'Statistically Superior'
VERDICT_TIE = 'Statistical Tie'
_MASK64 = (1 << 64) - 1


# ==================== SPLITTING ====================

class SplitMix64:
    """The splitmix64 generator; outputs unsigned 64-bit integers."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def shuffled_indices(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates permutation of ``0..n-1``; swap partner ``j = next() % (i + 1)``."""
    rng = SplitMix64(seed)
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.next() % (i + 1)
        order[i], order[j] = order[j], order[i]
    return np.asarray(order, dtype=np.int64)


def kfold_split(n: int, K: int, seed: int = 42) -> List[np.ndarray]:
    """Split ``0..n-1`` into K disjoint folds.

    The shuffled indices are cut into K contiguous chunks; the first
    ``n % K`` chunks hold one extra index.

    Raises:
        BadKError: Unless ``2 <= K <= n``.

    Example:
        >>> [len(f) for f in kfold_split(10, 5)]
        [2, 2, 2, 2, 2]
    """
    if not 2 <= K <= n:
        raise BadKError(f"need 2 <= K <= n, got K={K}, n={n}")
    order = shuffled_indices(n, seed)
    base, extra = divmod(n, K)
    folds, start = [], 0
    for i in range(K):
        size = base + (1 if i < extra else 0)
        folds.append(order[start:start + size])
        start += size
    return folds


def fold_train_val(folds: Sequence[np.ndarray], k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Outer split for fold ``k``: (train+validation pool, held-out fold)."""
    if not 0 <= k < len(folds):
        raise BadKError(f"fold index {k} outside 0..{len(folds) - 1}")
    rest = [f for i, f in enumerate(folds) if i != k]
    pool = np.sort(np.concatenate(rest)) if rest else np.zeros(0, dtype=np.int64)
    return pool, np.asarray(folds[k])


def holdout_split(indices: Sequence[int], val_fraction: float = 0.2,
                  seed: int = 42) -> Tuple[np.ndarray, np.ndarray]:
    """Inner train/validation split of an index pool (80/20 by default)."""
    indices = np.asarray(indices, dtype=np.int64)
    if not 0.0 < val_fraction < 1.0:
        raise ValueError(f"val_fraction must be in (0, 1), got {val_fraction}")
    if indices.size < 2:
        raise BadLengthError("need at least 2 indices to hold out a validation set")
    n_val = min(indices.size - 1, max(1, int(round(indices.size * val_fraction))))
    order = indices[shuffled_indices(indices.size, seed)]
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def subsample_indices(n: int, max_n: int = 2000, seed: int = 42) -> np.ndarray:
    """At most ``max_n`` of ``0..n-1``, drawn without replacement, sorted."""
    if n <= max_n:
        return np.arange(n)
    return np.sort(shuffled_indices(n, seed)[:max_n])


def aggregate_folds(values: Sequence[float]) -> Tuple[float, float]:
    """(mean, sample std) across folds; std is 0 for a single fold."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise BadLengthError("no fold values to aggregate")
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), std


# ==================== TESTS ====================

def t_survival(t: float, nu: int) -> float:
    """Upper tail ``P(T_nu >= t)`` of Student's t.

    Uses ``I_x(nu/2, 1/2)`` with ``x = nu / (nu + t^2)``, the regularized
    incomplete beta function, which keeps full relative accuracy deep in the
    tail.
    """
    if nu < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {nu}")
    if np.isnan(t):
        return float('nan')
    if np.isinf(t):
        return 0.0 if t > 0 else 1.0
    half_two_sided = 0.5 * float(special.betainc(nu / 2.0, 0.5, nu / (nu + t * t)))
    return half_two_sided if t >= 0 else 1.0 - half_two_sided


def t_quantile(q: float, nu: int) -> float:
    return float(stats.t.ppf(q, nu))


@dataclass(frozen=True)
class NBComparison:
    """One competitor-vs-control corrected paired test."""

    competitor: str
    control: str
    loss: str
    delta: float
    s2: float
    se_nb: float
    t_nb: float
    nu: int
    p: float
    ci_low: float
    ci_high: float
    alpha: float
    degenerate: bool = False
    p_holm: Optional[float] = None
    reject: Optional[bool] = None

    @property
    def ci_half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0

    @property
    def label(self) -> str:
        return f"{self.competitor} vs {self.control}"

    def to_row(self) -> Dict:
        return {
            'comparison': self.label,
            'delta': self.delta,
            't_nb': self.t_nb,
            'ci_low': self.ci_low,
            'ci_high': self.ci_high,
            'p': self.p,
            'p_holm': self.p_holm,
        }


def nb_test(d: Sequence[float], alpha: float = 0.05, competitor: str = '',
            control: str = '', loss: str = '') -> NBComparison:
    """Nadeau-Bengio corrected one-sided test on K paired fold differences.

    ``se = sqrt((1/K + 1/(K-1)) * s^2)``, ``t = mean / se`` with ``K-1``
    degrees of freedom, one-sided ``p = P(T >= t)`` and a two-sided
    ``1 - alpha`` interval ``mean +- t_{1-alpha/2} * se``.

    A zero-variance vector is flagged degenerate: ``t = +-inf`` and
    ``p = 0`` / ``1`` for a positive / negative mean, ``t = 0`` and
    ``p = 0.5`` for a zero mean; the interval collapses to the mean.

    Raises:
        BadLengthError: If fewer than 2 differences are given.
    """
    d = np.asarray(d, dtype=float).reshape(-1)
    K = d.size
    if K < 2:
        raise BadLengthError(f"need at least 2 paired differences, got {K}")
    if not np.all(np.isfinite(d)):
        raise ValueError("differences must be finite")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")

    nu = K - 1
    delta = float(np.mean(d))
    if np.all(d == d[0]):
        delta = float(d[0])
        if delta > 0:
            t_nb, p = float('inf'), 0.0
        elif delta < 0:
            t_nb, p = float('-inf'), 1.0
        else:
            t_nb, p = 0.0, 0.5
        return NBComparison(competitor, control, loss, delta, 0.0, 0.0, t_nb, nu, p,
                            delta, delta, alpha, degenerate=True)

    s2 = float(np.var(d, ddof=1))
    se = float(np.sqrt((1.0 / K + 1.0 / (K - 1)) * s2))
    t_nb = delta / se
    half = t_quantile(1.0 - alpha / 2.0, nu) * se
    return NBComparison(competitor, control, loss, delta, s2, se, t_nb, nu,
                        t_survival(t_nb, nu), delta - half, delta + half, alpha)


@dataclass(frozen=True, eq=False)
class HolmResult:
    adjusted: np.ndarray
    reject: np.ndarray


def holm_adjust(pvals: Sequence[float], alpha: float = 0.05) -> HolmResult:
    """Holm step-down adjustment.

    Sorted ascending, ``adj_(i) = max_{j <= i} (m - j + 1) p_(j)`` capped at
    1; a hypothesis is rejected iff its adjusted p is ``<= alpha``. Results
    come back in input order.

    Raises:
        BadPError: If a p-value is outside [0, 1].
    """
    p = np.asarray(pvals, dtype=float).reshape(-1)
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise BadPError(f"p-values must lie in [0, 1], got {p.tolist()}")
    m = p.size
    order = np.argsort(p, kind='stable')
    stepped = np.maximum.accumulate((m - np.arange(m)) * p[order])
    adjusted = np.empty(m)
    adjusted[order] = np.minimum(stepped, 1.0)
    return HolmResult(adjusted, adjusted <= alpha)


def holm_adjust_reference(pvals: Sequence[float], alpha: float = 0.05) -> HolmResult:
    """The same adjustment through statsmodels, kept as a cross-check."""
    if len(pvals) == 0:
        return HolmResult(np.zeros(0), np.zeros(0, dtype=bool))
    reject, adjusted, _, _ = multipletests(np.asarray(pvals, dtype=float), alpha=alpha,
                                           method='holm')
    return HolmResult(adjusted, reject)


# ==================== FOLD-LOSS TABLES ====================

@dataclass(frozen=True, eq=False)
class FoldLossTable:
    """Long-format per-fold losses: columns ``model, fold, mae, rmse``."""

    frame: pd.DataFrame

    def __post_init__(self):
        missing = set(FOLD_LOSS_COLUMNS) - set(self.frame.columns)
        if missing:
            raise SchemaError('header', f"missing columns {sorted(missing)}")
        if self.frame.duplicated(['model', 'fold']).any():
            raise LengthMismatchError("duplicate (model, fold) rows")
        folds = {m: tuple(sorted(g['fold'])) for m, g in self.frame.groupby('model', sort=False)}
        if len(set(folds.values())) > 1:
            raise LengthMismatchError(f"models disagree on folds: {folds}")

    @property
    def models(self) -> List[str]:
        return list(dict.fromkeys(self.frame['model']))

    @property
    def K(self) -> int:
        return int(self.frame['fold'].nunique())

    def losses(self, kind: str) -> pd.DataFrame:
        """``fold x model`` matrix of one loss kind, folds ascending."""
        wide = self.frame.pivot(index='fold', columns='model', values=kind)
        return wide.sort_index()[self.models]

    @classmethod
    def from_dict(cls, data: Dict[str, Dict[str, Sequence[float]]]) -> 'FoldLossTable':
        """``{model: {'mae': [...], 'rmse': [...]}}`` with folds numbered from 0."""
        rows = []
        for model, kinds in data.items():
            lengths = {len(v) for v in kinds.values()}
            if len(lengths) != 1:
                raise LengthMismatchError(f"{model}: loss kinds differ in fold count")
            for fold in range(lengths.pop()):
                rows.append({'model': model, 'fold': fold,
                             **{k: float(kinds[k][fold]) for k in LOSS_KINDS}})
        return cls(pd.DataFrame(rows, columns=list(FOLD_LOSS_COLUMNS)))


def read_fold_losses(path: Path) -> FoldLossTable:
    """Read ``model,fold,mae,rmse`` delimited text.

    Raises:
        SchemaError: On a missing column or a non-numeric loss.
    """
    df = pd.read_csv(path, sep=None, engine='python', dtype={'model': str})
    df.columns = [c.strip().lower() for c in df.columns]
    missing = set(FOLD_LOSS_COLUMNS) - set(df.columns)
    if missing:
        raise SchemaError('header', f"missing columns {sorted(missing)}")
    for col in ('fold', 'mae', 'rmse'):
        converted = pd.to_numeric(df[col], errors='coerce')
        bad = converted.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise SchemaError(f"row {row + 2}.{col}", f"not a number: {df[col].iloc[row]!r}")
        df[col] = converted
    df['fold'] = df['fold'].astype(int)
    df['model'] = df['model'].str.strip()
    return FoldLossTable(df[list(FOLD_LOSS_COLUMNS)])


def compare_to_control(table: FoldLossTable, control: str, alpha: float = 0.05,
                       loss_kinds: Sequence[str] = LOSS_KINDS) -> Dict[str, List[NBComparison]]:
    """Test every competitor against the control, one Holm family per loss kind.

    Returns:
        ``{loss kind: comparisons sorted by Holm p ascending}``.

    Raises:
        UnknownControlError: If ``control`` is not a model of the table.
        ValueError: If there is no competitor.
    """
    if control not in table.models:
        raise UnknownControlError(f"unknown control model {control!r}; "
                                  f"available: {table.models}")
    competitors = [m for m in table.models if m != control]
    if not competitors:
        raise ValueError("need at least one competitor besides the control")

    results = {}
    for kind in loss_kinds:
        wide = table.losses(kind)
        family = [
            nb_test(wide[name].to_numpy() - wide[control].to_numpy(), alpha,
                    competitor=name, control=control, loss=kind)
            for name in competitors
        ]
        holm = holm_adjust([c.p for c in family], alpha)
        family = [
            NBComparison(**{**asdict(c), 'p_holm': float(adj), 'reject': bool(rej)})
            for c, adj, rej in zip(family, holm.adjusted, holm.reject)
        ]
        family.sort(key=lambda c: (c.p_holm, c.p, c.competitor))
        results[kind] = family
        logger.info("%s family: %d comparisons, %d Holm-significant at alpha=%.3g",
                    kind, len(family), int(holm.reject.sum()), alpha)
    return results


def comparisons_frame(comparisons: Sequence[NBComparison]) -> pd.DataFrame:
    return pd.DataFrame([c.to_row() for c in comparisons], columns=list(COMPARISON_COLUMNS))


def write_comparisons(results: Dict[str, List[NBComparison]], out_dir: Path) -> Dict[str, Path]:
    """One ``comparisons_<kind>.csv`` per loss family."""
    out_dir = Path(out_dir)
    return {
        kind: save_csv(comparisons_frame(family), out_dir / f"comparisons_{kind}.csv")
        for kind, family in results.items()
    }


def dataset_verdict(mae: Sequence[NBComparison], rmse: Sequence[NBComparison],
                    alpha: float = 0.05) -> str:
    """"Statistically Superior" iff every comparison in both families is Holm-significant."""
    families = list(mae) + list(rmse)
    if families and all(c.p_holm is not None and c.p_holm <= alpha for c in families):
        return VERDICT_SUPERIOR
    return VERDICT_TIE


# ==================== METRICS AND BOOTSTRAP ====================

def _paired(y_true, y_pred) -> Tuple[np.ndarray, np.ndarray]:
    y_true = np.asarray(y_true, dtype=float).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=float).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise LengthMismatchError(
            f"y_true has {y_true.size} values, y_pred has {y_pred.size}")
    if y_true.size == 0:
        raise LengthMismatchError("empty prediction set")
    return y_true, y_pred


def _metric(errors: np.ndarray, metric: str) -> float:
    if metric == 'MAE':
        return float(np.mean(np.abs(errors)))
    if metric == 'RMSE':
        return float(np.sqrt(np.mean(errors * errors)))
    raise ValueError(f"unknown metric {metric!r}; choose MAE or RMSE")


def metrics(y_true, y_pred) -> Tuple[float, float]:
    """(MAE, RMSE) of a prediction set."""
    y_true, y_pred = _paired(y_true, y_pred)
    errors = y_pred - y_true
    return _metric(errors, 'MAE'), _metric(errors, 'RMSE')


@dataclass(frozen=True)
class BootstrapCI:
    metric: str
    point: float
    half_width: float
    low: float
    high: float
    B: int
    seed: int
    level: float = 0.95


def bootstrap_ci(y_true, y_pred, metric: str = 'MAE', B: int = 10000, seed: int = 42,
                 level: float = 0.95) -> BootstrapCI:
    """Percentile bootstrap interval of MAE or RMSE.

    Replicate ``b`` resamples index pairs with its own stream seeded by
    ``(seed, b)``, so any split of the replicates across workers gives the
    same result.

    Raises:
        LengthMismatchError: If the sequences differ in length.
    """
    y_true, y_pred = _paired(y_true, y_pred)
    n = y_true.size
    if n < 2:
        raise BadLengthError("bootstrap needs at least 2 pairs")
    if B < 100:
        raise ValueError(f"B must be >= 100, got {B}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")

    errors = y_pred - y_true
    replicates = np.empty(B)
    for b in range(B):
        idx = np.random.default_rng([seed, b]).integers(0, n, size=n)
        replicates[b] = _metric(errors[idx], metric)
    tail = (1.0 - level) / 2.0 * 100.0
    low, high = np.percentile(replicates, [tail, 100.0 - tail])
    return BootstrapCI(metric, _metric(errors, metric), float(high - low) / 2.0,
                       float(low), float(high), B, seed, level)
