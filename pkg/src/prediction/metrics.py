import logging
from dataclasses import asdict, dataclass
import numpy as np
from scipy.stats import norm, rankdata
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support
from src.consts import EXACT_WILCOXON_MAX
from src.metadata.metadata_table import OutcomeLabel
from src.utils.errors import DimensionMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    """precision / recall / f1 with Unsafe as the positive class, plus macro averages"""
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int
    macro_precision: float
    macro_recall: float
    macro_f1: float
    precision_undefined: bool = False
    recall_undefined: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(pred, truth) -> EvalReport:
    pred = np.asarray(pred, dtype=int).ravel()
    truth = np.asarray(truth, dtype=int).ravel()
    if len(pred) != len(truth) or len(pred) == 0:
        raise DimensionMismatch(f'{len(pred)} predictions for {len(truth)} labels')

    labels = [OutcomeLabel.SAFE, OutcomeLabel.UNSAFE]
    (tn, fp), (fn, tp) = confusion_matrix(truth, pred, labels=labels)
    precision, recall, f1, _ = precision_recall_fscore_support(
        truth, pred, labels=labels, zero_division=0,
    )
    unsafe = int(OutcomeLabel.UNSAFE)
    return EvalReport(
        precision=float(precision[unsafe]),
        recall=float(recall[unsafe]),
        f1=float(f1[unsafe]),
        tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn),
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        precision_undefined=bool(tp + fp == 0),
        recall_undefined=bool(tp + fn == 0),
    )


def _exact_p(doubled_ranks: np.ndarray, w_doubled: int) -> float:
    """two-sided p from the null distribution of the signed-rank sum over all 2^m sign patterns"""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    tail = int(counts[:w_doubled + 1].sum())
    return min(1.0, 2.0 * tail / float(2 ** len(doubled_ranks)))


def _normal_p(ranks: np.ndarray, w_plus: float) -> float:
    m = len(ranks)
    mean = m * (m + 1) / 4.0
    _, ties = np.unique(ranks, return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24.0 - np.sum(ties ** 3 - ties) / 48.0
    if var <= 0:
        return 1.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / np.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(z)))


def wilcoxon_signed_rank(a, b, method: str = 'auto') -> float:
    """
    two-sided paired signed-rank test p-value

    zero differences are dropped; 'auto' is exact up to EXACT_WILCOXON_MAX
    nonzero pairs and uses the tie-corrected normal approximation above that
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) != len(b) or len(a) == 0:
        raise DimensionMismatch(f'wilcoxon needs paired samples, got {len(a)} and {len(b)}')
    if method not in ('auto', 'exact', 'normal'):
        raise ValueError(f'unknown wilcoxon method {method!r}')

    d = a - b
    d = d[d != 0]
    m = len(d)
    if m == 0:
        return 1.0

    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())

    if method == 'exact' or (method == 'auto' and m <= EXACT_WILCOXON_MAX):
        # average ranks are multiples of one half
        doubled = np.rint(2 * ranks).astype(np.int64)
        w_doubled = int(np.rint(2 * min(w_plus, w_minus)))
        return _exact_p(doubled, w_doubled)
    return _normal_p(ranks, w_plus)
