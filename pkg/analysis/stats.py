"""
Corpus-level aggregates: positional constituent lengths, normalized
dependency length per ordering strategy, deprel profiles, and the shared
numeric helpers used by the ranking model.
"""
import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from treebank.exceptions import DomainError
from .exceptions import UndefinedStatisticError

logger = logging.getLogger(__name__)

FIRST = 'first'
LAST = 'last'


@dataclass(frozen=True)
class PositionalProfile:
    """Slot-wise mean constituent lengths; slot 1 is sentence-initial, slot n is verb-adjacent.

    An empty profile (``counts == 0``) has ``None`` in every slot.
    """
    n_constituents: int
    mean_lengths: tuple
    counts: int

    @property
    def is_empty(self):
        return self.counts == 0


def positional_mean_lengths(corpus, n):
    if n < 1:
        raise DomainError(f"positional profile needs n >= 1, got {n}")
    rows = [layout.lengths for layout in corpus if layout.n_constituents == n]
    if not rows:
        return PositionalProfile(n_constituents=n, mean_lengths=(None,) * n, counts=0)
    means = np.asarray(rows, dtype=float).mean(axis=0)
    return PositionalProfile(
        n_constituents=n,
        mean_lengths=tuple(float(m) for m in means),
        counts=len(rows),
    )


def mean_normalized_dl(records, strategy_tag, n):
    """Mean of total_dl / n_words over ``(strategy, VariantRecord)`` pairs matching the tag and size.

    Returns None when nothing matches.
    """
    values = [
        record.total_dl / record.n_words
        for strategy, record in records
        if strategy == strategy_tag and record.n_constituents == n
    ]
    if not values:
        return None
    return float(np.mean(values))


def pearson(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise UndefinedStatisticError(f"pearson needs two equal-length sequences, got {xs.shape} and {ys.shape}")
    if len(xs) < 2:
        raise UndefinedStatisticError("pearson needs at least 2 observations")
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        raise UndefinedStatisticError("correlation is undefined for a constant input")
    return float(sps.pearsonr(xs, ys)[0])


def zscore(column):
    """Centre on the mean and divide by the sample (n - 1) standard deviation"""
    column = np.asarray(column, dtype=float)
    if len(column) < 2:
        raise UndefinedStatisticError("z-scores need at least 2 values")
    if np.ptp(column) == 0:
        raise UndefinedStatisticError("z-scores are undefined for a column with zero spread")
    return sps.zscore(column, ddof=1)


def deprel_position_profile(corpus, slot):
    """Share of each head deprel among constituents at the first or last preverbal slot"""
    if slot not in (FIRST, LAST):
        raise DomainError(f"slot must be {FIRST!r} or {LAST!r}, got {slot!r}")
    index = 0 if slot == FIRST else -1
    tally = Counter(layout.deprels[index] for layout in corpus if layout.n_constituents)
    total = sum(tally.values())
    if not total:
        return {}
    return {deprel: count / total for deprel, count in sorted(tally.items())}


def shortest_last_rate(corpus, n):
    """Share of n-constituent layouts whose verb-adjacent constituent is a shortest one.

    Returns ``(rate, count)``; rate is None when no layout has n constituents.
    """
    selected = [layout.lengths for layout in corpus if layout.n_constituents == n]
    if not selected:
        return None, 0
    hits = sum(1 for lengths in selected if lengths[-1] == min(lengths))
    return hits / len(selected), len(selected)
