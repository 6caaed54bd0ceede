"""Faithfulness metrics computed from an instance, an attribution and ``f``.

Every metric here depends on the attribution only through its ranked
importance, so two attributions with the same ranking always score the
same.  Metrics that can be undefined (rank correlations over degenerate
inputs) return ``None``.

Rank_Ins caveat: features that push the prediction *down* are ranked
least important, so inserting features least-important-first makes the
prediction dip before it climbs back to ``f(x)``.  A good explanation
therefore produces a U-shaped insertion curve with low rank correlation,
while a random ordering yields a roughly linear interpolation that
scores well.  The metric is reported as defined; read it with that in
mind.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .core import (
    ContractError,
    Instance,
    SubsetScorer,
    check_attribution,
    ranked_importance,
)

METRIC_NAMES = ("comp", "suff", "delta", "df_mit", "df_frac", "rank_del", "rank_ins")

# higher-is-better flag per metric
HIGHER_IS_BETTER = {
    "comp": True,
    "suff": False,
    "delta": True,
    "df_mit": True,
    "df_frac": False,
    "rank_del": True,
    "rank_ins": True,
}


@dataclass
class MetricReport:
    comp: float
    suff: float
    delta: float
    df_mit: int
    df_frac: float
    rank_del: float | None
    rank_ins: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def spearman(a, b) -> float | None:
    """Spearman rank correlation with average ranks for ties.

    Returns ``None`` when either input has zero rank variance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError("spearman inputs must be equal-length vectors")
    if a.shape[0] < 2:
        raise ContractError("spearman needs at least two points")
    ra = rankdata(a) - (a.shape[0] + 1) / 2.0
    rb = rankdata(b) - (b.shape[0] + 1) / 2.0
    va = float(ra @ ra)
    vb = float(rb @ rb)
    if va == 0.0 or vb == 0.0:
        return None
    rho = float(ra @ rb) / float(np.sqrt(va * vb))
    return float(min(1.0, max(-1.0, rho)))


def _setup(x: Instance, e, f, scorer):
    L = len(x)
    if L < 1:
        raise ContractError("metrics need a non-empty instance")
    ranks = ranked_importance(check_attribution(e, L))
    if scorer is None:
        scorer = SubsetScorer(x, f)
    return ranks, scorer


def comprehensiveness(x: Instance, e, f, scorer: SubsetScorer | None = None) -> float:
    ranks, s = _setup(x, e, f, scorer)
    fx = s(s.full)
    tops = s.prefix_masks(ranks)
    return sum(fx - s(s.full ^ t) for t in tops) / (len(x) + 1)


def sufficiency(x: Instance, e, f, scorer: SubsetScorer | None = None) -> float:
    ranks, s = _setup(x, e, f, scorer)
    fx = s(s.full)
    tops = s.prefix_masks(ranks)
    return sum(fx - s(t) for t in tops) / (len(x) + 1)


def comp_suff_diff(x: Instance, e, f, scorer: SubsetScorer | None = None) -> float:
    if scorer is None:
        scorer = SubsetScorer(x, f)
    return comprehensiveness(x, e, f, scorer) - sufficiency(x, e, f, scorer)


def df_mit(x: Instance, e, g, scorer: SubsetScorer | None = None) -> int:
    ranks, s = _setup(x, e, g, scorer)
    top1 = s.prefix_masks(ranks)[1]
    return int(s.label(s.full ^ top1) != s.label(s.full))


def df_frac(x: Instance, e, g, scorer: SubsetScorer | None = None) -> float:
    ranks, s = _setup(x, e, g, scorer)
    y = s.label(s.full)
    L = len(x)
    for l, t in enumerate(s.prefix_masks(ranks)[1:], start=1):
        if s.label(s.full ^ t) != y:
            return l / L
    return 1.0


def rank_del(x: Instance, e, f, scorer: SubsetScorer | None = None) -> float | None:
    """Spearman correlation between single-feature deletion impact and rank.

    ``None`` for ``L < 2`` or when either side has no variance.
    """
    ranks, s = _setup(x, e, f, scorer)
    L = len(x)
    if L < 2:
        return None
    fx = s(s.full)
    impact = [fx - s(s.full ^ (1 << p)) for p in range(L)]
    return spearman(impact, ranks)


def rank_ins(x: Instance, e, f, scorer: SubsetScorer | None = None) -> float | None:
    ranks, s = _setup(x, e, f, scorer)
    L = len(x)
    tops = s.prefix_masks(ranks)
    # f(x with top-l deleted) for l = L, L-1, ..., 0
    v = [s(s.full ^ tops[L - j]) for j in range(L + 1)]
    return spearman(v, np.arange(L + 1))


def curve_points(x: Instance, e, f, scorer: SubsetScorer | None = None):
    """Deletion and insertion curves as ``(l/L, drop)`` pairs for ``l = 0..L``.

    The plain means of the two value sequences are comprehensiveness and
    sufficiency.
    """
    ranks, s = _setup(x, e, f, scorer)
    L = len(x)
    fx = s(s.full)
    tops = s.prefix_masks(ranks)
    deletion = [(l / L, fx - s(s.full ^ t)) for l, t in enumerate(tops)]
    insertion = [(l / L, fx - s(t)) for l, t in enumerate(tops)]
    return deletion, insertion


def evaluate(x: Instance, e, f, scorer: SubsetScorer | None = None) -> MetricReport:
    """All seven metrics for one instance; ``f`` also supplies ``classify``."""
    if scorer is None:
        scorer = SubsetScorer(x, f)
    comp = comprehensiveness(x, e, f, scorer)
    suff = sufficiency(x, e, f, scorer)
    return MetricReport(
        comp=comp,
        suff=suff,
        delta=comp - suff,
        df_mit=df_mit(x, e, f, scorer),
        df_frac=df_frac(x, e, f, scorer),
        rank_del=rank_del(x, e, f, scorer),
        rank_ins=rank_ins(x, e, f, scorer),
    )


def mean_reports(reports) -> dict:
    """Average each metric over reports, skipping absent values.

    Also returns ``<name>_n``: how many instances contributed.
    """
    out = {}
    for name in METRIC_NAMES:
        vals = [getattr(r, name) for r in reports]
        vals = [v for v in vals if v is not None]
        out[name] = float(np.mean(vals)) if vals else None
        out[f"{name}_n"] = len(vals)
    return out
