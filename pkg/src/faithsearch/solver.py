"""Search for the attribution ordering that maximizes a faithfulness metric.

Comprehensiveness, sufficiency and their difference decompose into one
term per prefix of the importance ordering, and each term depends only on
the *set* of the top-``l`` features.  Beam search therefore grows partial
orderings one feature at a time (most important first), scoring each by
its running sum of terms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ContractError, Instance, SubsetScorer, check_ranks
from .explainers import occlusion

METRIC_IDS = ("delta", "comp", "suff")


@dataclass(frozen=True)
class BeamConfig:
    beam_size: int = 100
    cache_capacity: int | None = 1 << 16  # 0 disables memoization
    # keep only the best partial per assigned feature set; off = plain beam
    merge_equivalent: bool = False

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")


@dataclass
class PartialExplanation:
    """Top-``l`` features in importance order plus the running term sum."""

    order: tuple[int, ...]
    mask: int
    partial_score: float
    L: int = field(repr=False)

    @property
    def assigned(self) -> dict[int, int]:
        return {i: self.L - j for j, i in enumerate(self.order)}

    def ranks(self) -> np.ndarray:
        r = np.zeros(self.L, dtype=np.int64)
        for i, v in self.assigned.items():
            r[i] = v
        return r


@dataclass
class BeamResult:
    attribution: np.ndarray
    ranks: np.ndarray
    order: tuple[int, ...]
    score: float  # sum of all L+1 terms
    value: float  # metric value (score / (L+1)); for suff this is -sufficiency
    model_calls: int


def term_function(metric: str, s: SubsetScorer):
    """Per-prefix term ``h(top_mask)`` whose sum over ``l = 0..L`` is
    ``(L+1)`` times the metric (negated sufficiency for ``suff``)."""
    full = s.full
    if metric == "delta":
        return lambda top: s(top) - s(full ^ top)
    fx = s(full)
    if metric == "comp":
        return lambda top: fx - s(full ^ top)
    if metric == "suff":
        return lambda top: s(top) - fx
    raise KeyError(f"unknown metric id {metric!r}; expected one of {METRIC_IDS}")


def partial_delta_term(x: Instance, partial: PartialExplanation, f,
                       scorer: SubsetScorer | None = None) -> float:
    """``f(top-l kept) - f(top-l deleted)`` for the features ``partial`` assigns."""
    s = scorer if scorer is not None else SubsetScorer(x, f)
    return s(partial.mask) - s(s.full ^ partial.mask)


def _choose_best(candidates: list[PartialExplanation], k: int) -> list[PartialExplanation]:
    # stable: equal scores keep generation order
    return sorted(candidates, key=lambda p: -p.partial_score)[:k]


def _merge_equivalent(candidates: list[PartialExplanation]) -> list[PartialExplanation]:
    # future terms depend only on the assigned set, so lower-scoring
    # partials over the same set can never overtake the best one
    best: dict[int, PartialExplanation] = {}
    for p in candidates:
        q = best.get(p.mask)
        if q is None or p.partial_score > q.partial_score:
            best[p.mask] = p
    return list(best.values())


def run_beam(x: Instance, f, config: BeamConfig = BeamConfig(), metric: str = "delta",
             scorer: SubsetScorer | None = None) -> BeamResult:
    L = len(x)
    if L < 1:
        raise ContractError("cannot search an empty instance")
    s = scorer if scorer is not None else SubsetScorer(x, f, config.cache_capacity)
    h = term_function(metric, s)
    calls_before = s.calls
    beams = [PartialExplanation((), 0, h(0), L)]
    for _ in range(L):
        candidates = []
        for p in beams:
            for i in range(L):
                bit = 1 << i
                if p.mask & bit:
                    continue
                m = p.mask | bit
                candidates.append(
                    PartialExplanation(p.order + (i,), m, p.partial_score + h(m), L)
                )
        if config.merge_equivalent:
            candidates = _merge_equivalent(candidates)
        beams = _choose_best(candidates, config.beam_size)
    best = _choose_best(beams, 1)[0]
    ranks = best.ranks()
    return BeamResult(
        attribution=shift(ranks, x, f, s),
        ranks=ranks,
        order=best.order,
        score=best.partial_score,
        value=best.partial_score / (L + 1),
        model_calls=s.calls - calls_before,
    )


def beam_search(x: Instance, f, config: BeamConfig = BeamConfig(),
                scorer: SubsetScorer | None = None) -> np.ndarray:
    """Attribution maximizing comprehensiveness minus sufficiency."""
    return run_beam(x, f, config, "delta", scorer).attribution


def solve_metric(x: Instance, f, metric_id: str, config: BeamConfig = BeamConfig(),
                 scorer: SubsetScorer | None = None) -> np.ndarray:
    if metric_id not in METRIC_IDS:
        raise KeyError(f"unknown metric id {metric_id!r}; expected one of {METRIC_IDS}")
    return run_beam(x, f, config, metric_id, scorer).attribution


def _agrees(value: int, sign: float) -> bool:
    if sign == 0 or value == 0:
        return True
    return (value > 0) == (sign > 0)


def shift_offset(ranks, occlusion_values) -> int:
    """Smallest ``k`` in ``0..L`` maximizing sign agreement of ``ranks - k``
    with the occlusion values.

    A zero occlusion value agrees with any shifted value, and a shifted
    value of zero agrees with any sign.
    """
    r = np.asarray(ranks)
    signs = np.sign(np.asarray(occlusion_values, dtype=float))
    best_k, best = 0, -1
    for k in range(r.shape[0] + 1):
        n = sum(_agrees(int(v) - k, sg) for v, sg in zip(r, signs))
        if n > best:
            best_k, best = k, n
    return best_k


def shift(ranks, x: Instance, f, scorer: SubsetScorer | None = None) -> np.ndarray:
    """Offset rank values so their signs match occlusion signs; ranks are kept."""
    r = check_ranks(ranks, len(x))
    occ = occlusion(x, f, scorer)
    return (r - shift_offset(r, occ)).astype(float)


def exhaustive_oracle(x: Instance, f, metric: str = "delta", cap: int = 8,
                      scorer: SubsetScorer | None = None) -> tuple[np.ndarray, float]:
    """Best ranks over all ``L!`` orderings and the metric value they attain.

    Ties keep the lexicographically smallest ranks vector.  For ``suff``
    the value is negated sufficiency (higher is better).
    """
    L = len(x)
    if L > cap:
        raise ContractError(
            f"exhaustive search is capped at L <= {cap} ({math.factorial(cap)} orderings); got L={L}"
        )
    s = scorer if scorer is not None else SubsetScorer(x, f, None)
    h = term_function(metric, s)
    base = h(0)
    best_ranks, best = None, -math.inf
    for ranks in itertools.permutations(range(1, L + 1)):
        order = sorted(range(L), key=lambda i: -ranks[i])
        total, mask = base, 0
        for i in order:
            mask |= 1 << i
            total += h(mask)
        if total > best:
            best_ranks, best = ranks, total
    return np.asarray(best_ranks, dtype=float), best / (L + 1)
