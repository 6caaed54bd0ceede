import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_rank_vectors, lexicon_cases, random_instance, random_lexicon
from faithsearch import toy
from faithsearch.core import ContractError, Instance, SubsetScorer, ranked_importance
from faithsearch.explainers import ExplainerConfig, lime, occlusion, shap_sampling
from faithsearch.metrics import comp_suff_diff, comprehensiveness, evaluate, sufficiency
from faithsearch.predictors import ConstantPredictor, LexiconPredictor
from faithsearch.solver import (
    BeamConfig,
    PartialExplanation,
    beam_search,
    exhaustive_oracle,
    partial_delta_term,
    run_beam,
    shift,
    shift_offset,
    solve_metric,
)

OBJECTIVES = {
    "delta": comp_suff_diff,
    "comp": comprehensiveness,
    "suff": lambda x, e, f: -sufficiency(x, e, f),
}


def brute_force(x, f, metric):
    """Independent argmax over all orderings, computed with the metrics module."""
    fn = OBJECTIVES[metric]
    return max(fn(x, r, f) for r in all_rank_vectors(len(x)))


class TestPartialTerm:
    def test_endpoints(self):
        f = LexiconPredictor({"a": 1.0, "b": -0.5}, 0.2)
        x = Instance.from_tokens(["a", "b", "c"])
        s = SubsetScorer(x, f)
        empty = PartialExplanation((), 0, 0.0, 3)
        full = PartialExplanation((0, 1, 2), 0b111, 0.0, 3)
        assert partial_delta_term(x, empty, f) == f.score(x.keep_bits(0)) - f.score(x)
        assert partial_delta_term(x, full, f, s) == f.score(x) - f.score(x.keep_bits(0))

    @settings(max_examples=50)
    @given(lexicon_cases(max_len=6), st.data())
    def test_terms_sum_to_delta(self, case, data):
        x, f, _ = case
        L = len(x)
        order = data.draw(st.permutations(range(L)))
        total, mask = 0.0, 0
        total += partial_delta_term(x, PartialExplanation((), 0, 0.0, L), f)
        for j, i in enumerate(order):
            mask |= 1 << i
            total += partial_delta_term(x, PartialExplanation(tuple(order[: j + 1]), mask, 0.0, L), f)
        p = PartialExplanation(tuple(order), mask, total, L)
        assert total / (L + 1) == pytest.approx(comp_suff_diff(x, p.ranks(), f), abs=1e-12)
        assert sorted(p.assigned.values()) == list(range(1, L + 1))


class TestBeamSearch:
    def test_single_feature(self):
        f = LexiconPredictor({"bad": -2.0}, 0.0)
        assert beam_search(Instance.from_tokens(["bad"]), f).tolist() == [0.0]
        assert beam_search(Instance.from_tokens(["good"]), LexiconPredictor({"good": 1})).tolist() == [1.0]

    def test_empty_refused(self):
        with pytest.raises(ContractError):
            run_beam(Instance.from_tokens(["a"]).keep_bits(0), ConstantPredictor())

    @pytest.mark.parametrize("metric", ["delta", "comp", "suff"])
    def test_full_beam_matches_brute_force(self, metric):
        rng = np.random.default_rng(21)
        for _ in range(15):
            L = int(rng.integers(1, 6))
            f = random_lexicon(rng)
            x = random_instance(rng, L)
            res = run_beam(x, f, BeamConfig(math.factorial(L)), metric)
            best = brute_force(x, f, metric)
            assert res.value == pytest.approx(best, abs=1e-12)
            assert OBJECTIVES[metric](x, res.attribution, f) == pytest.approx(best, abs=1e-12)

    def test_internal_score_matches_metric(self):
        f = toy.gated_predictor()
        for x in toy.toy_corpus(15, seed=3):
            res = run_beam(x, f, BeamConfig(20))
            assert comp_suff_diff(x, res.attribution, f) == pytest.approx(res.value, abs=1e-9)

    def test_never_exceeds_oracle(self):
        f = toy.gated_predictor()
        for x in toy.toy_corpus(10, min_len=4, max_len=7, seed=6):
            _, best = exhaustive_oracle(x, f)
            for B in (1, 3, 10):
                assert run_beam(x, f, BeamConfig(B)).value <= best + 1e-12

    def test_deterministic_and_cache_free(self):
        f = toy.gated_predictor()
        for x in toy.toy_corpus(5, seed=10):
            a = run_beam(x, f, BeamConfig(8))
            b = run_beam(x, f, BeamConfig(8, cache_capacity=0))
            assert np.array_equal(a.attribution, b.attribution)
            assert a.score == b.score and a.order == b.order

    def test_ties_follow_generation_order(self):
        # every ordering scores 0 under a constant predictor
        x = Instance.from_tokens(list("abcd"))
        res = run_beam(x, ConstantPredictor(0.4), BeamConfig(3))
        assert res.order == (0, 1, 2, 3)

    def test_merge_equivalent_bounded_and_exact_when_wide(self):
        f = toy.gated_predictor()
        for x in toy.toy_corpus(10, min_len=4, max_len=8, seed=13):
            _, best = exhaustive_oracle(x, f)
            merged = run_beam(x, f, BeamConfig(5, merge_equivalent=True)).value
            assert merged <= best + 1e-12
            # one partial per feature subset suffices for exactness
            wide = run_beam(x, f, BeamConfig(math.comb(len(x), len(x) // 2),
                                             merge_equivalent=True)).value
            assert wide == pytest.approx(best, abs=1e-12)

    def test_solve_metric_dispatch(self):
        f = toy.gated_predictor()
        x = toy.toy_corpus(1, seed=2)[0]
        assert np.array_equal(solve_metric(x, f, "delta"), beam_search(x, f))
        with pytest.raises(KeyError):
            solve_metric(x, f, "rank_del")

    def test_suff_optimum_beats_heuristics(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            L = int(rng.integers(2, 6))
            f = random_lexicon(rng)
            x = random_instance(rng, L)
            e = solve_metric(x, f, "suff", BeamConfig(math.factorial(L)))
            for h in (occlusion(x, f), lime(x, f), shap_sampling(x, f)):
                assert sufficiency(x, e, f) <= sufficiency(x, h, f) + 1e-12


class TestShift:
    def test_all_positive(self):
        assert shift_offset([3, 1, 2], [0.2, 0.1, 0.3]) == 0

    def test_all_negative(self):
        assert shift_offset([3, 1, 2], [-0.2, -0.1, -0.3]) == 3

    def test_mixed_lexicon(self):
        f = LexiconPredictor({"great": 2.0, "bad": -1.0, "awful": -2.0})
        x = Instance.from_tokens(["great", "bad", "awful"])
        occ = occlusion(x, f)
        ranks = [3, 2, 1]
        # brute-force the agreement count for every k
        def agree(k):
            n = 0
            for r, o in zip(ranks, occ):
                v = r - k
                n += o == 0 or v == 0 or (v > 0) == (o > 0)
            return n
        best = max(range(4), key=lambda k: (agree(k), -k))
        assert shift_offset(ranks, occ) == best == 2
        assert shift(ranks, x, f).tolist() == [1.0, 0.0, -1.0]

    @settings(max_examples=50)
    @given(lexicon_cases(max_len=6), st.data())
    def test_shift_preserves_metrics(self, case, data):
        x, f, _ = case
        r = np.array(data.draw(st.permutations(range(1, len(x) + 1))))
        e = shift(r, x, f)
        assert np.array_equal(ranked_importance(e), r)
        assert evaluate(x, e, f) == evaluate(x, r, f)


class TestOracle:
    def test_single(self):
        ranks, v = exhaustive_oracle(Instance.from_tokens(["a"]), LexiconPredictor({"a": 1.0}))
        assert ranks.tolist() == [1.0]
        assert v == pytest.approx(comp_suff_diff(Instance.from_tokens(["a"]), [1], LexiconPredictor({"a": 1.0})))

    def test_cap(self):
        with pytest.raises(ContractError, match="L <= 8"):
            exhaustive_oracle(Instance.from_tokens(list("abcdefghi")), ConstantPredictor())

    def test_lexicographic_tie_break(self):
        ranks, _ = exhaustive_oracle(Instance.from_tokens(list("abc")), ConstantPredictor())
        assert ranks.tolist() == [1.0, 2.0, 3.0]

    def test_dominates_baselines(self):
        f = toy.gated_predictor()
        cfg = ExplainerConfig()
        for x in toy.toy_corpus(10, min_len=3, max_len=7, seed=14):
            ranks, best = exhaustive_oracle(x, f)
            assert best == pytest.approx(comp_suff_diff(x, ranks, f), abs=1e-12)
            for e in (lime(x, f, cfg), shap_sampling(x, f, cfg), occlusion(x, f)):
                assert best >= comp_suff_diff(x, e, f) - 1e-12
