"""Shared fixtures, independent oracles and hypothesis strategies."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import strategies as st

from faithsearch.core import Instance
from faithsearch.predictors import LexiconPredictor, Predictor

VOCAB = tuple(f"w{i}" for i in range(10))


def sigmoid(z: float) -> float:
    """Scalar logistic oracle, written out independently of the package."""
    return 1.0 / (1.0 + math.exp(-z))


def lexicon_prob(weights: dict, bias: float, tokens) -> float:
    return sigmoid(bias + sum(weights.get(t, 0.0) for t in tokens))


def exact_shapley(x: Instance, f) -> np.ndarray:
    """Shapley values from the subset-weighting formula over all coalitions."""
    L = len(x)
    phi = np.zeros(L)
    value = {}
    for mask in range(1 << L):
        value[mask] = f.score(x.keep_bits(mask))
    for i in range(L):
        for mask in range(1 << L):
            if mask >> i & 1:
                continue
            k = bin(mask).count("1")
            w = math.factorial(k) * math.factorial(L - k - 1) / math.factorial(L)
            phi[i] += w * (value[mask | 1 << i] - value[mask])
    return phi


def all_rank_vectors(L: int):
    for p in itertools.permutations(range(1, L + 1)):
        yield np.array(p)


class AdditiveProbability(Predictor):
    """``0.5 + sum of token weights`` (no squashing); useful for closed forms."""

    def __init__(self, weights: dict, base: float = 0.5):
        self.weights = weights
        self.base = base

    def score(self, x):
        return self.base + sum(self.weights.get(t, 0.0) for t in x.tokens)


def random_lexicon(rng: np.random.Generator, vocab=VOCAB, scale: float = 2.0):
    weights = {w: float(rng.normal(0.0, scale)) for w in vocab}
    return LexiconPredictor(weights, float(rng.normal(0.0, 0.5)))


def random_instance(rng: np.random.Generator, L: int, vocab=VOCAB) -> Instance:
    return Instance.from_tokens([vocab[int(i)] for i in rng.integers(len(vocab), size=L)])


@pytest.fixture
def great_lexicon():
    return LexiconPredictor({"great": 2.0, "bad": -2.0}, 0.0)


# ---------------------------------------------------------------------------
# hypothesis strategies

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def lexicon_cases(draw, min_len: int = 1, max_len: int = 6, distinct: bool = False):
    """(instance, predictor, attribution) with an arbitrary lexicon."""
    L = draw(st.integers(min_len, max_len))
    if distinct:
        tokens = draw(st.permutations(VOCAB))[:L]
    else:
        tokens = draw(st.lists(st.sampled_from(VOCAB), min_size=L, max_size=L))
    weights = {w: draw(st.floats(-4, 4, allow_nan=False)) for w in VOCAB}
    bias = draw(st.floats(-2, 2, allow_nan=False))
    e = draw(st.lists(finite, min_size=L, max_size=L))
    return Instance.from_tokens(tokens), LexiconPredictor(weights, bias), np.array(e)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdict lines at the end of the run."""
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
