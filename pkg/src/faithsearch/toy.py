"""Built-in desk-scale sentiment data and predictors.

The vocabulary has strong and mild sentiment words of both polarities and
a pool of neutral filler.  Embeddings put positive evidence on axis 0,
negative evidence on axis 1 and small noise on the remaining axes.
"""

from __future__ import annotations

import numpy as np

from .core import Instance
from .predictors import GatedBagPredictor, LexiconPredictor, LinearEmbedPredictor

# disjoint from the ground-truth insertion words so planted tokens stay unique
STRONG_POSITIVE = ("superb", "stunning", "charming", "gripping", "inspired",
                   "wonderful", "masterful", "beautiful", "moving", "delightful")
MILD_POSITIVE = ("good", "nice", "fine", "pleasant", "solid")
STRONG_NEGATIVE = ("lifeless", "bland", "dreadful", "boring", "stupid",
                   "ugly", "pointless", "tedious", "clumsy", "painful")
MILD_NEGATIVE = ("bad", "dull", "weak", "flat", "messy")
NEUTRAL = ("the", "a", "movie", "film", "plot", "story", "is", "was", "and",
           "of", "it", "this", "acting", "director", "with", "its", "cast",
           "ending", "scene", "script", ".", ",", "very", "quite", "but",
           "characters", "music")

DIM = 4
_VOCAB_SEED = 7


def _embedding_table() -> dict[str, np.ndarray]:
    rng = np.random.default_rng(_VOCAB_SEED)
    table = {}

    def add(words, axis, lo, hi):
        for w in words:
            v = rng.normal(0.0, 0.15, DIM)
            v[:2] = 0.0
            if axis is not None:
                v[axis] = rng.uniform(lo, hi)
            table[w] = v

    add(STRONG_POSITIVE, 0, 1.3, 2.0)
    add(MILD_POSITIVE, 0, 0.6, 0.9)
    add(STRONG_NEGATIVE, 1, 1.3, 2.0)
    add(MILD_NEGATIVE, 1, 0.6, 0.9)
    add(NEUTRAL, None, 0.0, 0.0)
    for w in NEUTRAL:
        table[w][:2] = rng.normal(0.0, 0.1, 2)
    return table


def gated_predictor(interaction_units: int = 8, interaction_scale: float = 2.5,
                    seed: int = 11) -> GatedBagPredictor:
    """Default non-additive differentiable predictor for the toy corpus.

    Two saturating sentiment units and a noise unit, plus randomly wired
    interaction units that make token effects depend on context.
    """
    rng = np.random.default_rng(seed)
    sentiment = np.array([
        [2.0, -0.8, 0.4, -0.2],
        [-0.8, 2.0, -0.2, 0.4],
        [0.2, 0.2, 1.0, 1.0],
    ])
    k = interaction_units
    hidden = np.vstack([sentiment, rng.normal(0.0, interaction_scale, (k, DIM))])
    hidden_bias = np.concatenate([[-1.5, -1.5, 0.0], rng.normal(0.0, 1.0, k)])
    out = np.concatenate([[3.0, -3.0, 0.6], rng.normal(0.0, 1.5, k)])
    return GatedBagPredictor(
        _embedding_table(),
        hidden=hidden,
        hidden_bias=hidden_bias,
        out=out,
        out_bias=0.0,
        gate_scale=2.0,
        gate_offset=2.0,
    )


def linear_predictor() -> LinearEmbedPredictor:
    return LinearEmbedPredictor(_embedding_table(), weight=[2.0, -2.0, 0.3, -0.3], bias=0.0)


def lexicon_predictor() -> LexiconPredictor:
    table = _embedding_table()
    weights = {w: float(2.0 * (v[0] - v[1])) for w, v in table.items()}
    return LexiconPredictor(weights, 0.0)


def polarity_lexicon() -> dict[str, float]:
    """Word polarity in ``[0, 1]`` (0 negative, 0.5 neutral, 1 positive)."""
    table = _embedding_table()
    out = {}
    for w, v in table.items():
        out[w] = float(np.clip(0.5 + 0.25 * (v[0] - v[1]), 0.0, 1.0))
    return out


def toy_corpus(n: int = 500, min_len: int = 5, max_len: int = 12,
               seed: int = 0, sentiment_rate: float = 0.35) -> list[Instance]:
    """Random short reviews; each leans positive or negative with some noise."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        L = int(rng.integers(min_len, max_len + 1))
        lean = rng.random() < 0.5
        tokens = []
        for _ in range(L):
            if rng.random() < sentiment_rate:
                positive = (rng.random() < 0.8) == lean
                strong = rng.random() < 0.6
                if positive:
                    pool = STRONG_POSITIVE if strong else MILD_POSITIVE
                else:
                    pool = STRONG_NEGATIVE if strong else MILD_NEGATIVE
            else:
                pool = NEUTRAL
            tokens.append(pool[int(rng.integers(len(pool)))])
        out.append(Instance.from_tokens(tokens))
    return out
