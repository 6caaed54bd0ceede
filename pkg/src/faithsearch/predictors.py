"""Black-box predictors used as the model under explanation.

All built-in predictors are binary: ``score`` returns P(class 1) and
``classify`` thresholds it at 0.5.  ``TargetClass`` re-targets any of them
so that ``score`` is the probability of a chosen class.

Differentiable predictors additionally expose the embedding-level hooks
the gradient explainers need: ``embed``, ``logit_from_embeddings`` and
``gradient_from_embeddings``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Instance


class CapabilityError(TypeError):
    """The predictor lacks a capability the caller requires."""


def logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


class Predictor:
    differentiable = False
    num_classes = 2

    def score(self, x: Instance) -> float:
        raise NotImplementedError

    def classify(self, x: Instance) -> int:
        return int(self.score(x) >= 0.5)


@dataclass
class ConstantPredictor(Predictor):
    value: float = 0.5

    def score(self, x):
        return float(self.value)


@dataclass
class LexiconPredictor(Predictor):
    """``logistic(bias + sum of token weights)``; unknown tokens weigh 0."""

    weights: dict[str, float]
    bias: float = 0.0

    def logit(self, x: Instance) -> float:
        w = self.weights
        return self.bias + sum(w.get(t, 0.0) for t in x.tokens)

    def score(self, x):
        return logistic(self.logit(x))


@dataclass
class TabularLogisticPredictor(Predictor):
    """Logistic model over numeric tabular fields; unknown fields weigh 0."""

    weights: dict[str, float]
    bias: float = 0.0

    def score(self, x):
        z = self.bias
        for f in x.features:
            z += self.weights.get(f.name, 0.0) * float(f.value)
        return logistic(z)


class EmbeddingPredictor(Predictor):
    """Shared plumbing for predictors that score a bag of token embeddings."""

    differentiable = True
    embeddings: dict[str, np.ndarray]
    dim: int

    def embed(self, x: Instance) -> np.ndarray:
        zero = np.zeros(self.dim)
        rows = [self.embeddings.get(t, zero) for t in x.tokens]
        if not rows:
            return np.zeros((0, self.dim))
        return np.asarray(rows, dtype=float)

    def logit_from_embeddings(self, emb: np.ndarray) -> float:
        raise NotImplementedError

    def gradient_from_embeddings(self, emb: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def embed_gradient(self, x: Instance) -> np.ndarray:
        return self.gradient_from_embeddings(self.embed(x))

    def logit(self, x: Instance) -> float:
        return self.logit_from_embeddings(self.embed(x))

    def score(self, x):
        return logistic(self.logit(x))


def _as_table(embeddings) -> dict[str, np.ndarray]:
    return {k: np.asarray(v, dtype=float) for k, v in embeddings.items()}


class LinearEmbedPredictor(EmbeddingPredictor):
    """``logistic(w . sum(embed(token)) + b)``.

    The logit gradient with respect to every token embedding is ``w``.
    """

    def __init__(self, embeddings, weight, bias: float = 0.0):
        self.embeddings = _as_table(embeddings)
        self.weight = np.asarray(weight, dtype=float)
        self.bias = float(bias)
        self.dim = self.weight.shape[0]

    def logit_from_embeddings(self, emb):
        return float(self.weight @ emb.sum(axis=0)) + self.bias

    def gradient_from_embeddings(self, emb):
        return np.tile(self.weight, (emb.shape[0], 1))


class GatedBagPredictor(EmbeddingPredictor):
    """Non-additive differentiable bag-of-embeddings classifier.

    Each token embedding ``e`` passes through a norm gate
    ``g = logistic(gate_scale * |e|^2 - gate_offset)``; the gated vectors
    are summed and fed to one tanh layer::

        h = tanh(A @ sum(g_l * e_l) + c)
        logit = v @ h + b

    The saturating hidden layer makes redundant evidence (two strong
    positive words) interact, so no fixed per-token score orders features
    optimally for deletion/insertion curves.
    """

    def __init__(self, embeddings, hidden, hidden_bias, out, out_bias=0.0,
                 gate_scale=1.0, gate_offset=1.0):
        self.embeddings = _as_table(embeddings)
        self.hidden = np.asarray(hidden, dtype=float)
        self.hidden_bias = np.asarray(hidden_bias, dtype=float)
        self.out = np.asarray(out, dtype=float)
        self.out_bias = float(out_bias)
        self.gate_scale = float(gate_scale)
        self.gate_offset = float(gate_offset)
        self.dim = self.hidden.shape[1]

    def _gates(self, emb):
        z = self.gate_scale * np.einsum("ij,ij->i", emb, emb) - self.gate_offset
        return 1.0 / (1.0 + np.exp(-z))

    def _hidden(self, emb):
        pooled = (self._gates(emb)[:, None] * emb).sum(axis=0)
        return np.tanh(self.hidden @ pooled + self.hidden_bias)

    def logit_from_embeddings(self, emb):
        return float(self.out @ self._hidden(emb)) + self.out_bias

    def gradient_from_embeddings(self, emb):
        if emb.shape[0] == 0:
            return np.zeros((0, self.dim))
        h = self._hidden(emb)
        upstream = self.hidden.T @ ((1.0 - h * h) * self.out)  # d logit / d pooled
        g = self._gates(emb)
        proj = emb @ upstream
        # d(g e)/de = g I + 2 a g (1 - g) e e^T
        return (g[:, None] * upstream[None, :]
                + (2.0 * self.gate_scale * g * (1.0 - g) * proj)[:, None] * emb)


@dataclass
class TargetClass(Predictor):
    """Explain the probability of ``target`` instead of class 1."""

    base: Predictor
    target: int = 1
    differentiable: bool = field(init=False)

    def __post_init__(self):
        if self.target not in (0, 1):
            raise ValueError("target must be 0 or 1")
        self.differentiable = getattr(self.base, "differentiable", False)

    def score(self, x):
        p = self.base.score(x)
        return p if self.target == 1 else 1.0 - p

    def classify(self, x):
        return self.base.classify(x)

    def _sign(self):
        return 1.0 if self.target == 1 else -1.0

    @property
    def dim(self):
        return self.base.dim

    def embed(self, x):
        return self.base.embed(x)

    def logit_from_embeddings(self, emb):
        return self._sign() * self.base.logit_from_embeddings(emb)

    def gradient_from_embeddings(self, emb):
        return self._sign() * self.base.gradient_from_embeddings(emb)

    def embed_gradient(self, x):
        return self.gradient_from_embeddings(self.embed(x))


def require_differentiable(predictor) -> None:
    if not getattr(predictor, "differentiable", False):
        raise CapabilityError(
            f"{type(predictor).__name__} does not expose embedding gradients"
        )


def for_target(predictor: Predictor, x: Instance, target="predicted") -> Predictor:
    """Wrap ``predictor`` so its score is the probability of ``target``.

    ``target="predicted"`` uses the predicted class of ``x``.
    """
    if target == "predicted":
        target = predictor.classify(x)
    if target == 1:
        return predictor
    return TargetClass(predictor, int(target))
