"""Heuristic attribution explainers and a seeded random baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ContractError, Instance, SubsetScorer
from .predictors import require_differentiable


@dataclass(frozen=True)
class ExplainerConfig:
    lime_samples: int = 1000
    lime_ridge: float = 1e-3
    lime_kernel_width: float | None = None  # None -> 0.25 * sqrt(L)
    lime_exhaustive_limit: int = 1024  # enumerate every mask when 2**L fits
    shap_permutations: int = 200
    intg_steps: int = 50
    seed: int = 0

    def __post_init__(self):
        for name in ("lime_samples", "shap_permutations", "intg_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.lime_kernel_width is not None and self.lime_kernel_width <= 0:
            raise ValueError("lime_kernel_width must be positive")
        if self.lime_ridge < 0:
            raise ValueError("lime_ridge must be non-negative")


def _scorer(x, f, scorer):
    if len(x) < 1:
        raise ContractError("cannot explain an empty instance")
    return scorer if scorer is not None else SubsetScorer(x, f)


def occlusion(x: Instance, f, scorer: SubsetScorer | None = None) -> np.ndarray:
    """``e_l = f(x) - f(x without feature l)``."""
    s = _scorer(x, f, scorer)
    fx = s(s.full)
    return np.array([fx - s(s.full ^ (1 << i)) for i in range(len(x))])


def vanilla_grad(x: Instance, f) -> np.ndarray:
    """L2 norm of the logit gradient with respect to each token embedding."""
    require_differentiable(f)
    return np.linalg.norm(f.embed_gradient(x), axis=1)


def integrated_gradients(x: Instance, f, steps: int = 50) -> np.ndarray:
    """Right Riemann sum of the path integral from the all-zero embedding."""
    require_differentiable(f)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    emb = f.embed(x)
    total = np.zeros_like(emb)
    for k in range(1, steps + 1):
        total += f.gradient_from_embeddings((k / steps) * emb)
    return np.einsum("ij,ij->i", emb, total / steps)


def _all_masks(L: int) -> np.ndarray:
    codes = np.arange(1 << L)
    return ((codes[:, None] >> np.arange(L)[None, :]) & 1).astype(bool)


def weighted_ridge(X, y, w, ridge: float) -> np.ndarray:
    """Coefficients of weighted ridge regression with an unpenalized intercept."""
    sw = w / w.sum()
    xm = sw @ X
    ym = sw @ y
    Xc = X - xm
    yc = y - ym
    A = Xc.T @ (w[:, None] * Xc) + ridge * np.eye(X.shape[1])
    return np.linalg.solve(A, Xc.T @ (w * yc))


def lime(x: Instance, f, config: ExplainerConfig = ExplainerConfig(),
         scorer: SubsetScorer | None = None) -> np.ndarray:
    """Kernel-weighted local linear surrogate over feature-presence masks.

    Each feature is kept with probability 1/2; when ``2**L`` does not
    exceed ``config.lime_exhaustive_limit`` the whole mask cube is used
    instead of sampling.
    """
    s = _scorer(x, f, scorer)
    L = len(x)
    if (1 << L) <= config.lime_exhaustive_limit:
        masks = _all_masks(L)
    else:
        rng = np.random.default_rng(config.seed)
        masks = rng.random((config.lime_samples, L)) < 0.5
    codes = masks.astype(np.int64) @ (1 << np.arange(L, dtype=np.int64))
    y = np.array([s(int(c)) for c in codes])
    width = config.lime_kernel_width or 0.25 * math.sqrt(L)
    dist = (L - masks.sum(axis=1)) / L
    w = np.exp(-(dist ** 2) / width ** 2)
    X = masks.astype(float)
    ridge = config.lime_ridge
    try:
        return weighted_ridge(X, y, w, ridge)
    except np.linalg.LinAlgError:
        ridge = max(ridge * 10.0, 1e-3)
    try:
        return weighted_ridge(X, y, w, ridge)
    except np.linalg.LinAlgError as exc:
        raise ContractError(f"LIME regression is singular even with ridge={ridge}") from exc


def shap_sampling(x: Instance, f, config: ExplainerConfig = ExplainerConfig(),
                  scorer: SubsetScorer | None = None) -> np.ndarray:
    """Monte-Carlo Shapley values from random feature-insertion orders."""
    s = _scorer(x, f, scorer)
    L = len(x)
    rng = np.random.default_rng(config.seed)
    phi = np.zeros(L)
    for _ in range(config.shap_permutations):
        mask = 0
        prev = s(0)
        for i in rng.permutation(L):
            mask |= 1 << int(i)
            cur = s(mask)
            phi[i] += cur - prev
            prev = cur
    return phi / config.shap_permutations


def random_explainer(x: Instance, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, len(x))


EXPLAINER_NAMES = ("grad", "intg", "lime", "shap", "occlusion", "solver", "random")
GRADIENT_EXPLAINERS = ("grad", "intg")


def explain(name: str, x: Instance, f, config: ExplainerConfig = ExplainerConfig(),
            beam=None, scorer: SubsetScorer | None = None) -> np.ndarray:
    """Dispatch by explainer id; ``beam`` is a ``BeamConfig`` for ``solver``."""
    if name == "grad":
        return vanilla_grad(x, f)
    if name == "intg":
        return integrated_gradients(x, f, config.intg_steps)
    if name == "lime":
        return lime(x, f, config, scorer)
    if name == "shap":
        return shap_sampling(x, f, config, scorer)
    if name == "occlusion":
        return occlusion(x, f, scorer)
    if name == "random":
        return random_explainer(x, config.seed)
    if name == "solver":
        from .solver import BeamConfig, beam_search

        return beam_search(x, f, beam or BeamConfig(), scorer=scorer)
    raise KeyError(f"unknown explainer {name!r}")
