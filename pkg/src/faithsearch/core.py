"""Instances, feature removal, ranked importance and subset scoring.

Every metric and explainer in the package is built on three reduced-input
constructions: deleting the top-``l`` features, keeping only the top-``l``
features, and deleting exactly the ``l``-th most important feature.  They
are expressed here over a ranks vector where ``L`` marks the most
important feature and ``1`` the least.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, replace
from typing import Any, Iterable, Sequence

import numpy as np

TEXT = "text"
TABULAR = "tabular"


class ContractError(ValueError):
    """Raised when inputs violate an operation's preconditions."""


@dataclass(frozen=True)
class Feature:
    """One removable input feature.

    Text features carry a token and are removed by deleting them.  Tabular
    features carry a name/value pair and are removed by substituting
    ``baseline``.
    """

    token: str | None = None
    name: str | None = None
    value: Any = None
    baseline: Any = None

    @property
    def surface(self) -> str:
        if self.token is not None:
            return self.token
        return f"{self.name}={self.value}"


@dataclass(frozen=True)
class Instance:
    features: tuple[Feature, ...]
    kind: str = TEXT

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Instance":
        feats = tuple(Feature(token=str(t)) for t in tokens)
        if not feats:
            raise ContractError("an instance needs at least one feature")
        return cls(feats, TEXT)

    @classmethod
    def from_fields(cls, fields: dict, baselines: dict) -> "Instance":
        if not fields:
            raise ContractError("an instance needs at least one feature")
        missing = set(fields) - set(baselines)
        if missing:
            raise ContractError(f"no baseline for fields {sorted(missing)}")
        feats = tuple(
            Feature(name=k, value=v, baseline=baselines[k]) for k, v in fields.items()
        )
        return cls(feats, TABULAR)

    def __len__(self) -> int:
        return len(self.features)

    @property
    def tokens(self) -> list[str]:
        return [f.surface for f in self.features]

    def keep(self, keep_mask: Sequence[bool]) -> "Instance":
        """Return the instance with the features where ``keep_mask`` is false removed."""
        if len(keep_mask) != len(self.features):
            raise ContractError("mask length does not match instance length")
        if self.kind == TEXT:
            return Instance(
                tuple(f for f, k in zip(self.features, keep_mask) if k), self.kind
            )
        return Instance(
            tuple(
                f if k else replace(f, value=f.baseline)
                for f, k in zip(self.features, keep_mask)
            ),
            self.kind,
        )

    def keep_bits(self, mask: int) -> "Instance":
        return self.keep([bool(mask >> i & 1) for i in range(len(self.features))])


def check_attribution(e, length: int | None = None) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    if e.ndim != 1:
        raise ContractError("attribution must be a 1-d vector")
    if length is not None and e.shape[0] != length:
        raise ContractError(
            f"attribution has {e.shape[0]} entries but the instance has {length}"
        )
    if not np.all(np.isfinite(e)):
        raise ContractError("attribution entries must be finite")
    return e


def check_ranks(ranks, length: int | None = None) -> np.ndarray:
    r = np.asarray(ranks)
    n = r.shape[0] if r.ndim == 1 else -1
    if n < 0 or (length is not None and n != length):
        raise ContractError("ranks length does not match instance length")
    if not np.array_equal(np.sort(r), np.arange(1, n + 1)):
        raise ContractError("ranks must be a permutation of 1..L")
    return r.astype(np.int64)


def ranked_importance(e) -> np.ndarray:
    """Rank attribution values, ``L`` = most important.

    Ties are broken by position: the earlier feature gets the lower rank,
    so the result is always a strict permutation of ``1..L``.
    """
    e = check_attribution(e)
    order = np.lexsort((np.arange(e.shape[0]), e))  # ascending value, then index
    ranks = np.empty(e.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, e.shape[0] + 1)
    return ranks


def importance_order(ranks) -> np.ndarray:
    """Feature indices from most to least important."""
    r = np.asarray(ranks)
    return np.argsort(-r, kind="stable")


def top_mask(ranks, l: int) -> np.ndarray:
    r = np.asarray(ranks)
    return r > r.shape[0] - l


def _check_count(l: int, lo: int, hi: int) -> None:
    if not lo <= l <= hi:
        raise IndexError(f"l={l} outside [{lo}, {hi}]")


def delete_top(x: Instance, ranks, l: int) -> Instance:
    r = check_ranks(ranks, len(x))
    _check_count(l, 0, len(x))
    return x.keep(~top_mask(r, l))


def keep_top(x: Instance, ranks, l: int) -> Instance:
    r = check_ranks(ranks, len(x))
    _check_count(l, 0, len(x))
    return x.keep(top_mask(r, l))


def marginal_delete(x: Instance, ranks, l: int) -> Instance:
    """Remove only the ``l``-th most important feature (``l`` is 1-based)."""
    r = check_ranks(ranks, len(x))
    _check_count(l, 1, len(x))
    return x.keep(r != len(x) - l + 1)


def bits_of(mask_array) -> int:
    out = 0
    for i, k in enumerate(mask_array):
        if k:
            out |= 1 << i
    return out


class LRUCache:
    """Thread-safe bounded mapping with least-recently-used eviction.

    ``capacity=0`` disables caching; ``None`` means unbounded.
    """

    def __init__(self, capacity: int | None = None):
        self.capacity = capacity
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key, default=None):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
        return default

    def put(self, key, value) -> None:
        if self.capacity == 0:
            return
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            if self.capacity is not None and len(self._data) > self.capacity:
                self._data.popitem(last=False)

    def __len__(self) -> int:
        return len(self._data)


class SubsetScorer:
    """Memoized ``f`` over kept-feature bitmasks of one instance.

    Bit ``i`` of a mask set means feature ``i`` is present.  ``calls``
    counts actual predictor evaluations (cache misses).
    """

    def __init__(self, x: Instance, predictor, capacity: int | None = 1 << 16):
        self.x = x
        self.predictor = predictor
        self.L = len(x)
        self.full = (1 << self.L) - 1
        self.cache = LRUCache(capacity)
        self.labels = LRUCache(capacity)
        self.calls = 0

    def __call__(self, mask: int) -> float:
        v = self.cache.get(mask)
        if v is None:
            v = float(self.predictor.score(self.x.keep_bits(mask)))
            self.calls += 1
            self.cache.put(mask, v)
        return v

    def label(self, mask: int) -> int:
        v = self.labels.get(mask)
        if v is None:
            v = int(self.predictor.classify(self.x.keep_bits(mask)))
            self.labels.put(mask, v)
        return v

    def prefix_masks(self, ranks) -> list[int]:
        """Masks of the top-``l`` features for ``l = 0..L``."""
        masks = [0]
        for i in importance_order(ranks):
            masks.append(masks[-1] | 1 << int(i))
        return masks

    def mask_from(self, keep_mask) -> int:
        return bits_of(keep_mask)
