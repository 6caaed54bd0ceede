"""Dataset and predictor loading plus deterministic table/JSON writers."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import toy
from .core import ContractError, Instance
from .predictors import (
    GatedBagPredictor,
    LexiconPredictor,
    LinearEmbedPredictor,
    TabularLogisticPredictor,
)


class DatasetError(Exception):
    """The dataset or predictor spec cannot be read."""


def load_dataset(path) -> list[tuple[Instance, int | None]]:
    """Read JSON Lines; one ``{"tokens": [...]}`` or
    ``{"fields": {...}, "baselines": {...}}`` object per line."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    out = []
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            if "tokens" in rec:
                x = Instance.from_tokens(rec["tokens"])
            elif "fields" in rec:
                x = Instance.from_fields(rec["fields"], rec.get("baselines", {}))
            else:
                raise ContractError("record needs 'tokens' or 'fields'")
        except (json.JSONDecodeError, ContractError, TypeError, AttributeError) as exc:
            raise DatasetError(f"{path}:{n}: {exc}") from exc
        out.append((x, rec.get("label")))
    if not out:
        raise DatasetError(f"dataset {path} has no instances")
    return out


PREDICTOR_TYPES = ("toy", "toy_lexicon", "toy_linear", "lexicon", "linear_embed",
                   "gated_bag", "tabular_logistic")


def load_predictor(spec: dict | None, base_dir: Path | None = None):
    """Build a predictor from ``{"type": ..., "weights_path" | "weights": ...}``."""
    spec = spec or {"type": "toy"}
    kind = spec.get("type")
    if kind == "toy":
        return toy.gated_predictor()
    if kind == "toy_lexicon":
        return toy.lexicon_predictor()
    if kind == "toy_linear":
        return toy.linear_predictor()
    if kind not in PREDICTOR_TYPES:
        raise DatasetError(f"unknown predictor type {kind!r}; expected one of {PREDICTOR_TYPES}")
    if "weights_path" in spec:
        p = Path(spec["weights_path"])
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        try:
            w = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetError(f"cannot read predictor weights {p}: {exc}") from exc
    else:
        w = spec.get("weights")
    if not isinstance(w, dict):
        raise DatasetError("predictor spec needs 'weights_path' or an inline 'weights' object")
    try:
        if kind == "lexicon":
            return LexiconPredictor(dict(w["weights"]), float(w.get("bias", 0.0)))
        if kind == "tabular_logistic":
            return TabularLogisticPredictor(dict(w["weights"]), float(w.get("bias", 0.0)))
        if kind == "linear_embed":
            return LinearEmbedPredictor(w["embeddings"], w["weight"], w.get("bias", 0.0))
        return GatedBagPredictor(
            w["embeddings"], w["hidden"], w["hidden_bias"], w["out"],
            w.get("out_bias", 0.0), w.get("gate_scale", 1.0), w.get("gate_offset", 1.0),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed {kind} weights: {exc}") from exc


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=_default)
        fh.write("\n")


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, default=_default))
            fh.write("\n")
