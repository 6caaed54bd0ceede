"""Corpus-level experiment harnesses.

* running every explainer over a corpus and averaging the metric suite,
* Gaussian rank-perturbation robustness sweeps,
* ground-truth recovery on synthetically modified corpora,
* polarity alignment against a word-level sentiment lexicon.
"""

from __future__ import annotations

import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ContractError, Instance, SubsetScorer, check_ranks, ranked_importance
from .explainers import EXPLAINER_NAMES, ExplainerConfig, explain
from .metrics import METRIC_NAMES, MetricReport, curve_points, evaluate, mean_reports, spearman
from .predictors import LexiconPredictor, for_target
from .solver import BeamConfig, run_beam

# ---------------------------------------------------------------------------
# running explainers over a corpus


@dataclass
class ExplainerRun:
    attribution: np.ndarray
    report: MetricReport
    seconds: float
    model_calls: int
    deletion_curve: list = field(default_factory=list)
    insertion_curve: list = field(default_factory=list)


def instance_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def explain_instance(x: Instance, predictor, names, config: ExplainerConfig,
                     beam: BeamConfig, target="predicted", index: int = 0,
                     solver_metric: str = "delta") -> dict:
    """Run each named explainer on one instance and score it."""
    f = for_target(predictor, x, target)
    cfg = replace(config, seed=instance_seed(config.seed, index))
    eval_scorer = SubsetScorer(x, f, None)
    out = {}
    for name in names:
        scorer = SubsetScorer(x, f, beam.cache_capacity)
        t0 = time.perf_counter()
        if name == "solver":
            e = run_beam(x, f, beam, solver_metric, scorer).attribution
        else:
            e = explain(name, x, f, cfg, beam, scorer)
        seconds = time.perf_counter() - t0
        calls = {"grad": 1, "intg": cfg.intg_steps}.get(name, scorer.calls)
        deletion, insertion = curve_points(x, e, f, eval_scorer)
        out[name] = ExplainerRun(e, evaluate(x, e, f, eval_scorer), seconds, calls,
                                 deletion, insertion)
    return out


def _explain_star(args):
    return explain_instance(*args)


def run_corpus(corpus, predictor, names=EXPLAINER_NAMES, config=ExplainerConfig(),
               beam=BeamConfig(), target="predicted", jobs: int = 1,
               solver_metric: str = "delta") -> dict:
    """Explainer name -> list of per-instance ``ExplainerRun``."""
    for name in names:
        if name not in EXPLAINER_NAMES:
            raise KeyError(f"unknown explainer {name!r}")
    tasks = [(x, predictor, tuple(names), config, beam, target, i, solver_metric)
             for i, x in enumerate(corpus)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_explain_star, tasks, chunksize=8))
    else:
        results = [_explain_star(t) for t in tasks]
    return {name: [r[name] for r in results] for name in names}


def summarize(runs: dict) -> list[dict]:
    """One row per explainer: mean metrics, seconds and model calls per instance."""
    rows = []
    for name, items in runs.items():
        row = {"explainer": name, "n": len(items)}
        means = mean_reports([r.report for r in items])
        row.update({k: means[k] for k in METRIC_NAMES})
        row["model_calls"] = float(np.mean([r.model_calls for r in items]))
        row["seconds"] = float(np.mean([r.seconds for r in items]))
        rows.append(row)
    return rows


def mean_curves(runs: dict, grid_points: int = 21) -> dict:
    """Deletion/insertion curves averaged over instances on a common l/L grid."""
    grid = np.linspace(0.0, 1.0, grid_points)
    out = {"grid": grid.tolist(), "explainers": {}}
    for name, items in runs.items():
        dele = [np.interp(grid, *zip(*r.deletion_curve)) for r in items]
        ins = [np.interp(grid, *zip(*r.insertion_curve)) for r in items]
        out["explainers"][name] = {
            "deletion": np.mean(dele, axis=0).tolist(),
            "insertion": np.mean(ins, axis=0).tolist(),
        }
    return out


# ---------------------------------------------------------------------------
# rank perturbation


def perturb_ranks(ranks, s: float, rng=None) -> np.ndarray:
    """Ranks of ``ranks + n`` with ``n ~ N(0, s^2)`` i.i.d."""
    if s < 0:
        raise ValueError("noise scale must be non-negative")
    r = check_ranks(ranks)
    if s == 0:
        return r.copy()
    rng = np.random.default_rng(rng)
    return ranked_importance(r + s * rng.standard_normal(r.shape[0]))


@dataclass
class SweepResult:
    rows: list[dict]
    crossings: list[dict]


def perturbation_sweep(corpus, explanations: dict, predictor, s_grid=(0, 1, 2, 3, 4),
                       trials: int = 20, seed: int = 0, target="predicted",
                       crossing_instances: int = 3) -> SweepResult:
    """Mean metric values of rank-perturbed explanations for each noise level.

    ``explanations`` maps explainer name to per-instance attributions.  The
    standard-normal draws are shared across explainers and noise levels
    (scaled by ``s``), one stream per (instance, trial).
    """
    s_grid = list(s_grid)
    if not s_grid:
        raise ValueError("s_grid must be nonempty")
    acc = {(name, s): [] for name in explanations for s in s_grid}
    crossings = []
    for i, x in enumerate(corpus):
        f = for_target(predictor, x, target)
        scorer = SubsetScorer(x, f, None)
        L = len(x)
        noise = [np.random.default_rng([seed, i, t]).standard_normal(L) for t in range(trials)]
        for name, attrs in explanations.items():
            ranks = ranked_importance(attrs[i])
            for s in s_grid:
                if s == 0:
                    acc[(name, s)].append(evaluate(x, ranks, f, scorer))
                    continue
                for t in range(trials):
                    pr = ranked_importance(ranks + s * noise[t])
                    acc[(name, s)].append(evaluate(x, pr, f, scorer))
                    if i < crossing_instances and t == 0:
                        crossings.append({
                            "explainer": name, "instance": i, "s": s,
                            "tokens": x.tokens,
                            "original_ranks": ranks.tolist(),
                            "perturbed_ranks": pr.tolist(),
                        })
    rows = []
    for (name, s), reports in acc.items():
        means = mean_reports(reports)
        row = {"explainer": name, "s": s, "evaluations": len(reports)}
        row.update({k: means[k] for k in METRIC_NAMES})
        rows.append(row)
    return SweepResult(rows, crossings)


# ---------------------------------------------------------------------------
# ground truth recovery

SHORT_INSERTIONS = {
    0: ("terrible", "awful", "disaster", "worst", "never"),
    1: ("excellent", "great", "fantastic", "brilliant", "enjoyable"),
}
LONG_INSERTIONS = {
    0: ("A total waste of time.", "Not worth the money!",
        "Is it even a real film?", "Overall it looks cheap."),
    1: ("I like this movie.", "This is a great movie!",
        "Such a beautiful work.", "Surely recommend it!"),
}
BE_FORMS = ("be", "am", "is", "are", "was", "were", "been", "being")
PUNCTUATION = "<punct>"
# (word set, target for label 0, target for label 1)
REPLACEMENT_SETS = (
    (("a", "an", "the"), "a", "the"),
    (("in", "on", "at"), "in", "on"),
    (("i", "you"), "I", "you"),
    (("he", "she"), "he", "she"),
    (("can", "will", "may"), "can", "may"),
    (("could", "would", "might"), "could", "might"),
    (BE_FORMS, "is", "are"),
    ((PUNCTUATION,), ".", ","),
)

GT_TYPES = ("short_addition", "long_addition", "replacement")
SYMMETRIES = ("symmetric", "asymmetric")

_TOKEN_RE = re.compile(r"\w+(?:[-']\w+)*|[^\w\s]")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def _is_punct(token: str) -> bool:
    return bool(token) and all(not c.isalnum() and not c.isspace() for c in token)


def _replacement_key(token: str) -> str:
    return PUNCTUATION if _is_punct(token) else token.lower()


@dataclass
class GroundTruthSpec:
    gt_type: str = "short_addition"
    symmetry: str = "asymmetric"
    insertion_sets: dict | None = None
    replacement_sets: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.gt_type not in GT_TYPES:
            raise ValueError(f"gt_type must be one of {GT_TYPES}")
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"symmetry must be one of {SYMMETRIES}")
        if self.insertion_sets is None:
            self.insertion_sets = dict(
                LONG_INSERTIONS if self.gt_type == "long_addition" else SHORT_INSERTIONS
            )
        if self.replacement_sets is None:
            self.replacement_sets = REPLACEMENT_SETS
        for words, t0, t1 in self.replacement_sets:
            keys = {w.lower() for w in words}
            if _replacement_key(t0) not in keys or _replacement_key(t1) not in keys:
                raise ValueError(f"replacement targets {t0!r}/{t1!r} not in their set")

    def required_labels(self):
        return (1,) if self.symmetry == "asymmetric" else (0, 1)


@dataclass
class GroundTruthInstance:
    instance: Instance
    label: int
    words: tuple[int, ...]  # indices of ground-truth correlated features
    excluded: bool
    modification: str


@dataclass
class GroundTruthCorpus:
    spec: GroundTruthSpec
    items: list[GroundTruthInstance]

    @property
    def included(self):
        return [g for g in self.items if not g.excluded]


def build_ground_truth(corpus, spec: GroundTruthSpec) -> GroundTruthCorpus:
    """Randomize labels and plant label-correlated words into each instance."""
    if spec.gt_type != "replacement":
        for y in spec.required_labels():
            if not spec.insertion_sets.get(y):
                raise ContractError(f"insertion set for label {y} is empty")
    lookup = {}
    for words, t0, t1 in spec.replacement_sets:
        for w in words:
            lookup[w.lower()] = (t0, t1)
    items = []
    for i, x in enumerate(corpus):
        rng = np.random.default_rng([spec.seed, i])
        y = int(rng.integers(2))
        tokens = x.tokens
        modify = spec.symmetry == "symmetric" or y == 1
        if spec.gt_type == "replacement":
            if modify:
                tokens = [
                    lookup[k][y] if (k := _replacement_key(t)) in lookup else t
                    for t in tokens
                ]
            words = tuple(j for j, t in enumerate(tokens) if _replacement_key(t) in lookup)
            items.append(GroundTruthInstance(
                Instance.from_tokens(tokens), y, words, not words,
                "replacement" if modify else "none",
            ))
            continue
        if not modify:
            items.append(GroundTruthInstance(x, y, (), True, "none"))
            continue
        pool = spec.insertion_sets[y]
        insert = tokenize(pool[int(rng.integers(len(pool)))])
        at_start = bool(rng.integers(2))
        if at_start:
            tokens = insert + tokens
            words = tuple(range(len(insert)))
        else:
            words = tuple(range(len(tokens), len(tokens) + len(insert)))
            tokens = tokens + insert
        items.append(GroundTruthInstance(
            Instance.from_tokens(tokens), y, words, False,
            "insert_start" if at_start else "insert_end",
        ))
    return GroundTruthCorpus(spec, items)


def induced_predictor(spec: GroundTruthSpec, strength: float = 4.0,
                      residual: dict | None = None, residual_scale: float = 0.0
                      ) -> LexiconPredictor:
    """Lexicon predictor whose only strong evidence is the planted words.

    Stands in for a model retrained on the modified corpus.  ``residual``
    weights (scaled by ``residual_scale``) add weak reliance on the
    original words.
    """
    weights: dict[str, float] = {}
    if residual:
        for w, v in residual.items():
            weights[w] = residual_scale * v
    bias = 0.0
    if spec.gt_type == "replacement":
        for words, t0, t1 in spec.replacement_sets:
            for w in words:
                if w == PUNCTUATION:
                    continue
                sign = 1.0 if w.lower() == t1.lower() else -1.0
                for variant in {w, w.capitalize(), w.upper()}:
                    weights[variant] = weights.get(variant, 0.0) + sign * strength
            if PUNCTUATION in words:
                for p in ".,!?;:'\"()-":
                    weights[p] = weights.get(p, 0.0) + (strength if p == t1 else -strength)
        return LexiconPredictor(weights, bias)
    labels = spec.required_labels()
    for y in labels:
        sign = 1.0 if y == 1 else -1.0
        for text in spec.insertion_sets[y]:
            toks = tokenize(text)
            for t in toks:
                weights[t] = weights.get(t, 0.0) + sign * strength * 2.0 / len(toks)
    if spec.symmetry == "asymmetric":
        bias = -strength / 2.0
    return LexiconPredictor(weights, bias)


def gt_precision(e, words, L: int | None = None) -> float | None:
    """Fraction of ground-truth words among the top-``|W|`` ranked features."""
    r = ranked_importance(e)
    L = r.shape[0] if L is None else L
    if not words:
        return None
    hits = sum(1 for w in words if r[w] > L - len(words))
    return hits / len(words)


def gt_normalized_rank(e, words, L: int | None = None) -> float | None:
    """``(L - min rank over W + 1) / L``; lower is better."""
    r = ranked_importance(e)
    L = r.shape[0] if L is None else L
    if not words:
        return None
    return (L - min(int(r[w]) for w in words) + 1) / L


def hypergeometric_precision(L: int, k: int) -> tuple[float, float]:
    """Mean and variance of precision under a uniformly random ranking."""
    # hits ~ Hypergeometric(N=L, K=k, n=k); precision = hits / k
    mean_hits = k * k / L
    var_hits = k * (k / L) * (1 - k / L) * (L - k) / (L - 1) if L > 1 else 0.0
    return mean_hits / k, var_hits / (k * k)


@dataclass
class GroundTruthScores:
    explainer: str
    precision: float | None
    normalized_rank: float | None
    n_scored: int
    n_excluded: int


def score_ground_truth(gt: GroundTruthCorpus, predictor, names, config=ExplainerConfig(),
                       beam=BeamConfig(), target="predicted", jobs: int = 1):
    """Explain every included instance; return per-explainer mean Pr and NR
    and the per-instance attributions."""
    included = gt.included
    runs = run_corpus([g.instance for g in included], predictor, names, config, beam,
                      target, jobs)
    scores = []
    for name in names:
        pr, nr = [], []
        for g, run in zip(included, runs[name]):
            pr.append(gt_precision(run.attribution, g.words))
            nr.append(gt_normalized_rank(run.attribution, g.words))
        scores.append(GroundTruthScores(
            name,
            float(np.mean(pr)) if pr else None,
            float(np.mean(nr)) if nr else None,
            len(pr),
            len(gt.items) - len(included),
        ))
    return scores, runs


# ---------------------------------------------------------------------------
# polarity alignment


class PolarityLexicon(dict):
    """Word -> polarity score in ``[0, 1]`` (0 negative, 1 positive)."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        for w, v in self.items():
            if not 0.0 <= float(v) <= 1.0:
                raise ValueError(f"polarity of {w!r} is outside [0, 1]: {v}")


def polarity_alignment(e, x: Instance, lexicon) -> float | None:
    """Spearman correlation between attributions and polarity over covered words."""
    e = np.asarray(e, dtype=float)
    covered = [i for i, t in enumerate(x.tokens) if t in lexicon]
    if len(covered) < 2:
        return None
    return spearman(e[covered], [lexicon[x.tokens[i]] for i in covered])


def polarity_study(corpus, predictor, lexicon, names=("lime", "shap", "occlusion", "solver", "random"),
                   config=ExplainerConfig(), beam=BeamConfig(), jobs: int = 1) -> dict:
    """Per-explainer alignments, with attributions taken for the positive class.

    Vanilla gradients are non-negative and cannot express evidence against
    a class, so ``grad`` is refused.
    """
    if "grad" in names:
        raise ValueError("grad attributions are unsigned; polarity alignment is undefined")
    runs = run_corpus(corpus, predictor, names, config, beam, target=1, jobs=jobs)
    out = {}
    for name in names:
        vals = [polarity_alignment(r.attribution, x, lexicon)
                for r, x in zip(runs[name], corpus)]
        out[name] = [v for v in vals if v is not None]
    return out
