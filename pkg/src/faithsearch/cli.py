"""Command-line front end.

Commands write delimited tables and JSON into ``--out``; with plotting
enabled each command also renders matplotlib figures next to them.

Exit codes: 0 on success, 2 when the dataset, config or predictor cannot
be read, 3 for an unknown or unsupported explainer id.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io, lab, report, toy
from .core import SubsetScorer, ranked_importance
from .explainers import EXPLAINER_NAMES, GRADIENT_EXPLAINERS, ExplainerConfig
from .metrics import METRIC_NAMES, comp_suff_diff, comprehensiveness, sufficiency
from .predictors import LexiconPredictor, for_target
from .solver import METRIC_IDS, BeamConfig, exhaustive_oracle, run_beam

log = logging.getLogger("faithsearch")

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_BAD_EXPLAINER = 3


class UsageError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    """Every tunable of every command; a JSON config file may set any subset."""

    dataset: str | None = None  # JSON Lines path; None -> built-in toy corpus
    toy_size: int = 500
    toy_seed: int = 0
    max_instances: int | None = None
    predictor: dict | None = None  # {"type": ..., "weights_path": ...}; None -> toy
    explainers: list[str] | None = None  # None -> command default
    target: str | int = "predicted"
    metric: str = "delta"  # solver objective
    beam_size: int = 100
    beam_sizes: list[int] | None = None  # benchmark: also run a beam-size ablation
    merge_equivalent: bool = False
    cache_capacity: int = 1 << 16
    lime_samples: int = 1000
    lime_ridge: float = 1e-3
    lime_kernel_width: float | None = None
    lime_exhaustive_limit: int = 1024
    shap_permutations: int = 200
    intg_steps: int = 50
    s_grid: list[float] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    trials: int = 20
    crossing_instances: int = 3
    gt_types: list[str] = field(default_factory=lambda: list(lab.GT_TYPES))
    symmetries: list[str] = field(default_factory=lambda: list(lab.SYMMETRIES))
    gt_strength: float = 4.0
    gt_residual_scale: float = 0.1
    oracle_cap: int = 8
    seed: int = 0
    out: str = "out"
    jobs: int = 1
    timestamp: bool = True
    plots: bool = True

    @classmethod
    def from_file(cls, path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}", EXIT_BAD_INPUT) from exc
        if not isinstance(data, dict):
            raise UsageError(f"config {path} must be a JSON object", EXIT_BAD_INPUT)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}", EXIT_BAD_INPUT)
        cfg = cls(**data)
        base = Path(path).resolve().parent
        if cfg.dataset is not None and not Path(cfg.dataset).is_absolute():
            cfg.dataset = str(base / cfg.dataset)
        if cfg.predictor and "weights_path" in cfg.predictor:
            wp = Path(cfg.predictor["weights_path"])
            if not wp.is_absolute():
                cfg.predictor = {**cfg.predictor, "weights_path": str(base / wp)}
        return cfg

    def validate(self) -> None:
        problems = []
        if self.metric not in METRIC_IDS:
            problems.append(f"metric must be one of {METRIC_IDS}")
        if self.target not in ("predicted", 0, 1):
            problems.append("target must be 'predicted', 0 or 1")
        for name in ("toy_size", "beam_size", "trials", "lime_samples",
                     "shap_permutations", "intg_steps", "jobs"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if any(B < 1 for B in self.beam_sizes or ()):
            problems.append("beam_sizes must all be >= 1")
        if not self.s_grid or any(s < 0 for s in self.s_grid):
            problems.append("s_grid must be a nonempty list of non-negative scales")
        if self.seed < 0:
            problems.append("seed must be a non-negative integer")
        if problems:
            raise UsageError("invalid config: " + "; ".join(problems), EXIT_BAD_INPUT)

    def explainer_config(self) -> ExplainerConfig:
        return ExplainerConfig(
            lime_samples=self.lime_samples, lime_ridge=self.lime_ridge,
            lime_kernel_width=self.lime_kernel_width,
            lime_exhaustive_limit=self.lime_exhaustive_limit,
            shap_permutations=self.shap_permutations, intg_steps=self.intg_steps,
            seed=self.seed,
        )

    def beam_config(self, beam_size: int | None = None) -> BeamConfig:
        return BeamConfig(beam_size or self.beam_size, self.cache_capacity,
                          self.merge_equivalent)

    def public(self) -> dict:
        """Settings that determine results (output location and worker
        count do not)."""
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("jobs")
        return d


# ---------------------------------------------------------------------------
# shared plumbing


def _load(cfg: RunConfig):
    predictor = io.load_predictor(cfg.predictor)
    if cfg.dataset is None:
        corpus = toy.toy_corpus(cfg.toy_size, seed=cfg.toy_seed)
    else:
        corpus = [x for x, _ in io.load_dataset(cfg.dataset)]
    if cfg.max_instances is not None:
        corpus = corpus[: cfg.max_instances]
    return corpus, predictor


def _resolve_explainers(cfg: RunConfig, predictor, default) -> list[str]:
    names = list(cfg.explainers) if cfg.explainers else list(default)
    for n in names:
        if n not in EXPLAINER_NAMES:
            raise UsageError(
                f"unknown explainer {n!r}; available: {', '.join(EXPLAINER_NAMES)}",
                EXIT_BAD_EXPLAINER,
            )
        if n in GRADIENT_EXPLAINERS and not getattr(predictor, "differentiable", False):
            if cfg.explainers:
                raise UsageError(
                    f"explainer {n!r} needs a differentiable predictor", EXIT_BAD_EXPLAINER
                )
    if not cfg.explainers:
        names = [n for n in names if n not in GRADIENT_EXPLAINERS
                 or getattr(predictor, "differentiable", False)]
    if not names:
        raise UsageError("no explainers selected", EXIT_BAD_EXPLAINER)
    return names


def _metric_columns(cfg: RunConfig) -> list[str]:
    cols = ["explainer", "n", *METRIC_NAMES, "model_calls"]
    return cols + ["seconds"] if cfg.timestamp else cols


def _write_config(cfg: RunConfig, out: Path, command: str) -> None:
    io.write_json(out / "run_config.json", {"command": command, **cfg.public()})


def _run(cfg: RunConfig, corpus, predictor, names, beam=None):
    return lab.run_corpus(corpus, predictor, names, cfg.explainer_config(),
                          beam or cfg.beam_config(), cfg.target, cfg.jobs, cfg.metric)


# ---------------------------------------------------------------------------
# commands


def cmd_explain(cfg: RunConfig, out: Path) -> None:
    corpus, predictor = _load(cfg)
    names = _resolve_explainers(cfg, predictor, ["solver"])
    runs = _run(cfg, corpus, predictor, names)
    records = []
    for i, x in enumerate(corpus):
        rec = {"index": i, "tokens": x.tokens, "score": predictor.score(x),
               "predicted_label": predictor.classify(x), "attributions": {}}
        for n in names:
            r = runs[n][i]
            rec["attributions"][n] = {
                "values": r.attribution,
                "ranks": ranked_importance(r.attribution),
            }
        records.append(rec)
    io.write_jsonl(out / "attributions.jsonl", records)
    sections = {n: [(x.tokens, runs[n][i].attribution) for i, x in enumerate(corpus)]
                for n in names}
    (out / "heatmap.html").write_text(report.render_heatmap(sections, cfg.timestamp),
                                      encoding="utf-8")


def cmd_benchmark(cfg: RunConfig, out: Path) -> None:
    corpus, predictor = _load(cfg)
    names = _resolve_explainers(cfg, predictor, EXPLAINER_NAMES)
    runs = _run(cfg, corpus, predictor, names)
    rows = lab.summarize(runs)
    io.write_csv(out / "metrics.csv", rows, _metric_columns(cfg))
    curves = lab.mean_curves(runs)
    io.write_json(out / "curves.json", curves)
    if cfg.plots:
        report.plot_curves(curves, out / "curves.png")
    if cfg.beam_sizes:
        ablation = []
        for B in cfg.beam_sizes:
            r = _run(cfg, corpus, predictor, ["solver"], cfg.beam_config(B))
            row = lab.summarize(r)[0]
            row["beam_size"] = B
            ablation.append(row)
        io.write_csv(out / "beam_ablation.csv", ablation,
                     ["beam_size"] + _metric_columns(cfg)[1:])
        if cfg.plots:
            report.plot_beam_ablation(ablation, out / "beam_ablation.png")


def cmd_gt_eval(cfg: RunConfig, out: Path) -> None:
    corpus, predictor = _load(cfg)
    if any(x.kind != "text" for x in corpus):
        raise UsageError("ground-truth evaluation needs a text dataset", EXIT_BAD_INPUT)
    residual = predictor.weights if isinstance(predictor, LexiconPredictor) else None
    if residual is None and cfg.dataset is None:
        residual = toy.lexicon_predictor().weights
    rows = []
    for gt_type in cfg.gt_types:
        for symmetry in cfg.symmetries:
            try:
                spec = lab.GroundTruthSpec(gt_type, symmetry, seed=cfg.seed)
            except ValueError as exc:
                raise UsageError(str(exc), EXIT_BAD_INPUT) from exc
            gt = lab.build_ground_truth(corpus, spec)
            induced = lab.induced_predictor(spec, cfg.gt_strength, residual,
                                            cfg.gt_residual_scale)
            names = _resolve_explainers(
                cfg, induced, ["occlusion", "lime", "shap", "solver", "random"]
            )
            scores, _ = lab.score_ground_truth(gt, induced, names, cfg.explainer_config(),
                                               cfg.beam_config(), cfg.target, cfg.jobs)
            chance = [lab.hypergeometric_precision(len(g.instance), len(g.words))[0]
                      for g in gt.included]
            chance_pr = float(np.mean(chance)) if chance else None
            for sc in scores:
                rows.append({
                    "gt_type": gt_type, "symmetry": symmetry, "explainer": sc.explainer,
                    "precision": sc.precision, "normalized_rank": sc.normalized_rank,
                    "n_scored": sc.n_scored, "n_excluded": sc.n_excluded,
                    "chance_precision": chance_pr,
                })
    io.write_csv(out / "gt_scores.csv", rows,
                 ["gt_type", "symmetry", "explainer", "precision", "normalized_rank",
                  "n_scored", "n_excluded", "chance_precision"])
    if cfg.plots:
        report.plot_gt_scores(rows, out / "gt_scores.png")


def cmd_perturb(cfg: RunConfig, out: Path) -> None:
    corpus, predictor = _load(cfg)
    names = _resolve_explainers(cfg, predictor, EXPLAINER_NAMES)
    runs = _run(cfg, corpus, predictor, names)
    explanations = {n: [r.attribution for r in runs[n]] for n in names}
    sweep = lab.perturbation_sweep(corpus, explanations, predictor, cfg.s_grid, cfg.trials,
                                   cfg.seed, cfg.target, cfg.crossing_instances)
    io.write_csv(out / "perturb.csv", sweep.rows,
                 ["explainer", "s", "evaluations", *METRIC_NAMES])
    io.write_json(out / "crossings.json", sweep.crossings)
    if cfg.plots:
        report.plot_perturbation(sweep.rows, out / "perturb.png")
        report.plot_crossings(sweep.crossings, out / "crossing.png")


_METRIC_FN = {"delta": comp_suff_diff, "comp": comprehensiveness,
              "suff": lambda x, e, f, s: -sufficiency(x, e, f, s)}


def cmd_oracle_check(cfg: RunConfig, out: Path) -> None:
    corpus, predictor = _load(cfg)
    rows = []
    for i, x in enumerate(corpus):
        if len(x) > cfg.oracle_cap:
            continue
        f = for_target(predictor, x, cfg.target)
        scorer = SubsetScorer(x, f, None)
        _, best = exhaustive_oracle(x, f, cfg.metric, cfg.oracle_cap, scorer)
        res = run_beam(x, f, cfg.beam_config(), cfg.metric, scorer)
        found = _METRIC_FN[cfg.metric](x, res.attribution, f, scorer)
        rows.append({"index": i, "L": len(x), "metric": cfg.metric, "oracle": best,
                     "beam": found, "gap": best - found,
                     "optimal": int(abs(best - found) <= 1e-12)})
    io.write_csv(out / "oracle_check.csv", rows,
                 ["index", "L", "metric", "oracle", "beam", "gap", "optimal"])
    n_opt = sum(r["optimal"] for r in rows)
    log.info("beam search matched the exhaustive optimum on %d of %d instances",
             n_opt, len(rows))


COMMANDS = {
    "explain": (cmd_explain, "attribute every instance; write attributions.jsonl and heatmap.html"),
    "benchmark": (cmd_benchmark, "score explainers on all metrics; write metrics.csv and curves.json"),
    "gt-eval": (cmd_gt_eval, "ground-truth recovery; write gt_scores.csv"),
    "perturb": (cmd_perturb, "rank-perturbation sweep; write perturb.csv and crossings.json"),
    "oracle-check": (cmd_oracle_check, "compare beam search to exhaustive search; write oracle_check.csv"),
}


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # defined on the main parser and every subparser so flags work in either
    # position; SUPPRESS keeps an absent subparser flag from masking one given earlier
    d = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", default=d, help="JSON file with RunConfig keys")
    g.add_argument("--seed", type=int, default=d, help="root seed (default 0)")
    g.add_argument("--out", default=d, help="output directory (default ./out)")
    g.add_argument("--jobs", type=int, default=d, help="worker processes (default 1)")
    g.add_argument("--no-timestamp", action="store_true", default=d,
                   help="omit wall-clock columns and the HTML timestamp")
    g.add_argument("--dataset", default=d, help="JSON Lines dataset (default: toy corpus)")
    g.add_argument("--predictor", default=d, help="JSON predictor spec file")
    g.add_argument("--explainers", default=d,
                   help=f"comma-separated subset of {','.join(EXPLAINER_NAMES)}")
    g.add_argument("--beam-size", type=int, default=d, help="beam size B (default 100)")
    g.add_argument("--no-plots", action="store_true", default=d, help="skip PNG figures")
    g.add_argument("-v", "--verbose", action="store_true", default=d)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faithsearch",
        description="Faithfulness-optimal feature attribution and explainer benchmarks.",
        parents=[_global_flags(suppress=False)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, help=help_text, description=help_text,
                       parents=[_global_flags(suppress=True)])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.jobs is not None:
        cfg.jobs = max(1, args.jobs)
    if args.no_timestamp:
        cfg.timestamp = False
    if args.no_plots:
        cfg.plots = False
    if args.dataset is not None:
        cfg.dataset = args.dataset
    if args.beam_size is not None:
        cfg.beam_size = args.beam_size
    if args.explainers is not None:
        cfg.explainers = [n.strip() for n in args.explainers.split(",") if n.strip()]
    if args.predictor is not None:
        p = Path(args.predictor)
        try:
            spec = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read predictor spec {p}: {exc}", EXIT_BAD_INPUT) from exc
        if "weights_path" in spec and not Path(spec["weights_path"]).is_absolute():
            spec["weights_path"] = str(p.resolve().parent / spec["weights_path"])
        cfg.predictor = spec
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    fn, _ = COMMANDS[args.command]
    try:
        cfg = resolve_config(args)
        cfg.validate()
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        fn(cfg, out)
        _write_config(cfg, out, args.command)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except io.DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
