import csv
import json
import re

import pytest

from faithsearch import report
from faithsearch.cli import RunConfig, build_parser, main
from faithsearch.io import load_dataset, load_predictor, DatasetError

SMALL = {"toy_size": 12, "trials": 3, "beam_size": 10, "lime_samples": 200,
         "shap_permutations": 40}


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL))
    return path


@pytest.fixture
def lexicon_files(tmp_path):
    weights = tmp_path / "weights.json"
    weights.write_text(json.dumps({"weights": {"great": 2.0, "bad": -2.0}, "bias": 0.0}))
    spec = tmp_path / "predictor.json"
    spec.write_text(json.dumps({"type": "lexicon", "weights_path": "weights.json"}))
    data = tmp_path / "data.jsonl"
    data.write_text(json.dumps({"tokens": ["great", "movie"], "label": 1}) + "\n")
    return spec, data


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(*args):
    return main([str(a) for a in args])


class TestParsing:
    def test_global_flags_either_side(self, tmp_path):
        p = build_parser()
        a = p.parse_args(["--seed", "4", "benchmark", "--out", str(tmp_path)])
        assert a.seed == 4 and a.out == str(tmp_path)
        b = p.parse_args(["explain", "--seed", "5", "--no-timestamp"])
        assert b.seed == 5 and b.no_timestamp

    def test_help_lists_commands(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["--help"])
        out = capsys.readouterr().out
        for cmd in ("explain", "benchmark", "gt-eval", "perturb", "oracle-check"):
            assert cmd in out

    def test_unknown_config_key(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"beam": 3}))
        assert run("explain", "--config", bad, "--out", tmp_path / "o") == 2

    def test_invalid_value(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"beam_size": 0}))
        assert run("explain", "--config", bad, "--out", tmp_path / "o") == 2

    def test_config_roundtrip(self, tmp_path):
        cfg = RunConfig(seed=3, explainers=["lime"])
        path = tmp_path / "c.json"
        d = cfg.public()
        path.write_text(json.dumps(d))
        assert RunConfig.from_file(path).public() == d


class TestExitCodes:
    def test_unreadable_dataset(self, tmp_path, capsys):
        assert run("explain", "--dataset", tmp_path / "missing.jsonl", "--out", tmp_path) == 2
        assert "cannot read dataset" in capsys.readouterr().err

    def test_malformed_dataset(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"tokens": []}\n')
        assert run("benchmark", "--dataset", bad, "--out", tmp_path) == 2

    def test_unknown_explainer(self, tmp_path, config):
        assert run("explain", "--config", config, "--explainers", "attention",
                   "--out", tmp_path) == 3

    def test_gradient_explainer_on_lexicon(self, tmp_path, lexicon_files):
        spec, data = lexicon_files
        assert run("explain", "--predictor", spec, "--dataset", data, "--explainers", "intg",
                   "--out", tmp_path) == 3


class TestExplain:
    def test_solver_records(self, tmp_path, config):
        assert run("explain", "--config", config, "--out", tmp_path, "--no-timestamp") == 0
        lines = (tmp_path / "attributions.jsonl").read_text().splitlines()
        assert len(lines) == SMALL["toy_size"]
        for line in lines:
            rec = json.loads(line)
            sol = rec["attributions"]["solver"]
            L = len(rec["tokens"])
            assert sorted(sol["ranks"]) == list(range(1, L + 1))
            k = sol["ranks"][0] - sol["values"][0]
            assert [r - k for r in sol["ranks"]] == sol["values"]
        html = (tmp_path / "heatmap.html").read_text()
        assert not html.startswith("<!-- generated")

    def test_timestamp_header(self, tmp_path, config):
        assert run("explain", "--config", config, "--out", tmp_path) == 0
        assert (tmp_path / "heatmap.html").read_text().startswith("<!-- generated")

    def test_heatmap_shading(self, tmp_path, lexicon_files):
        spec, data = lexicon_files
        assert run("explain", "--predictor", spec, "--dataset", data, "--explainers",
                   "occlusion", "--out", tmp_path, "--no-timestamp") == 0
        html = (tmp_path / "heatmap.html").read_text()
        colors = dict((tok, col) for col, tok in
                      re.findall(r'background-color:(#[0-9a-f]{6})"[^>]*>([^<]+)<', html))

        def darkness(hex_color):
            return 765 - sum(int(hex_color[i:i + 2], 16) for i in (1, 3, 5))

        assert darkness(colors["great"]) > darkness(colors["movie"]) == 0
        r, g, b = (int(colors["great"][i:i + 2], 16) for i in (1, 3, 5))
        assert r > g and r > b


def test_zero_attribution_is_uniform():
    colors = report.instance_colors([0.0, 0.0, 0.0])
    assert len(set(colors)) == 1
    assert report.instance_colors([1.0, -1.0]) == [report.token_color(1, 1), report.token_color(-1, 1)]
    blue = report.token_color(-1.0, 1.0)
    assert int(blue[5:7], 16) > int(blue[1:3], 16)


class TestBenchmark:
    def test_tables(self, tmp_path, config):
        assert run("benchmark", "--config", config, "--out", tmp_path, "--no-timestamp") == 0
        rows = read_csv(tmp_path / "metrics.csv")
        assert [r["explainer"] for r in rows] == ["grad", "intg", "lime", "shap", "occlusion",
                                                  "solver", "random"]
        assert "seconds" not in rows[0]
        curves = json.loads((tmp_path / "curves.json").read_text())
        assert set(curves["explainers"]) == {r["explainer"] for r in rows}
        assert (tmp_path / "curves.png").stat().st_size > 0

    def test_seconds_column_with_timestamps(self, tmp_path, config):
        assert run("benchmark", "--config", config, "--out", tmp_path, "--explainers",
                   "occlusion", "--no-plots") == 0
        assert float(read_csv(tmp_path / "metrics.csv")[0]["seconds"]) >= 0
        assert not (tmp_path / "curves.png").exists()

    def test_beam_ablation(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({**SMALL, "beam_sizes": [1, 4]}))
        assert run("benchmark", "--config", cfg, "--explainers", "solver",
                   "--out", tmp_path, "--no-timestamp") == 0
        rows = read_csv(tmp_path / "beam_ablation.csv")
        assert [r["beam_size"] for r in rows] == ["1", "4"]
        assert (tmp_path / "beam_ablation.png").exists()

    def test_tabular_dataset(self, tmp_path):
        data = tmp_path / "tab.jsonl"
        rec = {"fields": {"age": 50, "hours": 20}, "baselines": {"age": 30, "hours": 40}}
        data.write_text(json.dumps(rec) + "\n")
        spec = tmp_path / "p.json"
        spec.write_text(json.dumps({"type": "tabular_logistic",
                                    "weights": {"weights": {"age": 0.1, "hours": 0.05}}}))
        assert run("benchmark", "--dataset", data, "--predictor", spec,
                   "--out", tmp_path, "--no-timestamp", "--no-plots") == 0
        names = [r["explainer"] for r in read_csv(tmp_path / "metrics.csv")]
        assert "grad" not in names and "solver" in names


class TestOtherCommands:
    def test_perturb(self, tmp_path, config):
        assert run("perturb", "--config", config, "--out", tmp_path, "--no-timestamp",
                   "--explainers", "occlusion,random") == 0
        rows = read_csv(tmp_path / "perturb.csv")
        assert len(rows) == 10
        assert [r["s"] for r in rows if r["explainer"] == "occlusion"] == ["0", "1", "2", "3", "4"]
        assert json.loads((tmp_path / "crossings.json").read_text())
        for png in ("perturb.png", "crossing.png"):
            assert (tmp_path / png).exists()

    def test_perturb_zero_row_matches_benchmark(self, tmp_path, config):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("perturb", "--config", config, "--out", a, "--no-timestamp", "--no-plots") == 0
        assert run("benchmark", "--config", config, "--out", b, "--no-timestamp", "--no-plots") == 0
        bench = {r["explainer"]: r for r in read_csv(b / "metrics.csv")}
        for r in read_csv(a / "perturb.csv"):
            if r["s"] == "0":
                for m in ("comp", "suff", "delta", "df_mit", "df_frac", "rank_del", "rank_ins"):
                    assert r[m] == bench[r["explainer"]][m]

    def test_gt_eval(self, tmp_path, config):
        assert run("gt-eval", "--config", config, "--out", tmp_path, "--no-timestamp") == 0
        rows = read_csv(tmp_path / "gt_scores.csv")
        assert len({(r["gt_type"], r["symmetry"]) for r in rows}) == 6
        for r in rows:
            if r["symmetry"] == "asymmetric" and r["gt_type"] != "replacement":
                assert int(r["n_excluded"]) > 0
            if r["gt_type"] == "short_addition" and r["explainer"] == "solver":
                assert float(r["precision"]) == 1.0

    def test_oracle_check(self, tmp_path, config):
        assert run("oracle-check", "--config", config, "--out", tmp_path) == 0
        rows = read_csv(tmp_path / "oracle_check.csv")
        assert rows and all(int(r["L"]) <= 8 for r in rows)
        for r in rows:
            assert float(r["beam"]) <= float(r["oracle"]) + 1e-12


class TestIO:
    def test_load_dataset(self, lexicon_files):
        _, data = lexicon_files
        ((x, y),) = load_dataset(data)
        assert x.tokens == ["great", "movie"] and y == 1

    def test_empty_dataset(self, tmp_path):
        p = tmp_path / "e.jsonl"
        p.write_text("\n")
        with pytest.raises(DatasetError):
            load_dataset(p)

    def test_predictor_types(self, tmp_path):
        with pytest.raises(DatasetError):
            load_predictor({"type": "transformer"})
        with pytest.raises(DatasetError):
            load_predictor({"type": "lexicon"})
        f = load_predictor({"type": "linear_embed", "weights": {
            "embeddings": {"a": [1.0, 0.0]}, "weight": [1.0, -1.0]}})
        assert f.differentiable
