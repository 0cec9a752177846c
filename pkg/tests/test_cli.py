import csv
import json

import pytest

from storychains import cli
from storychains.analysis import Confusion, LabeledPair, PairPrediction, evaluate
from storychains.community import read_tree
from storychains.config import ConfigError, load_config
from storychains.synthetic import generate

WINDOW = 3 * 86_400


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    syn = generate(n_stories=6, n_noise=120, story_sizes=(3, 10), days=12, seed=4)
    corpus = root / "corpus.jsonl"
    syn.write_jsonl(corpus)
    labels = root / "labels.csv"
    with labels.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id_a", "id_b", "related"])
        for a, b, rel in syn.labeled_pairs(WINDOW):
            w.writerow([a, b, int(rel)])
    return root, corpus, labels, syn


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_ingest_ok_and_cache(workspace, tmp_path, capsys):
    _, corpus, _, syn = workspace
    assert run("ingest", "--corpus", corpus, "--output-dir", tmp_path) == 0
    out = capsys.readouterr().out
    assert f"ingested {len(syn.corpus)} articles" in out and "cache hit" not in out
    assert run("ingest", "--corpus", corpus, "--output-dir", tmp_path) == 0
    assert "cache hit" in capsys.readouterr().out


def test_missing_corpus(tmp_path, capsys):
    assert run("ingest", "--corpus", tmp_path / "nope.jsonl", "--output-dir", tmp_path) == 2
    assert "nope.jsonl" in capsys.readouterr().err


def test_rejects_reported_on_stderr(tmp_path, capsys):
    path = tmp_path / "c.jsonl"
    good = {"id": "a", "source": "s", "title": "t", "body": "b", "published": "2013-04-15T10:00:00Z"}
    path.write_text(json.dumps(good) + "\n" + json.dumps({"id": "b"}) + "\n")
    assert run("ingest", "--corpus", path, "--output-dir", tmp_path / "o") == 0
    captured = capsys.readouterr()
    assert "1 record(s) rejected" in captured.err and "line 2" in captured.err
    assert "ingested 1 articles (1 rejected)" in captured.out


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run("ingest", "--no-such-flag")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run()
    assert exc.value.code == 1
    assert run("ingest", "--window-days", "-1") == 1
    assert run("ingest", "--threshold-ensemble", "1.5") == 1
    assert run("ingest", "--config", tmp_path / "none.cfg") == 1


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nwindow_days = 2\nthreshold_ensemble = 0.5  # fixed\nseed = 7\n")
    c = load_config(cfg, {"seed": "9"})
    assert (c.window_days, c.threshold_ensemble, c.seed) == (2.0, "0.5", 9)
    assert c.fixed_thresholds() == {"keyword": None, "bm25f": None, "ensemble": 0.5}
    cfg.write_text("bogus = 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        load_config(cfg)


def test_defaults_follow_published_settings():
    c = load_config()
    assert (c.window_days, c.keyword_top_k, c.keyword_min_score, c.expansion_terms) == (3.0, 100, 100.0, 20)
    assert (c.boost_title, c.boost_body, c.teleport, c.seed) == (2.0, 1.0, 0.15, 42)


def test_cluster_is_deterministic(workspace, tmp_path):
    _, corpus, _, _ = workspace
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert run("cluster", "--corpus", corpus, "--output-dir", out) == 0
        outs.append(out)
    for name in ("edges.tsv", "tree.txt", "summary.txt", "thresholds.tsv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_theta_one_gives_singletons(workspace, tmp_path, caplog):
    _, corpus, _, syn = workspace
    assert run("cluster", "--corpus", corpus, "--output-dir", tmp_path, "--threshold-ensemble", "1.0") == 0
    assert "singleton" in caplog.text
    tree = read_tree(tmp_path / "tree.txt")
    assert len(tree.top_modules) == len(syn.corpus)
    assert (tmp_path / "edges.tsv").read_text() == ""


def test_eval_matches_hand_count(workspace, tmp_path, capsys):
    _, corpus, labels, _ = workspace
    assert run("run", "--corpus", corpus, "--labels", labels, "--output-dir", tmp_path) == 0
    truth = {}
    with labels.open() as fh:
        for row in csv.DictReader(fh):
            truth[(row["id_a"], row["id_b"])] = row["related"] == "1"
    counts = {c: [0, 0, 0, 0] for c in ("keyword", "bm25f", "ensemble")}
    with (tmp_path / "pair_predictions.tsv").open() as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            rel = truth[(row["id_a"], row["id_b"])]
            for c in counts:
                pred = row[f"{c}_related"] == "1"
                counts[c][[pred and rel, not pred and not rel, pred and not rel, not pred and rel].index(True)] += 1
    rows = {r[0]: r[1:] for r in csv.reader((tmp_path / "eval_report.csv").open())}
    for k, c in enumerate(counts):
        tp, tn, fp, fn = counts[c]
        assert [int(rows[n][k]) for n in ("True Positive", "True Negative", "False Positive", "False Negative")] \
            == [tp, tn, fp, fn]
        assert int(rows["N article pairs"][k]) == len(truth)
    for name in ("cluster_sizes.txt", "association.txt", "followup_histogram.csv", "eval_report.txt"):
        assert (tmp_path / name).is_file()


def test_perfect_and_inverted_predictors():
    labels = [LabeledPair("a", "b", True), LabeledPair("a", "c", False), LabeledPair("b", "c", True)]
    perfect = [PairPrediction(p.id_a, p.id_b, p.related, p.related, p.related) for p in labels]
    inverted = [PairPrediction(p.id_a, p.id_b, not p.related, not p.related, not p.related) for p in labels]
    c = evaluate(perfect, labels).confusion["ensemble"]
    assert c.precision == c.recall == 1.0
    c = evaluate(inverted, labels).confusion["ensemble"]
    assert c == Confusion(tp=0, tn=0, fp=1, fn=2) and c.precision == 0.0


def test_malformed_labels(workspace, tmp_path, capsys):
    _, corpus, _, _ = workspace
    bad = tmp_path / "bad.csv"
    bad.write_text("id_a,id_b,related\na00000,a00001,1\na00000,a00002,yes\n")
    assert run("eval", "--corpus", corpus, "--labels", bad, "--output-dir", tmp_path) == 2
    assert ":3:" in capsys.readouterr().err


def test_unknown_label_id(workspace, tmp_path, capsys):
    _, corpus, _, _ = workspace
    bad = tmp_path / "bad.csv"
    bad.write_text("id_a,id_b,related\na00000,ghost,1\n")
    assert run("eval", "--corpus", corpus, "--labels", bad, "--output-dir", tmp_path) == 2
    assert "ghost" in capsys.readouterr().err


def test_stats_needs_tree(workspace, tmp_path, capsys):
    _, corpus, _, _ = workspace
    assert run("stats", "--corpus", corpus, "--output-dir", tmp_path) == 2
    assert "tree" in capsys.readouterr().err


def test_stats_rerun_is_idempotent(workspace, tmp_path):
    _, corpus, _, _ = workspace
    assert run("cluster", "--corpus", corpus, "--output-dir", tmp_path) == 0
    assert run("stats", "--corpus", corpus, "--output-dir", tmp_path) == 0
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert run("stats", "--corpus", corpus, "--output-dir", tmp_path, "--stats-level", "leaf") == 0
    assert run("stats", "--corpus", corpus, "--output-dir", tmp_path) == 0
    assert {p.name: p.read_bytes() for p in tmp_path.iterdir()} == first
