import json
import math

import pytest

import legalir


def test_tokenize_ngrams():
    assert legalir.tokenize("The Court, the court") == ["the", "court", "the", "court"]
    assert legalir.tokenize("a b c", ngram_lo=1, ngram_hi=2) == ["a", "b", "c", "a_b", "b_c"]
    with pytest.raises(legalir.UsageError):
        legalir.tokenize("x", ngram_lo=2, ngram_hi=1)


def test_index_search_bm25_hand_value():
    idx = legalir.Index([("d1", "a b a"), ("d2", "b c")])
    assert idx.num_docs == 2
    assert idx.avgdl == pytest.approx(2.5)
    assert idx.doc_freq("b") == 2
    hits = idx.search("a", k1=1.2, b=0.75)
    assert [h[0] for h in hits] == ["d1", "d2"]
    want = math.log(2.0) * 2 * 2.2 / (2 + 1.2 * (0.25 + 0.75 * 3 / 2.5))
    assert hits[0][1] == pytest.approx(want, abs=1e-12)
    qld = idx.search("a b zzz", scorer="qld", mu=1.0)
    assert qld[0][1] == pytest.approx(math.log(2.4 / 4.0) + math.log(1.4 / 4.0), abs=1e-12)


def test_metrics_worked_examples():
    runs = {"q1": [("A", 2.0), ("B", 1.0)], "q2": [("D", 1.0)]}
    qrels = {"q1": {"A", "C"}, "q2": {"D"}}
    micro = legalir.micro_f1(runs, qrels)
    assert (micro["tp"], micro["fp"], micro["fn"]) == (2, 1, 1)
    assert round(micro["f_measure"], 4) == 0.6667
    macro = legalir.macro_f2({"q1": [("A", 1.0), ("X", 0.5)]}, {"q1": {"A"}})
    assert round(macro["f_measure"], 4) == 0.8333
    assert legalir.ndcg_at_k([0, 1], 2) == pytest.approx(1 / math.log2(3))


def test_postprocess_filters():
    runs = {"q": [("a", 1.0), ("b", 0.9), ("c", 0.4), ("d", 0.3)]}
    assert [d for d, _ in legalir.dynamic_cutoff(runs, p=0.46, h=7, l=1)["q"]] == ["a", "b"]
    assert [d for d, _ in legalir.dynamic_cutoff(runs, p=0.99, h=7, l=3)["q"]] == ["a", "b", "c"]
    assert len(legalir.threshold_cutoff(runs, 0.95)["q"]) == 1
    dup_runs = {"q1": [("x", 1.0)], "q2": [("x", 1.0), ("y", 0.5)]}
    kept, refilled = legalir.filter_duplicates(dup_runs, t=1, s=1)
    assert [d for d, _ in kept["q2"]] == ["y"]
    assert refilled == {}
    with pytest.raises(legalir.UsageError):
        legalir.dynamic_cutoff(runs, p=0.5, h=2, l=3)


def test_preprocess_case():
    doc = legalir.preprocess_case("c1", "Heard 2010-05-03.\n[1] The FRAGMENT_SUPPRESSED appeal.")
    assert doc["trial_date"] == "2010-05-03"
    assert doc["placeholder_count"] == 1
    assert "Heard" not in doc["body"]


def test_pipeline_end_to_end(tmp_path):
    cfg = legalir.generate_synthetic(tmp_path / "syn", queries=16, candidates=120, seed=5)
    with open(cfg, "a") as fh:
        fh.write("num_trees = 30\nmin_samples_leaf = 5\nretrieval_depth = 30\ngrid_p = 0:1:0.1\n")
    legalir.run_stage(cfg, "run")
    metrics = json.loads((tmp_path / "syn" / "out" / "metrics.json").read_text())
    assert 0.0 <= metrics["micro_f1"]["f_measure"] <= 1.0
    with pytest.raises(legalir.UsageError):
        legalir.run_stage(cfg, "nope")
    with pytest.raises(legalir.DataError):
        broken = tmp_path / "broken.cfg"
        broken.write_text("corpus_dir = nowhere\nqueries_dir = q\noutput_dir = o\n")
        legalir.run_stage(broken)
