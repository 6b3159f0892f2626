"""Exact match, bootstrap significance, oracle combination, corpus stats."""

import numpy as np
import pytest

from conftest import make_discussion, make_example, make_utterance
from discforge.evaluate import (
    best_exact_match,
    corpus_exact_match,
    dataset_stats,
    exact_match,
    paired_bootstrap,
)
from discforge.records import Candidate


class TestExactMatch:
    def test_equal(self):
        assert exact_match(["a", ";"], ("a", ";"))

    def test_length_mismatch(self):
        assert not exact_match(["a"], ["a", ";"])

    def test_element_mismatch(self):
        assert not exact_match(["a", ";"], ["a", ","])

    def test_empty(self):
        assert exact_match([], [])


def cand(ex_id, tokens, source="model"):
    return Candidate(example_id=ex_id, candidate_tokens=tuple(tokens), source=source)


class TestCorpusExactMatch:
    def setup_method(self):
        self.examples = [
            make_example(ex_id="e1", fixed=("int", "x", ";")),
            make_example(ex_id="e2", fixed=("int", "y", ";")),
            make_example(ex_id="e3", fixed=("int", "z", ";")),
        ]

    def test_rate_and_missing(self):
        candidates = {
            "e1": cand("e1", ("int", "x", ";")),
            "e2": cand("e2", ("wrong",)),
        }
        report = corpus_exact_match(self.examples, candidates, representation="title")
        assert report.exact_match_rate == 33.3
        assert report.missing == 1
        assert report.per_example == {"e1": True, "e2": False, "e3": False}
        assert report.representation == "title"

    def test_raw_strings_retokenizes(self):
        candidates = {"e1": cand("e1", ("int x;",))}
        strict = corpus_exact_match(self.examples, candidates)
        loose = corpus_exact_match(self.examples, candidates, raw_strings=True)
        assert strict.per_example["e1"] is False
        assert loose.per_example["e1"] is True

    def test_rate_rounds_to_one_decimal(self):
        examples = [make_example(ex_id=f"e{i}", fixed=("ok", ";")) for i in range(293)]
        candidates = {
            f"e{i}": cand(f"e{i}", ("ok", ";") if i < 106 else ("no", ";"))
            for i in range(293)
        }
        assert corpus_exact_match(examples, candidates).exact_match_rate == 36.2


class TestPairedBootstrap:
    def test_identical_vectors_center_on_half(self):
        v = [True] * 60 + [False] * 40
        for seed in range(3):
            r = paired_bootstrap(v, v, n_samples=300, sample_size=200, seed=seed)
            assert r.p_value == 0.5
            assert r.delta == 0.0

    def test_clear_gap_is_significant(self):
        rng = np.random.default_rng(0)
        a = rng.random(1000) < 0.6
        b = rng.random(1000) < 0.4
        r = paired_bootstrap(a, b, n_samples=1000, sample_size=1000, seed=0)
        assert r.p_value < 0.05

    def test_same_seed_reproduces(self):
        rng = np.random.default_rng(1)
        a = rng.random(300) < 0.5
        b = rng.random(300) < 0.45
        r1 = paired_bootstrap(a, b, n_samples=400, sample_size=200, seed=9)
        r2 = paired_bootstrap(a, b, n_samples=400, sample_size=200, seed=9)
        assert r1 == r2

    def test_parallel_is_bit_identical(self):
        rng = np.random.default_rng(2)
        a = rng.random(500) < 0.5
        b = rng.random(500) < 0.48
        serial = paired_bootstrap(a, b, n_samples=600, sample_size=300, seed=3, n_jobs=1)
        for jobs in (2, 3, 7):
            parallel = paired_bootstrap(
                a, b, n_samples=600, sample_size=300, seed=3, n_jobs=jobs
            )
            assert parallel.p_value == serial.p_value

    def test_negative_delta_instructs_swap(self):
        a = [False, False, True]
        b = [True, True, True]
        with pytest.raises(ValueError, match="swap"):
            paired_bootstrap(a, b, n_samples=10, sample_size=10)

    def test_zero_samples_rejected(self):
        with pytest.raises(ValueError, match="n_samples"):
            paired_bootstrap([True], [True], n_samples=0)

    def test_misaligned_vectors_rejected(self):
        with pytest.raises(ValueError, match="aligned"):
            paired_bootstrap([True, False], [True], n_samples=10)

    def test_empty_vectors_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            paired_bootstrap([], [], n_samples=10)

    def test_report_fields(self):
        v = [True, False, True, False]
        r = paired_bootstrap(v, v, n_samples=50, sample_size=20, seed=4)
        d = r.to_dict()
        assert d["n"] == 4 and d["n_samples"] == 50 and d["sample_size"] == 20
        assert d["seed"] == 4 and d["rate_a"] == 50.0 and d["rate_b"] == 50.0


class TestBestExactMatch:
    def setup_method(self):
        self.examples = [
            make_example(ex_id=f"e{i}", fixed=("v", str(i), ";")) for i in range(4)
        ]

    def _cands(self, hits, source):
        return {
            f"e{i}": cand(f"e{i}", ("v", str(i), ";") if i in hits else ("x",), source)
            for i in range(4)
        }

    def test_union_of_sources(self):
        report = best_exact_match(
            self.examples,
            {"s1": self._cands({0, 1}, "s1"), "s2": self._cands({1, 2}, "s2")},
        )
        assert report["sources"] == {"s1": 50.0, "s2": 50.0}
        assert report["best_exact_match_rate"] == 75.0
        assert report["matched_by"]["e1"] == ["s1", "s2"]

    def test_singleton_equals_plain_rate(self):
        single = {"only": self._cands({0, 3}, "only")}
        report = best_exact_match(self.examples, single)
        plain = corpus_exact_match(self.examples, single["only"])
        assert report["best_exact_match_rate"] == plain.exact_match_rate

    def test_monotone_in_added_sources(self):
        base = {"s1": self._cands({0}, "s1")}
        more = dict(base, s2=self._cands(set(), "s2"), s3=self._cands({2}, "s3"))
        r_base = best_exact_match(self.examples, base)["best_exact_match_rate"]
        r_more = best_exact_match(self.examples, more)["best_exact_match_rate"]
        assert r_more >= r_base
        assert r_more >= max(best_exact_match(self.examples, more)["sources"].values())

    def test_no_sources_rejected(self):
        with pytest.raises(ValueError):
            best_exact_match(self.examples, {})


class TestDatasetStats:
    def setup_method(self):
        d1 = make_discussion(
            disc_id="p/q#1",
            project="p/q",
            number=1,
            title="Crash on startup",
            created_at="2014-05-01T10:00:00Z",
            utterances=[
                make_utterance(0, "2014-05-01T10:00:00Z", "it crashes hard"),
                make_utterance(1, "2014-05-20T10:00:00Z", "me too"),
            ],
        )
        d2 = make_discussion(
            disc_id="p/q#2",
            project="p/q",
            number=2,
            title="toml4j bug",
            created_at="2014-05-03T10:00:00Z",
            utterances=[make_utterance(0, "2014-05-03T10:00:00Z", "breaks")],
        )
        self.discussions = {d.id: d for d in (d1, d2)}
        self.examples = [
            make_example(
                ex_id="e1",
                split="train",
                commit_ts="2014-05-10T12:00:00Z",
                buggy=("a", "=", "1", ";"),
                fixed=("a", "=", "2", ";"),
                oracle=("fix", "bug"),
                discussion_ids=("p/q#1",),
            ),
            make_example(
                ex_id="e2",
                split="test",
                commit_ts="2014-05-30T12:00:00Z",
                buggy=("x", "(", ")"),
                fixed=("y", "(", ")"),
                discussion_ids=("p/q#1", "p/q#2"),
            ),
        ]

    def test_overall_hand_computed(self):
        stats = dataset_stats(self.examples, self.discussions)
        overall = stats["overall"]
        assert overall["num_examples"] == 2
        assert overall["num_linked_discussions"] == 2
        assert overall["avg_discussions_per_example"] == 1.5
        # (ex1-d1: 1 utterance post-filter) (ex2-d1: 2) (ex2-d2: 1) -> 4/3
        assert overall["avg_utterances_per_discussion"] == 1.3
        assert overall["avg_tokens_buggy"] == 3.5
        assert overall["avg_tokens_fixed"] == 3.5
        # titles seen per linked discussion: 3, 3, 2 -> 8/3
        assert overall["avg_tokens_title"] == 2.7
        # utterances: 3 (ex1-d1u0), 3, 2 (ex2-d1), 1 (ex2-d2) -> 9/4
        assert overall["avg_tokens_utterance"] == 2.2
        assert overall["avg_tokens_oracle_msg"] == 2.0
        assert overall["avg_tokens_description"] is None

    def test_splits(self):
        stats = dataset_stats(self.examples, self.discussions)
        train = stats["splits"]["train"]
        assert train["num_examples"] == 1
        assert train["avg_utterances_per_discussion"] == 1.0
        assert train["avg_tokens_utterance"] == 3.0
        test = stats["splits"]["test"]
        assert test["avg_discussions_per_example"] == 2.0
        assert test["avg_tokens_title"] == 2.5
        valid = stats["splits"]["valid"]
        assert valid["num_examples"] == 0
        assert valid["avg_tokens_buggy"] is None

    def test_descriptions_counted_when_given(self):
        descriptions = {"e1": [("p/q#1", ("remove", "trailing", "newlines"))]}
        stats = dataset_stats(
            self.examples, self.discussions, descriptions=descriptions
        )
        assert stats["overall"]["avg_tokens_description"] == 3.0

    def test_temporal_filter_shapes_the_numbers(self):
        # move e2's commit before d1's second comment: that comment vanishes
        examples = [
            self.examples[0],
            make_example(
                ex_id="e2",
                split="test",
                commit_ts="2014-05-10T12:00:00Z",
                buggy=("x", "(", ")"),
                fixed=("y", "(", ")"),
                discussion_ids=("p/q#1", "p/q#2"),
            ),
        ]
        stats = dataset_stats(examples, self.discussions)
        # pairs now retain 1, 1, 1 utterances
        assert stats["overall"]["avg_utterances_per_discussion"] == 1.0
