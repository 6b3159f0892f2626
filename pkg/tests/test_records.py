"""Record validation and serialization round trips."""

import pytest

from conftest import make_discussion, make_example, make_utterance
from discforge.records import (
    AttentionTrace,
    BugFixExample,
    Candidate,
    CommitLinkEvent,
    Discussion,
    RecordError,
    Segment,
    ContextSpec,
    make_eval_report,
    normalize_timestamp,
)


class TestNormalizeTimestamp:
    def test_z_suffix(self):
        assert normalize_timestamp("2014-05-01T10:00:00Z") == "2014-05-01T10:00:00Z"

    def test_offset_converted_to_utc(self):
        assert normalize_timestamp("2014-05-01T12:30:00+02:30") == "2014-05-01T10:00:00Z"

    def test_naive_taken_as_utc(self):
        assert normalize_timestamp("2014-05-01 10:00:00") == "2014-05-01T10:00:00Z"

    def test_microseconds_truncated(self):
        assert normalize_timestamp("2014-05-01T10:00:00.999Z") == "2014-05-01T10:00:00Z"

    @pytest.mark.parametrize("bad", ["", "yesterday", "2014-13-40T99:00:00Z", None, 17])
    def test_rejects_garbage(self, bad):
        with pytest.raises(RecordError):
            normalize_timestamp(bad)

    def test_normalized_strings_sort_chronologically(self):
        early = normalize_timestamp("2014-05-01T23:59:59+05:00")
        late = normalize_timestamp("2014-05-01T20:00:00Z")
        assert early < late


class TestDiscussion:
    def test_last_activity_derived_from_latest_utterance(self):
        d = make_discussion(
            utterances=[
                make_utterance(0, "2014-05-01T10:00:00Z"),
                make_utterance(1, "2014-05-03T08:00:00Z"),
            ]
        )
        assert d.last_activity_at == "2014-05-03T08:00:00Z"

    def test_last_activity_falls_back_to_created(self):
        assert make_discussion().last_activity_at == "2014-05-01T10:00:00Z"

    def test_declared_last_activity_must_match(self):
        with pytest.raises(RecordError, match="last_activity_at"):
            Discussion(
                id="p/q#1",
                project="p/q",
                issue_number=1,
                title="t",
                created_at="2014-05-01T10:00:00Z",
                utterances=(),
                last_activity_at="2020-01-01T00:00:00Z",
            )

    def test_utterance_indexes_must_be_sequential(self):
        with pytest.raises(RecordError, match="indexes"):
            make_discussion(utterances=[make_utterance(index=1)])

    def test_utterances_must_be_time_ordered(self):
        with pytest.raises(RecordError, match="predates"):
            make_discussion(
                utterances=[
                    make_utterance(0, "2014-05-02T10:00:00Z"),
                    make_utterance(1, "2014-05-01T10:00:00Z"),
                ]
            )

    def test_blank_title_rejected(self):
        with pytest.raises(RecordError, match="title"):
            make_discussion(title="   ")

    def test_round_trip(self):
        d = make_discussion(utterances=[make_utterance(0, body="héllo ß ✓")])
        assert Discussion.from_dict(d.to_dict()) == d


class TestBugFixExample:
    def test_round_trip(self):
        ex = make_example(oracle=("fix", "bug"), discussion_ids=("a#1", "b#2"))
        assert BugFixExample.from_dict(ex.to_dict()) == ex

    def test_identical_buggy_and_fixed_rejected(self):
        with pytest.raises(RecordError, match="fixed_tokens"):
            make_example(fixed=("int", "f", "(", ")", "{", "return", "0", ";", "}"))

    @pytest.mark.parametrize("sha", ["xyz", "ab12", "g" * 10, "a" * 41])
    def test_bad_sha_rejected(self, sha):
        with pytest.raises(RecordError, match="commit_sha"):
            make_example(sha=sha)

    def test_abbreviated_sha_accepted(self):
        assert make_example(sha="ab12cd3").commit_sha == "ab12cd3"

    def test_duplicate_discussion_ids_rejected(self):
        with pytest.raises(RecordError, match="discussion"):
            make_example(discussion_ids=("a#1", "a#1"))

    def test_unknown_split_rejected(self):
        with pytest.raises(RecordError, match="split"):
            make_example(split="dev")

    def test_empty_token_list_rejected(self):
        with pytest.raises(RecordError, match="buggy"):
            make_example(buggy=())


class TestSegment:
    def test_title_segment_has_no_utterance_index(self):
        with pytest.raises(RecordError, match="utterance_index"):
            Segment(0, "title", "a#1", 2, 0, 5)

    def test_utterance_segment_needs_index(self):
        with pytest.raises(RecordError, match="utterance_index"):
            Segment(0, "utterance", "a#1", None, 0, 5)

    def test_empty_span_rejected(self):
        with pytest.raises(RecordError, match="token_start"):
            Segment(0, "title", "a#1", None, 5, 5)


def _trace(weights, segments=None, n=None):
    return AttentionTrace(
        example_id="e1",
        num_input_tokens=n or len(weights[0]),
        segments=tuple(segments or ()),
        weights=tuple(tuple(r) for r in weights),
    )


class TestAttentionTrace:
    def test_rows_must_normalize(self):
        with pytest.raises(RecordError, match="sums to"):
            _trace([[0.9, 0.2]])

    def test_tolerance_accepts_slightly_off_rows(self):
        t = _trace([[0.5004, 0.5001]])
        assert t.num_steps == 1

    def test_row_length_must_match_input(self):
        with pytest.raises(RecordError, match="expected 3"):
            _trace([[0.5, 0.5]], n=3)

    def test_segments_must_not_overlap(self):
        segs = [Segment(0, "title", "a#1", None, 0, 3), Segment(1, "title", "b#2", None, 2, 4)]
        with pytest.raises(RecordError, match="overlaps"):
            _trace([[0.25] * 4], segments=segs)

    def test_segment_may_not_pass_input_end(self):
        segs = [Segment(0, "title", "a#1", None, 0, 9)]
        with pytest.raises(RecordError, match="past"):
            _trace([[0.25] * 4], segments=segs)

    def test_round_trip(self):
        t = _trace([[0.5, 0.25, 0.25]], segments=[Segment(0, "title", "a#1", None, 1, 3)])
        assert AttentionTrace.from_dict(t.to_dict()) == t


class TestMisc:
    def test_context_spec_rejects_unknown_kind(self):
        with pytest.raises(RecordError, match="kind"):
            ContextSpec(kind="everything")

    def test_context_spec_default_budget(self):
        assert ContextSpec(kind="title").token_limit == 1024

    def test_commit_link_round_trip(self):
        ev = CommitLinkEvent("p/q", 3, "abcdef0123", "2014-05-10T12:00:00Z", "timeline_event")
        assert CommitLinkEvent.from_dict(ev.to_dict()) == ev

    def test_candidate_round_trip(self):
        c = Candidate("e1", ("a", "<s>", "b"), "model")
        assert Candidate.from_dict(c.to_dict()) == c

    def test_eval_report_rate_is_derived(self):
        r = make_eval_report("title", {"a": True, "b": False, "c": True})
        assert r.exact_match_rate == 66.7
        assert r.n == 3

    def test_rate_formula_matches_known_corpus_ratio(self):
        per = {str(i): i < 106 for i in range(293)}
        assert make_eval_report("x", per).exact_match_rate == 36.2
