"""Domain records shared by every pipeline stage.

All types validate themselves on construction and are immutable afterwards,
so any instance that exists satisfies its invariants and is safe to share
across parallel workers. Timestamps are normalized ISO-8601 UTC strings
("YYYY-MM-DDTHH:MM:SSZ"), which sort correctly as plain text; every
temporal comparison in this package is string comparison on that form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

SEPARATOR = "<s>"

CONTEXT_KINDS = (
    "without_nl",
    "oracle_msg",
    "whole_discussion",
    "title",
    "last_utterance",
    "soln_desc",
    "soln_desc_plus_title",
    "attended_segments",
)

SPLITS = ("train", "valid", "test")

SEGMENT_KINDS = ("title", "utterance")

LINK_SOURCES = ("message_reference", "timeline_event")

# Attention rows must be probability distributions within this tolerance.
ROW_SUM_TOLERANCE = 1e-3

_HEX_DIGITS = frozenset("0123456789abcdefABCDEF")


class RecordError(ValueError):
    """A record violated its schema or an invariant.

    Carries the offending line number and field name when known, so loaders
    can point at the exact spot in a file.
    """

    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field {field!r}: "
        super().__init__(prefix + message)


def normalize_timestamp(value) -> str:
    """Normalize an ISO-8601 timestamp to second-precision UTC.

    Accepts the tracker's "Z" suffix, explicit offsets, and naive stamps
    (taken as UTC). Fractional seconds are truncated.
    """
    if not isinstance(value, str) or not value.strip():
        raise RecordError(f"not a timestamp: {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError:
        raise RecordError(f"unparseable timestamp: {value!r}") from None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    parsed = parsed.astimezone(timezone.utc).replace(microsecond=0)
    return parsed.strftime("%Y-%m-%dT%H:%M:%SZ")


def _set(obj, name, value):
    object.__setattr__(obj, name, value)


def _check_tokens(value, field_name, *, allow_empty_list=True):
    if not isinstance(value, (list, tuple)):
        raise RecordError("expected a list of tokens", field=field_name)
    for tok in value:
        if not isinstance(tok, str):
            raise RecordError(f"token {tok!r} is not a string", field=field_name)
        if tok == "":
            raise RecordError("empty-string token", field=field_name)
    if not allow_empty_list and not value:
        raise RecordError("token list must not be empty", field=field_name)
    return tuple(value)


def _check_str(value, field_name, *, allow_blank=False):
    if not isinstance(value, str):
        raise RecordError(f"expected a string, got {value!r}", field=field_name)
    if not allow_blank and not value.strip():
        raise RecordError("must not be blank", field=field_name)
    return value


def is_hex_sha(value) -> bool:
    """True for a 7-40 character hex string (abbreviated or full sha)."""
    return (
        isinstance(value, str)
        and 7 <= len(value) <= 40
        and all(c in _HEX_DIGITS for c in value)
    )


@dataclass(frozen=True)
class Utterance:
    """One contiguous text contribution in a discussion.

    Index 0 is the report body; comments follow in creation order.
    """

    index: int
    author: str
    created_at: str
    body_raw: str
    body_tokens: tuple[str, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.index, int) or self.index < 0:
            raise RecordError(f"bad utterance index {self.index!r}", field="index")
        _check_str(self.author, "author", allow_blank=True)
        _check_str(self.body_raw, "body_raw", allow_blank=True)
        _set(self, "created_at", normalize_timestamp(self.created_at))
        if self.body_tokens is not None:
            _set(self, "body_tokens", _check_tokens(self.body_tokens, "body_tokens"))

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "author": self.author,
            "created_at": self.created_at,
            "body_raw": self.body_raw,
            "body_tokens": list(self.body_tokens) if self.body_tokens is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Utterance":
        return cls(
            index=_require(d, "index"),
            author=_require(d, "author"),
            created_at=_require(d, "created_at"),
            body_raw=_require(d, "body_raw"),
            body_tokens=d.get("body_tokens"),
        )


@dataclass(frozen=True)
class Discussion:
    """A bug report: title plus the time-ordered utterance thread.

    ``last_activity_at`` is derived (latest utterance timestamp, falling
    back to the report's own creation time); pass None to have it computed.
    """

    id: str
    project: str
    issue_number: int
    title: str
    created_at: str
    utterances: tuple[Utterance, ...] = ()
    last_activity_at: str | None = None

    def __post_init__(self):
        _check_str(self.id, "id")
        _check_str(self.project, "project")
        if not isinstance(self.issue_number, int) or self.issue_number <= 0:
            raise RecordError(
                f"issue_number must be a positive integer, got {self.issue_number!r}",
                field="issue_number",
            )
        _check_str(self.title, "title")
        _set(self, "created_at", normalize_timestamp(self.created_at))

        utts = tuple(
            u if isinstance(u, Utterance) else Utterance.from_dict(u)
            for u in self.utterances
        )
        for pos, utt in enumerate(utts):
            if utt.index != pos:
                raise RecordError(
                    f"utterance indexes must run 0..n-1, found {utt.index} at position {pos}",
                    field="utterances",
                )
            if pos > 0 and utt.created_at < utts[pos - 1].created_at:
                raise RecordError(
                    f"utterance {pos} predates utterance {pos - 1}",
                    field="utterances",
                )
        _set(self, "utterances", utts)

        derived = utts[-1].created_at if utts else self.created_at
        if self.last_activity_at is None:
            _set(self, "last_activity_at", derived)
        else:
            declared = normalize_timestamp(self.last_activity_at)
            if declared != derived:
                raise RecordError(
                    f"last_activity_at {declared} != derived {derived}",
                    field="last_activity_at",
                )
            _set(self, "last_activity_at", declared)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "project": self.project,
            "issue_number": self.issue_number,
            "title": self.title,
            "created_at": self.created_at,
            "utterances": [u.to_dict() for u in self.utterances],
            "last_activity_at": self.last_activity_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Discussion":
        return cls(
            id=_require(d, "id"),
            project=_require(d, "project"),
            issue_number=_require(d, "issue_number"),
            title=_require(d, "title"),
            created_at=_require(d, "created_at"),
            utterances=tuple(d.get("utterances", ())),
            last_activity_at=d.get("last_activity_at"),
        )


@dataclass(frozen=True)
class BugFixExample:
    """One buggy-to-fixed method pair with its linked discussions."""

    id: str
    project: str
    commit_sha: str
    commit_timestamp: str
    split: str
    buggy_tokens: tuple[str, ...]
    fixed_tokens: tuple[str, ...]
    method_tokens: tuple[str, ...]
    oracle_msg_tokens: tuple[str, ...] | None = None
    discussion_ids: tuple[str, ...] = ()

    def __post_init__(self):
        _check_str(self.id, "id")
        _check_str(self.project, "project")
        if not is_hex_sha(self.commit_sha):
            raise RecordError(
                f"commit_sha must be 7-40 hex chars, got {self.commit_sha!r}",
                field="commit_sha",
            )
        _set(self, "commit_timestamp", normalize_timestamp(self.commit_timestamp))
        if self.split not in SPLITS:
            raise RecordError(
                f"split must be one of {SPLITS}, got {self.split!r}", field="split"
            )
        _set(self, "buggy_tokens", _check_tokens(self.buggy_tokens, "buggy_tokens", allow_empty_list=False))
        _set(self, "fixed_tokens", _check_tokens(self.fixed_tokens, "fixed_tokens", allow_empty_list=False))
        _set(self, "method_tokens", _check_tokens(self.method_tokens, "method_tokens", allow_empty_list=False))
        if self.buggy_tokens == self.fixed_tokens:
            raise RecordError(
                "buggy_tokens equal fixed_tokens (a fix must change the code)",
                field="fixed_tokens",
            )
        if self.oracle_msg_tokens is not None:
            _set(self, "oracle_msg_tokens", _check_tokens(self.oracle_msg_tokens, "oracle_msg_tokens"))
        ids = tuple(_check_str(i, "discussion_ids") for i in self.discussion_ids)
        if len(set(ids)) != len(ids):
            raise RecordError("duplicate discussion id", field="discussion_ids")
        _set(self, "discussion_ids", ids)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "project": self.project,
            "commit_sha": self.commit_sha,
            "commit_timestamp": self.commit_timestamp,
            "split": self.split,
            "buggy_tokens": list(self.buggy_tokens),
            "fixed_tokens": list(self.fixed_tokens),
            "method_tokens": list(self.method_tokens),
            "oracle_msg_tokens": list(self.oracle_msg_tokens) if self.oracle_msg_tokens is not None else None,
            "discussion_ids": list(self.discussion_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BugFixExample":
        return cls(
            id=_require(d, "id"),
            project=_require(d, "project"),
            commit_sha=_require(d, "commit_sha"),
            commit_timestamp=_require(d, "commit_timestamp"),
            split=_require(d, "split"),
            buggy_tokens=_require(d, "buggy_tokens"),
            fixed_tokens=_require(d, "fixed_tokens"),
            method_tokens=_require(d, "method_tokens"),
            oracle_msg_tokens=d.get("oracle_msg_tokens"),
            discussion_ids=tuple(d.get("discussion_ids", ())),
        )


@dataclass(frozen=True)
class Segment:
    """A title or utterance span inside an attention trace's input."""

    segment_id: int
    kind: str
    discussion_id: str
    utterance_index: int | None
    token_start: int
    token_end: int

    def __post_init__(self):
        if not isinstance(self.segment_id, int) or self.segment_id < 0:
            raise RecordError(f"bad segment_id {self.segment_id!r}", field="segment_id")
        if self.kind not in SEGMENT_KINDS:
            raise RecordError(
                f"kind must be one of {SEGMENT_KINDS}, got {self.kind!r}", field="kind"
            )
        _check_str(self.discussion_id, "discussion_id")
        if self.kind == "utterance":
            if not isinstance(self.utterance_index, int) or self.utterance_index < 0:
                raise RecordError(
                    "utterance segments need a non-negative utterance_index",
                    field="utterance_index",
                )
        elif self.utterance_index is not None:
            raise RecordError(
                "title segments must not carry an utterance_index",
                field="utterance_index",
            )
        if not isinstance(self.token_start, int) or not isinstance(self.token_end, int):
            raise RecordError("token offsets must be integers", field="token_start")
        if self.token_start < 0 or self.token_start >= self.token_end:
            raise RecordError(
                f"need 0 <= token_start < token_end, got [{self.token_start}, {self.token_end})",
                field="token_start",
            )

    def to_dict(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "kind": self.kind,
            "discussion_id": self.discussion_id,
            "utterance_index": self.utterance_index,
            "token_start": self.token_start,
            "token_end": self.token_end,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Segment":
        return cls(
            segment_id=_require(d, "segment_id"),
            kind=_require(d, "kind"),
            discussion_id=_require(d, "discussion_id"),
            utterance_index=d.get("utterance_index"),
            token_start=_require(d, "token_start"),
            token_end=_require(d, "token_end"),
        )


@dataclass(frozen=True)
class AttentionTrace:
    """Decoder attention over one example's input, with segment boundaries.

    Rows are decoding steps; each row is a probability distribution over
    the input tokens (within ROW_SUM_TOLERANCE). How attention heads were
    aggregated is the producer's business; producers should record their
    convention (e.g. "mean over heads") in ``meta``.
    """

    example_id: str
    num_input_tokens: int
    segments: tuple[Segment, ...]
    weights: tuple[tuple[float, ...], ...]
    meta: dict | None = None

    def __post_init__(self):
        _check_str(self.example_id, "example_id")
        if not isinstance(self.num_input_tokens, int) or self.num_input_tokens <= 0:
            raise RecordError(
                f"num_input_tokens must be positive, got {self.num_input_tokens!r}",
                field="num_input_tokens",
            )
        segs = tuple(
            s if isinstance(s, Segment) else Segment.from_dict(s) for s in self.segments
        )
        prev_end = 0
        for seg in segs:
            if seg.token_start < prev_end:
                raise RecordError(
                    f"segment {seg.segment_id} overlaps or is out of order",
                    field="segments",
                )
            if seg.token_end > self.num_input_tokens:
                raise RecordError(
                    f"segment {seg.segment_id} ends at {seg.token_end}, "
                    f"past the {self.num_input_tokens}-token input",
                    field="segments",
                )
            prev_end = seg.token_end
        _set(self, "segments", segs)

        rows = []
        for step, row in enumerate(self.weights):
            row = tuple(float(w) for w in row)
            if len(row) != self.num_input_tokens:
                raise RecordError(
                    f"row {step} has {len(row)} weights, expected {self.num_input_tokens}",
                    field="weights",
                )
            if any(w < 0.0 for w in row):
                raise RecordError(f"row {step} has a negative weight", field="weights")
            total = sum(row)
            if not (1.0 - ROW_SUM_TOLERANCE <= total <= 1.0 + ROW_SUM_TOLERANCE):
                raise RecordError(
                    f"row {step} sums to {total:.6f}, not a normalized distribution",
                    field="weights",
                )
            rows.append(row)
        _set(self, "weights", tuple(rows))
        if self.meta is not None and not isinstance(self.meta, dict):
            raise RecordError("meta must be a JSON object", field="meta")

    @property
    def num_steps(self) -> int:
        return len(self.weights)

    def to_dict(self) -> dict:
        d = {
            "example_id": self.example_id,
            "num_input_tokens": self.num_input_tokens,
            "segments": [s.to_dict() for s in self.segments],
            "weights": [list(row) for row in self.weights],
        }
        if self.meta is not None:
            d["meta"] = self.meta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AttentionTrace":
        return cls(
            example_id=_require(d, "example_id"),
            num_input_tokens=_require(d, "num_input_tokens"),
            segments=tuple(_require(d, "segments")),
            weights=tuple(tuple(row) for row in _require(d, "weights")),
            meta=d.get("meta"),
        )


@dataclass(frozen=True)
class ContextSpec:
    """Which input representation to build, and the token budget for it."""

    kind: str
    token_limit: int = 1024

    def __post_init__(self):
        if self.kind not in CONTEXT_KINDS:
            raise RecordError(
                f"kind must be one of {CONTEXT_KINDS}, got {self.kind!r}", field="kind"
            )
        if not isinstance(self.token_limit, int) or self.token_limit < 1:
            raise RecordError(
                f"token_limit must be >= 1, got {self.token_limit!r}",
                field="token_limit",
            )


@dataclass(frozen=True)
class CommitLinkEvent:
    """One discovered (issue, commit) association and how it was found."""

    project: str
    issue_number: int
    commit_sha: str
    linked_at: str
    link_source: str

    def __post_init__(self):
        _check_str(self.project, "project")
        if not isinstance(self.issue_number, int) or self.issue_number <= 0:
            raise RecordError(
                f"issue_number must be positive, got {self.issue_number!r}",
                field="issue_number",
            )
        if not is_hex_sha(self.commit_sha):
            raise RecordError(
                f"commit_sha must be 7-40 hex chars, got {self.commit_sha!r}",
                field="commit_sha",
            )
        _set(self, "linked_at", normalize_timestamp(self.linked_at))
        if self.link_source not in LINK_SOURCES:
            raise RecordError(
                f"link_source must be one of {LINK_SOURCES}, got {self.link_source!r}",
                field="link_source",
            )

    def to_dict(self) -> dict:
        return {
            "project": self.project,
            "issue_number": self.issue_number,
            "commit_sha": self.commit_sha,
            "linked_at": self.linked_at,
            "link_source": self.link_source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CommitLinkEvent":
        return cls(
            project=_require(d, "project"),
            issue_number=_require(d, "issue_number"),
            commit_sha=_require(d, "commit_sha"),
            linked_at=_require(d, "linked_at"),
            link_source=_require(d, "link_source"),
        )


@dataclass(frozen=True)
class Candidate:
    """A candidate fix for one example, labeled with its producing source."""

    example_id: str
    candidate_tokens: tuple[str, ...]
    source: str

    def __post_init__(self):
        _check_str(self.example_id, "example_id")
        _set(self, "candidate_tokens", _check_tokens(self.candidate_tokens, "candidate_tokens"))
        _check_str(self.source, "source")

    def to_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "candidate_tokens": list(self.candidate_tokens),
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Candidate":
        return cls(
            example_id=_require(d, "example_id"),
            candidate_tokens=_require(d, "candidate_tokens"),
            source=_require(d, "source"),
        )


@dataclass(frozen=True)
class EvalReport:
    """Exact-match outcome of one candidate source against the references."""

    representation: str
    per_example: dict = field(default_factory=dict)
    exact_match_rate: float = 0.0
    n: int = 0
    missing: int = 0

    def __post_init__(self):
        _check_str(self.representation, "representation", allow_blank=True)
        if self.n != len(self.per_example):
            raise RecordError(
                f"n={self.n} but per_example has {len(self.per_example)} entries",
                field="n",
            )
        if self.n:
            expected = round(100.0 * sum(bool(v) for v in self.per_example.values()) / self.n, 1)
        else:
            expected = 0.0
        if self.exact_match_rate != expected:
            raise RecordError(
                f"exact_match_rate {self.exact_match_rate} != {expected} derived from per_example",
                field="exact_match_rate",
            )

    def to_dict(self) -> dict:
        return {
            "representation": self.representation,
            "n": self.n,
            "matches": sum(bool(v) for v in self.per_example.values()),
            "missing": self.missing,
            "exact_match_rate": self.exact_match_rate,
            "per_example": dict(self.per_example),
        }


def _require(d: dict, key: str):
    if not isinstance(d, dict):
        raise RecordError(f"expected a JSON object, got {type(d).__name__}", field=key)
    if key not in d or d[key] is None:
        raise RecordError("missing", field=key)
    return d[key]


def record_digest(path) -> str:
    """Hex sha256 of a file, for embedding input identities in reports."""
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def make_eval_report(representation, per_example, missing=0) -> EvalReport:
    """Build an EvalReport with the rate derived from the outcomes."""
    n = len(per_example)
    rate = round(100.0 * sum(bool(v) for v in per_example.values()) / n, 1) if n else 0.0
    return EvalReport(
        representation=representation,
        per_example=dict(per_example),
        exact_match_rate=rate,
        n=n,
        missing=missing,
    )
