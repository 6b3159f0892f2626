"""Shared builders for test records.

The factories fill in valid boilerplate so each test states only what it
cares about.
"""

import pytest

from discforge.records import BugFixExample, Discussion, Utterance

# One line per acceptance criterion, echoed in the terminal summary so the
# verdicts stay visible even when pytest captures per-test stdout.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_utterance(index=0, created_at="2014-05-01T10:00:00Z", body="some text", author="alice", tokens=None):
    return Utterance(
        index=index,
        author=author,
        created_at=created_at,
        body_raw=body,
        body_tokens=tokens,
    )


def make_discussion(
    disc_id="demo/proj#1",
    project="demo/proj",
    number=1,
    title="Crash on empty input",
    created_at="2014-05-01T10:00:00Z",
    utterances=(),
):
    return Discussion(
        id=disc_id,
        project=project,
        issue_number=number,
        title=title,
        created_at=created_at,
        utterances=tuple(utterances),
    )


def make_example(
    ex_id="demo/proj:ab12cd34e:0",
    project="demo/proj",
    sha="ab12cd34e56f78901a2b3c4d5e6f78901a2b3c4d",
    commit_ts="2014-05-10T12:00:00Z",
    split="test",
    buggy=("int", "f", "(", ")", "{", "return", "0", ";", "}"),
    fixed=("int", "f", "(", ")", "{", "return", "1", ";", "}"),
    method=("f",),
    oracle=None,
    discussion_ids=(),
):
    return BugFixExample(
        id=ex_id,
        project=project,
        commit_sha=sha,
        commit_timestamp=commit_ts,
        split=split,
        buggy_tokens=buggy,
        fixed_tokens=fixed,
        method_tokens=method,
        oracle_msg_tokens=oracle,
        discussion_ids=tuple(discussion_ids),
    )


@pytest.fixture
def example():
    return make_example()


@pytest.fixture
def discussion():
    return make_discussion(utterances=[make_utterance()])
