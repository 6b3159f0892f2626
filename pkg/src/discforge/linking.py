"""Attaching discussions to bug-fix examples and the temporal rules.

The temporal contract: a model input may only contain discussion content
written strictly before the fixing commit. Equal timestamps are excluded
(a comment written the same second as the commit could already describe
the fix). Titles are kept unconditionally because the report must predate
the fix for the link to make sense at all.
"""

from __future__ import annotations

import dataclasses
import logging

from .records import BugFixExample, Discussion, normalize_timestamp

log = logging.getLogger(__name__)


def temporal_filter(discussion: Discussion, cutoff: str) -> Discussion:
    """Drop utterances at or after the cutoff timestamp.

    The title survives unconditionally. Surviving utterances are
    re-indexed 0..n-1 and last_activity_at is recomputed.
    """
    cutoff = normalize_timestamp(cutoff)
    kept = [u for u in discussion.utterances if u.created_at < cutoff]
    if len(kept) == len(discussion.utterances):
        return discussion
    reindexed = tuple(
        dataclasses.replace(u, index=pos) for pos, u in enumerate(kept)
    )
    return dataclasses.replace(
        discussion, utterances=reindexed, last_activity_at=None
    )


def order_discussions(discussions) -> list[Discussion]:
    """Most recent activity first; ties broken by higher issue number.

    The sort is stable, so equal (last_activity_at, issue_number) pairs
    keep their input order.
    """
    return sorted(
        discussions,
        key=lambda d: (d.last_activity_at, d.issue_number),
        reverse=True,
    )


def prepare_discussions(
    example: BugFixExample, discussions: dict[str, Discussion]
) -> list[Discussion]:
    """Resolve, temporally filter, and order an example's discussions."""
    resolved = []
    for disc_id in example.discussion_ids:
        disc = discussions.get(disc_id)
        if disc is None:
            log.warning("example %s references unknown discussion %s", example.id, disc_id)
            continue
        resolved.append(temporal_filter(disc, example.commit_timestamp))
    return order_discussions(resolved)


def attach_discussions(examples, links, discussions):
    """Wire commit-link events into the examples' discussion_ids.

    Links carry full or abbreviated commit shas; an event matches an
    example when one sha is a prefix of the other (both at least 7 hex
    chars, enforced by the record types). Events naming an unknown
    discussion are logged and ignored. Each example's discussion_ids come
    out temporally filtered and ordered, most recent activity first.

    Returns (linked_examples, dropped_examples): examples that end up
    with no discussion go to the dropped list unchanged.
    """
    by_key = {}
    for disc in discussions.values():
        by_key[(disc.project, disc.issue_number)] = disc.id

    # Bucket link events by the first 7 sha chars so prefix matching stays
    # linear over realistic corpora.
    buckets = {}
    for event in links:
        buckets.setdefault(event.commit_sha[:7].lower(), []).append(event)

    linked, dropped = [], []
    for ex in examples:
        ids = list(ex.discussion_ids)
        seen = set(ids)
        for event in buckets.get(ex.commit_sha[:7].lower(), ()):
            ev_sha = event.commit_sha.lower()
            ex_sha = ex.commit_sha.lower()
            if not (ev_sha.startswith(ex_sha) or ex_sha.startswith(ev_sha)):
                continue
            if event.project != ex.project:
                continue
            disc_id = by_key.get((event.project, event.issue_number))
            if disc_id is None:
                log.warning(
                    "link for %s#%d matches example %s but no such discussion was mined",
                    event.project,
                    event.issue_number,
                    ex.id,
                )
                continue
            if disc_id not in seen:
                seen.add(disc_id)
                ids.append(disc_id)
        if not ids:
            dropped.append(ex)
            continue
        ordered = prepare_discussions(
            dataclasses.replace(ex, discussion_ids=tuple(ids)), discussions
        )
        linked.append(
            dataclasses.replace(
                ex, discussion_ids=tuple(d.id for d in ordered)
            )
        )
    return linked, dropped
