"""Mining issue discussions from an archive dump or a live tracker API.

Two sources, one shape: an on-disk archive (one JSON document per issue,
laid out ``<root>/<owner>__<name>/<number>.json``) or an HTTP transport
paging a GitHub-style issues API. Both yield raw issue dicts that
normalize_issue turns into Discussion records; commit links come from
commit messages and issue timeline events.

The transport is injectable for tests: any callable
``(url, params, headers) -> (status, headers, payload)``.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import re
import time

from .records import (
    CommitLinkEvent,
    Discussion,
    RecordError,
    Utterance,
    is_hex_sha,
    normalize_timestamp,
)
from .storage import save_discussions, save_links

log = logging.getLogger(__name__)

API_ROOT = "https://api.github.com"

# "#123" style references: not preceded by a word char or '/', so
# "PR#12", "issue #12" match while "abc#12" in a URL path does not.
_ISSUE_REF = re.compile(r"(?<![\w/])#(\d+)\b")
_ISSUE_URL = re.compile(r"https?://github\.com/([\w.-]+/[\w.-]+)/issues/(\d+)\b")

# Timeline event types that carry a commit_id worth linking.
_LINKING_EVENTS = frozenset({"referenced", "cross-referenced", "closed"})


@dataclasses.dataclass
class MineReport:
    """Counters accumulated over one mining run."""

    issues_fetched: int = 0
    issues_in_window: int = 0
    pull_requests_excluded: int = 0
    issues_skipped: int = 0
    links_found: int = 0
    skip_reasons: list = dataclasses.field(default_factory=list)

    def record_skip(self, project, number, reason):
        self.issues_skipped += 1
        self.skip_reasons.append(
            {"project": project, "issue_number": number, "reason": str(reason)}
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def project_dirname(project: str) -> str:
    owner, _, name = project.partition("/")
    if not owner or not name:
        raise RecordError(f"project must look like owner/name, got {project!r}")
    return f"{owner}__{name}"


class RawIssueArchive:
    """Read-only view over an issue dump on disk."""

    def __init__(self, root):
        if not os.path.isdir(root):
            raise RecordError(f"archive root {root!r} is not a directory")
        self.root = root

    def projects(self) -> list[str]:
        out = []
        for name in sorted(os.listdir(self.root)):
            if "__" in name and os.path.isdir(os.path.join(self.root, name)):
                out.append(name.replace("__", "/", 1))
        return out

    def iter_issues(self, project: str):
        """Yield raw issue dicts for a project, lowest number first."""
        pdir = os.path.join(self.root, project_dirname(project))
        if not os.path.isdir(pdir):
            return
        names = [n for n in os.listdir(pdir) if n.endswith(".json")]

        def number_key(name):
            stem = name[:-5]
            return (0, int(stem)) if stem.isdigit() else (1, stem)

        for name in sorted(names, key=number_key):
            path = os.path.join(pdir, name)
            with open(path, "r", encoding="utf-8") as f:
                try:
                    yield json.load(f)
                except json.JSONDecodeError as exc:
                    raise RecordError(f"invalid JSON in {path}: {exc}") from None


def _load_cursor(path) -> dict:
    if path and os.path.exists(path):
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    return {}


def _save_cursor(path, cursor) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(cursor, f, ensure_ascii=False, indent=2)


def _auth_headers(token_env) -> dict:
    headers = {"Accept": "application/vnd.github+json"}
    if token_env:
        token = os.environ.get(token_env)
        if not token:
            raise ValueError(
                f"--token-env names {token_env!r} but that variable is unset"
            )
        headers["Authorization"] = f"Bearer {token}"
    return headers


def default_transport(url, params, headers):
    """HTTP GET via requests, returning (status, headers, parsed JSON)."""
    import requests

    resp = requests.get(url, params=params, headers=headers, timeout=30)
    try:
        payload = resp.json()
    except ValueError:
        payload = None
    return resp.status_code, dict(resp.headers), payload


def _request(transport, url, params, headers, *, sleep, max_retries=5):
    """One logical GET with exponential backoff and rate-limit waits."""
    attempt = 0
    while True:
        try:
            status, resp_headers, payload = transport(url, params, headers)
        except Exception as exc:
            if attempt >= max_retries:
                raise RuntimeError(f"transport kept failing for {url}: {exc}") from exc
            sleep(min(60.0, 2.0**attempt))
            attempt += 1
            continue
        if status in (403, 429) and resp_headers.get("X-RateLimit-Remaining") == "0":
            reset = resp_headers.get("X-RateLimit-Reset")
            delay = 60.0
            if reset:
                try:
                    delay = max(1.0, float(reset) - time.time() + 1.0)
                except ValueError:
                    pass
            log.info("rate limited; sleeping %.0fs", delay)
            sleep(delay)
            continue
        if status >= 500:
            if attempt >= max_retries:
                raise RuntimeError(f"{url} kept returning {status}")
            sleep(min(60.0, 2.0**attempt))
            attempt += 1
            continue
        if status >= 400:
            raise RuntimeError(f"{url} returned {status}")
        return resp_headers, payload


def _fetch_comments(transport, comments_url, headers, *, sleep):
    comments = []
    page = 1
    while True:
        _, payload = _request(
            transport, comments_url, {"per_page": 100, "page": page}, headers, sleep=sleep
        )
        if not payload:
            return comments
        comments.extend(payload)
        page += 1


def fetch_issues(
    project: str,
    since: str,
    until: str,
    *,
    archive: RawIssueArchive | None = None,
    token_env: str | None = None,
    transport=None,
    cursor_path=None,
    report: MineReport | None = None,
    sleep=time.sleep,
):
    """Yield raw issue dicts for one project, created in [since, until).

    Archive mode walks the dump; online mode pages the issues endpoint
    (oldest first) and resumes from a cursor file when one is given.
    Pull requests masquerading as issues are excluded. The window is
    half-open: an issue created exactly at `until` is out.
    """
    since = normalize_timestamp(since)
    until = normalize_timestamp(until)
    if until <= since:
        raise ValueError(f"empty window: since={since} until={until}")
    report = report if report is not None else MineReport()

    def in_window(raw):
        report.issues_fetched += 1
        if raw.get("pull_request") is not None:
            report.pull_requests_excluded += 1
            return False
        try:
            created = normalize_timestamp(raw.get("created_at"))
        except RecordError:
            report.record_skip(project, raw.get("number"), "bad created_at")
            return False
        if since <= created < until:
            report.issues_in_window += 1
            return True
        return False

    if archive is not None:
        for raw in archive.iter_issues(project):
            if in_window(raw):
                yield raw
        return

    transport = transport or default_transport
    headers = _auth_headers(token_env)
    cursor_key = f"{project}|{since}|{until}"
    cursor = _load_cursor(cursor_path)
    state = cursor.get(cursor_key, {})
    if state.get("done"):
        log.info("cursor says %s already mined for this window", cursor_key)
        return
    page = int(state.get("next_page", 1))
    url = f"{API_ROOT}/repos/{project}/issues"
    while True:
        params = {
            "state": "all",
            "sort": "created",
            "direction": "asc",
            "per_page": 100,
            "page": page,
            "since": since,
        }
        _, payload = _request(transport, url, params, headers, sleep=sleep)
        if not payload:
            break
        past_window = False
        for raw in payload:
            try:
                created = normalize_timestamp(raw.get("created_at"))
            except RecordError:
                created = None
            if created is not None and created >= until:
                past_window = True
                continue
            if not in_window(raw):
                continue
            if "comments" not in raw or not isinstance(raw.get("comments"), list):
                comments_url = raw.get("comments_url")
                raw = dict(raw)
                raw["comments"] = (
                    _fetch_comments(transport, comments_url, headers, sleep=sleep)
                    if comments_url
                    else []
                )
            yield raw
        page += 1
        cursor[cursor_key] = {"next_page": page}
        _save_cursor(cursor_path, cursor)
        if past_window:
            break
    cursor[cursor_key] = {"done": True}
    _save_cursor(cursor_path, cursor)


def _author_of(raw) -> str:
    user = raw.get("user")
    if isinstance(user, dict) and user.get("login"):
        return str(user["login"])
    if isinstance(raw.get("author"), str):
        return raw["author"]
    return ""


def normalize_issue(raw: dict, project: str) -> Discussion:
    """Turn one raw issue dict into a validated Discussion.

    The issue body (when non-blank) becomes utterance 0; comments follow,
    re-sorted by creation time. Raises RecordError for records that cannot
    be a discussion (missing title, missing number, broken timestamps,
    comments predating the report).
    """
    number = raw.get("number")
    if not isinstance(number, int) or number <= 0:
        raise RecordError(f"bad issue number {number!r}", field="number")
    title = raw.get("title")
    if not isinstance(title, str) or not title.strip():
        raise RecordError("missing title", field="title")
    created_at = normalize_timestamp(raw.get("created_at"))

    utterances = []
    body = raw.get("body")
    if isinstance(body, str) and body.strip():
        utterances.append((created_at, _author_of(raw), body))
    comments = raw.get("comments")
    if isinstance(comments, list):
        parsed = []
        for c in comments:
            cbody = c.get("body")
            if not isinstance(cbody, str) or not cbody.strip():
                continue
            parsed.append((normalize_timestamp(c.get("created_at")), _author_of(c), cbody))
        parsed.sort(key=lambda t: t[0])
        utterances.extend(parsed)

    return Discussion(
        id=f"{project}#{number}",
        project=project,
        issue_number=number,
        title=title.strip(),
        created_at=created_at,
        utterances=tuple(
            Utterance(index=i, author=a, created_at=t, body_raw=b)
            for i, (t, a, b) in enumerate(utterances)
        ),
    )


def _normalize_commit_records(commits):
    """Accept either a sha->message/dict mapping or an iterable of dicts."""
    out = []
    if isinstance(commits, dict):
        items = commits.items()
        for sha, val in items:
            if isinstance(val, str):
                out.append((sha, val, None))
            else:
                out.append((sha, val.get("message", ""), val.get("timestamp")))
    else:
        for rec in commits:
            out.append((rec["sha"], rec.get("message", ""), rec.get("timestamp")))
    return out


def extract_commit_links(project, commits, raw_issues=()) -> list[CommitLinkEvent]:
    """Find (issue, commit) associations for one project.

    Message references: "#N" in a commit message links that commit to
    issue N of the same project; a full issues URL links to whatever
    project the URL names. Timeline evidence: referenced/cross-referenced/
    closed events on a mined issue that carry a commit_id. One event per
    (project, issue, sha, source) survives deduplication.
    """
    issue_created = {}
    for raw in raw_issues:
        num = raw.get("number")
        if isinstance(num, int):
            try:
                issue_created[num] = normalize_timestamp(raw.get("created_at"))
            except RecordError:
                pass

    events = []

    def add(link_project, number, sha, linked_at, source):
        if linked_at is None:
            log.warning(
                "dropping %s link %s#%s -> %s: no usable timestamp",
                source,
                link_project,
                number,
                sha,
            )
            return
        try:
            events.append(
                CommitLinkEvent(
                    project=link_project,
                    issue_number=number,
                    commit_sha=sha,
                    linked_at=linked_at,
                    link_source=source,
                )
            )
        except RecordError as exc:
            log.warning("dropping malformed link %s#%s -> %s: %s", link_project, number, sha, exc)

    for sha, message, ts in _normalize_commit_records(commits):
        ts = normalize_timestamp(ts) if ts else None
        for m in _ISSUE_REF.finditer(message):
            number = int(m.group(1))
            linked_at = ts or issue_created.get(number)
            add(project, number, sha, linked_at, "message_reference")
        for m in _ISSUE_URL.finditer(message):
            url_project, number = m.group(1), int(m.group(2))
            linked_at = ts
            if linked_at is None and url_project == project:
                linked_at = issue_created.get(number)
            add(url_project, number, sha, linked_at, "message_reference")

    for raw in raw_issues:
        number = raw.get("number")
        if not isinstance(number, int):
            continue
        for ev in raw.get("timeline", ()):
            if ev.get("event") not in _LINKING_EVENTS:
                continue
            sha = ev.get("commit_id")
            if not sha:
                continue
            linked_at = ev.get("created_at") or issue_created.get(number)
            if linked_at is not None:
                try:
                    linked_at = normalize_timestamp(linked_at)
                except RecordError:
                    linked_at = issue_created.get(number)
            add(project, number, sha, linked_at, "timeline_event")

    seen = set()
    unique = []
    for ev in events:
        key = (ev.project, ev.issue_number, ev.commit_sha.lower(), ev.link_source)
        if key in seen:
            continue
        seen.add(key)
        unique.append(ev)
    unique.sort(key=lambda e: (e.project, e.issue_number, e.commit_sha, e.link_source))
    return unique


def load_commit_records(path):
    """Read a commits file: JSONL of {sha, message[, timestamp]} or one JSON mapping."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            obj = None
        if isinstance(obj, dict) and obj and all(is_hex_sha(k) for k in obj):
            return obj
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordError(f"invalid JSON: {exc}", line=lineno) from None
        if "sha" not in rec:
            raise RecordError("missing", line=lineno, field="sha")
        records.append(rec)
    return records


def mine_projects(
    projects,
    since,
    until,
    out_dir,
    *,
    archive_root=None,
    token_env=None,
    commits_by_project=None,
    transport=None,
    cursor_path=None,
    sleep=time.sleep,
) -> MineReport:
    """Mine every project, writing discussions, links, and a report.

    Output layout under out_dir: ``discussions/<owner>__<name>.jsonl``,
    ``links.jsonl``, ``mine-report.json``.
    """
    report = MineReport()
    archive = RawIssueArchive(archive_root) if archive_root else None
    disc_dir = os.path.join(out_dir, "discussions")
    os.makedirs(disc_dir, exist_ok=True)

    all_links = []
    for project in projects:
        raws = list(
            fetch_issues(
                project,
                since,
                until,
                archive=archive,
                token_env=token_env,
                transport=transport,
                cursor_path=cursor_path,
                report=report,
                sleep=sleep,
            )
        )
        discussions = []
        for raw in raws:
            try:
                discussions.append(normalize_issue(raw, project))
            except RecordError as exc:
                report.record_skip(project, raw.get("number"), exc)
        save_discussions(
            os.path.join(disc_dir, f"{project_dirname(project)}.jsonl"), discussions
        )
        commits = (commits_by_project or {}).get(project, [])
        links = extract_commit_links(project, commits, raws)
        report.links_found += len(links)
        all_links.extend(links)

    save_links(os.path.join(out_dir, "links.jsonl"), all_links)
    with open(os.path.join(out_dir, "mine-report.json"), "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, ensure_ascii=False, indent=2)
    return report
