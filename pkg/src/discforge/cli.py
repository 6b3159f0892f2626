"""Command-line interface.

Exit codes: 0 success, 1 when per-record failures exceed --fail-threshold,
2 for configuration and usage errors. A JSON file passed as --config
supplies defaults for the chosen subcommand; explicit flags always win.
Every run can append one machine-readable line to --run-log.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import ingest, storage
from .contexts import (
    ContextSkip,
    MissingAuxInput,
    build_context,
    enumerate_segment_contexts,
)
from .evaluate import (
    best_exact_match,
    corpus_exact_match,
    dataset_stats,
    exact_match,
    paired_bootstrap,
)
from .linking import attach_discussions
from .records import CONTEXT_KINDS, ContextSpec, RecordError, record_digest
from .textproc import code_tokenize, subtokenize

log = logging.getLogger("discforge")

TOKEN_ENV_POINTER = "DISC_FORGE_TOKEN_ENV"


def _add_common(sp):
    sp.add_argument("--config", help="JSON file of default values for this command's flags")
    sp.add_argument("--run-log", help="append a machine-readable JSON line describing this run")
    sp.add_argument(
        "--fail-threshold",
        type=int,
        default=0,
        help="tolerate up to this many per-record failures before exiting 1",
    )
    sp.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="disc-forge",
        description="Mine, link, and render issue-discussion context for bug-fix corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub_by_name = {}

    def command(name, **kwargs):
        sp = sub.add_parser(name, **kwargs)
        _add_common(sp)
        sub_by_name[name] = sp
        return sp

    sp = command("mine", help="fetch issue discussions and commit links")
    sp.add_argument("--projects", required=True, help="text file, one owner/name per line")
    sp.add_argument("--since", required=True, help="window start, ISO-8601 (inclusive)")
    sp.add_argument("--until", required=True, help="window end, ISO-8601 (exclusive)")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--archive", help="read issues from this archive directory")
    src.add_argument(
        "--token-env",
        help="name of the environment variable holding the API token "
        f"(or set {TOKEN_ENV_POINTER} to that name)",
    )
    sp.add_argument("--commits", help="JSON file mapping project -> commit records")
    sp.add_argument("--cursor", help="checkpoint file for resuming online mining")
    sp.add_argument("--out", required=True, help="output directory")

    sp = command("link", help="attach mined discussions to bug-fix examples")
    sp.add_argument("--examples", required=True)
    sp.add_argument("--links", required=True)
    sp.add_argument("--discussions", required=True, help="JSONL file or directory of them")
    sp.add_argument("--out", required=True)
    sp.add_argument("--dropped", help="where to write examples that got no discussion")

    sp = command("tokenize", help="tokenize text lines from a file")
    sp.add_argument("--mode", choices=("code", "subtoken"), required=True)
    sp.add_argument("--in", dest="in_path", required=True)
    sp.add_argument("--out", required=True, help="JSONL, one token array per input line")

    sp = command("context", help="render model-input contexts for a dataset")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--repr", choices=CONTEXT_KINDS, required=True)
    sp.add_argument("--discussions", required=True)
    sp.add_argument("--desc", help="solution descriptions JSONL")
    sp.add_argument("--traces", help="attention trace file or directory")
    sp.add_argument("--limit", type=int, default=1024, help="token budget per context")
    sp.add_argument("--out", required=True)
    sp.add_argument("--skipped", help="where to record skipped examples and why")

    sp = command("segments", help="render one context per discussion segment")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--discussions", required=True)
    sp.add_argument("--limit", type=int, default=1024)
    sp.add_argument("--out", required=True)

    sp = command("eval", help="exact-match rate of one candidate file")
    sp.add_argument("--refs", required=True, help="dataset JSONL with the fixed code")
    sp.add_argument("--candidates", required=True)
    sp.add_argument("--repr", default="", help="label for the report")
    sp.add_argument("--raw-strings", action="store_true", help="re-tokenize candidates before comparing")
    sp.add_argument("--out", help="write the full report JSON here")

    sp = command("compare", help="paired bootstrap significance of a vs b")
    sp.add_argument("--refs", required=True)
    sp.add_argument("--a", dest="cand_a", required=True)
    sp.add_argument("--b", dest="cand_b", required=True)
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--size", type=int, default=5000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument(
        "--shared-only",
        action="store_true",
        help="compare only examples where both sources produced a candidate",
    )
    sp.add_argument("--out")

    sp = command("oracle-eval", help="best exact match over several candidate sets")
    sp.add_argument("--refs", required=True)
    sp.add_argument("--candidates", required=True, help="directory of <source>.jsonl files")
    sp.add_argument("--out")

    sp = command("stats", help="corpus summary statistics")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--discussions", required=True)
    sp.add_argument("--desc")
    sp.add_argument("--out")

    return parser, sub_by_name


def _apply_config(parser, sub_by_name, argv):
    """Pre-scan for --config; its values become subcommand defaults.

    The scan happens before the real parse so a config value can satisfy a
    required flag. Explicit flags always override config values.
    """
    config_path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif tok.startswith("--config="):
            config_path = tok.split("=", 1)[1]
    command = argv[0] if argv and argv[0] in sub_by_name else None
    if config_path and command:
        with open(config_path, "r", encoding="utf-8") as f:
            try:
                config = json.load(f)
            except json.JSONDecodeError as exc:
                raise ValueError(f"--config {config_path}: invalid JSON: {exc}") from None
        if not isinstance(config, dict):
            raise ValueError(f"--config {config_path}: expected a JSON object")
        sp = sub_by_name[command]
        valid = {a.dest for a in sp._actions}
        defaults = {}
        for key, value in config.items():
            dest = key.replace("-", "_")
            if dest not in valid:
                raise ValueError(f"--config {config_path}: unknown key {key!r}")
            defaults[dest] = value
        sp.set_defaults(**defaults)
        for action in sp._actions:
            if action.dest in defaults:
                action.required = False
    return parser.parse_args(argv)


def _digests(paths) -> dict:
    out = {}
    for p in paths:
        if p and os.path.isfile(p):
            out[p] = record_digest(p)
    return out


def _write_run_log(args, exit_code, details):
    if not getattr(args, "run_log", None):
        return
    entry = {
        "command": args.command,
        "argv": sys.argv[1:],
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "exit_code": exit_code,
    }
    entry.update(details)
    with open(args.run_log, "a", encoding="utf-8") as f:
        f.write(json.dumps(entry, ensure_ascii=False) + "\n")


def _cmd_mine(args) -> tuple[int, dict]:
    with open(args.projects, "r", encoding="utf-8") as f:
        projects = [ln.strip() for ln in f if ln.strip() and not ln.startswith("#")]
    if not projects:
        raise ValueError(f"--projects {args.projects}: no projects listed")
    commits_by_project = None
    if args.commits:
        with open(args.commits, "r", encoding="utf-8") as f:
            commits_by_project = json.load(f)
        if not isinstance(commits_by_project, dict):
            raise ValueError(f"--commits {args.commits}: expected a JSON object keyed by project")
    token_env = args.token_env or (
        None if args.archive else os.environ.get(TOKEN_ENV_POINTER)
    )
    os.makedirs(args.out, exist_ok=True)
    report = ingest.mine_projects(
        projects,
        args.since,
        args.until,
        args.out,
        archive_root=args.archive,
        token_env=token_env,
        commits_by_project=commits_by_project,
        cursor_path=args.cursor,
    )
    print(
        f"mined {report.issues_in_window} issues from {len(projects)} projects "
        f"({report.issues_skipped} skipped, {report.links_found} links)"
    )
    code = 1 if report.issues_skipped > args.fail_threshold else 0
    return code, {"report": report.to_dict(), "out": args.out}


def _cmd_link(args) -> tuple[int, dict]:
    examples = storage.load_dataset(args.examples)
    links = storage.load_links(args.links)
    discussions = storage.load_discussions(args.discussions)
    linked, dropped = attach_discussions(examples, links, discussions)
    storage.save_dataset(args.out, linked)
    if args.dropped:
        storage.save_dataset(args.dropped, dropped)
    print(f"linked {len(linked)} examples; {len(dropped)} had no discussion")
    return 0, {
        "linked": len(linked),
        "dropped": len(dropped),
        "inputs": _digests([args.examples, args.links]),
    }


def _cmd_tokenize(args) -> tuple[int, dict]:
    tokenizer = code_tokenize if args.mode == "code" else subtokenize
    failures = 0
    n = 0
    with open(args.in_path, "r", encoding="utf-8") as fin, open(
        args.out, "w", encoding="utf-8"
    ) as fout:
        for line in fin:
            n += 1
            try:
                tokens = tokenizer(line.rstrip("\n"))
            except Exception as exc:
                failures += 1
                log.warning("line %d: %s", n, exc)
                tokens = []
            fout.write(json.dumps(tokens, ensure_ascii=False) + "\n")
    code = 1 if failures > args.fail_threshold else 0
    return code, {"lines": n, "failures": failures}


def _cmd_context(args) -> tuple[int, dict]:
    examples = storage.load_dataset(args.dataset)
    discussions = storage.load_discussions(args.discussions)
    descriptions = storage.load_descriptions(args.desc) if args.desc else None
    traces = storage.load_traces(args.traces) if args.traces else None
    spec = ContextSpec(kind=args.repr, token_limit=args.limit)

    rows, skipped = [], []
    failures = 0
    for ex in examples:
        try:
            tokens = build_context(
                ex, spec, discussions, descriptions=descriptions, traces=traces
            )
        except ContextSkip as exc:
            skipped.append({"example_id": ex.id, "reason": str(exc)})
            continue
        except RecordError as exc:
            failures += 1
            log.warning("example %s: %s", ex.id, exc)
            continue
        rows.append({"example_id": ex.id, "repr": spec.kind, "input_tokens": tokens})
    with open(args.out, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    if args.skipped:
        with open(args.skipped, "w", encoding="utf-8") as f:
            for row in skipped:
                f.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(
        f"built {len(rows)} {spec.kind} contexts "
        f"({len(skipped)} skipped, {failures} failed)"
    )
    code = 1 if failures > args.fail_threshold else 0
    return code, {"built": len(rows), "skipped": len(skipped), "failures": failures}


def _cmd_segments(args) -> tuple[int, dict]:
    examples = storage.load_dataset(args.dataset)
    discussions = storage.load_discussions(args.discussions)
    n = 0
    with open(args.out, "w", encoding="utf-8") as f:
        for ex in examples:
            for ref, tokens in enumerate_segment_contexts(
                ex, discussions, token_limit=args.limit
            ):
                row = {
                    "example_id": ex.id,
                    "discussion_id": ref.discussion_id,
                    "kind": ref.kind,
                    "utterance_index": ref.utterance_index,
                    "input_tokens": tokens,
                }
                f.write(json.dumps(row, ensure_ascii=False) + "\n")
                n += 1
    print(f"rendered {n} segment contexts for {len(examples)} examples")
    return 0, {"segments": n}


def _cmd_eval(args) -> tuple[int, dict]:
    examples = storage.load_dataset(args.refs)
    candidates = storage.load_candidates(args.candidates)
    report = corpus_exact_match(
        examples, candidates, representation=args.repr, raw_strings=args.raw_strings
    )
    payload = report.to_dict()
    payload["inputs"] = _digests([args.refs, args.candidates])
    if args.out:
        storage.save_report(args.out, payload)
    print(
        f"exact match: {report.exact_match_rate}% "
        f"({payload['matches']}/{report.n}, {report.missing} missing)"
    )
    return 0, {"exact_match_rate": report.exact_match_rate, "n": report.n}


def _outcomes(examples, candidates):
    out = {}
    for ex in examples:
        cand = candidates.get(ex.id)
        out[ex.id] = bool(cand) and exact_match(cand.candidate_tokens, ex.fixed_tokens)
    return out


def _cmd_compare(args) -> tuple[int, dict]:
    examples = storage.load_dataset(args.refs)
    cand_a = storage.load_candidates(args.cand_a)
    cand_b = storage.load_candidates(args.cand_b)
    if args.shared_only:
        shared = set(cand_a) & set(cand_b)
        examples = [ex for ex in examples if ex.id in shared]
        if not examples:
            raise ValueError("--shared-only left no examples to compare")
    out_a = _outcomes(examples, cand_a)
    out_b = _outcomes(examples, cand_b)
    ids = [ex.id for ex in examples]
    vec_a = [out_a[i] for i in ids]
    vec_b = [out_b[i] for i in ids]
    label_a, label_b = args.cand_a, args.cand_b
    swapped = False
    if sum(vec_a) < sum(vec_b):
        vec_a, vec_b = vec_b, vec_a
        label_a, label_b = label_b, label_a
        swapped = True
    result = paired_bootstrap(
        vec_a,
        vec_b,
        n_samples=args.samples,
        sample_size=args.size,
        seed=args.seed,
        n_jobs=args.jobs,
    )
    payload = {
        "a": label_a,
        "b": label_b,
        "swapped": swapped,
        "inputs": _digests([args.refs, args.cand_a, args.cand_b]),
    }
    payload.update(result.to_dict())
    if args.out:
        storage.save_report(args.out, payload)
    note = " (arguments swapped so a is the stronger system)" if swapped else ""
    print(
        f"p = {result.p_value:.4f}  delta = {result.delta:+.4f}  "
        f"a = {result.rate_a}%  b = {result.rate_b}%{note}"
    )
    return 0, payload


def _cmd_oracle_eval(args) -> tuple[int, dict]:
    examples = storage.load_dataset(args.refs)
    sets = {}
    for name in sorted(os.listdir(args.candidates)):
        if name.endswith(".jsonl"):
            sets[name[:-6]] = storage.load_candidates(os.path.join(args.candidates, name))
    if not sets:
        raise ValueError(f"--candidates {args.candidates}: no .jsonl files found")
    report = best_exact_match(examples, sets)
    report["inputs"] = _digests([args.refs])
    if args.out:
        storage.save_report(args.out, report)
    rates = ", ".join(f"{k}={v}%" for k, v in report["sources"].items())
    print(f"best exact match: {report['best_exact_match_rate']}%  ({rates})")
    return 0, {"best_exact_match_rate": report["best_exact_match_rate"]}


def _cmd_stats(args) -> tuple[int, dict]:
    examples = storage.load_dataset(args.dataset)
    discussions = storage.load_discussions(args.discussions)
    descriptions = storage.load_descriptions(args.desc) if args.desc else None
    report = dataset_stats(examples, discussions, descriptions=descriptions)
    report["inputs"] = _digests([args.dataset, args.desc])
    if args.out:
        storage.save_report(args.out, report)
    overall = report["overall"]
    print(
        f"{overall['num_examples']} examples, "
        f"{overall['num_linked_discussions']} linked discussions, "
        f"{overall['avg_discussions_per_example']} discussions/example, "
        f"{overall['avg_utterances_per_discussion']} utterances/discussion"
    )
    return 0, {"overall": overall}


_HANDLERS = {
    "mine": _cmd_mine,
    "link": _cmd_link,
    "tokenize": _cmd_tokenize,
    "context": _cmd_context,
    "segments": _cmd_segments,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
    "oracle-eval": _cmd_oracle_eval,
    "stats": _cmd_stats,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, sub_by_name = build_parser()
    try:
        args = _apply_config(parser, sub_by_name, argv)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        code, details = _HANDLERS[args.command](args)
    except (MissingAuxInput, RecordError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_run_log(args, 2, {"error": str(exc)})
        return 2
    _write_run_log(args, code, details)
    return code


if __name__ == "__main__":
    sys.exit(main())
