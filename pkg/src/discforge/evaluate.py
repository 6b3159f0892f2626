"""Evaluation: exact match, paired bootstrap significance, dataset stats.

The bootstrap uses one PCG64 stream per resample, derived from
SeedSequence(seed, spawn_key=(i,)), so the i-th resample draws identical
indices whether samples run serially or across workers; results are
bit-identical for any job count. All resample comparisons are done in
integer arithmetic, never floats.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .linking import prepare_discussions
from .records import SPLITS, make_eval_report
from .textproc import code_tokenize


def exact_match(candidate_tokens, reference_tokens) -> bool:
    """Token-for-token equality."""
    candidate_tokens = list(candidate_tokens)
    reference_tokens = list(reference_tokens)
    return len(candidate_tokens) == len(reference_tokens) and all(
        c == r for c, r in zip(candidate_tokens, reference_tokens)
    )


def corpus_exact_match(examples, candidates, *, representation="", raw_strings=False):
    """Score one candidate set against the examples' fixed code.

    Examples with no candidate count as non-matches and are tallied in the
    report's `missing`. With raw_strings=True the candidate tokens are
    treated as raw text and re-tokenized before comparison, so formatting
    differences in model output do not matter.
    """
    per_example = {}
    missing = 0
    for ex in examples:
        cand = candidates.get(ex.id)
        if cand is None:
            per_example[ex.id] = False
            missing += 1
            continue
        tokens = cand.candidate_tokens
        if raw_strings:
            tokens = code_tokenize(" ".join(tokens))
        per_example[ex.id] = exact_match(tokens, ex.fixed_tokens)
    return make_eval_report(representation, per_example, missing)


@dataclass(frozen=True)
class BootstrapResult:
    """Paired bootstrap comparison of two candidate sources."""

    p_value: float
    delta: float
    rate_a: float
    rate_b: float
    n: int
    n_samples: int
    sample_size: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "p_value": round(self.p_value, 4),
            "delta": self.delta,
            "rate_a": self.rate_a,
            "rate_b": self.rate_b,
            "n": self.n,
            "n_samples": self.n_samples,
            "sample_size": self.sample_size,
            "seed": self.seed,
        }


def _twice_count(diff, n, D, sample_size, start, stop, seed):
    """Doubled exceedance count for resamples [start, stop).

    Counts 2 when the resampled gap strictly exceeds twice the observed
    gap, 1 on exact equality (a tie splits the difference), 0 otherwise.
    Comparing Ds*n against 2*D*sample_size keeps everything integral.
    """
    threshold = 2 * int(D) * sample_size
    twice = 0
    for i in range(start, stop):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        )
        idx = rng.integers(0, n, size=sample_size)
        ds = int(diff[idx].sum()) * n
        if ds > threshold:
            twice += 2
        elif ds == threshold:
            twice += 1
    return twice


def paired_bootstrap(
    outcomes_a,
    outcomes_b,
    *,
    n_samples: int = 10000,
    sample_size: int = 5000,
    seed: int = 0,
    n_jobs: int = 1,
) -> BootstrapResult:
    """Probability that system a's observed advantage over b is luck.

    Both outcome vectors must be aligned over the same examples, a being
    the system with the higher (or equal) exact-match rate. Each resample
    draws sample_size examples with replacement and the p-value is the
    fraction of resamples whose rate gap exceeds twice the observed gap.
    """
    a = np.asarray(list(outcomes_a), dtype=bool)
    b = np.asarray(list(outcomes_b), dtype=bool)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(
            f"outcome vectors must be aligned 1-d sequences, got {a.shape} vs {b.shape}"
        )
    n = int(a.size)
    if n == 0:
        raise ValueError("outcome vectors are empty")
    if n_samples <= 0:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    if sample_size <= 0:
        raise ValueError(f"sample_size must be positive, got {sample_size}")

    diff = a.astype(np.int64) - b.astype(np.int64)
    D = int(diff.sum())
    delta = D / n
    if D < 0:
        raise ValueError(
            "system a scores below system b (delta < 0); swap the arguments so "
            "a is the stronger system and interpret p for that direction"
        )

    n_jobs = max(1, int(n_jobs))
    if n_jobs == 1:
        twice = _twice_count(diff, n, D, sample_size, 0, n_samples, seed)
    else:
        bounds = np.linspace(0, n_samples, n_jobs + 1).astype(int)
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            futures = [
                pool.submit(
                    _twice_count, diff, n, D, sample_size, int(lo), int(hi), seed
                )
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ]
            twice = sum(f.result() for f in futures)

    return BootstrapResult(
        p_value=twice / (2.0 * n_samples),
        delta=delta,
        rate_a=round(100.0 * a.mean(), 1),
        rate_b=round(100.0 * b.mean(), 1),
        n=n,
        n_samples=n_samples,
        sample_size=sample_size,
        seed=seed,
    )


def best_exact_match(examples, candidate_sets: dict) -> dict:
    """Oracle upper bound: an example counts if any source matched it.

    candidate_sets maps source name -> {example_id -> Candidate}. The
    report carries each source's own rate too; the best rate can never be
    below any of them.
    """
    if not candidate_sets:
        raise ValueError("need at least one candidate set")
    per_source = {}
    matched_by = {ex.id: [] for ex in examples}
    for name, candidates in candidate_sets.items():
        report = corpus_exact_match(examples, candidates, representation=name)
        per_source[name] = report.exact_match_rate
        for ex_id, ok in report.per_example.items():
            if ok:
                matched_by[ex_id].append(name)
    n = len(matched_by)
    best = sum(bool(v) for v in matched_by.values())
    return {
        "n": n,
        "sources": per_source,
        "best_exact_match_rate": round(100.0 * best / n, 1) if n else 0.0,
        "matched_by": matched_by,
    }


def _avg(values):
    return round(sum(values) / len(values), 1) if values else None


def _code_len(tokens) -> int:
    return len(code_tokenize(" ".join(tokens)))


def _stats_for(examples, discussions, descriptions):
    buggy, fixed, oracle, desc = [], [], [], []
    titles, utt_lens, utt_counts = [], [], []
    disc_counts = []
    distinct_discussions = set()
    for ex in examples:
        buggy.append(_code_len(ex.buggy_tokens))
        fixed.append(_code_len(ex.fixed_tokens))
        if ex.oracle_msg_tokens:
            oracle.append(_code_len(ex.oracle_msg_tokens))
        for _, tokens in (descriptions or {}).get(ex.id, ()):
            desc.append(_code_len(tokens))
        prepared = prepare_discussions(ex, discussions)
        disc_counts.append(len(prepared))
        for d in prepared:
            distinct_discussions.add(d.id)
            titles.append(len(code_tokenize(d.title)))
            utt_counts.append(len(d.utterances))
            for u in d.utterances:
                utt_lens.append(len(code_tokenize(u.body_raw)))
    return {
        "num_examples": len(examples),
        "num_linked_discussions": len(distinct_discussions),
        "avg_discussions_per_example": _avg(disc_counts),
        "avg_utterances_per_discussion": _avg(utt_counts),
        "avg_tokens_buggy": _avg(buggy),
        "avg_tokens_fixed": _avg(fixed),
        "avg_tokens_title": _avg(titles),
        "avg_tokens_utterance": _avg(utt_lens),
        "avg_tokens_oracle_msg": _avg(oracle),
        "avg_tokens_description": _avg(desc),
    }


def dataset_stats(examples, discussions, *, descriptions=None) -> dict:
    """Corpus summary, overall and per split.

    Utterance and discussion numbers reflect the temporal filter (content
    at or after each example's fixing commit is not counted), so the stats
    describe what a model could actually see. Token lengths use
    code_tokenize over the underlying text.
    """
    out = {"overall": _stats_for(examples, discussions, descriptions), "splits": {}}
    for split in SPLITS:
        subset = [ex for ex in examples if ex.split == split]
        out["splits"][split] = _stats_for(subset, discussions, descriptions)
    return out
