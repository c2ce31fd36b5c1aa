"""Machine translation evaluation metrics and significance testing.

Corpus-level BLEU (clipped n-gram precisions, geometric mean, brevity
penalty), NIST (information-weighted n-gram co-occurrence, arithmetic mean,
its own gentler brevity factor), TER (word edits plus greedily searched
phrase shifts, each shift one edit), and a simplified METEOR with
exact/stem/synonym match stages, recall-weighted F-mean and a fragmentation
penalty.  Scores are fractions; multiply by 100 for the conventional
presentation.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .filtering import DEFAULT_STEM_RULES, StemRules, stem

Tokens = tuple[str, ...]


@dataclass(frozen=True)
class EvalPair:
    hypothesis: Tokens
    references: tuple[Tokens, ...]

    def __post_init__(self) -> None:
        if not self.references:
            raise ValueError("an evaluation pair needs at least one reference")


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


# ---------------------------------------------------------------------------
# BLEU

def bleu(corpus: Sequence[EvalPair], max_n: int = 4) -> float:
    """Geometric mean of clipped n-gram precisions times the brevity penalty.

    A zero precision at any order gives 0.  With multiple references the
    effective reference length is the closest to the hypothesis (ties go to
    the shorter one) and clipping uses the per-reference maximum count.
    """
    if not corpus:
        raise ValueError("cannot score an empty corpus")
    correct = [0] * max_n
    total = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for pair in corpus:
        hyp = pair.hypothesis
        hyp_len += len(hyp)
        ref_len += _closest_ref_len(len(hyp), pair.references)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp, n)
            if not hyp_counts:
                continue
            ref_max: Counter = Counter()
            for ref in pair.references:
                for ngram, count in _ngrams(ref, n).items():
                    if count > ref_max[ngram]:
                        ref_max[ngram] = count
            for ngram, count in hyp_counts.items():
                correct[n - 1] += min(count, ref_max.get(ngram, 0))
                total[n - 1] += count
    if hyp_len == 0 or any(c == 0 or t == 0 for c, t in zip(correct, total)):
        return 0.0
    log_precision = sum(math.log(c / t) for c, t in zip(correct, total)) / max_n
    brevity = math.exp(min(0.0, 1.0 - ref_len / hyp_len))
    return brevity * math.exp(log_precision)


def _closest_ref_len(hyp_len: int, references: Sequence[Tokens]) -> int:
    return min((abs(len(r) - hyp_len), len(r)) for r in references)[1]


# ---------------------------------------------------------------------------
# NIST

# brevity factor exponent: 0.5 exactly when the hypothesis is 2/3 the
# reference length
_NIST_BETA = math.log(0.5) / math.log(2.0 / 3.0) ** 2


def nist(corpus: Sequence[EvalPair], max_n: int = 5) -> float:
    """Information-weighted n-gram score with arithmetic-mean combination.

    info(w1..wn) = log2(count(w1..wn-1) / count(w1..wn)) over the corpus
    reference statistics; rarer n-grams score higher.
    """
    if not corpus:
        raise ValueError("cannot score an empty corpus")
    ref_counts: Counter = Counter()
    total_ref_words = 0
    for pair in corpus:
        for ref in pair.references:
            total_ref_words += len(ref)
            for n in range(1, max_n + 1):
                ref_counts.update(_ngrams(ref, n))

    def info(ngram: tuple[str, ...]) -> float:
        denom = ref_counts[ngram]
        numer = total_ref_words if len(ngram) == 1 else ref_counts[ngram[:-1]]
        if denom <= 0 or numer <= 0:
            return 0.0
        return math.log2(numer / denom)

    gained = [0.0] * max_n
    emitted = [0] * max_n
    hyp_len = 0
    ref_len = 0.0
    for pair in corpus:
        hyp = pair.hypothesis
        hyp_len += len(hyp)
        ref_len += sum(len(r) for r in pair.references) / len(pair.references)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp, n)
            if not hyp_counts:
                continue
            ref_max: Counter = Counter()
            for ref in pair.references:
                for ngram, count in _ngrams(ref, n).items():
                    if count > ref_max[ngram]:
                        ref_max[ngram] = count
            for ngram, count in hyp_counts.items():
                emitted[n - 1] += count
                matched = min(count, ref_max.get(ngram, 0))
                if matched:
                    gained[n - 1] += matched * info(ngram)
    if hyp_len == 0:
        return 0.0
    score = sum(g / e for g, e in zip(gained, emitted) if e > 0)
    ratio = min(hyp_len / ref_len, 1.0) if ref_len > 0 else 1.0
    brevity = math.exp(_NIST_BETA * math.log(ratio) ** 2) if ratio < 1.0 else 1.0
    return score * brevity


# ---------------------------------------------------------------------------
# TER

def _edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


_MAX_SHIFT_LEN = 10

# inputs this small are solved exactly; greedy shift search can lose the
# optimum by one edit in rare interleaved-block cases
_EXACT_TER_LIMIT = 6


def _exact_ter_edits(hypothesis: Sequence[str], reference: Sequence[str]) -> int:
    """Minimum of shifts plus edit distance over every shift sequence.

    Breadth-first over reachable token orders; only viable for short inputs.
    """
    ref = tuple(reference)
    ref_phrases = {ref[i:j] for i in range(len(ref))
                   for j in range(i + 1, min(len(ref), i + _MAX_SHIFT_LEN) + 1)}
    start = tuple(hypothesis)
    best = _edit_distance(start, ref)
    seen = {start}
    frontier = [start]
    shifts = 0
    while frontier and shifts + 1 < best:
        shifts += 1
        next_frontier = []
        for state in frontier:
            for pos in range(len(state)):
                for length in range(1, min(_MAX_SHIFT_LEN, len(state) - pos) + 1):
                    phrase = state[pos:pos + length]
                    if phrase not in ref_phrases:
                        continue
                    removed = state[:pos] + state[pos + length:]
                    for dest in range(len(removed) + 1):
                        if dest == pos:
                            continue
                        candidate = removed[:dest] + phrase + removed[dest:]
                        if candidate in seen:
                            continue
                        seen.add(candidate)
                        distance = _edit_distance(candidate, ref)
                        if shifts + distance < best:
                            best = shifts + distance
                        next_frontier.append(candidate)
        frontier = next_frontier
    return best


def _ter_edits(hypothesis: Sequence[str], reference: Sequence[str]) -> int:
    """Shifts plus final edit distance.

    Greedy best-improvement-first shift search, except that inputs with both
    sides at most six tokens are solved exactly.
    """
    if len(hypothesis) <= _EXACT_TER_LIMIT and len(reference) <= _EXACT_TER_LIMIT:
        return _exact_ter_edits(hypothesis, reference)
    current = list(hypothesis)
    ref = list(reference)
    ref_phrases = {tuple(ref[k:k + length])
                   for length in range(1, min(_MAX_SHIFT_LEN, len(ref)) + 1)
                   for k in range(len(ref) - length + 1)}
    shifts = 0
    distance = _edit_distance(current, ref)
    while distance > 0:
        best_distance = distance
        best_state: list[str] | None = None
        for start in range(len(current)):
            for length in range(1, min(_MAX_SHIFT_LEN, len(current) - start) + 1):
                phrase = tuple(current[start:start + length])
                if phrase not in ref_phrases:
                    continue
                removed = current[:start] + current[start + length:]
                for pos in range(len(removed) + 1):
                    if pos == start:
                        continue
                    candidate = removed[:pos] + list(phrase) + removed[pos:]
                    d = _edit_distance(candidate, ref)
                    if d < best_distance:
                        best_distance = d
                        best_state = candidate
        if best_state is None:
            break
        current = best_state
        distance = best_distance
        shifts += 1
    return shifts + distance


def ter(hypothesis: Sequence[str], references: Sequence[Sequence[str]]) -> float:
    """Translation error rate: edits over reference length, best reference.

    Edits are insertions, deletions, substitutions and phrase shifts, each
    shift costing one edit.
    """
    usable = [list(r) for r in references if len(r) > 0]
    if not usable:
        raise ValueError("TER needs at least one non-empty reference")
    return min(_ter_edits(hypothesis, ref) / len(ref) for ref in usable)


def corpus_ter(corpus: Sequence[EvalPair]) -> float:
    """Total edits over total reference length, best reference per segment."""
    if not corpus:
        raise ValueError("cannot score an empty corpus")
    total_edits = 0
    total_len = 0
    for pair in corpus:
        usable = [list(r) for r in pair.references if len(r) > 0]
        if not usable:
            raise ValueError("TER needs at least one non-empty reference")
        edits, length = min(
            ((_ter_edits(pair.hypothesis, ref), len(ref)) for ref in usable),
            key=lambda el: (el[0] / el[1], el[1]))
        total_edits += edits
        total_len += length
    return total_edits / total_len


# ---------------------------------------------------------------------------
# METEOR (simplified)

_METEOR_STAGES = ("exact", "stem", "synonym")


def _stage_matches(hyp: Sequence[str], ref: Sequence[str],
                   stages: Sequence[str], stemmer: StemRules,
                   synonyms: Mapping[str, frozenset[str]]) -> list[tuple[int, int]]:
    matched_h: set[int] = set()
    matched_r: set[int] = set()
    matches: list[tuple[int, int]] = []

    def equivalent(stage: str, h: str, r: str) -> bool:
        if stage == "exact":
            return h == r
        if stage == "stem":
            return stem(h, stemmer) == stem(r, stemmer)
        return r in synonyms.get(h, ()) or h in synonyms.get(r, ())

    for stage in stages:
        for i, h in enumerate(hyp):
            if i in matched_h:
                continue
            for j, r in enumerate(ref):
                if j in matched_r:
                    continue
                if equivalent(stage, h, r):
                    matches.append((i, j))
                    matched_h.add(i)
                    matched_r.add(j)
                    break
    return matches


def meteor_lite(hypothesis: Sequence[str], references: Sequence[Sequence[str]],
                stemmer: StemRules = DEFAULT_STEM_RULES,
                synonyms: Mapping[str, frozenset[str]] | None = None,
                stages: Sequence[str] = _METEOR_STAGES) -> float:
    """Staged unigram alignment, F-mean 10PR/(R+9P), fragmentation penalty
    0.5*(chunks/matches)^3; the best reference score is returned."""
    usable = [list(r) for r in references if len(r) > 0]
    if not usable:
        raise ValueError("METEOR needs at least one non-empty reference")
    if not hypothesis:
        return 0.0
    synonyms = synonyms or {}
    best = 0.0
    for ref in usable:
        matches = _stage_matches(hypothesis, ref, stages, stemmer, synonyms)
        m = len(matches)
        if m == 0:
            continue
        precision = m / len(hypothesis)
        recall = m / len(ref)
        fmean = 10.0 * precision * recall / (recall + 9.0 * precision)
        matches.sort()
        chunks = 1
        for (h1, r1), (h2, r2) in zip(matches, matches[1:]):
            if h2 != h1 + 1 or r2 != r1 + 1:
                chunks += 1
        penalty = 0.5 * (chunks / m) ** 3
        score = fmean * (1.0 - penalty)
        if score > best:
            best = score
    return best


def corpus_meteor(corpus: Sequence[EvalPair],
                  stemmer: StemRules = DEFAULT_STEM_RULES,
                  synonyms: Mapping[str, frozenset[str]] | None = None) -> float:
    """Arithmetic mean of per-segment scores."""
    if not corpus:
        raise ValueError("cannot score an empty corpus")
    return sum(meteor_lite(p.hypothesis, p.references, stemmer, synonyms)
               for p in corpus) / len(corpus)


# ---------------------------------------------------------------------------
# significance

@dataclass(frozen=True)
class BootstrapResult:
    observed_diff: float
    mean_diff: float
    ci_low: float
    ci_high: float
    p_value: float
    n_resamples: int

    def as_dict(self) -> dict:
        return {
            "observed_diff": self.observed_diff,
            "mean_diff": self.mean_diff,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "p_value": self.p_value,
            "n_resamples": self.n_resamples,
        }


def bootstrap_diff(sys_a: Sequence[EvalPair], sys_b: Sequence[EvalPair],
                   metric: Callable[[Sequence[EvalPair]], float],
                   n_resamples: int = 1000, seed: int = 0) -> BootstrapResult:
    """Bootstrap the metric difference between two systems on a shared test set.

    Sentence indices are resampled with replacement; reports the mean
    difference, the 95% interval of the resampled differences, and the
    fraction of resamples whose difference sign flips against the observed
    full-corpus difference.
    """
    if len(sys_a) != len(sys_b):
        raise ValueError(
            f"system outputs differ in length: {len(sys_a)} vs {len(sys_b)}")
    if not sys_a:
        raise ValueError("cannot bootstrap an empty test set")
    n = len(sys_a)
    observed = metric(sys_a) - metric(sys_b)
    rng = random.Random(seed)
    diffs = []
    for _ in range(n_resamples):
        idx = [rng.randrange(n) for _ in range(n)]
        sample_a = [sys_a[i] for i in idx]
        sample_b = [sys_b[i] for i in idx]
        diffs.append(metric(sample_a) - metric(sample_b))
    diffs.sort()
    lo = diffs[int(0.025 * n_resamples)]
    hi = diffs[min(n_resamples - 1, int(0.975 * n_resamples))]
    if observed > 0:
        p_value = sum(1 for d in diffs if d <= 0) / n_resamples
    elif observed < 0:
        p_value = sum(1 for d in diffs if d >= 0) / n_resamples
    else:
        p_value = 1.0
    return BootstrapResult(
        observed_diff=observed,
        mean_diff=sum(diffs) / n_resamples,
        ci_low=lo, ci_high=hi,
        p_value=p_value, n_resamples=n_resamples,
    )
