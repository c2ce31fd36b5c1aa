"""Sequential analogy detection and quasi-parallel corpus generation.

An analogy A:B::C:D over sentences requires dist(A,B) = dist(C,D) and
dist(A,C) = dist(B,D) under word-level Levenshtein distance (each word one
symbol), plus a character-occurrence constraint: the per-character count
difference between A and B must equal the one between C and D.

Each analogy pair contributes a rewriting model: the common token prefix
and suffix of the two source sentences together with the common prefix and
suffix of their translations.  Applying a model to a new sentence that
carries the prefix and suffix produces a translation by gloss-translating
the variable middle.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .corpus_io import ArticlePair, BiSentence, BitextCorpus, segment_sentences, tokenize
from .lexicon import TranslationLexicon, gloss_translate

Tokens = tuple[str, ...]


@dataclass(frozen=True)
class AnalogyQuadruple:
    a: Tokens
    b: Tokens
    c: Tokens
    d: Tokens
    d_ab: int
    d_cd: int
    d_ac: int
    d_bd: int
    indices: tuple[int, int, int, int] = (-1, -1, -1, -1)


@dataclass(frozen=True)
class RewritingModel:
    src_prefix: Tokens
    src_suffix: Tokens
    tgt_prefix: Tokens
    tgt_suffix: Tokens
    support: tuple[tuple[Tokens, Tokens], tuple[Tokens, Tokens]]


@dataclass(frozen=True)
class QuasiParallelEntry:
    pair: BiSentence
    model_id: int
    confirmed: bool


@dataclass
class QuasiParallelCorpus:
    entries: list[QuasiParallelEntry]
    src_lang: str = ""
    tgt_lang: str = ""

    def report(self) -> dict:
        return {
            "generated": len(self.entries),
            "confirmed": sum(1 for e in self.entries if e.confirmed),
        }


# ---------------------------------------------------------------------------
# distances and constraints

def word_levenshtein(s1: Sequence[str], s2: Sequence[str]) -> int:
    """Minimal insert/delete/substitute count treating each token as a symbol."""
    if len(s1) < len(s2):
        s1, s2 = s2, s1
    prev = list(range(len(s2) + 1))
    for i, a in enumerate(s1, 1):
        cur = [i]
        for j, b in enumerate(s2, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a != b)))
        prev = cur
    return prev[-1]


def _levenshtein_capped(s1: Sequence[str], s2: Sequence[str], cap: int) -> int | None:
    """word_levenshtein with early abandon; None when the distance exceeds cap."""
    if abs(len(s1) - len(s2)) > cap:
        return None
    prev = list(range(len(s2) + 1))
    for i, a in enumerate(s1, 1):
        cur = [i]
        row_min = i
        for j, b in enumerate(s2, 1):
            d = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a != b))
            cur.append(d)
            if d < row_min:
                row_min = d
        if row_min > cap:
            return None
        prev = cur
    return prev[-1] if prev[-1] <= cap else None


def char_profile_check(a: str, b: str, c: str, d: str) -> bool:
    """True iff every character changes count from A to B exactly as from C to D."""
    delta_ab = Counter(a)
    delta_ab.subtract(Counter(b))
    delta_cd = Counter(c)
    delta_cd.subtract(Counter(d))
    for ch in set(delta_ab) | set(delta_cd):
        if delta_ab.get(ch, 0) != delta_cd.get(ch, 0):
            return False
    return True


def _profile_tokens(a: Tokens, b: Tokens, c: Tokens, d: Tokens) -> bool:
    return char_profile_check(" ".join(a), " ".join(b), " ".join(c), " ".join(d))


# ---------------------------------------------------------------------------
# analogy search

_SYMMETRIES = (
    (0, 1, 2, 3), (2, 3, 0, 1), (1, 0, 3, 2), (3, 2, 1, 0),
    (0, 2, 1, 3), (1, 3, 0, 2), (2, 0, 3, 1), (3, 1, 2, 0),
)


def canonical_arrangement(quad: tuple[Tokens, Tokens, Tokens, Tokens],
                          ) -> tuple[Tokens, Tokens, Tokens, Tokens]:
    """Smallest of the eight symmetric forms of an analogy (pair swap,
    in-pair reversal, exchange of the means), so each analogy has one
    representation."""
    return min(tuple(quad[i] for i in perm) for perm in _SYMMETRIES)


def find_analogies(sentences: Sequence[Sequence[str]], max_distance: int = 4,
                   prune: bool = True) -> list[AnalogyQuadruple]:
    """All analogies among distinct sentences with both distances <= max_distance.

    Duplicate sentences are collapsed before the search (an analogy needs four
    distinct sentences).  ``prune`` applies length bucketing: token sequences
    whose length difference exceeds max_distance cannot be within distance
    and are skipped; the result set is provably unchanged.
    """
    uniq: list[Tokens] = []
    first_index: dict[Tokens, int] = {}
    for idx, sent in enumerate(sentences):
        key = tuple(sent)
        if key not in first_index:
            first_index[key] = idx
            uniq.append(key)
    order = sorted(range(len(uniq)), key=lambda k: uniq[k])

    # all unordered pairs within distance, bucketed by distance
    dist: dict[tuple[int, int], int] = {}
    buckets: dict[int, list[tuple[int, int]]] = {}
    for pos1 in range(len(order)):
        u = order[pos1]
        for pos2 in range(pos1 + 1, len(order)):
            v = order[pos2]
            if prune and abs(len(uniq[u]) - len(uniq[v])) > max_distance:
                continue
            d = _levenshtein_capped(uniq[u], uniq[v], max_distance)
            if d is None:
                continue
            dist[(min(u, v), max(u, v))] = d
            buckets.setdefault(d, []).append((u, v) if uniq[u] < uniq[v] else (v, u))

    def cross(u: int, v: int) -> int | None:
        return dist.get((min(u, v), max(u, v)))

    found: dict[tuple[Tokens, Tokens, Tokens, Tokens], AnalogyQuadruple] = {}
    for d_pair, pairs in buckets.items():
        for (x1, y1), (x2, y2) in itertools.combinations(pairs, 2):
            if len({x1, y1, x2, y2}) < 4:
                continue
            for a, b, c, d in ((x1, y1, x2, y2), (x1, y1, y2, x2)):
                d_ac = cross(a, c)
                if d_ac is None or d_ac != cross(b, d):
                    continue
                ta, tb, tc, td = uniq[a], uniq[b], uniq[c], uniq[d]
                if not _profile_tokens(ta, tb, tc, td):
                    continue
                canon = canonical_arrangement((ta, tb, tc, td))
                if canon in found:
                    continue
                ca, cb, cc, cd = canon
                found[canon] = AnalogyQuadruple(
                    a=ca, b=cb, c=cc, d=cd,
                    d_ab=word_levenshtein(ca, cb), d_cd=word_levenshtein(cc, cd),
                    d_ac=word_levenshtein(ca, cc), d_bd=word_levenshtein(cb, cd),
                    indices=tuple(first_index[t] for t in canon),
                )
    return [found[key] for key in sorted(found)]


def find_analogy_clusters(quadruples: Sequence[AnalogyQuadruple], order: int = 2,
                          ) -> list[list[tuple[Tokens, Tokens]]]:
    """Group analogies into clusters of sentence pairs.

    order=2 returns each quadruple as its own two-pair cluster.  For
    order >= 3, a cluster is a set of ``order`` pairs every two of which
    form an analogy (the closed-chain condition); this search is expensive
    and disabled by default in the CLI.
    """
    if order < 2:
        raise ValueError("cluster order must be >= 2")
    pair_key = lambda x, y: (x, y) if x <= y else (y, x)
    if order == 2:
        return [[pair_key(q.a, q.b), pair_key(q.c, q.d)] for q in quadruples]

    edges: set[tuple[tuple[Tokens, Tokens], tuple[Tokens, Tokens]]] = set()
    nodes: set[tuple[Tokens, Tokens]] = set()
    for q in quadruples:
        p1, p2 = pair_key(q.a, q.b), pair_key(q.c, q.d)
        nodes.update((p1, p2))
        edges.add((min(p1, p2), max(p1, p2)))
    clusters = []
    for combo in itertools.combinations(sorted(nodes), order):
        if all((min(p, q), max(p, q)) in edges
               for p, q in itertools.combinations(combo, 2)):
            clusters.append(list(combo))
    return clusters


# ---------------------------------------------------------------------------
# rewriting models

def _common_prefix(s1: Tokens, s2: Tokens) -> int:
    n = 0
    for a, b in zip(s1, s2):
        if a != b:
            break
        n += 1
    return n


def _split_on_template(s1: Tokens, s2: Tokens) -> tuple[Tokens, Tokens, Tokens, Tokens]:
    """(prefix, suffix, middle1, middle2): longest common prefix, then longest
    common suffix of the remainders."""
    p = _common_prefix(s1, s2)
    r1, r2 = s1[p:], s2[p:]
    s = _common_prefix(tuple(reversed(r1)), tuple(reversed(r2)))
    suffix = r1[len(r1) - s:] if s else ()
    return s1[:p], suffix, r1[:len(r1) - s], r2[:len(r2) - s]


def extract_rewriting_model(pair1: tuple[Sequence[str], Sequence[str]],
                            pair2: tuple[Sequence[str], Sequence[str]],
                            ) -> RewritingModel | None:
    """Extract the (prefix, suffix, translation) template from two seed pairs.

    Returns None when a side shares neither prefix nor suffix, or when the
    variable slot is empty in both support sentences on some side.
    """
    src1, tgt1 = tuple(pair1[0]), tuple(pair1[1])
    src2, tgt2 = tuple(pair2[0]), tuple(pair2[1])
    src_prefix, src_suffix, src_mid1, src_mid2 = _split_on_template(src1, src2)
    tgt_prefix, tgt_suffix, tgt_mid1, tgt_mid2 = _split_on_template(tgt1, tgt2)
    if not src_prefix and not src_suffix:
        return None
    if not tgt_prefix and not tgt_suffix:
        return None
    if not src_mid1 and not src_mid2:
        return None
    if not tgt_mid1 and not tgt_mid2:
        return None
    return RewritingModel(
        src_prefix=src_prefix, src_suffix=src_suffix,
        tgt_prefix=tgt_prefix, tgt_suffix=tgt_suffix,
        support=((src1, tgt1), (src2, tgt2)),
    )


def models_from_quadruples(quadruples: Sequence[AnalogyQuadruple],
                           seed: BitextCorpus,
                           check_target_side: bool = False) -> list[RewritingModel]:
    """Build rewriting models from each analogy pair, using the seed corpus
    targets of the quadruple's source sentences; deduplicated, stable order.

    Analogies are detected on the source side; ``check_target_side``
    additionally requires the two distance equalities to hold between the
    corresponding target sentences before a quadruple contributes models.
    """
    seen: set[tuple] = set()
    models = []
    for quad in quadruples:
        ia, ib, ic, id_ = quad.indices
        if check_target_side and not _target_side_holds(quad, seed):
            continue
        for i1, i2 in ((ia, ib), (ic, id_)):
            if not (0 <= i1 < len(seed.pairs) and 0 <= i2 < len(seed.pairs)):
                continue
            p1 = seed.pairs[i1]
            p2 = seed.pairs[i2]
            model = extract_rewriting_model(
                (tokenize(p1.src, lowercase=True), tokenize(p1.tgt, lowercase=True)),
                (tokenize(p2.src, lowercase=True), tokenize(p2.tgt, lowercase=True)))
            if model is None:
                continue
            key = (model.src_prefix, model.src_suffix,
                   model.tgt_prefix, model.tgt_suffix)
            if key in seen:
                continue
            seen.add(key)
            models.append(model)
    return models


def _target_side_holds(quad: AnalogyQuadruple, seed: BitextCorpus) -> bool:
    targets = []
    for idx in quad.indices:
        if not 0 <= idx < len(seed.pairs):
            return False
        targets.append(tokenize(seed.pairs[idx].tgt, lowercase=True))
    ta, tb, tc, td = targets
    return (word_levenshtein(ta, tb) == word_levenshtein(tc, td)
            and word_levenshtein(ta, tc) == word_levenshtein(tb, td))


def apply_model(model: RewritingModel, sentence: Sequence[str],
                lex: TranslationLexicon, allow_unknown: bool = False,
                unknown_marker: str = "unknown") -> BiSentence | None:
    """Apply a rewriting model to a sentence carrying its prefix and suffix.

    The variable middle is gloss-translated; with ``allow_unknown`` false a
    middle token without a translation aborts the match.  The score is the
    fraction of middle tokens the lexicon could translate.
    """
    tokens = tuple(sentence)
    lp, ls = len(model.src_prefix), len(model.src_suffix)
    if len(tokens) <= lp + ls:
        return None
    if tokens[:lp] != model.src_prefix:
        return None
    if ls and tokens[-ls:] != model.src_suffix:
        return None
    middle = tokens[lp:len(tokens) - ls]
    glossed = gloss_translate(lex, middle, unknown_marker=unknown_marker)
    unknown = sum(1 for t in glossed if t == unknown_marker)
    if unknown and not allow_unknown:
        return None
    out = model.tgt_prefix + tuple(glossed) + model.tgt_suffix
    return BiSentence(
        src=" ".join(tokens), tgt=" ".join(out),
        score=(len(middle) - unknown) / len(middle),
        origin=(-1, -1, -1, "analogy"),
    )


def generate_corpus(models: Sequence[RewritingModel],
                    articles: Iterable[ArticlePair],
                    lex: TranslationLexicon,
                    allow_unknown: bool = False) -> QuasiParallelCorpus:
    """Test every source-side article sentence against every model.

    Models are indexed by the first prefix token so only plausible templates
    are tried per sentence (same result as the naive scan).  A generated pair
    whose target equals some sentence of the paired article's target side
    (modulo whitespace and case) is flagged confirmed.
    """
    if not models:
        raise ValueError("no rewriting models supplied")
    by_first: dict[str, list[tuple[int, RewritingModel]]] = {}
    open_prefix: list[tuple[int, RewritingModel]] = []
    for model_id, model in enumerate(models):
        if model.src_prefix:
            by_first.setdefault(model.src_prefix[0], []).append((model_id, model))
        else:
            open_prefix.append((model_id, model))

    entries: list[QuasiParallelEntry] = []
    src_lang = tgt_lang = ""
    for article in articles:
        src_lang, tgt_lang = article.src.lang, article.tgt.lang
        tgt_texts = {" ".join(s.tokens) for s in segment_sentences(article.tgt.body)}
        for sent in segment_sentences(article.src.body):
            if not sent.tokens:
                continue
            candidates = by_first.get(sent.tokens[0], []) + open_prefix
            candidates.sort(key=lambda item: item[0])
            for model_id, model in candidates:
                made = apply_model(model, sent.tokens, lex, allow_unknown)
                if made is None:
                    continue
                made = replace(made, origin=(article.id, sent.index, -1, "analogy"))
                entries.append(QuasiParallelEntry(
                    pair=made, model_id=model_id,
                    confirmed=made.tgt in tgt_texts,
                ))
    return QuasiParallelCorpus(entries, src_lang, tgt_lang)


# ---------------------------------------------------------------------------
# quadruple file format: JSON lines

def write_quadruples(path, quadruples: Sequence[AnalogyQuadruple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in quadruples:
            fh.write(json.dumps({
                "a": list(q.a), "b": list(q.b), "c": list(q.c), "d": list(q.d),
                "d_ab": q.d_ab, "d_cd": q.d_cd, "d_ac": q.d_ac, "d_bd": q.d_bd,
                "indices": list(q.indices),
            }, ensure_ascii=False, sort_keys=True) + "\n")


def read_quadruples(path) -> list[AnalogyQuadruple]:
    quads = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            quads.append(AnalogyQuadruple(
                a=tuple(rec["a"]), b=tuple(rec["b"]),
                c=tuple(rec["c"]), d=tuple(rec["d"]),
                d_ab=rec["d_ab"], d_cd=rec["d_cd"],
                d_ac=rec["d_ac"], d_bd=rec["d_bd"],
                indices=tuple(rec["indices"]),
            ))
    return quads


# ---------------------------------------------------------------------------
# model file format: JSON lines, one model per line

def write_models(path, models: Sequence[RewritingModel]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for model_id, m in enumerate(models):
            fh.write(json.dumps({
                "id": model_id,
                "src_prefix": list(m.src_prefix),
                "src_suffix": list(m.src_suffix),
                "tgt_prefix": list(m.tgt_prefix),
                "tgt_suffix": list(m.tgt_suffix),
                "support": [[list(side) for side in pair] for pair in m.support],
            }, ensure_ascii=False, sort_keys=True) + "\n")


def read_models(path) -> list[RewritingModel]:
    models = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            support = tuple(
                (tuple(pair[0]), tuple(pair[1])) for pair in rec.get("support", [])
            )
            if len(support) != 2:
                support = (((), ()), ((), ()))
            models.append(RewritingModel(
                src_prefix=tuple(rec["src_prefix"]),
                src_suffix=tuple(rec["src_suffix"]),
                tgt_prefix=tuple(rec["tgt_prefix"]),
                tgt_suffix=tuple(rec["tgt_suffix"]),
                support=support,
            ))
    return models
