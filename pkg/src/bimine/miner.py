"""Mining orchestration over an article-pair store.

Loads the similarity model and lexicon once, fans article pairs out to a
worker pool, and reduces results in article-id order so output is identical
for any worker count.  Also merges forward- and reverse-direction mining
runs and reports their overlap statistics.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

from .aligner import align, threshold_filter
from .classifier import SimilarityModel, similarity
from .corpus_io import ArticlePair, BiSentence, BitextCorpus, segment_sentences
from .lexicon import TranslationLexicon

_WS = re.compile(r"\s+")


def _normalize(text: str) -> str:
    return _WS.sub(" ", text).strip()


@dataclass(frozen=True)
class OverlapStats:
    recognized: int
    overlapping: int

    def __post_init__(self) -> None:
        if not 0 <= self.overlapping <= self.recognized:
            raise ValueError(
                f"overlapping ({self.overlapping}) must lie in "
                f"[0, recognized={self.recognized}]")

    @property
    def newly_obtained(self) -> int:
        return self.recognized - self.overlapping

    def as_dict(self) -> dict:
        return {
            "recognized": self.recognized,
            "overlapping": self.overlapping,
            "newly_obtained": self.newly_obtained,
        }


def mine_pair(pair: ArticlePair, model: SimilarityModel,
              lex: TranslationLexicon, gap_cost: float = 0.4,
              threshold: float = 0.5) -> list[BiSentence]:
    """Segment both articles, align, and keep links above the threshold."""
    if model.direction != (pair.src.lang, pair.tgt.lang):
        raise ValueError(
            f"model direction {model.direction} does not match article pair "
            f"languages ({pair.src.lang}, {pair.tgt.lang})")
    src = segment_sentences(pair.src.body)
    tgt = segment_sentences(pair.tgt.body)
    if not src or not tgt:
        return []

    def sim(a, b) -> float:
        return similarity(model, a.tokens, b.tokens, lex)

    result = align(src, tgt, sim, gap_cost)
    direction = f"{pair.src.lang}-{pair.tgt.lang}"
    return threshold_filter(result, threshold, src, tgt, pair.id, direction)


def mine_corpus(store: Iterable[ArticlePair], model: SimilarityModel,
                lex: TranslationLexicon, gap_cost: float = 0.4,
                threshold: float = 0.5, workers: int = 1,
                ) -> tuple[BitextCorpus, list[dict]]:
    """Mine every article pair in the store with a shared read-only model.

    Returns the mined corpus ordered by article id plus a per-article log.
    Output is identical for any worker count.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    articles = list(store)

    def work(pair: ArticlePair) -> tuple[int, list[BiSentence]]:
        return pair.id, mine_pair(pair, model, lex, gap_cost, threshold)

    if workers == 1:
        outcomes = [work(pair) for pair in articles]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, articles))

    outcomes.sort(key=lambda item: item[0])
    pairs: list[BiSentence] = []
    log = []
    for article_id, mined in outcomes:
        pairs.extend(mined)
        log.append({"article_id": article_id, "mined": len(mined)})
    corpus = BitextCorpus(pairs, model.direction[0], model.direction[1])
    return corpus, log


def merge_bidirectional(fwd: BitextCorpus, rev: BitextCorpus,
                        ) -> tuple[BitextCorpus, OverlapStats]:
    """Merge same-orientation forward and reverse mining output.

    Exact duplicates (whitespace-normalized src and tgt both equal) collapse
    to the higher-scoring pair.  The stats count the reverse run's pairs, how
    many of them the forward run already found, and the remainder.
    """
    if (fwd.src_lang and rev.src_lang and
            (fwd.src_lang, fwd.tgt_lang) != (rev.src_lang, rev.tgt_lang)):
        raise ValueError(
            f"cannot merge corpora with directions "
            f"({fwd.src_lang}, {fwd.tgt_lang}) and ({rev.src_lang}, {rev.tgt_lang})")

    merged: dict[tuple[str, str], BiSentence] = {}
    for pair in fwd.pairs:
        key = (_normalize(pair.src), _normalize(pair.tgt))
        kept = merged.get(key)
        if kept is None or pair.score > kept.score:
            merged[key] = pair
    fwd_keys = set(merged)

    rev_keys = set()
    for pair in rev.pairs:
        key = (_normalize(pair.src), _normalize(pair.tgt))
        rev_keys.add(key)
        kept = merged.get(key)
        if kept is None or pair.score > kept.score:
            merged[key] = pair

    stats = OverlapStats(recognized=len(rev_keys),
                         overlapping=len(rev_keys & fwd_keys))
    corpus = BitextCorpus(list(merged.values()),
                          fwd.src_lang or rev.src_lang,
                          fwd.tgt_lang or rev.tgt_lang)
    return corpus, stats


def write_overlap_stats(path, stats: OverlapStats) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(stats.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
