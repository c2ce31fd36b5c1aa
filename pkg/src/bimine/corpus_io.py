"""Bilingual document and sentence corpus handling.

Owns every on-disk format used by the toolkit:

* article dump:        JSON lines, one ``{"title": ..., "text": ...}`` object per line
* article-pair store:  JSON lines, one topic-aligned pair per line with fields
                       (id, src_lang, tgt_lang, src_title, tgt_title, src_text, tgt_text)
* bitext corpus:       UTF-8 TSV, columns ``src<TAB>tgt[<TAB>score]``; tabs and
                       newlines inside sentences are replaced by spaces at write time
* links file:          TSV ``src_title<TAB>tgt_title``

Also provides document cleaning, sentence segmentation, tokenization,
article pairing, test-set sampling and corpus statistics.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence


@dataclass(frozen=True)
class Document:
    lang: str
    title: str
    body: str


@dataclass(frozen=True)
class ArticlePair:
    """A topic-aligned bilingual document pair; the unit of mining."""

    id: int
    src: Document
    tgt: Document


@dataclass(frozen=True)
class Sentence:
    text: str
    tokens: tuple[str, ...]
    index: int


@dataclass(frozen=True)
class BiSentence:
    """One mined or generated sentence pair with score and provenance.

    ``origin`` is ``(article_id, src_index, tgt_index, direction_tag)`` or
    ``None`` for pairs loaded from plain bitext files.
    """

    src: str
    tgt: str
    score: float = 1.0
    origin: tuple[int, int, int, str] | None = None


@dataclass
class BitextCorpus:
    pairs: list[BiSentence] = field(default_factory=list)
    src_lang: str = ""
    tgt_lang: str = ""

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[BiSentence]:
        return iter(self.pairs)


# ---------------------------------------------------------------------------
# cleaning

_CLEAN_STEPS = [
    (re.compile(r"<!--.*?-->", re.DOTALL), " "),
    (re.compile(r"<ref[^<>]*/>", re.IGNORECASE), " "),
    (re.compile(r"<ref[^<>]*>.*?</ref>", re.IGNORECASE | re.DOTALL), " "),
    # table and template blocks, innermost first; the fixpoint loop below
    # peels nested levels one at a time
    (re.compile(r"\{\|(?:(?!\{\|).)*?\|\}", re.DOTALL), " "),
    (re.compile(r"\{\{(?:(?!\{\{).)*?\}\}", re.DOTALL), " "),
    (re.compile(r"\[\[(?:file|image|plik|grafika):(?:(?!\[\[).)*?\]\]", re.IGNORECASE | re.DOTALL), " "),
    (re.compile(r"\[\[[^\[\]|]*\|([^\[\]]*)\]\]"), r"\1"),
    (re.compile(r"\[\[([^\[\]]*)\]\]"), r"\1"),
    (re.compile(r"'{2,}"), " "),
    (re.compile(r"^=+ *(.*?) *=+ *$", re.MULTILINE), r"\1"),
    (re.compile(r"<[^<>]+>"), " "),
]

_ENTITIES = [
    ("&nbsp;", " "),
    ("&quot;", '"'),
    ("&#39;", "'"),
    ("&lt;", "<"),
    ("&gt;", ">"),
    ("&amp;", "&"),
]

_WS = re.compile(r"\s+")


def clean_document(raw: str) -> str:
    """Strip markup tags and drop table/reference/figure blocks from text.

    Runs the rule pipeline to a fixpoint, so the function is idempotent by
    construction (each rewriting pass strictly shrinks the text).
    """
    text = raw
    for _ in range(16):
        prev = text
        for pattern, repl in _CLEAN_STEPS:
            text = pattern.sub(repl, text)
        for entity, char in _ENTITIES:
            text = text.replace(entity, char)
        text = _WS.sub(" ", text).strip()
        if text == prev:
            break
    return text


# ---------------------------------------------------------------------------
# tokenization

# Tokens listed here keep their periods; everything else splits punctuation off.
DEFAULT_ABBREVIATIONS = frozenset({
    "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "St.", "No.", "Co.", "Inc.",
    "Ltd.", "Jr.", "Sr.", "vs.", "etc.", "e.g.", "i.e.", "al.", "Fig.",
    "U.S.", "U.K.", "approx.",
    # Polish
    "np.", "tzn.", "tzw.", "itd.", "itp.", "m.in.", "dr.", "prof.",
    "mgr.", "inż.", "ul.", "św.", "nr.", "tys.", "ok.", "r.", "w.",
})

_WORD = r"[^\W\d_]+(?:['’-][^\W\d_]+)*"
_NUMBER = r"\d+(?:[.,]\d+)*"


def _token_pattern(abbreviations: frozenset[str]) -> re.Pattern[str]:
    abbrevs = sorted(abbreviations, key=len, reverse=True)
    alternation = "|".join(re.escape(a) for a in abbrevs)
    parts = [alternation] if alternation else []
    parts += [_NUMBER, _WORD, r"\S"]
    return re.compile("|".join(parts))


_DEFAULT_TOKEN_RE = _token_pattern(DEFAULT_ABBREVIATIONS)


def tokenize(text: str, lowercase: bool = False,
             abbreviations: frozenset[str] | None = None) -> list[str]:
    """Split text into tokens: words, numbers, and punctuation as own tokens.

    Abbreviations from the exception list keep their internal/trailing
    periods ("U.S." stays one token).
    """
    pattern = _DEFAULT_TOKEN_RE if abbreviations is None else _token_pattern(abbreviations)
    tokens = pattern.findall(text)
    if lowercase:
        tokens = [t.lower() for t in tokens]
    return tokens


# ---------------------------------------------------------------------------
# sentence segmentation

_TERMINATORS = ".!?"
_CLOSERS = "\"'”’)]«»"


def segment_sentences(doc_body: str,
                      abbreviations: frozenset[str] | None = None) -> list[Sentence]:
    """Split cleaned text into sentences.

    Rule-based: a terminator (. ! ?) followed by whitespace and an uppercase
    letter or digit ends a sentence, except after a listed abbreviation or a
    single uppercase initial.  Joining the sentence texts and collapsing
    whitespace reproduces the input.
    """
    abbrevs = DEFAULT_ABBREVIATIONS if abbreviations is None else abbreviations
    text = doc_body
    sentences: list[Sentence] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            end = i + 1
            while end < n and text[end] in _CLOSERS:
                end += 1
            if _is_boundary(text, i, end, abbrevs):
                _push(sentences, text[start:end])
                start = end
                i = end
                continue
        i += 1
    _push(sentences, text[start:])
    return sentences


def _is_boundary(text: str, term: int, end: int, abbrevs: frozenset[str]) -> bool:
    if end >= len(text):
        return True
    if not text[end].isspace():
        return False
    follow = text[end:].lstrip()
    if not follow:
        return True
    if not (follow[0].isupper() or follow[0].isdigit()):
        return False
    if text[term] == ".":
        word = re.search(r"(\S+)$", text[: term + 1])
        if word:
            w = word.group(1)
            if w in abbrevs or w.lower() in abbrevs:
                return False
            if len(w) == 2 and w[0].isupper() and w[1] == ".":
                return False  # initials like "J."
    return True


def _push(sentences: list[Sentence], span: str) -> None:
    stripped = span.strip()
    if stripped:
        sentences.append(Sentence(
            text=stripped,
            tokens=tuple(tokenize(stripped, lowercase=True)),
            index=len(sentences),
        ))


# ---------------------------------------------------------------------------
# article pairing

def pair_articles(src_articles: Mapping[str, str],
                  tgt_articles: Mapping[str, str],
                  links: Mapping[str, str] | Iterable[tuple[str, str]],
                  src_lang: str = "", tgt_lang: str = "") -> list[ArticlePair]:
    """Pair linked articles present on both sides; assign fresh sequential ids.

    Raises ValueError when the link list maps one source title twice.
    """
    if isinstance(links, Mapping):
        link_items = list(links.items())
    else:
        link_items = list(links)
    seen: set[str] = set()
    for src_title, _ in link_items:
        if src_title in seen:
            raise ValueError(f"duplicate link for source title {src_title!r}")
        seen.add(src_title)
    pairs = []
    for src_title, tgt_title in link_items:
        if src_title not in src_articles or tgt_title not in tgt_articles:
            continue
        pairs.append(ArticlePair(
            id=len(pairs),
            src=Document(src_lang, src_title, src_articles[src_title]),
            tgt=Document(tgt_lang, tgt_title, tgt_articles[tgt_title]),
        ))
    return pairs


# ---------------------------------------------------------------------------
# test-set sampling

def sample_test_set(corpus: BitextCorpus, n_segments: int = 200,
                    per_segment: int = 10, seed: int = 0) -> tuple[BitextCorpus, BitextCorpus]:
    """Split a corpus into a sampled test set and the remaining training set.

    The corpus is cut into ``n_segments`` contiguous segments (the first
    ``size mod n_segments`` segments get one extra pair) and ``per_segment``
    pairs are drawn uniformly without replacement from each, so the test set
    covers the whole corpus.  Deterministic for a given seed.
    """
    if n_segments < 1 or per_segment < 1:
        raise ValueError("n_segments and per_segment must be >= 1")
    size = len(corpus.pairs)
    needed = n_segments * per_segment
    if size < needed:
        raise ValueError(
            f"corpus has {size} pairs; sampling {n_segments} segments x "
            f"{per_segment} needs at least {needed}")
    rng = random.Random(seed)
    base, extra = divmod(size, n_segments)
    test_indices: list[int] = []
    start = 0
    for seg in range(n_segments):
        seg_len = base + (1 if seg < extra else 0)
        test_indices.extend(rng.sample(range(start, start + seg_len), per_segment))
        start += seg_len
    chosen = set(test_indices)
    test = BitextCorpus([corpus.pairs[i] for i in sorted(chosen)],
                        corpus.src_lang, corpus.tgt_lang)
    train = BitextCorpus([p for i, p in enumerate(corpus.pairs) if i not in chosen],
                         corpus.src_lang, corpus.tgt_lang)
    return test, train


# ---------------------------------------------------------------------------
# statistics

def corpus_stats(corpus: BitextCorpus) -> dict:
    """Per-side size/sentence/token counts on tokenized, lowercased text."""
    report: dict = {"sentences": len(corpus.pairs)}
    for side, getter in (("src", lambda p: p.src), ("tgt", lambda p: p.tgt)):
        tokens = 0
        unique: set[str] = set()
        nbytes = 0
        for pair in corpus.pairs:
            text = getter(pair)
            toks = tokenize(text, lowercase=True)
            tokens += len(toks)
            unique.update(toks)
            nbytes += len(text.encode("utf-8"))
        report[side] = {
            "bytes": nbytes,
            "tokens": tokens,
            "unique_tokens": len(unique),
        }
    return report


# ---------------------------------------------------------------------------
# file formats

def _flatten(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def write_bitext(path, corpus: BitextCorpus, with_score: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in corpus.pairs:
            if with_score:
                fh.write(f"{_flatten(pair.src)}\t{_flatten(pair.tgt)}\t{pair.score:.6f}\n")
            else:
                fh.write(f"{_flatten(pair.src)}\t{_flatten(pair.tgt)}\n")


def read_bitext(path, src_lang: str = "", tgt_lang: str = "",
                flip: bool = False) -> BitextCorpus:
    """Read a TSV bitext file; ``flip`` swaps the two text columns on load."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise ValueError(f"{path}: line {lineno}: expected at least 2 columns")
            src, tgt = cols[0], cols[1]
            if flip:
                src, tgt = tgt, src
            score = float(cols[2]) if len(cols) > 2 else 1.0
            pairs.append(BiSentence(src=src, tgt=tgt, score=score))
    return BitextCorpus(pairs, src_lang, tgt_lang)


def write_article_store(path, pairs: Iterable[ArticlePair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps({
                "id": pair.id,
                "src_lang": pair.src.lang,
                "tgt_lang": pair.tgt.lang,
                "src_title": pair.src.title,
                "tgt_title": pair.tgt.title,
                "src_text": pair.src.body,
                "tgt_text": pair.tgt.body,
            }, ensure_ascii=False, sort_keys=True) + "\n")


_STORE_FIELDS = ("id", "src_lang", "tgt_lang", "src_title", "tgt_title",
                 "src_text", "tgt_text")


def read_article_store(path) -> Iterator[ArticlePair]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: record at line {lineno} is not valid JSON: {exc}")
            missing = [f for f in _STORE_FIELDS if f not in rec]
            if missing:
                raise ValueError(
                    f"{path}: record at line {lineno} missing fields {missing}")
            yield ArticlePair(
                id=int(rec["id"]),
                src=Document(rec["src_lang"], rec["src_title"], rec["src_text"]),
                tgt=Document(rec["tgt_lang"], rec["tgt_title"], rec["tgt_text"]),
            )


def read_article_dump(path) -> dict[str, str]:
    """Read a JSONL article dump into a title -> text mapping."""
    articles: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "title" not in rec or "text" not in rec:
                raise ValueError(f"{path}: line {lineno}: need 'title' and 'text'")
            articles[rec["title"]] = rec["text"]
    return articles


def read_links(path) -> list[tuple[str, str]]:
    links = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 2 columns")
            links.append((cols[0], cols[1]))
    return links
