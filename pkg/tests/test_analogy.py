import itertools
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from bimine.analogy import (
    AnalogyQuadruple,
    apply_model,
    canonical_arrangement,
    char_profile_check,
    extract_rewriting_model,
    find_analogies,
    find_analogy_clusters,
    generate_corpus,
    models_from_quadruples,
    read_models,
    read_quadruples,
    word_levenshtein,
    write_models,
    write_quadruples,
)
from bimine.corpus_io import ArticlePair, BiSentence, BitextCorpus, Document
from bimine.lexicon import TranslationLexicon

from synthdata import ANALOGY_TEMPLATES, make_analogy_clusters, make_world, template_pair


# ---------------------------------------------------------------------------
# independent oracles

def brute_edit_distance(s1, s2):
    """Plain recursion over edit scripts; exponential, for short inputs only."""
    if not s1:
        return len(s2)
    if not s2:
        return len(s1)
    return min(
        brute_edit_distance(s1[1:], s2[1:]) + (s1[0] != s2[0]),
        brute_edit_distance(s1[1:], s2) + 1,
        brute_edit_distance(s1, s2[1:]) + 1,
    )


def brute_force_analogies(sentences, max_distance):
    """O(n^4) enumeration over all arrangements of four distinct sentences."""
    uniq = []
    seen = set()
    for sent in sentences:
        key = tuple(sent)
        if key not in seen:
            seen.add(key)
            uniq.append(key)
    dist = {}
    for x, y in itertools.combinations(range(len(uniq)), 2):
        dist[(x, y)] = dist[(y, x)] = word_levenshtein(uniq[x], uniq[y])
    profiles = [Counter(" ".join(s)) for s in uniq]

    def profile_ok(a, b, c, d):
        delta_ab = profiles[a].copy()
        delta_ab.subtract(profiles[b])
        delta_cd = profiles[c].copy()
        delta_cd.subtract(profiles[d])
        keys = set(delta_ab) | set(delta_cd)
        return all(delta_ab.get(k, 0) == delta_cd.get(k, 0) for k in keys)

    found = set()
    for combo in itertools.combinations(range(len(uniq)), 4):
        for a, b, c, d in itertools.permutations(combo):
            if dist[(a, b)] != dist[(c, d)] or dist[(a, b)] > max_distance:
                continue
            if dist[(a, c)] != dist[(b, d)] or dist[(a, c)] > max_distance:
                continue
            if not profile_ok(a, b, c, d):
                continue
            found.add(canonical_arrangement(
                (uniq[a], uniq[b], uniq[c], uniq[d])))
    return found


_SLOT_WORDS = ["kota", "psa", "konia", "ryby", "ptaka", "lisa"]
_TEMPLATES = [
    (["ala", "ma"], ["dzisiaj"]),
    (["to", "jest"], ["teraz", "tutaj"]),
    (["on", "widzi"], []),
]


def _structured_corpus(rng, n, template_fraction=0.25, slot_pool=None):
    """Mostly random sentences over a mid-sized vocabulary, plus occasional
    template instances so analogies exist but stay sparse, as in real text."""
    vocab = [f"{a}{b}" for a in ("ka", "to", "mi", "zu", "pro", "na", "wo")
             for b in ("ra", "le", "ni", "sto", "chą", "my", "wa")]
    slots = _SLOT_WORDS if slot_pool is None else _SLOT_WORDS[:slot_pool]
    sentences = []
    while len(sentences) < n:
        if rng.random() < template_fraction:
            prefix, suffix = _TEMPLATES[rng.randrange(len(_TEMPLATES))]
            sentences.append(prefix + [rng.choice(slots)] + suffix)
        else:
            sentences.append([rng.choice(vocab)
                              for _ in range(rng.randint(3, 8))])
    return sentences


# ---------------------------------------------------------------------------
# word-level Levenshtein

def test_levenshtein_identity():
    assert word_levenshtein("a b c".split(), "a b c".split()) == 0


def test_levenshtein_single_substitution():
    assert word_levenshtein("poproszę koc".split(), "poproszę bilet".split()) == 1


def test_levenshtein_swap_costs_two():
    assert word_levenshtein("a b".split(), "b a".split()) == \
        brute_edit_distance(("a", "b"), ("b", "a")) == 2


def test_levenshtein_against_brute_force():
    rng = random.Random(5)
    vocab = ["x", "y", "z", "w"]
    for _ in range(200):
        s1 = tuple(rng.choice(vocab) for _ in range(rng.randint(0, 5)))
        s2 = tuple(rng.choice(vocab) for _ in range(rng.randint(0, 5)))
        assert word_levenshtein(s1, s2) == brute_edit_distance(s1, s2)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c"]), max_size=8),
       st.lists(st.sampled_from(["a", "b", "c"]), max_size=8),
       st.lists(st.sampled_from(["a", "b", "c"]), max_size=8))
def test_levenshtein_metric_axioms(s1, s2, s3):
    assert word_levenshtein(s1, s1) == 0
    assert word_levenshtein(s1, s2) == word_levenshtein(s2, s1)
    assert word_levenshtein(s1, s3) <= \
        word_levenshtein(s1, s2) + word_levenshtein(s2, s3)
    if s1 != s2:
        assert word_levenshtein(s1, s2) > 0


# ---------------------------------------------------------------------------
# character profile constraint

def test_profile_identical_pairs():
    assert char_profile_check("kos", "kos", "tlen", "tlen")


def test_profile_counted_true():
    assert char_profile_check("aa", "a", "ba", "b")


def test_profile_counted_false():
    assert not char_profile_check("aa", "a", "b", "b")


# ---------------------------------------------------------------------------
# analogy search

TEA_COFFEE = ["i like tea", "i like coffee", "you like tea", "you like coffee"]


def test_planted_quadruple_found_exactly():
    sentences = [s.split() for s in TEA_COFFEE]
    quads = find_analogies(sentences, max_distance=4)
    assert len(quads) == 1
    quad = quads[0]
    expected = canonical_arrangement((
        tuple("i like tea".split()), tuple("i like coffee".split()),
        tuple("you like tea".split()), tuple("you like coffee".split())))
    assert (quad.a, quad.b, quad.c, quad.d) == expected
    assert quad.d_ab == quad.d_cd == 1
    assert quad.d_ac == quad.d_bd == 1


def test_three_sentences_no_quadruple():
    sentences = [s.split() for s in ["ala ma kota", "zupa jest dobra", "pada deszcz"]]
    assert find_analogies(sentences, 4) == []


def test_emitted_quadruples_reverify():
    rng = random.Random(9)
    sentences = _structured_corpus(rng, 40)
    for quad in find_analogies(sentences, 3):
        assert quad.d_ab == quad.d_cd <= 3
        assert quad.d_ac == quad.d_bd <= 3
        assert word_levenshtein(quad.a, quad.b) == quad.d_ab
        assert word_levenshtein(quad.c, quad.d) == quad.d_cd
        assert word_levenshtein(quad.a, quad.c) == quad.d_ac
        assert word_levenshtein(quad.b, quad.d) == quad.d_bd
        assert char_profile_check(" ".join(quad.a), " ".join(quad.b),
                                  " ".join(quad.c), " ".join(quad.d))


def test_search_equals_brute_force_enumeration():
    rng = random.Random(21)
    for trial in range(12):
        sentences = _structured_corpus(rng, rng.randint(8, 18),
                                       template_fraction=0.5)
        max_distance = rng.choice([2, 3, 4])
        fast = {(q.a, q.b, q.c, q.d)
                for q in find_analogies(sentences, max_distance)}
        slow = brute_force_analogies(sentences, max_distance)
        assert fast == slow, f"trial {trial}"


def test_pruned_equals_unpruned_on_200_sentences():
    rng = random.Random(33)
    sentences = _structured_corpus(rng, 200)
    pruned = find_analogies(sentences, 4, prune=True)
    unpruned = find_analogies(sentences, 4, prune=False)
    assert [(q.a, q.b, q.c, q.d) for q in pruned] == \
        [(q.a, q.b, q.c, q.d) for q in unpruned]
    assert pruned  # the structured corpus must actually contain analogies


def test_duplicates_collapsed_before_search():
    sentences = [s.split() for s in TEA_COFFEE * 3]
    assert len(find_analogies(sentences, 4)) == 1


def test_indices_point_at_first_occurrences():
    sentences = [s.split() for s in ["zzz zzz"] + TEA_COFFEE]
    quads = find_analogies(sentences, 4)
    texts = [tuple(s) for s in sentences]
    quad = quads[0]
    for side, idx in zip((quad.a, quad.b, quad.c, quad.d), quad.indices):
        assert texts[idx] == side


# ---------------------------------------------------------------------------
# clusters

def _quad(a, b, c, d):
    return AnalogyQuadruple(
        a=tuple(a.split()), b=tuple(b.split()), c=tuple(c.split()),
        d=tuple(d.split()), d_ab=1, d_cd=1, d_ac=1, d_bd=1)


def test_clusters_order_two_one_per_quadruple():
    quads = [_quad(*TEA_COFFEE), _quad("x a", "x b", "y a", "y b")]
    clusters = find_analogy_clusters(quads, order=2)
    assert len(clusters) == 2
    assert all(len(c) == 2 for c in clusters)


def test_clusters_order_three_closed_chain():
    # A:B::C:D, C:D::E:F, E:F::A:B -> one cluster of three pairs
    quads = [
        _quad("a x", "a y", "b x", "b y"),
        _quad("b x", "b y", "c x", "c y"),
        _quad("c x", "c y", "a x", "a y"),
    ]
    clusters = find_analogy_clusters(quads, order=3)
    assert len(clusters) == 1
    assert len(clusters[0]) == 3


def test_clusters_order_three_open_chain_empty():
    quads = [
        _quad("a x", "a y", "b x", "b y"),
        _quad("b x", "b y", "c x", "c y"),
    ]
    assert find_analogy_clusters(quads, order=3) == []


def test_clusters_order_three_typically_empty_on_random_sample():
    # two template families and random filler: quadruples exist, but closed
    # three-chains would need character-count coincidences and do not occur
    rng = random.Random(44)
    vocab = [f"{a}{b}" for a in ("ka", "to", "mi", "zu") for b in ("ra", "le", "ni")]
    sentences = []
    for _ in range(60):
        kind = rng.random()
        if kind < 0.2:
            sentences.append(["ala", "ma"] + [rng.choice(_SLOT_WORDS)])
        elif kind < 0.4:
            sentences.append(["on", "widzi"] + [rng.choice(_SLOT_WORDS)])
        else:
            sentences.append([rng.choice(vocab) for _ in range(rng.randint(3, 7))])
    quads = find_analogies(sentences, 4)
    assert quads  # quadruples exist, but no closed three-chains among them
    assert find_analogy_clusters(quads, order=3) == []


def test_clusters_order_validation():
    with pytest.raises(ValueError):
        find_analogy_clusters([], order=1)


# ---------------------------------------------------------------------------
# rewriting models

BLANKET = (("Poproszę koc .".split(), "A blanket , please .".split()),
           ("Poproszę poduszkę .".split(), "A pillow , please .".split()))


def test_extract_paper_example():
    model = extract_rewriting_model(*BLANKET)
    assert model is not None
    assert model.src_prefix == ("Poproszę",)
    assert model.src_suffix == (".",)
    assert model.tgt_prefix == ("A",)
    assert model.tgt_suffix == (",", "please", ".")


def test_extract_identical_pairs_none():
    pair = ("Poproszę koc .".split(), "A blanket , please .".split())
    assert extract_rewriting_model(pair, pair) is None


def test_extract_disjoint_none():
    assert extract_rewriting_model(
        ("aa bb".split(), "xx yy".split()),
        ("cc dd".split(), "uu vv".split())) is None


def test_apply_paper_example():
    model = extract_rewriting_model(*BLANKET)
    lex = TranslationLexicon(entries={"bilet": [("ticket", 1.0)]})
    made = apply_model(model, "Poproszę bilet .".split(), lex)
    assert made is not None
    assert made.tgt == "A ticket , please ."
    assert made.src == "Poproszę bilet ."
    assert made.score == 1.0


def test_apply_unknown_word_marker():
    model = extract_rewriting_model(*BLANKET)
    empty = TranslationLexicon(entries={})
    assert apply_model(model, "Poproszę bilet .".split(), empty) is None
    made = apply_model(model, "Poproszę bilet .".split(), empty,
                       allow_unknown=True)
    assert made.tgt == "A unknown , please ."
    assert made.score == 0.0


def test_apply_no_prefix_match_none():
    model = extract_rewriting_model(*BLANKET)
    lex = TranslationLexicon(entries={})
    assert apply_model(model, "Dziękuję bardzo .".split(), lex,
                       allow_unknown=True) is None


def test_roundtrip_on_fixture_clusters(world):
    clusters, lex = make_analogy_clusters(world, n_clusters=100)
    succeeded = 0
    for pair1, pair2 in clusters:
        model = extract_rewriting_model(pair1, pair2)
        assert model is not None
        for src, tgt in (pair1, pair2):
            made = apply_model(model, src, lex)
            assert made is not None
            assert made.tgt.split() == tgt
            succeeded += 1
    assert succeeded == 200


def test_models_from_quadruples(world):
    # a 2x2 grid (two templates x two slot words) forms one analogy; with a
    # single template the character-profile constraint correctly rejects
    # quadruples over four distinct slot words
    w1, w2 = world.src_vocab[:2]
    pairs = []
    for template in ANALOGY_TEMPLATES[:2]:
        for w in (w1, w2):
            src, tgt = template_pair(template, w, world.primary(w))
            pairs.append(BiSentence(" ".join(src), " ".join(tgt)))
    seed = BitextCorpus(pairs, "pl", "en")
    quads = find_analogies([p.src.split() for p in pairs], 6)
    assert len(quads) == 1
    models = models_from_quadruples(quads, seed)
    assert models
    for model in models:
        for src_tokens, tgt_tokens in model.support:
            assert src_tokens[:len(model.src_prefix)] == model.src_prefix
            n = len(model.src_suffix)
            assert n == 0 or src_tokens[-n:] == model.src_suffix
            assert tgt_tokens[:len(model.tgt_prefix)] == model.tgt_prefix
            n = len(model.tgt_suffix)
            assert n == 0 or tgt_tokens[-n:] == model.tgt_suffix


def test_target_side_check_filters_quadruples(world):
    # same 2x2 grid, but one target rewritten so the equalities break there
    w1, w2 = world.src_vocab[:2]
    pairs = []
    for template in ANALOGY_TEMPLATES[:2]:
        for w in (w1, w2):
            src, tgt = template_pair(template, w, world.primary(w))
            pairs.append(BiSentence(" ".join(src), " ".join(tgt)))
    broken = pairs[:3] + [BiSentence(pairs[3].src, "utterly different words entirely")]
    seed_ok = BitextCorpus(pairs, "pl", "en")
    seed_broken = BitextCorpus(broken, "pl", "en")
    quads = find_analogies([p.src.split() for p in pairs], 6)
    assert models_from_quadruples(quads, seed_ok, check_target_side=True)
    assert models_from_quadruples(quads, seed_broken, check_target_side=True) == []


def test_single_template_distinct_slots_rejected(world):
    template = ANALOGY_TEMPLATES[0]
    sentences = [template_pair(template, w, world.primary(w))[0]
                 for w in world.src_vocab[:4]]
    assert find_analogies(sentences, 4) == []


# ---------------------------------------------------------------------------
# generation

def test_generate_corpus_planted_matches(world):
    # one cluster per template so every planted sentence matches one model
    clusters, lex = make_analogy_clusters(world, n_clusters=5)
    models = [extract_rewriting_model(p1, p2) for p1, p2 in clusters]
    models = [m for m in models if m is not None]
    rng = random.Random(14)
    covered = [w for w in lex.entries]
    articles = []
    planted = 0
    for article_id in range(100):
        sentences = []
        for _ in range(3):
            sentences.append(" ".join(rng.choice(world.src_vocab)
                                      for _ in range(4)).capitalize() + ".")
        if article_id < 7:
            # plant one matching sentence, capitalized like real text
            model = models[article_id % len(models)]
            word = covered[article_id % len(covered)]
            tokens = model.src_prefix + (word,) + model.src_suffix
            sentences.insert(1, " ".join(tokens).capitalize())
        articles.append(ArticlePair(
            article_id,
            Document("pl", f"a{article_id}", " ".join(sentences)),
            Document("en", f"a{article_id}", "Nothing relevant here.")))
        planted = 7

    quasi = generate_corpus(models, articles, lex)
    assert len(quasi.entries) == planted

    # direct scan oracle: every sentence against every model
    from bimine.corpus_io import segment_sentences
    expected = 0
    for article in articles:
        for sent in segment_sentences(article.src.body):
            for model in models:
                if apply_model(model, sent.tokens, lex) is not None:
                    expected += 1
    assert len(quasi.entries) == expected


def test_generate_corpus_confirmed_flag(world):
    clusters, lex = make_analogy_clusters(world, n_clusters=2)
    model = extract_rewriting_model(*clusters[0])
    word = clusters[0][0][0][len(model.src_prefix)]
    src_tokens = model.src_prefix + (word,) + model.src_suffix
    tgt_tokens = model.tgt_prefix + (lex.entries[word][0][0],) + model.tgt_suffix
    article = ArticlePair(
        0,
        Document("pl", "a", " ".join(src_tokens).capitalize()),
        Document("en", "a", " ".join(tgt_tokens).capitalize()))
    quasi = generate_corpus([model], [article], lex)
    assert len(quasi.entries) == 1
    assert quasi.entries[0].confirmed
    assert quasi.report() == {"generated": 1, "confirmed": 1}


def test_generate_no_matches_empty(world):
    clusters, lex = make_analogy_clusters(world, n_clusters=2)
    models = [extract_rewriting_model(*clusters[0])]
    article = ArticlePair(0, Document("pl", "a", "Zupa pomidorowa dobra."),
                          Document("en", "a", "Tomato soup is good."))
    quasi = generate_corpus(models, [article], lex)
    assert quasi.entries == []


def test_generate_requires_models():
    with pytest.raises(ValueError):
        generate_corpus([], [], TranslationLexicon(entries={}))


# ---------------------------------------------------------------------------
# file formats

def test_quadruple_file_roundtrip(tmp_path):
    quads = find_analogies([s.split() for s in TEA_COFFEE], 4)
    path = tmp_path / "quads.jsonl"
    write_quadruples(path, quads)
    assert read_quadruples(path) == quads


def test_model_file_roundtrip(tmp_path):
    model = extract_rewriting_model(*BLANKET)
    path = tmp_path / "models.jsonl"
    write_models(path, [model])
    assert read_models(path) == [model]
