"""Command-line interface.

Subcommands: ingest, sample, stats, lexicon train, classifier train, mine,
merge-bidi, analogy find|models|generate, filter trivial|cascade,
eval [score]|compare, pipeline.  Logs go to standard error; data goes to
files (or stdout for report commands).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analogy as analogy_mod
from . import classifier as classifier_mod
from . import corpus_io, filtering, metrics, miner
from . import lexicon as lexicon_mod
from .pipeline import PipelineConfig, PipelineError, run_pipeline


def _log(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# command handlers

def _cmd_ingest(args) -> int:
    src = corpus_io.read_article_dump(args.src_dump)
    tgt = corpus_io.read_article_dump(args.tgt_dump)
    links = corpus_io.read_links(args.links)
    src = {t: corpus_io.clean_document(b) for t, b in src.items()}
    tgt = {t: corpus_io.clean_document(b) for t, b in tgt.items()}
    pairs = corpus_io.pair_articles(src, tgt, links, args.src_lang, args.tgt_lang)
    corpus_io.write_article_store(args.out, pairs)
    _log(f"wrote {len(pairs)} article pairs to {args.out}")
    return 0


def _cmd_sample(args) -> int:
    corpus = corpus_io.read_bitext(args.corpus)
    test, train = corpus_io.sample_test_set(
        corpus, args.segments, args.per_segment, args.seed)
    corpus_io.write_bitext(args.test, test)
    corpus_io.write_bitext(args.train, train)
    _log(f"test {len(test.pairs)} pairs -> {args.test}; "
         f"train {len(train.pairs)} pairs -> {args.train}")
    return 0


def _cmd_stats(args) -> int:
    corpus = corpus_io.read_bitext(args.corpus)
    report = corpus_io.corpus_stats(corpus)
    print(f"{'':>16}{'src':>14}{'tgt':>14}")
    print(f"{'size (bytes)':>16}{report['src']['bytes']:>14}{report['tgt']['bytes']:>14}")
    print(f"{'sentences':>16}{report['sentences']:>14}{report['sentences']:>14}")
    print(f"{'words':>16}{report['src']['tokens']:>14}{report['tgt']['tokens']:>14}")
    print(f"{'unique words':>16}{report['src']['unique_tokens']:>14}"
          f"{report['tgt']['unique_tokens']:>14}")
    return 0


def _cmd_lexicon_train(args) -> int:
    seed = corpus_io.read_bitext(args.seed)
    lex = lexicon_mod.train_lexicon(seed, args.iters, args.prune_below)
    lexicon_mod.write_lexicon(args.out, lex)
    _log(f"trained lexicon with {len(lex)} source entries -> {args.out}")
    return 0


def _cmd_classifier_train(args) -> int:
    seed = corpus_io.read_bitext(args.seed, args.src_lang, args.tgt_lang)
    lex = lexicon_mod.read_lexicon(args.lexicon, args.src_lang, args.tgt_lang)
    model = classifier_mod.train_model(
        seed, lex, neg_per_pos=args.neg_per_pos, epochs=args.epochs,
        learning_rate=args.learning_rate, margin_reg=args.margin_reg,
        seed_rng=args.seed_rng)
    model.threshold = args.threshold
    classifier_mod.save_model(args.out, model)
    _log(f"trained classifier -> {args.out}")
    return 0


def _cmd_mine(args) -> int:
    model = classifier_mod.load_model(args.model)
    lex = lexicon_mod.read_lexicon(args.lexicon, *model.direction)
    corpus, log = miner.mine_corpus(
        corpus_io.read_article_store(args.store), model, lex,
        gap_cost=args.gap_cost, threshold=args.threshold, workers=args.workers)
    corpus_io.write_bitext(args.out, corpus)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            for entry in log:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    _log(f"mined {len(corpus.pairs)} pairs from {len(log)} articles -> {args.out}")
    return 0


def _cmd_merge_bidi(args) -> int:
    fwd = corpus_io.read_bitext(args.fwd)
    rev = corpus_io.read_bitext(args.rev, flip=not args.already_oriented)
    merged, stats = miner.merge_bidirectional(fwd, rev)
    corpus_io.write_bitext(args.out, merged)
    miner.write_overlap_stats(args.stats, stats)
    _log(f"merged {len(merged.pairs)} pairs; recognized {stats.recognized}, "
         f"overlapping {stats.overlapping}, newly obtained {stats.newly_obtained}")
    return 0


def _cmd_analogy_find(args) -> int:
    seed = corpus_io.read_bitext(args.seed)
    sentences = [corpus_io.tokenize(p.src, lowercase=True) for p in seed.pairs]
    if len(sentences) > args.size_guard:
        _log(f"error: {len(sentences)} sentences exceed --size-guard "
             f"{args.size_guard}; quadruple search is O(n^2) pairs and beyond "
             f"desk scale on full dumps")
        return 2
    quads = analogy_mod.find_analogies(sentences, args.max_dist)
    analogy_mod.write_quadruples(args.out, quads)
    _log(f"found {len(quads)} analogy quadruples -> {args.out}")
    return 0


def _cmd_analogy_models(args) -> int:
    seed = corpus_io.read_bitext(args.seed)
    quads = analogy_mod.read_quadruples(args.quads)
    models = analogy_mod.models_from_quadruples(
        quads, seed, check_target_side=args.check_target)
    analogy_mod.write_models(args.out, models)
    _log(f"extracted {len(models)} rewriting models -> {args.out}")
    return 0


def _cmd_analogy_generate(args) -> int:
    models = analogy_mod.read_models(args.models)
    lex = lexicon_mod.read_lexicon(args.lexicon)
    quasi = analogy_mod.generate_corpus(
        models, corpus_io.read_article_store(args.store), lex,
        allow_unknown=args.allow_unknown)
    corpus = corpus_io.BitextCorpus([e.pair for e in quasi.entries],
                                    quasi.src_lang, quasi.tgt_lang)
    corpus_io.write_bitext(args.out, corpus)
    _log(f"generated {len(corpus.pairs)} quasi-parallel pairs "
         f"({quasi.report()['confirmed']} confirmed) -> {args.out}")
    return 0


def _cmd_filter_trivial(args) -> int:
    corpus = corpus_io.read_bitext(args.infile)
    kept, report = filtering.remove_trivial(corpus, args.min_chars)
    corpus_io.write_bitext(args.out, kept)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    _log(f"kept {report.kept_count} of {report.input_count} pairs -> {args.out}")
    return 0


def _cmd_filter_cascade(args) -> int:
    corpus = corpus_io.read_bitext(args.infile)
    lex = lexicon_mod.read_lexicon(args.lexicon)
    cascade = (filtering.read_cascade_config(args.config)
               if args.config else filtering.CascadeConfig())
    kept, rejected, report = filtering.filter_corpus(
        corpus, filtering.make_gloss_translator(lex), cascade)
    corpus_io.write_bitext(args.kept, kept)
    corpus_io.write_bitext(args.rejected, rejected)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _log(f"kept {report.kept_count}, rejected {report.rejected_count} "
         f"-> {args.kept} / {args.rejected}")
    return 0


def _read_eval_pairs(hyp_path, ref_paths) -> list[metrics.EvalPair]:
    with open(hyp_path, encoding="utf-8") as fh:
        hyp_lines = [line.rstrip("\n") for line in fh]
    ref_columns = []
    for ref_path in ref_paths:
        with open(ref_path, encoding="utf-8") as fh:
            ref_columns.append([line.rstrip("\n") for line in fh])
    for column in ref_columns:
        if len(column) != len(hyp_lines):
            raise ValueError("hypothesis and reference files differ in length")
    pairs = []
    for i, hyp in enumerate(hyp_lines):
        refs = tuple(tuple(corpus_io.tokenize(col[i], lowercase=True))
                     for col in ref_columns)
        pairs.append(metrics.EvalPair(
            hypothesis=tuple(corpus_io.tokenize(hyp, lowercase=True)),
            references=refs))
    return pairs


def _score(pairs: list[metrics.EvalPair], metric: str) -> float:
    if metric == "bleu":
        return metrics.bleu(pairs)
    if metric == "nist":
        return metrics.nist(pairs)
    if metric == "ter":
        return metrics.corpus_ter(pairs)
    return metrics.corpus_meteor(pairs)


def _cmd_eval_score(args) -> int:
    pairs = _read_eval_pairs(args.hyp, args.ref)
    score = _score(pairs, args.metric)
    if args.json:
        print(json.dumps({"metric": args.metric, "score": score,
                          "score_x100": score * 100.0, "segments": len(pairs)},
                         sort_keys=True))
    else:
        print(f"{args.metric}: {score:.4f} ({score * 100.0:.2f})")
    return 0


def _cmd_eval_compare(args) -> int:
    pairs_a = _read_eval_pairs(args.hyp_a, args.ref)
    pairs_b = _read_eval_pairs(args.hyp_b, args.ref)
    result = metrics.bootstrap_diff(
        pairs_a, pairs_b, lambda c: _score(list(c), args.metric),
        n_resamples=args.resamples, seed=args.seed)
    print(json.dumps({"metric": args.metric, **result.as_dict()}, sort_keys=True))
    return 0


def _cmd_pipeline(args) -> int:
    config = PipelineConfig.from_json(args.config)
    stages = args.stages.split(",") if args.stages else None
    run_pipeline(config, stages)
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bimine",
        description="Mine, generate, filter and evaluate parallel corpora "
                    "from topic-aligned comparable document collections.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="pair article dumps into a store")
    p.add_argument("--src-dump", required=True)
    p.add_argument("--tgt-dump", required=True)
    p.add_argument("--links", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--src-lang", default="pl")
    p.add_argument("--tgt-lang", default="en")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("sample", help="split a corpus into test and train")
    p.add_argument("--corpus", required=True)
    p.add_argument("--segments", type=int, default=200)
    p.add_argument("--per-segment", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test", required=True)
    p.add_argument("--train", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("stats", help="corpus statistics report")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("lexicon", help="translation lexicon commands")
    lex_sub = p.add_subparsers(dest="subcommand", required=True)
    p = lex_sub.add_parser("train", help="train a lexicon from a seed corpus")
    p.add_argument("--seed", required=True)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--prune-below", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_lexicon_train)

    p = sub.add_parser("classifier", help="similarity classifier commands")
    clf_sub = p.add_subparsers(dest="subcommand", required=True)
    p = clf_sub.add_parser("train", help="train the similarity classifier")
    p.add_argument("--seed", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--src-lang", default="pl")
    p.add_argument("--tgt-lang", default="en")
    p.add_argument("--neg-per-pos", type=int, default=3)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--margin-reg", type=float, default=1e-4)
    p.add_argument("--seed-rng", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=_cmd_classifier_train)

    p = sub.add_parser("mine", help="mine parallel sentences from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--gap-cost", type=float, default=0.4)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--log")
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("merge-bidi", help="merge forward and reverse mining runs")
    p.add_argument("--fwd", required=True)
    p.add_argument("--rev", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--already-oriented", action="store_true",
                   help="do not flip the reverse corpus columns on load")
    p.set_defaults(func=_cmd_merge_bidi)

    p = sub.add_parser("analogy", help="analogy detection and generation")
    ana_sub = p.add_subparsers(dest="subcommand", required=True)
    p = ana_sub.add_parser("find", help="find analogy quadruples in a seed corpus")
    p.add_argument("--seed", required=True)
    p.add_argument("--max-dist", type=int, default=4)
    p.add_argument("--size-guard", type=int, default=50000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analogy_find)
    p = ana_sub.add_parser("models", help="extract rewriting models from quadruples")
    p.add_argument("--seed", required=True)
    p.add_argument("--quads", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--check-target", action="store_true",
                   help="also require the distance equalities on target sentences")
    p.set_defaults(func=_cmd_analogy_models)
    p = ana_sub.add_parser("generate", help="generate quasi-parallel pairs")
    p.add_argument("--models", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--allow-unknown", action="store_true")
    p.set_defaults(func=_cmd_analogy_generate)

    p = sub.add_parser("filter", help="corpus filtering")
    fil_sub = p.add_subparsers(dest="subcommand", required=True)
    p = fil_sub.add_parser("trivial", help="drop duplicates, short and letter-free pairs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-chars", type=int, default=10)
    p.add_argument("--report")
    p.set_defaults(func=_cmd_filter_trivial)
    p = fil_sub.add_parser("cascade", help="translation-similarity cascade filter")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--config", help="cascade config JSON (defaults built in)")
    p.add_argument("--kept", required=True)
    p.add_argument("--rejected", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_filter_cascade)

    p = sub.add_parser("eval", help="score hypotheses against references")
    eval_sub = p.add_subparsers(dest="subcommand", required=True)
    p = eval_sub.add_parser("score", help="score one system")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", action="append", required=True)
    p.add_argument("--metric", choices=("bleu", "nist", "ter", "meteor"),
                   default="bleu")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval_score)
    p = eval_sub.add_parser("compare", help="bootstrap comparison of two systems")
    p.add_argument("--hyp-a", required=True)
    p.add_argument("--hyp-b", required=True)
    p.add_argument("--ref", action="append", required=True)
    p.add_argument("--metric", choices=("bleu", "nist", "ter", "meteor"),
                   default="bleu")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval_compare)

    p = sub.add_parser("pipeline", help="run the end-to-end pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--stages", help="comma-separated subset of stages")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # allow `eval --hyp ...` as shorthand for `eval score --hyp ...`
    if argv and argv[0] == "eval" and (len(argv) == 1 or argv[1].startswith("-")):
        argv.insert(1, "score")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, PipelineError, OSError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
