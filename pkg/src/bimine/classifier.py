"""Calibrated sentence-pair similarity classifier.

A linear max-margin model over lexicon-based features, trained with
stochastic subgradient descent on the hinge loss, then mapped to a
probability in (0, 1) with a sigmoid fitted by Platt's method.  The score
estimates how likely two sentences are translations of each other.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .corpus_io import BitextCorpus, tokenize
from .lexicon import TranslationLexicon

FEATURE_NAMES = ("len_ratio", "char_ratio", "cov_st", "cov_ts", "num_overlap")

FORMAT_VERSION = 1


@dataclass(frozen=True)
class FeatureVector:
    len_ratio: float
    char_ratio: float
    cov_st: float
    cov_ts: float
    num_overlap: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.len_ratio, self.char_ratio, self.cov_st,
                self.cov_ts, self.num_overlap)


@dataclass
class SimilarityModel:
    weights: list[float]
    bias: float
    platt_a: float
    platt_b: float
    direction: tuple[str, str]
    threshold: float = 0.5
    lexicon_checksum: str = ""

    def margin(self, features: FeatureVector) -> float:
        return sum(w * x for w, x in zip(self.weights, features.as_tuple())) + self.bias


def _is_digit_token(token: str) -> bool:
    return any(ch.isdigit() for ch in token) and not any(ch.isalpha() for ch in token)


def extract_features(src_tokens: Sequence[str], tgt_tokens: Sequence[str],
                     lex: TranslationLexicon) -> FeatureVector:
    """Compute the five [0,1] features for a candidate sentence pair.

    Coverage source->target credits each source token with the summed
    probability of its lexicon translations present in the target (at most 1
    by normalization); target->source uses the best available probability
    per target token.
    """
    if not src_tokens or not tgt_tokens:
        raise ValueError("cannot extract features from an empty sentence")
    n_src, n_tgt = len(src_tokens), len(tgt_tokens)
    len_ratio = min(n_src, n_tgt) / max(n_src, n_tgt)
    c_src = sum(len(t) for t in src_tokens)
    c_tgt = sum(len(t) for t in tgt_tokens)
    char_ratio = min(c_src, c_tgt) / max(c_src, c_tgt)

    tgt_set = set(tgt_tokens)
    cov = 0.0
    for s in src_tokens:
        credit = 0.0
        for t, p in lex.entries.get(s, ()):
            if t in tgt_set:
                credit += p
        cov += min(credit, 1.0)
    cov_st = cov / n_src

    src_set = set(src_tokens)
    cov = 0.0
    for t in tgt_tokens:
        best = 0.0
        for s in src_set:
            for tt, p in lex.entries.get(s, ()):
                if tt == t and p > best:
                    best = p
        cov += best
    cov_ts = cov / n_tgt

    src_digits = {t for t in src_tokens if _is_digit_token(t)}
    tgt_digits = {t for t in tgt_tokens if _is_digit_token(t)}
    if not src_digits and not tgt_digits:
        num_overlap = 1.0
    else:
        num_overlap = len(src_digits & tgt_digits) / len(src_digits | tgt_digits)

    return FeatureVector(len_ratio, char_ratio, cov_st, cov_ts, num_overlap)


def calibrate(raw_margins: Sequence[tuple[float, int]]) -> tuple[float, float]:
    """Fit p(y=1 | m) = 1 / (1 + exp(a*m + b)) by regularized max likelihood.

    Newton iterations with backtracking line search on Platt's regularized
    targets.  Requires both labels present; the fitted slope ``a`` is
    negative whenever larger margins indicate the positive class.
    """
    n_pos = sum(1 for _, y in raw_margins if y > 0)
    n_neg = len(raw_margins) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("calibration needs both positive and negative margins")

    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    deci = [m for m, _ in raw_margins]
    targets = [hi if y > 0 else lo for _, y in raw_margins]

    def objective(a: float, b: float) -> float:
        val = 0.0
        for d, t in zip(deci, targets):
            f = d * a + b
            if f >= 0:
                val += t * f + math.log1p(math.exp(-f))
            else:
                val += (t - 1) * f + math.log1p(math.exp(f))
        return val

    a, b = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = objective(a, b)
    sigma = 1e-12
    for _ in range(100):
        h11 = h22 = sigma
        h21 = g1 = g2 = 0.0
        for d, t in zip(deci, targets):
            f = d * a + b
            if f >= 0:
                e = math.exp(-f)
                p, q = e / (1.0 + e), 1.0 / (1.0 + e)
            else:
                e = math.exp(f)
                p, q = 1.0 / (1.0 + e), e / (1.0 + e)
            d2 = p * q
            h11 += d * d * d2
            h22 += d2
            h21 += d * d2
            d1 = t - p
            g1 += d * d1
            g2 += d1
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= 1e-10:
            na, nb = a + step * da, b + step * db
            nf = objective(na, nb)
            if nf < fval + 1e-4 * step * gd:
                a, b, fval = na, nb, nf
                break
            step /= 2.0
        else:
            break
    return a, b


def _sigmoid_ab(margin: float, a: float, b: float) -> float:
    f = margin * a + b
    if f >= 0:
        e = math.exp(-min(f, 700.0))
        p = e / (1.0 + e)
    else:
        e = math.exp(max(f, -700.0))
        p = 1.0 / (1.0 + e)
    return min(max(p, 1e-15), 1.0 - 1e-15)


def similarity(model: SimilarityModel, src_tokens: Sequence[str],
               tgt_tokens: Sequence[str], lex: TranslationLexicon) -> float:
    """Calibrated likelihood in (0, 1) that the pair is a mutual translation."""
    features = extract_features(src_tokens, tgt_tokens, lex)
    return _sigmoid_ab(model.margin(features), model.platt_a, model.platt_b)


def train_model(seed: BitextCorpus, lex: TranslationLexicon,
                neg_per_pos: int = 3, epochs: int = 30,
                learning_rate: float = 0.1, margin_reg: float = 1e-4,
                seed_rng: int = 0) -> SimilarityModel:
    """Train the similarity classifier from a parallel seed corpus.

    Positives are the aligned seed pairs.  For each positive, ``neg_per_pos``
    negatives pair the same source with other targets; the target at the
    adjacent offset is always included as a hard negative.  The linear
    classifier is fit by SGD on hinge loss with L2 regularization on 90% of
    the examples and Platt-calibrated on the held-out 10%.
    """
    if neg_per_pos < 1:
        raise ValueError("neg_per_pos must be >= 1")
    if len(seed.pairs) < 100:
        raise ValueError(f"need at least 100 seed pairs, got {len(seed.pairs)}")

    rng = random.Random(seed_rng)
    tokenized = [(tokenize(p.src, lowercase=True), tokenize(p.tgt, lowercase=True))
                 for p in seed.pairs]
    tokenized = [(s, t) for s, t in tokenized if s and t]
    n = len(tokenized)

    examples: list[tuple[tuple[float, ...], int]] = []
    for i, (src, tgt) in enumerate(tokenized):
        examples.append((extract_features(src, tgt, lex).as_tuple(), 1))
        adjacent = i + 1 if i + 1 < n else i - 1
        neg_targets = [adjacent]
        while len(neg_targets) < neg_per_pos:
            j = rng.randrange(n)
            if j != i:
                neg_targets.append(j)
        for j in neg_targets:
            examples.append((extract_features(src, tokenized[j][1], lex).as_tuple(), -1))

    rng.shuffle(examples)
    n_held = max(1, len(examples) // 10)
    held_out = examples[:n_held]
    training = examples[n_held:]

    dim = len(FEATURE_NAMES)
    weights = [0.0] * dim
    bias = 0.0
    step = 0
    for _ in range(epochs):
        order = list(range(len(training)))
        rng.shuffle(order)
        for idx in order:
            step += 1
            eta = learning_rate / (1.0 + margin_reg * learning_rate * step)
            x, y = training[idx]
            margin = sum(w * xi for w, xi in zip(weights, x)) + bias
            for d in range(dim):
                weights[d] -= eta * margin_reg * weights[d]
            if y * margin < 1.0:
                for d in range(dim):
                    weights[d] += eta * y * x[d]
                bias += eta * y
    raw = [(sum(w * xi for w, xi in zip(weights, x)) + bias, y) for x, y in held_out]
    if len({y for _, y in raw}) < 2:
        # tiny held-out split missed one class; calibrate on training margins
        raw = [(sum(w * xi for w, xi in zip(weights, x)) + bias, y) for x, y in training]
    platt_a, platt_b = calibrate(raw)
    if platt_a >= 0:
        raise ValueError(
            "calibration produced a non-negative slope; the trained margins "
            "do not separate translations from negatives")

    return SimilarityModel(
        weights=weights, bias=bias, platt_a=platt_a, platt_b=platt_b,
        direction=(seed.src_lang, seed.tgt_lang),
        lexicon_checksum=lexicon_checksum(lex),
    )


def lexicon_checksum(lex: TranslationLexicon) -> str:
    h = hashlib.sha256()
    for s in sorted(lex.entries):
        for t, p in lex.entries[s]:
            h.update(f"{s}\t{t}\t{p:.12g}\n".encode("utf-8"))
    return h.hexdigest()


def save_model(path, model: SimilarityModel) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "feature_names": list(FEATURE_NAMES),
        "weights": model.weights,
        "bias": model.bias,
        "platt_a": model.platt_a,
        "platt_b": model.platt_b,
        "threshold": model.threshold,
        "direction": list(model.direction),
        "lexicon_checksum": model.lexicon_checksum,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> SimilarityModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format {doc.get('format_version')!r}")
    if doc.get("feature_names") != list(FEATURE_NAMES):
        raise ValueError(f"{path}: model features {doc.get('feature_names')} "
                         f"do not match {list(FEATURE_NAMES)}")
    return SimilarityModel(
        weights=[float(w) for w in doc["weights"]],
        bias=float(doc["bias"]),
        platt_a=float(doc["platt_a"]),
        platt_b=float(doc["platt_b"]),
        direction=(doc["direction"][0], doc["direction"][1]),
        threshold=float(doc["threshold"]),
        lexicon_checksum=doc.get("lexicon_checksum", ""),
    )
