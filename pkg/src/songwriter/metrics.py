"""Automatic evaluation: perplexity, weighted P/R/F1, BLEU, and duration-of-word.

Teacher-forcing mode scores next-step prediction against gold at every step;
sampling mode generates each line freely (with its gold context window) and
scores the surface sequences. Duration sums are compared as exact rationals.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import Triple, Vocabulary, encode_triple
from .model import SongwriterModel
from .score import AlignedLine, split_by_labels, validate_alignment


def perplexity(nll_sums: dict[str, float], token_count: int) -> dict[str, float]:
    """Per-attribute exp(mean NLL), plus the all-attribute combination."""
    if token_count <= 0:
        raise ValueError("perplexity requires a positive token count")
    out = {attr: math.exp(nll / token_count) for attr, nll in nll_sums.items()}
    out["combined"] = math.exp(sum(nll_sums.values()) / (len(nll_sums) * token_count))
    return out


def weighted_prf(predictions: Sequence, golds: Sequence) -> tuple[float, float, float]:
    """Precision/recall/F1 averaged with gold-class support as weights.

    Cells that would divide by zero contribute zero; classes never seen in
    gold carry zero weight.
    """
    if len(predictions) != len(golds):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(golds)} golds")
    if not golds:
        raise ValueError("cannot score empty sequences")
    support = Counter(golds)
    pred_count = Counter(predictions)
    hit = Counter(g for p, g in zip(predictions, golds) if p == g)
    total = len(golds)
    precision = recall = f1 = 0.0
    for cls, n_gold in support.items():
        weight = n_gold / total
        tp = hit[cls]
        p_cls = tp / pred_count[cls] if pred_count[cls] else 0.0
        r_cls = tp / n_gold
        f_cls = 2 * p_cls * r_cls / (p_cls + r_cls) if (p_cls + r_cls) else 0.0
        precision += weight * p_cls
        recall += weight * r_cls
        f1 += weight * f_cls
    return precision, recall, f1


def _ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: Sequence[Sequence], references: Sequence[Sequence]) -> float:
    """Corpus-level BLEU in [0, 100]: clipped n-gram precision for n=1..4 with
    uniform weights and the brevity penalty, no smoothing."""
    if len(candidates) != len(references):
        raise ValueError("candidate and reference line counts differ")
    if not candidates:
        raise ValueError("cannot score an empty corpus")
    matched = [0] * 4
    possible = [0] * 4
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            cand_counts = _ngrams(cand, n)
            ref_counts = _ngrams(ref, n)
            possible[n - 1] += max(len(cand) - n + 1, 0)
            matched[n - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    if any(m == 0 or p == 0 for m, p in zip(matched, possible)):
        return 0.0
    log_precision = sum(math.log(m / p) for m, p in zip(matched, possible)) / 4.0
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * brevity * math.exp(log_precision)


def duration_of_word(predicted: AlignedLine, gold: AlignedLine) -> tuple[int, int]:
    """Count syllables whose predicted group duration equals gold exactly.

    Returns (matches, total syllables); aggregate corpus-wide before turning
    into a percentage.
    """
    if len(predicted.syllables) != len(gold.syllables):
        raise ValueError("predicted and gold lines have different syllable counts")
    pred_groups = split_by_labels(predicted.notes)
    gold_groups = split_by_labels(gold.notes)
    matches = 0
    for pg, gg in zip(pred_groups, gold_groups):
        pred_sum = sum((n.duration.as_fraction() for n in pg), start=0)
        gold_sum = sum((n.duration.as_fraction() for n in gg), start=0)
        if pred_sum == gold_sum:
            matches += 1
    return matches, len(gold.syllables)


@dataclass
class EvalReport:
    mode: str
    lines: int = 0
    notes: int = 0
    syllables: int = 0
    ppl: dict[str, float] = field(default_factory=dict)
    prf: dict[str, dict[str, float]] = field(default_factory=dict)
    bleu: Optional[float] = None
    dw: Optional[float] = None
    alignment_violations: int = 0
    max_alpha_deviation: float = 0.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "counts": {"lines": self.lines, "notes": self.notes, "syllables": self.syllables},
            "ppl": self.ppl,
            "prf": self.prf,
            "bleu": self.bleu,
            "dw": self.dw,
            "alignment_violations": self.alignment_violations,
            "max_alpha_deviation": self.max_alpha_deviation,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv_row(self) -> str:
        ppl = self.ppl.get("pitch", "")
        cells = [self.mode, self.lines, self.notes, ppl]
        for attr in ("pitch", "duration", "label"):
            scores = self.prf.get(attr, {})
            cells.extend(scores.get(k, "") for k in ("precision", "recall", "f1"))
        cells.extend(["" if self.bleu is None else self.bleu,
                      "" if self.dw is None else self.dw])
        return ",".join(str(c) for c in cells)

    CSV_HEADER = ("mode,lines,notes,pitch_ppl,pitch_p,pitch_r,pitch_f1,"
                  "duration_p,duration_r,duration_f1,label_p,label_r,label_f1,bleu,dw")


def _alpha_deviation(alpha: Optional[np.ndarray]) -> float:
    if alpha is None:
        return 0.0
    return abs(float(alpha.sum()) - 1.0)


def evaluate_model(model: SongwriterModel, vocab: Vocabulary,
                   triples: Sequence[Triple], mode: str = "tf",
                   policy: str = "greedy", seed: int = 0,
                   temperature: float = 1.0) -> EvalReport:
    """Score a model over triples in teacher-forcing or sampling mode."""
    if mode not in ("tf", "sampling"):
        raise ValueError(f"unknown evaluation mode {mode!r}")
    report = EvalReport(mode=mode)
    if mode == "tf":
        _evaluate_teacher_forcing(model, vocab, triples, report)
    else:
        _evaluate_sampling(model, vocab, triples, report, policy, seed, temperature)
    return report


def _evaluate_teacher_forcing(model, vocab, triples, report):
    nll = {"pitch": 0.0, "duration": 0.0, "label": 0.0}
    preds = {"pitch": [], "duration": [], "label": []}
    golds = {"pitch": [], "duration": [], "label": []}
    for triple in triples:
        enc = encode_triple(vocab, triple)
        lyrics = model.encode_lyrics(enc.syllables, enc.phonetics)
        context = model.encode_context(
            enc.context_pitch, enc.context_duration, enc.context_label)
        state = model.init_decoder(context)
        n = len(enc.syllables)
        for i in range(len(enc.target_pitch)):
            forced = (enc.target_pitch[i], enc.target_duration[i], enc.target_label[i])
            result = model.decode_step(state, lyrics, context, n, forced=forced)
            for attr, gold in zip(("pitch", "duration", "label"), forced):
                nll[attr] += result.losses[attr].item()
                preds[attr].append(int(np.argmax(result.probs[attr])))
                golds[attr].append(gold)
            report.max_alpha_deviation = max(
                report.max_alpha_deviation,
                _alpha_deviation(result.context_alpha),
                _alpha_deviation(result.lyric_alpha))
            state = result.state
        report.lines += 1
        report.notes += len(enc.target_pitch)
        report.syllables += n
    report.ppl = perplexity(nll, report.notes)
    for attr in ("pitch", "duration", "label"):
        p, r, f = weighted_prf(preds[attr], golds[attr])
        report.prf[attr] = {"precision": p, "recall": r, "f1": f}


def _evaluate_sampling(model, vocab, triples, report, policy, seed, temperature):
    rng = random.Random(seed)
    candidates, references = [], []
    dw_matches = dw_total = 0

    def alpha_check(context_alpha, lyric_alpha):
        report.max_alpha_deviation = max(
            report.max_alpha_deviation,
            _alpha_deviation(context_alpha), _alpha_deviation(lyric_alpha))

    for triple in triples:
        generated = model.generate_line(
            vocab, list(triple.lyrics), list(triple.context),
            policy=policy, rng=rng, temperature=temperature,
            alpha_check=alpha_check)
        if not validate_alignment(generated).ok:
            report.alignment_violations += 1
        gold_line = AlignedLine(triple.lyrics, triple.target)
        candidates.append([str(n.pitch) for n in generated.notes])
        references.append([str(n.pitch) for n in gold_line.notes])
        m, t = duration_of_word(generated, gold_line)
        dw_matches += m
        dw_total += t
        report.lines += 1
        report.notes += len(generated.notes)
        report.syllables += len(triple.lyrics)
    report.bleu = bleu(candidates, references)
    report.dw = 100.0 * dw_matches / max(dw_total, 1)


def random_duration_baseline(triples: Sequence[Triple], vocab: Vocabulary,
                             seed: int = 0) -> float:
    """DW of gold grouping with durations drawn uniformly from the vocabulary.

    The floor a trained model's sampling-mode DW should beat.
    """
    rng = random.Random(seed)
    choices = [vocab.duration_token(i) for i in vocab.real_duration_ids()]
    matches = total = 0
    for triple in triples:
        gold_line = AlignedLine(triple.lyrics, triple.target)
        for group in split_by_labels(gold_line.notes):
            gold_sum = sum((n.duration.as_fraction() for n in group), start=0)
            random_sum = sum((rng.choice(choices).as_fraction() for _ in group), start=0)
            total += 1
            if random_sum == gold_sum:
                matches += 1
    return 100.0 * matches / max(total, 1)
