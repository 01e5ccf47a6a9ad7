"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one `[acceptance N] PASS/FAIL` line (run with `pytest -s` to
see them live). Several criteria share expensive artifacts through
module-scoped fixtures; their runtimes are measured where the criterion caps
them.
"""

import random
import time
from collections import Counter

import numpy as np
import pytest

import songwriter as sw
from songwriter.baseline import Seq2seqModel
from songwriter.checkpoint import load_model, save_model
from songwriter.corpus import (
    SynthConfig,
    build_triples,
    build_vocabulary,
    generate_synthetic_corpus,
    split_corpus,
)
from songwriter.metrics import (
    bleu,
    evaluate_model,
    random_duration_baseline,
    weighted_prf,
)
from songwriter.midi import export_midi, read_midi_notes
from songwriter.model import ModelConfig, SongwriterModel
from songwriter.score import (
    Song,
    merge_groups,
    pitch_name_to_midi,
    song_codec_read,
    song_codec_write,
    split_by_labels,
    validate_alignment,
)
from songwriter.training import TrainOptions, train
from songwriter.verify import gradcheck_tiny_model

from conftest import REFERENCE_GROUP_SIZES, build_reference_line
from oracles import brute_bleu, brute_weighted_prf, random_valid_line


def emit(criterion: int, passed: bool, detail: str) -> bool:
    print(f"\n[acceptance {criterion}] {'PASS' if passed else 'FAIL'}: {detail}",
          flush=True)
    return passed


# -- shared expensive artifacts ---------------------------------------------


@pytest.fixture(scope="module")
def memorization_run():
    """Criterion 3's training run; criterion 8 reuses the trained model."""
    songs = generate_synthetic_corpus(SynthConfig(
        num_songs=8, lines_per_song=(4, 4), syllables_per_line=(4, 7), seed=11))
    triples = [t for s in songs for t in build_triples(s)][:32]
    vocab = build_vocabulary(songs)
    config = ModelConfig.for_vocabulary(
        vocab, hidden_size=64, pitch_emb=32, duration_emb=16, label_emb=8,
        syllable_emb=32, phonetic_emb=16)
    model = SongwriterModel(config, seed=3)
    started = time.perf_counter()
    report = train(model, vocab, triples,
                   options=TrainOptions(epochs=500, batch_size=8, seed=0,
                                        early_stop_pitch_ppl=1.2))
    seconds = time.perf_counter() - started
    return model, vocab, triples, report, seconds


class TestCriterion1GradientCorrectness:
    def test_full_sweep_under_tolerance_and_time(self):
        started = time.perf_counter()
        report = gradcheck_tiny_model(arch="songwriter", hidden=8, seed=0)
        seconds = time.perf_counter() - started
        detail = (f"max relative error {report.max_error:.3e} "
                  f"({report.worst_parameter}) over {len(report.errors)} parameters "
                  f"in {seconds:.1f}s")
        ok = emit(1, report.max_error < 1e-4 and seconds < 60.0, detail)
        assert report.max_error < 1e-4, detail
        assert seconds < 60.0, detail


class TestCriterion2AlignmentTotality:
    def test_1000_sampled_generations(self):
        songs = generate_synthetic_corpus(SynthConfig(num_songs=10, seed=41))
        vocab = build_vocabulary(songs)
        config = ModelConfig.for_vocabulary(
            vocab, hidden_size=16, pitch_emb=8, duration_emb=8, label_emb=4,
            syllable_emb=8, phonetic_emb=8)
        contexts = [list(t.context) for s in songs for t in build_triples(s)]
        lexicon = [s for s in vocab.syllable_tokens[2:]]
        started = time.perf_counter()
        violations = 0
        total = 0
        for arch_index, cls in enumerate((SongwriterModel, Seq2seqModel)):
            model = cls(config, seed=arch_index)
            for i in range(500):
                rng = random.Random(1000 * arch_index + i)
                n = rng.randint(1, 8)
                syllables = [sw.Syllable(rng.choice(lexicon), rng.choice(lexicon))
                             for _ in range(n)]
                context = contexts[i % len(contexts)] if i % 2 else []
                try:
                    line = model.generate_line(
                        vocab, syllables, context, policy="sample", rng=rng,
                        temperature=1.0)
                    if not validate_alignment(line).ok:
                        violations += 1
                except AssertionError:
                    violations += 1
                total += 1
        seconds = time.perf_counter() - started
        detail = (f"{violations} alignment violations in {total} sampled "
                  f"generations across both architectures in {seconds:.0f}s")
        ok = emit(2, violations == 0 and total == 1000 and seconds < 300, detail)
        assert violations == 0, detail
        assert total == 1000
        assert seconds < 300, detail


class TestCriterion3MemorizationCapacity:
    def test_overfit_32_triples(self, memorization_run):
        model, vocab, triples, report, seconds = memorization_run
        tf = evaluate_model(model, vocab, triples, mode="tf")
        pitch_f1 = tf.prf["pitch"]["f1"]
        label_f1 = tf.prf["label"]["f1"]
        pitch_ppl = tf.ppl["pitch"]
        detail = (f"pitch F1 {pitch_f1:.4f} (>=0.95), label F1 {label_f1:.4f} "
                  f"(>=0.98), pitch PPL {pitch_ppl:.3f} (<=1.3), "
                  f"{len(report.epochs)} epochs (<=500) in {seconds:.0f}s (<600s)")
        ok = (pitch_f1 >= 0.95 and label_f1 >= 0.98 and pitch_ppl <= 1.3
              and len(report.epochs) <= 500 and seconds < 600)
        emit(3, ok, detail)
        assert pitch_f1 >= 0.95, detail
        assert label_f1 >= 0.98, detail
        assert pitch_ppl <= 1.3, detail
        assert len(report.epochs) <= 500, detail
        assert seconds < 600, detail


class TestCriterion4Learnability:
    def test_beats_chance_on_held_out_split(self):
        started = time.perf_counter()
        songs = generate_synthetic_corpus(SynthConfig(num_songs=500, seed=2024))
        train_songs, valid_songs, test_songs = split_corpus(songs, seed=0)
        vocab = build_vocabulary(train_songs)
        train_triples = [t for s in train_songs for t in build_triples(s)]
        valid_triples = [t for s in valid_songs for t in build_triples(s)]
        test_triples = [t for s in test_songs for t in build_triples(s)]

        config = ModelConfig.for_vocabulary(
            vocab, hidden_size=48, pitch_emb=32, duration_emb=16, label_emb=8,
            syllable_emb=32, phonetic_emb=16)
        model = SongwriterModel(config, seed=7)
        train(model, vocab, train_triples, valid_triples,
              options=TrainOptions(epochs=5, batch_size=32, seed=0))

        tf = evaluate_model(model, vocab, test_triples, mode="tf")
        pitch_f1 = tf.prf["pitch"]["f1"]

        train_gold = [vocab.pitch_id(n.pitch) for t in train_triples for n in t.target]
        majority = Counter(train_gold).most_common(1)[0][0]
        test_gold = [vocab.pitch_id(n.pitch) for t in test_triples for n in t.target]
        _, _, majority_f1 = weighted_prf([majority] * len(test_gold), test_gold)

        sampling = evaluate_model(model, vocab, test_triples, mode="sampling",
                                  policy="greedy", seed=0)
        baseline_dw = random_duration_baseline(test_triples, vocab, seed=1)
        seconds = time.perf_counter() - started

        detail = (f"test pitch F1 {pitch_f1:.4f} vs majority {majority_f1:.4f} "
                  f"(needs +0.10); sampling DW {sampling.dw:.1f} vs random "
                  f"{baseline_dw:.1f}; {seconds:.0f}s (<3600s)")
        ok = (pitch_f1 >= majority_f1 + 0.10 and sampling.dw > baseline_dw
              and seconds < 3600)
        emit(4, ok, detail)
        assert pitch_f1 >= majority_f1 + 0.10, detail
        assert sampling.dw > baseline_dw, detail
        assert sampling.alignment_violations == 0
        assert seconds < 3600, detail


class TestCriterion5MetricOracles:
    BLEU_CORPORA = [
        ([[1, 2, 3, 4, 5], [6, 7, 8, 9]], [[1, 2, 3, 4, 5], [6, 7, 8, 9]]),
        ([[1, 2, 3, 4]], [[5, 6, 7, 8]]),
        ([[1, 2, 3, 4, 7], [5, 6, 1, 2, 9]], [[1, 2, 3, 4, 5], [5, 6, 1, 2, 3]]),
        ([[1, 2, 3, 4]], [[1, 2, 3, 4, 5, 6, 7]]),
        ([[1, 1, 1, 1, 1, 2, 3, 4]], [[1, 2, 3, 4, 1, 2, 3, 4]]),
    ]

    def test_bleu_and_prf_match_brute_force(self):
        worst_bleu = 0.0
        for cands, refs in self.BLEU_CORPORA:
            worst_bleu = max(worst_bleu, abs(bleu(cands, refs) - brute_bleu(cands, refs)))
        endpoints_ok = (bleu(*self.BLEU_CORPORA[0]) == pytest.approx(100.0)
                        and bleu(*self.BLEU_CORPORA[1]) == 0.0)

        prf_cases = [
            (["a", "a", "a"], ["a", "a", "b"]),  # worked example: F1 = 8/15
            ([1, 2, 3], [1, 2, 3]),
            ([1, 1, 2, 2], [2, 2, 1, 1]),
            ([0] * 10, [0] * 5 + [1] * 5),
            ([3, 1, 4, 1, 5, 9, 2, 6], [3, 1, 4, 1, 5, 9, 2, 7]),
        ]
        worst_prf = 0.0
        for preds, golds in prf_cases:
            got = weighted_prf(preds, golds)
            expected = brute_weighted_prf(preds, golds)
            worst_prf = max(worst_prf, max(abs(a - b) for a, b in zip(got, expected)))
        worked = weighted_prf(["a", "a", "a"], ["a", "a", "b"])

        detail = (f"BLEU vs oracle max diff {worst_bleu:.2e} (<=1e-6) on 5 corpora; "
                  f"weighted PRF vs oracle max diff {worst_prf:.2e} on 5 cases; "
                  f"worked F1 {worked[2]:.6f} == 8/15")
        ok = (worst_bleu <= 1e-6 and endpoints_ok and worst_prf < 1e-12
              and worked[2] == pytest.approx(8 / 15))
        emit(5, ok, detail)
        assert worst_bleu <= 1e-6, detail
        assert endpoints_ok
        assert worst_prf < 1e-12, detail
        assert worked == pytest.approx((4 / 9, 2 / 3, 8 / 15))


class TestCriterion6StructuralRoundTrips:
    def test_all_round_trips(self):
        # corpus codec
        corpus = generate_synthetic_corpus(SynthConfig(num_songs=200, rest_prob=0.2, seed=77))
        text = song_codec_write(corpus)
        codec_ok = song_codec_write(song_codec_read(text)) == text

        # split/merge on 1000 random lines
        rng = random.Random(616)
        split_merge_ok = all(
            merge_groups(split_by_labels(line.notes)) == list(line.notes)
            for line in (random_valid_line(rng) for _ in range(1000)))

        # checkpoint bitwise
        vocab = build_vocabulary(corpus[:20])
        config = ModelConfig.for_vocabulary(
            vocab, hidden_size=12, pitch_emb=8, duration_emb=8, label_emb=4,
            syllable_emb=8, phonetic_emb=8)
        model = SongwriterModel(config, seed=5)
        loaded, _ = load_model(save_model(model, vocab))
        originals = {p.name: p.data for p in model.params()}
        checkpoint_ok = all(
            np.array_equal(p.data, originals[p.name]) for p in loaded.params())

        # MIDI export and readback on 1000 songs
        midi_songs = generate_synthetic_corpus(SynthConfig(
            num_songs=1000, lines_per_song=(2, 3), syllables_per_line=(3, 6),
            rest_prob=0.25, seed=99))
        midi_failures = 0
        for song in midi_songs:
            events = read_midi_notes(export_midi(song))
            expected = [
                (None if n.pitch.is_rest else n.pitch.midi, n.duration.as_fraction())
                for n in song.all_notes()]
            if [(e.pitch, e.duration) for e in events] != expected:
                midi_failures += 1

        detail = (f"codec identity {codec_ok}; split/merge 1000 lines "
                  f"{split_merge_ok}; checkpoint bitwise {checkpoint_ok}; "
                  f"MIDI failures {midi_failures}/1000")
        ok = codec_ok and split_merge_ok and checkpoint_ok and midi_failures == 0
        emit(6, ok, detail)
        assert codec_ok and split_merge_ok and checkpoint_ok, detail
        assert midi_failures == 0, detail


class TestCriterion7ReferenceFragmentFidelity:
    def test_fragment_pipeline(self):
        line = build_reference_line()
        song = Song("fragment", "C", 60, [line])
        parsed = song_codec_read(song_codec_write(song))[0]
        validated = validate_alignment(parsed.lines[0]).ok
        sizes = [len(g) for g in split_by_labels(parsed.lines[0].notes)]
        data = export_midi(parsed)
        events = read_midi_notes(data)
        note_ons = sum(1 for e in events if e.pitch is not None)
        lyric_events = data.count(b"\xff\x05")
        anchors_ok = pitch_name_to_midi("C5") == 72 and pitch_name_to_midi("Eb6") == 87

        detail = (f"parsed+validated {validated}; group sizes {sizes}; "
                  f"{note_ons} note-ons (=18), {lyric_events} lyric events (=10); "
                  f"anchors C5=72, Eb6=87 {anchors_ok}")
        ok = (validated and sizes == REFERENCE_GROUP_SIZES and note_ons == 18
              and lyric_events == 10 and anchors_ok)
        emit(7, ok, detail)
        assert validated
        assert sizes == REFERENCE_GROUP_SIZES, detail
        assert note_ons == 18 and lyric_events == 10, detail
        assert anchors_ok


class TestCriterion8AttentionNormalization:
    def test_alpha_sums_across_full_evaluation(self, memorization_run):
        model, vocab, triples, _, _ = memorization_run
        tf = evaluate_model(model, vocab, triples, mode="tf")
        sampling = evaluate_model(model, vocab, triples, mode="sampling",
                                  policy="sample", seed=8)
        worst = max(tf.max_alpha_deviation, sampling.max_alpha_deviation)
        detail = (f"max |sum(alpha) - 1| = {worst:.2e} (<1e-6) across "
                  f"{tf.notes + sampling.notes} decoded notes, both modes; "
                  f"violations {tf.alignment_violations + sampling.alignment_violations}")
        ok = worst < 1e-6 and sampling.alignment_violations == 0
        emit(8, ok, detail)
        assert worst < 1e-6, detail
        assert sampling.alignment_violations == 0
