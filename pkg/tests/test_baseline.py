import random

import numpy as np
import pytest

from songwriter.baseline import Seq2seqModel
from songwriter.corpus import SynthConfig, build_vocabulary, generate_synthetic_corpus
from songwriter.model import ModelConfig, SongwriterModel
from songwriter.score import Syllable, validate_alignment
from songwriter.verify import gradcheck_tiny_model, tiny_config, tiny_triple


@pytest.fixture(scope="module")
def baseline():
    return Seq2seqModel(tiny_config(), seed=0)


@pytest.fixture(scope="module")
def vocab_and_baseline():
    songs = generate_synthetic_corpus(SynthConfig(num_songs=6, seed=3))
    vocab = build_vocabulary(songs)
    config = ModelConfig.for_vocabulary(
        vocab, hidden_size=16, pitch_emb=8, duration_emb=8, label_emb=4,
        syllable_emb=8, phonetic_emb=8)
    return vocab, Seq2seqModel(config, seed=1)


class TestArchitecture:
    def test_manifest_differs_only_by_lyric_attention(self):
        main = SongwriterModel(tiny_config(), seed=0)
        base = Seq2seqModel(tiny_config(), seed=0)
        main_manifest = dict(main.manifest())
        base_manifest = dict(base.manifest())
        extra = set(base_manifest) - set(main_manifest)
        assert extra == {"attention.lyrics.W_a", "attention.lyrics.U_a",
                         "attention.lyrics.v_a"}
        assert not set(main_manifest) - set(base_manifest)
        for name, shape in main_manifest.items():
            assert base_manifest[name] == shape

    def test_shared_parameters_initialized_identically(self):
        main = SongwriterModel(tiny_config(), seed=0)
        base = Seq2seqModel(tiny_config(), seed=0)
        base_params = {p.name: p for p in base.params()}
        for p in main.params():
            np.testing.assert_array_equal(p.data, base_params[p.name].data)

    def test_model_type(self, baseline):
        assert baseline.model_type == "seq2seq"


class TestDecoding:
    def test_distributions_sum_to_one(self, baseline):
        triple = tiny_triple()
        lyrics = baseline.encode_lyrics(triple.syllables, triple.phonetics)
        ctx = baseline.encode_context(
            triple.context_pitch, triple.context_duration, triple.context_label)
        state = baseline.init_decoder(ctx)
        result = baseline.decode_step(state, lyrics, ctx, 3, forced=(2, 2, 1))
        for probs in result.probs.values():
            assert abs(probs.sum() - 1.0) < 1e-6

    def test_lyric_attention_weights_exposed(self, baseline):
        triple = tiny_triple()
        lyrics = baseline.encode_lyrics(triple.syllables, triple.phonetics)
        state = baseline.init_decoder(None)
        result = baseline.decode_step(state, lyrics, None, 3, forced=(2, 2, 0))
        assert result.lyric_alpha is not None
        assert result.lyric_alpha.shape == (3,)
        assert abs(result.lyric_alpha.sum() - 1.0) < 1e-6

    def test_single_syllable_attention_is_total(self, baseline):
        lyrics = baseline.encode_lyrics([2], [1])
        state = baseline.init_decoder(None)
        result = baseline.decode_step(state, lyrics, None, 1, forced=(2, 2, 1))
        np.testing.assert_allclose(result.lyric_alpha, [1.0])

    def test_gradients(self):
        report = gradcheck_tiny_model(arch="seq2seq", max_elements_per_param=3, seed=0)
        assert report.max_error < 1e-4
        assert any(name.startswith("attention.lyrics") for name in report.errors)


class TestGeneration:
    def test_stopping_rule(self, vocab_and_baseline):
        vocab, model = vocab_and_baseline
        syllables = [Syllable("ai", "ai"), Syllable("hen", "hen")]
        line = model.generate_line(vocab, syllables, [], policy="greedy")
        assert sum(n.label for n in line.notes) == 2
        assert line.notes[-1].label == 1

    def test_alignment_property(self, vocab_and_baseline):
        vocab, model = vocab_and_baseline
        for seed in range(30):
            rng = random.Random(seed)
            n = rng.randint(1, 6)
            syllables = [Syllable("la", "la") for _ in range(n)]
            line = model.generate_line(vocab, syllables, [], policy="sample", rng=rng)
            assert validate_alignment(line).ok
