import random

import numpy as np
import pytest

from songwriter.baseline import Seq2seqModel
from songwriter.checkpoint import CheckpointError, load_model, save_model
from songwriter.corpus import SynthConfig, build_vocabulary, generate_synthetic_corpus
from songwriter.model import ModelConfig, SongwriterModel
from songwriter.score import Syllable


@pytest.fixture(scope="module")
def setup():
    songs = generate_synthetic_corpus(SynthConfig(num_songs=4, seed=6))
    vocab = build_vocabulary(songs)
    config = ModelConfig.for_vocabulary(
        vocab, hidden_size=12, pitch_emb=8, duration_emb=8, label_emb=4,
        syllable_emb=8, phonetic_emb=8)
    model = SongwriterModel(config, seed=9)
    return model, vocab


class TestRoundTrip:
    def test_bitwise_parameters(self, setup):
        model, vocab = setup
        loaded, loaded_vocab = load_model(save_model(model, vocab))
        assert type(loaded) is SongwriterModel
        originals = {p.name: p.data for p in model.params()}
        for p in loaded.params():
            np.testing.assert_array_equal(p.data, originals[p.name])
            assert p.data.dtype == np.float32
        assert loaded_vocab.to_dict() == vocab.to_dict()
        assert loaded.config == model.config

    def test_baseline_type_preserved(self, setup):
        _, vocab = setup
        base = Seq2seqModel(ModelConfig.for_vocabulary(
            vocab, hidden_size=8, pitch_emb=4, duration_emb=4, label_emb=4,
            syllable_emb=4, phonetic_emb=4), seed=1)
        loaded, _ = load_model(save_model(base, vocab))
        assert type(loaded) is Seq2seqModel
        assert loaded.model_type == "seq2seq"

    def test_generation_identical_after_reload(self, setup):
        model, vocab = setup
        loaded, loaded_vocab = load_model(save_model(model, vocab))
        syllables = [Syllable("ai", "ai"), Syllable("hen", "hen"), Syllable("he", "he")]
        a = model.generate_line(vocab, syllables, [], policy="sample",
                                rng=random.Random(4))
        b = loaded.generate_line(loaded_vocab, syllables, [], policy="sample",
                                 rng=random.Random(4))
        assert a == b


class TestErrors:
    def test_bad_magic(self, setup):
        model, vocab = setup
        data = save_model(model, vocab)
        with pytest.raises(CheckpointError):
            load_model(b"XXXX" + data[4:])

    def test_truncated_header(self, setup):
        model, vocab = setup
        data = save_model(model, vocab)
        with pytest.raises(CheckpointError):
            load_model(data[:10])

    def test_truncated_payload(self, setup):
        model, vocab = setup
        data = save_model(model, vocab)
        with pytest.raises(CheckpointError):
            load_model(data[:-8])

    def test_corrupt_header_json(self, setup):
        model, vocab = setup
        data = bytearray(save_model(model, vocab))
        data[8] = ord("!")
        with pytest.raises(CheckpointError):
            load_model(bytes(data))

    def test_not_even_a_file(self):
        with pytest.raises(CheckpointError):
            load_model(b"")
