"""Lyrics-to-melody composition toolkit.

Aligned score data model and corpus codec, synthetic corpus pipeline, a
from-scratch differentiable core, a hierarchical lyric-conditioned melody
model plus an attention-only baseline, evaluation metrics, and MIDI export.
"""

__version__ = "0.1.0"

from .score import (
    AlignedLine,
    CorpusError,
    CorpusParseError,
    Duration,
    NoteEvent,
    PitchToken,
    REST,
    Song,
    Syllable,
    ValidationError,
    merge_groups,
    pitch_name_to_midi,
    song_codec_read,
    song_codec_write,
    split_by_labels,
    syllable_index_for_note,
    validate_alignment,
)
from .corpus import (
    EncodedTriple,
    SynthConfig,
    Triple,
    Vocabulary,
    build_triples,
    build_vocabulary,
    encode_triple,
    decode_triple,
    generate_synthetic_corpus,
    normalize_durations,
    split_corpus,
    transpose_song,
)
from .model import ModelConfig, SongwriterModel
from .baseline import Seq2seqModel
from .training import TrainOptions, train
from .checkpoint import CheckpointError, load_model, save_model
from .metrics import (
    EvalReport,
    bleu,
    duration_of_word,
    evaluate_model,
    perplexity,
    weighted_prf,
)
from .midi import MidiError, export_midi, read_midi_notes
