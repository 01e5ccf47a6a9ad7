"""Corpus pipeline: normalization, triple building, vocabularies, and synthesis.

Raw songs are transposed to C major / A minor, retimed to the canonical tempo,
and cut into (lyrics, context melody, target melody) triples. A seeded
synthetic generator stands in for a real corpus at desk scale: its melodies
are genuinely conditioned on the lyric syllables, so models can learn the
mapping and evaluation has signal.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .score import (
    REST,
    AlignedLine,
    Duration,
    NoteEvent,
    PitchToken,
    Song,
    Syllable,
    ValidationError,
    validate_alignment,
)

PAD = "<pad>"
BOS = "<bos>"
UNK = "<unk>"


class VocabError(Exception):
    """A token has no index in the vocabulary."""


@dataclass(frozen=True)
class Triple:
    """One training example: a lyric line, its preceding melody window, and the target."""

    lyrics: tuple[Syllable, ...]
    context: tuple[NoteEvent, ...]
    target: tuple[NoteEvent, ...]

    def __init__(self, lyrics, context, target):
        object.__setattr__(self, "lyrics", tuple(lyrics))
        object.__setattr__(self, "context", tuple(context))
        object.__setattr__(self, "target", tuple(target))


@dataclass(frozen=True)
class EncodedTriple:
    """A Triple as dense integer ids, ready for the model."""

    syllables: tuple[int, ...]
    phonetics: tuple[int, ...]
    context_pitch: tuple[int, ...]
    context_duration: tuple[int, ...]
    context_label: tuple[int, ...]
    target_pitch: tuple[int, ...]
    target_duration: tuple[int, ...]
    target_label: tuple[int, ...]


def _pitch_sort_key(p: PitchToken):
    return (0, -1) if p.is_rest else (1, p.midi)


def _duration_sort_key(d: Duration):
    return (d.as_fraction(), d.numerator, d.denominator)


class Vocabulary:
    """Dense 0-based token index spaces for every attribute.

    Pitch and duration reserve <pad>=0 and <bos>=1. Syllable surfaces and
    phonetic keys reserve <pad>=0 and <unk>=1. The label space is fixed:
    label 0 -> 0, label 1 -> 1, <bos> -> 2. Non-special tokens are ordered by
    descending training frequency, ties broken by token value, so building is
    deterministic.
    """

    LABEL_BOS = 2

    def __init__(self, pitches, durations, syllables, phonetics):
        self.pitch_tokens = [PAD, BOS] + list(pitches)
        self.duration_tokens = [PAD, BOS] + list(durations)
        self.label_tokens = [0, 1, BOS]
        self.syllable_tokens = [PAD, UNK] + list(syllables)
        self.phonetic_tokens = [PAD, UNK] + list(phonetics)
        self._pitch_ids = {t: i for i, t in enumerate(self.pitch_tokens)}
        self._duration_ids = {t: i for i, t in enumerate(self.duration_tokens)}
        self._syllable_ids = {t: i for i, t in enumerate(self.syllable_tokens)}
        self._phonetic_ids = {t: i for i, t in enumerate(self.phonetic_tokens)}

    # -- sizes ---------------------------------------------------------------
    @property
    def pitch_size(self):
        return len(self.pitch_tokens)

    @property
    def duration_size(self):
        return len(self.duration_tokens)

    @property
    def label_size(self):
        return 3

    @property
    def syllable_size(self):
        return len(self.syllable_tokens)

    @property
    def phonetic_size(self):
        return len(self.phonetic_tokens)

    # -- encoding ------------------------------------------------------------
    def pitch_id(self, p: PitchToken) -> int:
        try:
            return self._pitch_ids[p]
        except KeyError:
            raise VocabError(f"pitch {p} not in vocabulary")

    def duration_id(self, d: Duration) -> int:
        try:
            return self._duration_ids[d]
        except KeyError:
            raise VocabError(f"duration {d} not in vocabulary")

    def syllable_id(self, surface: str) -> int:
        return self._syllable_ids.get(surface, 1)

    def phonetic_id(self, phonetic: str) -> int:
        return self._phonetic_ids.get(phonetic, 1)

    def pitch_token(self, i: int) -> PitchToken:
        tok = self.pitch_tokens[i]
        if isinstance(tok, PitchToken):
            return tok
        raise VocabError(f"pitch id {i} is the special token {tok}")

    def duration_token(self, i: int) -> Duration:
        tok = self.duration_tokens[i]
        if isinstance(tok, Duration):
            return tok
        raise VocabError(f"duration id {i} is the special token {tok}")

    def real_pitch_ids(self, include_rest=True) -> list[int]:
        return [
            i
            for i, t in enumerate(self.pitch_tokens)
            if isinstance(t, PitchToken) and (include_rest or not t.is_rest)
        ]

    def real_duration_ids(self) -> list[int]:
        return [i for i, t in enumerate(self.duration_tokens) if isinstance(t, Duration)]

    # -- specials ------------------------------------------------------------
    @property
    def pitch_bos(self):
        return 1

    @property
    def duration_bos(self):
        return 1

    @property
    def label_bos(self):
        return self.LABEL_BOS

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        def pitch_json(t):
            return t if isinstance(t, str) else ("R" if t.is_rest else t.midi)

        def dur_json(t):
            return t if isinstance(t, str) else [t.numerator, t.denominator]

        return {
            "pitch": [pitch_json(t) for t in self.pitch_tokens],
            "duration": [dur_json(t) for t in self.duration_tokens],
            "label": [0, 1, BOS],
            "syllable": list(self.syllable_tokens),
            "phonetic": list(self.phonetic_tokens),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        def pitch_from(v):
            if v == "R":
                return REST
            return PitchToken(v)

        pitches = [pitch_from(v) for v in d["pitch"][2:]]
        durations = [Duration(v[0], v[1]) for v in d["duration"][2:]]
        vocab = cls(pitches, durations, d["syllable"][2:], d["phonetic"][2:])
        return vocab

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        return cls.from_dict(json.loads(text))


def build_vocabulary(songs: Sequence[Song]) -> Vocabulary:
    """Collect every token in the training songs into indexed vocabularies."""
    if not songs:
        raise ValueError("cannot build a vocabulary from an empty training set")
    pitch_freq, dur_freq, syl_freq, pho_freq = {}, {}, {}, {}
    for song in songs:
        for line in song.lines:
            for s in line.syllables:
                syl_freq[s.surface] = syl_freq.get(s.surface, 0) + 1
                pho_freq[s.phonetic] = pho_freq.get(s.phonetic, 0) + 1
            for n in line.notes:
                pitch_freq[n.pitch] = pitch_freq.get(n.pitch, 0) + 1
                dur_freq[n.duration] = dur_freq.get(n.duration, 0) + 1

    def ordered(freq, tie_key):
        return [t for t in sorted(freq, key=lambda t: (-freq[t], tie_key(t)))]

    return Vocabulary(
        ordered(pitch_freq, _pitch_sort_key),
        ordered(dur_freq, _duration_sort_key),
        ordered(syl_freq, lambda s: s),
        ordered(pho_freq, lambda s: s),
    )


# ---------------------------------------------------------------------------
# Key normalization
# ---------------------------------------------------------------------------

_TONIC_SEMITONE = {
    "C": 0, "C#": 1, "DB": 1, "D": 2, "D#": 3, "EB": 3, "E": 4, "F": 5,
    "F#": 6, "GB": 6, "G": 7, "G#": 8, "AB": 8, "A": 9, "A#": 10, "BB": 10, "B": 11,
}

# Pitch-class key profiles (major / minor) for the metadata-free fallback.
_MAJOR_PROFILE = [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88]
_MINOR_PROFILE = [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17]


def parse_key(name: str) -> tuple[int, bool]:
    """Parse a key name like "C", "Eb", "Am", "F# minor" into (tonic pc, is_minor)."""
    text = name.strip()
    minor = False
    for suffix in (" minor", "minor", " min", "min", "m"):
        if text.lower().endswith(suffix) and len(text) > len(suffix):
            candidate = text[: -len(suffix)].strip()
            if candidate.upper() in _TONIC_SEMITONE:
                text, minor = candidate, True
                break
    for suffix in (" major", "major", " maj", "maj"):
        if text.lower().endswith(suffix):
            text = text[: -len(suffix)].strip()
            break
    pc = _TONIC_SEMITONE.get(text.upper())
    if pc is None:
        raise ValueError(f"unknown key name {name!r}")
    return pc, minor


def detect_key(song: Song) -> str:
    """Guess a key from the pitch-class histogram when metadata is missing.

    Correlates the histogram against fixed major and minor profiles at all
    twelve rotations and reports the best match.
    """
    hist = [0.0] * 12
    for n in song.all_notes():
        if not n.pitch.is_rest:
            hist[n.pitch.midi % 12] += float(n.duration.as_fraction())
    if not any(hist):
        return "C"

    def corr(profile, rot):
        prof = [profile[(i - rot) % 12] for i in range(12)]
        mh = sum(hist) / 12.0
        mp = sum(prof) / 12.0
        num = sum((h - mh) * (p - mp) for h, p in zip(hist, prof))
        dh = sum((h - mh) ** 2 for h in hist) ** 0.5
        dp = sum((p - mp) ** 2 for p in prof) ** 0.5
        return num / (dh * dp) if dh > 0 else 0.0

    names = ["C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"]
    best_name, best_score = "C", float("-inf")
    for rot in range(12):
        for profile, minor in ((_MAJOR_PROFILE, False), (_MINOR_PROFILE, True)):
            score = corr(profile, rot)
            if score > best_score:
                best_score = score
                best_name = names[rot] + ("m" if minor else "")
    return best_name


def transpose_song(song: Song, detect_missing_key: bool = False) -> Song:
    """Shift a song into C major or A minor, whichever matches its mode.

    The semitone offset from the song's tonic to the target tonic is
    normalized into [-5, +6], keeping the melody near its original register.
    Durations and labels are unchanged.
    """
    key_name = song.key
    if detect_missing_key and not key_name.strip():
        key_name = detect_key(song)
    tonic, minor = parse_key(key_name)
    target = 9 if minor else 0
    offset = (target - tonic) % 12
    if offset > 6:
        offset -= 12
    new_lines = []
    for line in song.lines:
        notes = []
        for n in line.notes:
            if n.pitch.is_rest:
                notes.append(n)
            else:
                midi = n.pitch.midi + offset
                if not 0 <= midi <= 127:
                    raise ValidationError(
                        f"transposition by {offset} pushes pitch {n.pitch.midi} out of MIDI range",
                        song.id,
                    )
                notes.append(NoteEvent(PitchToken(midi), n.duration, n.label))
        new_lines.append(AlignedLine(line.syllables, notes))
    return Song(song.id, "Am" if minor else "C", song.bpm, new_lines)


def normalize_durations(song: Song) -> Song:
    """Rescale durations so the song plays identically at the canonical 60 BPM.

    Each duration is multiplied by bpm/60 (a beat at the original tempo lasts
    bpm/60 seconds worth of 60-BPM time). Values that leave the representable
    grid are snapped to the nearest 1/64, ties rounding up; a scaled value
    below 1/64 is an error.
    """
    if song.bpm <= 0:
        raise ValidationError("bpm must be positive", song.id)
    if song.bpm == 60:
        return song
    factor = Fraction(song.bpm, 60)
    floor = Fraction(1, 64)
    new_lines = []
    for li, line in enumerate(song.lines):
        notes = []
        for ni, n in enumerate(line.notes):
            scaled = n.duration.as_fraction() * factor
            if scaled < floor:
                raise ValidationError(
                    f"note {ni} duration {n.duration} scales to {scaled}, below 1/64",
                    song.id,
                    li,
                )
            if scaled.denominator in (1, 2, 4, 8, 16, 32, 64):
                dur = Duration.from_fraction(scaled)
            else:
                sixty_fourths = (scaled * 64 + Fraction(1, 2)).__floor__()
                dur = Duration(int(sixty_fourths), 64)
            notes.append(NoteEvent(n.pitch, dur, n.label))
        new_lines.append(AlignedLine(line.syllables, notes))
    return Song(song.id, song.key, 60, new_lines)


def build_triples(song: Song, window: int = 40) -> list[Triple]:
    """Cut a song into per-line triples with a sliding context-melody window.

    Line k's context is the last `window` notes of lines 1..k-1 concatenated;
    the first line has an empty context.
    """
    triples = []
    history: list[NoteEvent] = []
    for line in song.lines:
        context = history[-window:] if window > 0 else []
        triples.append(Triple(line.syllables, context, line.notes))
        history.extend(line.notes)
    return triples


def split_corpus(songs: Sequence[Song], ratios=(0.90, 0.05, 0.05), seed: int = 0):
    """Shuffle songs deterministically and split them train/valid/test.

    Valid and test sizes are floor-rounded; the remainder goes to train. No
    song straddles two splits.
    """
    total = sum(ratios)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {total}")
    parts = sum(1 for r in ratios if r > 0)
    if len(songs) < parts:
        raise ValueError(f"{len(songs)} songs cannot fill {parts} split parts")
    order = list(songs)
    random.Random(seed).shuffle(order)
    n = len(order)
    n_valid = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_valid - n_test
    train = order[:n_train]
    valid = order[n_train : n_train + n_valid]
    test = order[n_train + n_valid :]
    return train, valid, test


def encode_triple(vocab: Vocabulary, triple: Triple) -> EncodedTriple:
    """Map a triple's tokens to vocabulary ids (unknown syllables become UNK)."""
    return EncodedTriple(
        syllables=tuple(vocab.syllable_id(s.surface) for s in triple.lyrics),
        phonetics=tuple(vocab.phonetic_id(s.phonetic) for s in triple.lyrics),
        context_pitch=tuple(vocab.pitch_id(n.pitch) for n in triple.context),
        context_duration=tuple(vocab.duration_id(n.duration) for n in triple.context),
        context_label=tuple(n.label for n in triple.context),
        target_pitch=tuple(vocab.pitch_id(n.pitch) for n in triple.target),
        target_duration=tuple(vocab.duration_id(n.duration) for n in triple.target),
        target_label=tuple(n.label for n in triple.target),
    )


def decode_triple(vocab: Vocabulary, enc: EncodedTriple) -> Triple:
    """Inverse of encode_triple for in-vocabulary ids (UNK cannot be inverted)."""

    def syllable(i, j):
        surface = vocab.syllable_tokens[i]
        phonetic = vocab.phonetic_tokens[j]
        if surface in (PAD, UNK) or phonetic in (PAD, UNK):
            raise VocabError("cannot decode special syllable ids back to text")
        return Syllable(surface, phonetic)

    def notes(pids, dids, lids):
        return tuple(
            NoteEvent(vocab.pitch_token(p), vocab.duration_token(d), l)
            for p, d, l in zip(pids, dids, lids)
        )

    return Triple(
        lyrics=tuple(syllable(i, j) for i, j in zip(enc.syllables, enc.phonetics)),
        context=notes(enc.context_pitch, enc.context_duration, enc.context_label),
        target=notes(enc.target_pitch, enc.target_duration, enc.target_label),
    )


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------

# Small pinyin-style lexicon; surface doubles as the phonetic key.
SYNTH_LEXICON = [
    "ai", "chun", "feng", "hai", "he", "hen", "hua", "jun", "lian", "liang",
    "mang", "meng", "qing", "shan", "shi", "shui", "tian", "wen", "xin", "yue",
]

# C-major scale degrees spanning a tenth.
SYNTH_SCALE = [60, 62, 64, 65, 67, 69, 71, 72, 74, 76]

SYNTH_DURATIONS = [Duration(1, 8), Duration(1, 4), Duration(1, 2)]
SYNTH_REST_DURATIONS = [Duration(1, 8), Duration(1, 4)]

# How strongly a syllable's characteristic interval / duration dominates.
_PITCH_FOLLOW = 0.85
_CONT_FOLLOW = 0.8
_DUR_FOLLOW = 0.8


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic corpus generator."""

    num_songs: int = 100
    lines_per_song: tuple[int, int] = (3, 6)
    syllables_per_line: tuple[int, int] = (4, 8)
    one_to_many_prob: float = 0.25
    max_notes_per_syllable: int = 3
    rest_prob: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.one_to_many_prob <= 1.0:
            raise ValueError("one_to_many_prob must be in [0, 1]")
        if not 0.0 <= self.rest_prob <= 1.0:
            raise ValueError("rest_prob must be in [0, 1]")
        if self.lines_per_song[0] > self.lines_per_song[1] or self.lines_per_song[0] < 1:
            raise ValueError("lines_per_song range is empty")
        if (
            self.syllables_per_line[0] > self.syllables_per_line[1]
            or self.syllables_per_line[0] < 1
        ):
            raise ValueError("syllables_per_line range is empty")
        if self.max_notes_per_syllable < 2:
            raise ValueError("max_notes_per_syllable must be >= 2")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        kwargs = dict(d)
        for key in ("lines_per_song", "syllables_per_line"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def _syllable_offset(lex_index: int) -> int:
    return (lex_index % 5) - 2


def generate_synthetic_corpus(config: SynthConfig) -> list[Song]:
    """Generate a deterministic corpus whose melodies depend on the lyrics.

    Each syllable's lexicon index fixes a characteristic melodic interval and
    a preferred duration, perturbing a first-order walk over the C-major
    scale. Group sizes follow the one-to-many probability, and rests appear
    only at the head of a group so they never carry label 1.
    """
    rng = random.Random(config.seed)
    n_scale = len(SYNTH_SCALE)
    songs = []
    for si in range(config.num_songs):
        degree = rng.randrange(n_scale)
        lines = []
        for _ in range(rng.randint(*config.lines_per_song)):
            n_syll = rng.randint(*config.syllables_per_line)
            syllables = []
            notes = []
            for _ in range(n_syll):
                k = rng.randrange(len(SYNTH_LEXICON))
                surface = SYNTH_LEXICON[k]
                syllables.append(Syllable(surface, surface))
                if rng.random() < config.one_to_many_prob:
                    group_len = rng.randint(2, config.max_notes_per_syllable)
                else:
                    group_len = 1
                if rng.random() < config.rest_prob:
                    notes.append(
                        NoteEvent(REST, rng.choice(SYNTH_REST_DURATIONS), 0)
                    )
                for t in range(group_len):
                    if t == 0:
                        if rng.random() < _PITCH_FOLLOW:
                            degree = (degree + _syllable_offset(k)) % n_scale
                        else:
                            degree = (degree + rng.choice((-1, 1))) % n_scale
                    else:
                        if rng.random() < _CONT_FOLLOW:
                            degree = (degree + 1) % n_scale
                        else:
                            degree = (degree + rng.choice((-1, 1))) % n_scale
                    if rng.random() < _DUR_FOLLOW:
                        dur = SYNTH_DURATIONS[k % len(SYNTH_DURATIONS)]
                    else:
                        dur = rng.choice(SYNTH_DURATIONS)
                    label = 1 if t == group_len - 1 else 0
                    notes.append(NoteEvent(PitchToken(SYNTH_SCALE[degree]), dur, label))
            line = AlignedLine(syllables, notes)
            assert validate_alignment(line).ok
            lines.append(line)
        songs.append(Song(f"synth-{si:05d}", "C", 60, lines))
    return songs
