"""Aligned score data model: pitches, durations, alignment labels, and the corpus codec.

A melody line is a sequence of notes, each carrying a pitch (MIDI number or
rest), an exact rational duration in whole-note units, and a binary alignment
label. Label 1 marks the last note of the group of notes sung on one syllable,
so the labels partition a line's notes into per-syllable groups. Rests always
belong to the syllable that follows them and therefore never carry label 1.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class CorpusError(Exception):
    """Base class for corpus file problems."""


class CorpusParseError(CorpusError):
    """Malformed JSON in a corpus file."""

    def __init__(self, line_number, message):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ValidationError(CorpusError):
    """A song or line violates a structural invariant."""

    def __init__(self, message, song_id=None, line_index=None):
        prefix = ""
        if song_id is not None:
            prefix += f"song {song_id!r}"
        if line_index is not None:
            prefix += f" line {line_index}"
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.song_id = song_id
        self.line_index = line_index


_ALLOWED_DENOMS = (1, 2, 4, 8, 16, 32, 64)


@dataclass(frozen=True)
class PitchToken:
    """A note's pitch: a MIDI number in 0..127, or None for a rest."""

    midi: int | None = None

    def __post_init__(self):
        if self.midi is not None and not 0 <= self.midi <= 127:
            raise ValueError(f"MIDI pitch out of range: {self.midi}")

    @property
    def is_rest(self) -> bool:
        return self.midi is None

    @classmethod
    def rest(cls) -> "PitchToken":
        return cls(None)

    @classmethod
    def note(cls, midi: int) -> "PitchToken":
        return cls(midi)

    def __str__(self):
        return "R" if self.is_rest else str(self.midi)


REST = PitchToken.rest()


@dataclass(frozen=True)
class Duration:
    """Exact note length in whole-note units, e.g. Duration(1, 4) is a quarter.

    Stored in lowest terms; the reduced denominator must be a power of two
    up to 64. Numerators above the denominator (dotted/tied values such as
    3/8) are fine.
    """

    numerator: int
    denominator: int

    def __post_init__(self):
        if self.numerator <= 0 or self.denominator <= 0:
            raise ValueError(f"non-positive duration {self.numerator}/{self.denominator}")
        g = math.gcd(self.numerator, self.denominator)
        object.__setattr__(self, "numerator", self.numerator // g)
        object.__setattr__(self, "denominator", self.denominator // g)
        if self.denominator not in _ALLOWED_DENOMS:
            raise ValueError(
                f"denominator {self.denominator} not a power of two <= 64 "
                f"(from {self.numerator}/{self.denominator})"
            )

    @classmethod
    def from_fraction(cls, value: Fraction) -> "Duration":
        return cls(value.numerator, value.denominator)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __str__(self):
        return f"{self.numerator}/{self.denominator}"


@dataclass(frozen=True)
class NoteEvent:
    """One musical note with its alignment label (1 = closes a syllable group)."""

    pitch: PitchToken
    duration: Duration
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class Syllable:
    """A lyric unit: its written surface and a phonetic key."""

    surface: str
    phonetic: str

    def __post_init__(self):
        if not self.surface:
            raise ValueError("syllable surface must be non-empty")


@dataclass(frozen=True)
class AlignedLine:
    """One lyric sentence paired with its melody line."""

    syllables: tuple[Syllable, ...]
    notes: tuple[NoteEvent, ...]

    def __init__(self, syllables: Sequence[Syllable], notes: Sequence[NoteEvent]):
        object.__setattr__(self, "syllables", tuple(syllables))
        object.__setattr__(self, "notes", tuple(notes))


@dataclass(frozen=True)
class Song:
    id: str
    key: str
    bpm: int
    lines: tuple[AlignedLine, ...]

    def __init__(self, id: str, key: str, bpm: int, lines: Sequence[AlignedLine]):
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "bpm", bpm)
        object.__setattr__(self, "lines", tuple(lines))

    def all_notes(self) -> list[NoteEvent]:
        return [n for line in self.lines for n in line.notes]


@dataclass(frozen=True)
class AlignmentReport:
    """Result of checking a line against the alignment restriction."""

    ok: bool
    problems: tuple[str, ...] = ()


def validate_alignment(line: AlignedLine) -> AlignmentReport:
    """Check that labels partition the notes into exactly one group per syllable.

    The line is valid when the label sum equals the syllable count, the final
    note carries label 1, and no rest carries label 1.
    """
    problems = []
    label_sum = sum(n.label for n in line.notes)
    if label_sum != len(line.syllables):
        problems.append(
            f"label sum {label_sum} != syllable count {len(line.syllables)}"
        )
    if not line.notes:
        problems.append("line has no notes")
    elif line.notes[-1].label != 1:
        problems.append("final note does not carry label 1")
    for i, n in enumerate(line.notes):
        if n.pitch.is_rest and n.label == 1:
            problems.append(f"rest at note {i} carries label 1")
    return AlignmentReport(ok=not problems, problems=tuple(problems))


def split_by_labels(notes: Sequence[NoteEvent]) -> list[list[NoteEvent]]:
    """Split notes into per-syllable groups, each ending at a label-1 note."""
    groups: list[list[NoteEvent]] = []
    current: list[NoteEvent] = []
    for n in notes:
        current.append(n)
        if n.label == 1:
            groups.append(current)
            current = []
    if current:
        raise ValueError("trailing notes after the last label-1 note (unterminated group)")
    return groups


def merge_groups(groups: Iterable[Sequence[NoteEvent]]) -> list[NoteEvent]:
    """Concatenate note groups, recomputing labels (last of each group = 1)."""
    merged: list[NoteEvent] = []
    for gi, group in enumerate(groups):
        if not group:
            raise ValueError(f"group {gi} is empty")
        for i, n in enumerate(group):
            label = 1 if i == len(group) - 1 else 0
            merged.append(NoteEvent(n.pitch, n.duration, label))
    return merged


def syllable_index_for_note(labels_so_far: Sequence[int], num_syllables: int) -> int:
    """1-based index of the syllable the next note belongs to.

    The index is one plus the number of closed groups so far, clamped to the
    syllable count so the function stays total.
    """
    if num_syllables < 1:
        raise ValueError("num_syllables must be >= 1")
    return min(1 + sum(labels_so_far), num_syllables)


_PITCH_NAME_RE = re.compile(r"^([A-Ga-g])([#b]?)(-?\d+)$")
_LETTER_SEMITONE = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}


def pitch_name_to_midi(name: str) -> int:
    """Convert scientific pitch notation to a MIDI number (C5 -> 72)."""
    m = _PITCH_NAME_RE.match(name.strip())
    if not m:
        raise ValueError(f"cannot parse pitch name {name!r}")
    letter, accidental, octave = m.groups()
    semitone = _LETTER_SEMITONE[letter.upper()]
    if accidental == "#":
        semitone += 1
    elif accidental == "b":
        semitone -= 1
    midi = 12 * (int(octave) + 1) + semitone
    if not 0 <= midi <= 127:
        raise ValueError(f"pitch {name!r} maps to MIDI {midi}, outside 0..127")
    return midi


# ---------------------------------------------------------------------------
# Corpus codec: UTF-8 JSON lines, one song per line. Canonical form uses a
# fixed key order, compact separators, and lowest-terms durations, so
# write(read(text)) == text for canonical input.
# ---------------------------------------------------------------------------


def _pitch_to_json(p: PitchToken):
    return "R" if p.is_rest else p.midi


def _pitch_from_json(v, where):
    if v == "R":
        return REST
    if isinstance(v, int) and not isinstance(v, bool):
        try:
            return PitchToken(v)
        except ValueError as e:
            raise ValidationError(str(e), *where)
    raise ValidationError(f"pitch must be a MIDI integer or \"R\", got {v!r}", *where)


def song_to_dict(song: Song) -> dict:
    return {
        "id": song.id,
        "key": song.key,
        "bpm": song.bpm,
        "lines": [
            {
                "syllables": [
                    {"surface": s.surface, "phonetic": s.phonetic} for s in line.syllables
                ],
                "notes": [
                    {
                        "pitch": _pitch_to_json(n.pitch),
                        "dur": [n.duration.numerator, n.duration.denominator],
                        "label": n.label,
                    }
                    for n in line.notes
                ],
            }
            for line in song.lines
        ],
    }


def song_from_dict(record: dict) -> Song:
    song_id = record.get("id")
    if not isinstance(song_id, str) or not song_id:
        raise ValidationError("song id must be a non-empty string")
    key = record.get("key")
    if not isinstance(key, str):
        raise ValidationError("key must be a string", song_id)
    bpm = record.get("bpm")
    if not isinstance(bpm, int) or isinstance(bpm, bool) or bpm <= 0:
        raise ValidationError(f"bpm must be a positive integer, got {bpm!r}", song_id)
    raw_lines = record.get("lines")
    if not isinstance(raw_lines, list) or not raw_lines:
        raise ValidationError("song must have a non-empty list of lines", song_id)

    lines = []
    for li, raw in enumerate(raw_lines):
        where = (song_id, li)
        syllables = []
        for s in raw.get("syllables", []):
            try:
                syllables.append(Syllable(s["surface"], s["phonetic"]))
            except (KeyError, TypeError, ValueError) as e:
                raise ValidationError(f"bad syllable {s!r}: {e}", *where)
        notes = []
        for n in raw.get("notes", []):
            try:
                dur = n["dur"]
                notes.append(
                    NoteEvent(
                        _pitch_from_json(n["pitch"], where),
                        Duration(dur[0], dur[1]),
                        n["label"],
                    )
                )
            except ValidationError:
                raise
            except (KeyError, TypeError, IndexError, ValueError) as e:
                raise ValidationError(f"bad note {n!r}: {e}", *where)
        if not syllables:
            raise ValidationError("line has no syllables", *where)
        line = AlignedLine(syllables, notes)
        report = validate_alignment(line)
        if not report.ok:
            raise ValidationError("; ".join(report.problems), *where)
        lines.append(line)
    return Song(song_id, key, bpm, lines)


def song_codec_write(songs: Song | Sequence[Song]) -> str:
    """Serialize songs to canonical JSON-lines text."""
    if isinstance(songs, Song):
        songs = [songs]
    return "".join(
        json.dumps(song_to_dict(s), ensure_ascii=False, separators=(",", ":")) + "\n"
        for s in songs
    )


def song_codec_read(text: str) -> list[Song]:
    """Parse JSON-lines corpus text, validating every song invariant."""
    songs = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as e:
            raise CorpusParseError(ln, str(e))
        if not isinstance(record, dict):
            raise CorpusParseError(ln, "record is not a JSON object")
        songs.append(song_from_dict(record))
    return songs


def read_corpus_file(path) -> list[Song]:
    with open(path, encoding="utf-8") as f:
        return song_codec_read(f.read())


def write_corpus_file(path, songs: Sequence[Song]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(song_codec_write(songs))
