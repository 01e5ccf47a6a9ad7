"""Shared fixtures: a hand-transcribed reference fragment and tiny factories.

The reference fragment is one 10-syllable line sung over 20 notes with
melisma groups of up to three notes and two group-leading rests, so it
exercises one-to-many alignment, rest handling, and every duration the data
model supports in a single object.
"""

import pytest

from songwriter.score import (
    AlignedLine,
    Duration,
    NoteEvent,
    PitchToken,
    REST,
    Song,
    Syllable,
)

# (surface, phonetic) for each syllable, then that syllable's note group as
# (pitch name or None for a rest, numerator, denominator).
REFERENCE_GROUPS = [
    (("爱", "ai"), [(None, 1, 4), (69, 1, 4)]),
    (("恨", "hen"), [(76, 1, 4)]),
    (("两", "liang"), [(74, 1, 8), (71, 1, 8)]),
    (("茫", "mang"), [(69, 1, 8), (72, 1, 16), (69, 1, 16)]),
    (("茫", "mang"), [(67, 1, 8), (64, 1, 8), (67, 1, 2)]),
    (("问", "wen"), [(None, 1, 4), (64, 1, 4)]),
    (("君", "jun"), [(74, 1, 4)]),
    (("何", "he"), [(72, 1, 8), (69, 1, 8)]),
    (("时", "shi"), [(67, 1, 8), (72, 1, 8)]),
    (("恋", "lian"), [(72, 1, 4), (69, 1, 2)]),
]

REFERENCE_LABELS = [0, 1, 1, 0, 1, 0, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 1, 0, 1]
REFERENCE_GROUP_SIZES = [2, 1, 2, 3, 3, 2, 1, 2, 2, 2]


def build_reference_line() -> AlignedLine:
    syllables = []
    notes = []
    for (surface, phonetic), group in REFERENCE_GROUPS:
        syllables.append(Syllable(surface, phonetic))
        for i, (midi, num, den) in enumerate(group):
            pitch = REST if midi is None else PitchToken(midi)
            label = 1 if i == len(group) - 1 else 0
            notes.append(NoteEvent(pitch, Duration(num, den), label))
    return AlignedLine(syllables, notes)


@pytest.fixture
def reference_line() -> AlignedLine:
    return build_reference_line()


@pytest.fixture
def reference_song(reference_line) -> Song:
    return Song("reference", "C", 60, [reference_line])
