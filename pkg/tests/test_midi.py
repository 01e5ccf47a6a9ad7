from fractions import Fraction

import pytest

from songwriter.corpus import SynthConfig, generate_synthetic_corpus
from songwriter.midi import (
    MidiError,
    TICKS_PER_WHOLE,
    _track_chunk,
    export_midi,
    read_midi_notes,
)
from songwriter.score import (
    AlignedLine,
    Duration,
    NoteEvent,
    PitchToken,
    Song,
    Syllable,
)


def single_note_song():
    line = AlignedLine(
        [Syllable("do", "do")],
        [NoteEvent(PitchToken(72), Duration(1, 4), 1)])
    return Song("one", "C", 60, [line])


class TestExport:
    def test_single_quarter_note_ticks(self):
        events = read_midi_notes(export_midi(single_note_song()))
        assert events == [(72, Fraction(1, 4), 0)]
        # one quarter at 480 ticks per quarter ends at tick 480
        assert events[0].duration * TICKS_PER_WHOLE == 480

    def test_reference_event_counts(self, reference_song):
        data = export_midi(reference_song)
        assert data.count(b"\x90") >= 18  # status bytes for note-on
        events = read_midi_notes(data)
        sounding = [e for e in events if e.pitch is not None]
        rests = [e for e in events if e.pitch is None]
        assert len(sounding) == 18
        assert len(rests) == 2
        assert data.count(b"\xff\x05") == 10  # one lyric event per syllable

    def test_deterministic_bytes(self, reference_song):
        assert export_midi(reference_song) == export_midi(reference_song)

    def test_tempo_is_canonical(self, reference_song):
        # 1,000,000 microseconds per quarter
        assert b"\xff\x51\x03\x0f\x42\x40" in export_midi(reference_song)

    def test_lyric_text_is_utf8(self, reference_song):
        data = export_midi(reference_song)
        assert "爱".encode("utf-8") in data

    def test_total_ticks_equal_duration_sum(self, reference_song):
        events = read_midi_notes(export_midi(reference_song))
        total = sum(e.duration for e in events)
        expected = sum(
            (n.duration.as_fraction() for n in reference_song.all_notes()),
            Fraction(0))
        assert total == expected


class TestRoundTrip:
    def assert_round_trip(self, song):
        events = read_midi_notes(export_midi(song))
        original = [
            (None if n.pitch.is_rest else n.pitch.midi, n.duration.as_fraction())
            for n in song.all_notes()
        ]
        assert [(e.pitch, e.duration) for e in events] == original

    def test_reference_song(self, reference_song):
        self.assert_round_trip(reference_song)

    def test_trailing_rest_recovered(self):
        line = AlignedLine(
            [Syllable("la", "la"), Syllable("ti", "ti")],
            [NoteEvent(PitchToken(60), Duration(1, 4), 1),
             NoteEvent(PitchToken(62), Duration(1, 8), 1),
             ])
        front = AlignedLine(
            [Syllable("shh", "shh")],
            [NoteEvent(PitchToken(64), Duration(1, 2), 1)])
        song = Song("t", "C", 60, [front, line])
        self.assert_round_trip(song)

    def test_generated_songs(self):
        songs = generate_synthetic_corpus(
            SynthConfig(num_songs=50, rest_prob=0.3, seed=33))
        for song in songs:
            self.assert_round_trip(song)

    def test_onsets_are_cumulative(self):
        songs = generate_synthetic_corpus(SynthConfig(num_songs=1, seed=4))
        events = read_midi_notes(export_midi(songs[0]))
        tick = 0
        for e in events:
            assert e.onset == tick
            tick += int(e.duration * TICKS_PER_WHOLE)


class TestReader:
    def test_empty_melody_track(self):
        header = b"MThd" + (6).to_bytes(4, "big") + (1).to_bytes(2, "big") \
            + (1).to_bytes(2, "big") + (480).to_bytes(2, "big")
        empty = _track_chunk(b"\x00\xff\x2f\x00")
        assert read_midi_notes(header + empty) == []

    def test_truncated_file(self, reference_song):
        data = export_midi(reference_song)
        with pytest.raises(MidiError):
            read_midi_notes(data[: len(data) // 2])

    def test_bad_magic(self):
        with pytest.raises(MidiError):
            read_midi_notes(b"RIFF" + b"\x00" * 20)

    def test_bad_header_length(self):
        data = b"MThd" + (7).to_bytes(4, "big") + b"\x00" * 8
        with pytest.raises(MidiError):
            read_midi_notes(data)

    def test_note_without_release(self):
        header = b"MThd" + (6).to_bytes(4, "big") + (1).to_bytes(2, "big") \
            + (1).to_bytes(2, "big") + (480).to_bytes(2, "big")
        stuck = _track_chunk(b"\x00\x90\x48\x50" + b"\x00\xff\x2f\x00")
        with pytest.raises(MidiError):
            read_midi_notes(header + stuck)
