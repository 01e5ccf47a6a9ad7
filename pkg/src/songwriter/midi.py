"""Standard MIDI File export and readback.

Format 1, two tracks: a tempo/meta track (one quarter = 1,000,000 us, i.e.
60 BPM) and one melody track. 480 ticks per quarter makes every legal
duration an exact integer tick count (1/64 of a whole note = 30 ticks).
Each syllable's surface text is attached as a lyric meta event at its group's
first sounding note; rests are rendered as gaps and reconstructed from gaps
(including a trailing gap before end-of-track) when reading back.

The reader targets files produced by this writer (single melodic line, no
running status); it fails with MidiError rather than guessing on anything
else.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple

from .score import Song, split_by_labels

TICKS_PER_QUARTER = 480
TICKS_PER_WHOLE = 4 * TICKS_PER_QUARTER
TEMPO_US_PER_QUARTER = 1_000_000
VELOCITY = 80

_PRI_NOTE_OFF = 0
_PRI_META = 1
_PRI_NOTE_ON = 2


class MidiError(Exception):
    """Malformed MIDI bytes."""


class MidiNote(NamedTuple):
    """One readback event: pitch (None for a reconstructed rest), exact
    duration in whole-note units, and onset tick."""

    pitch: int | None
    duration: Fraction
    onset: int


def _vlq(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def _track_chunk(payload: bytes) -> bytes:
    return b"MTrk" + len(payload).to_bytes(4, "big") + payload


def _render_events(events: list[tuple[int, int, bytes]]) -> bytes:
    """Delta-encode (tick, priority, payload) events, already or not in order."""
    out = bytearray()
    cursor = 0
    for tick, _, payload in sorted(events, key=lambda e: (e[0], e[1])):
        out += _vlq(tick - cursor)
        out += payload
        cursor = tick
    return bytes(out)


def duration_ticks(duration) -> int:
    ticks = duration.as_fraction() * TICKS_PER_WHOLE
    assert ticks.denominator == 1
    return int(ticks)


def export_midi(song: Song) -> bytes:
    """Serialize a song as deterministic SMF bytes."""
    header = b"MThd" + (6).to_bytes(4, "big") + (1).to_bytes(2, "big") \
        + (2).to_bytes(2, "big") + TICKS_PER_QUARTER.to_bytes(2, "big")

    tempo_events = [
        (0, _PRI_META, b"\xff\x58\x04\x04\x02\x18\x08"),
        (0, _PRI_META, b"\xff\x51\x03" + TEMPO_US_PER_QUARTER.to_bytes(3, "big")),
    ]

    melody_events: list[tuple[int, int, bytes]] = []
    tick = 0
    for line in song.lines:
        for syllable, group in zip(line.syllables, split_by_labels(line.notes)):
            lyric_attached = False
            for note in group:
                ticks = duration_ticks(note.duration)
                if not note.pitch.is_rest:
                    if not lyric_attached:
                        text = syllable.surface.encode("utf-8")
                        melody_events.append(
                            (tick, _PRI_META, b"\xff\x05" + _vlq(len(text)) + text))
                        lyric_attached = True
                    melody_events.append(
                        (tick, _PRI_NOTE_ON, bytes([0x90, note.pitch.midi, VELOCITY])))
                    melody_events.append(
                        (tick + ticks, _PRI_NOTE_OFF, bytes([0x80, note.pitch.midi, 0])))
                tick += ticks

    end = (tick, _PRI_NOTE_ON + 1, b"\xff\x2f\x00")
    tempo_end = (0, _PRI_NOTE_ON + 1, b"\xff\x2f\x00")
    return (header
            + _track_chunk(_render_events(tempo_events + [tempo_end]))
            + _track_chunk(_render_events(melody_events + [end])))


class _Cursor:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MidiError(f"unexpected end of data at byte {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def byte(self) -> int:
        return self.take(1)[0]

    def vlq(self) -> int:
        value = 0
        for _ in range(4):
            b = self.byte()
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise MidiError(f"variable-length quantity too long at byte {self.pos}")


def _parse_track(payload: bytes):
    """Yield (tick, kind, args) where kind is "on", "off", or "end"."""
    cur = _Cursor(payload)
    tick = 0
    while cur.pos < len(payload):
        tick += cur.vlq()
        status = cur.byte()
        if status == 0xFF:
            meta_type = cur.byte()
            length = cur.vlq()
            cur.take(length)
            if meta_type == 0x2F:
                yield tick, "end", None
                return
        elif status in (0xF0, 0xF7):
            cur.take(cur.vlq())
        elif status >= 0x80:
            kind = status & 0xF0
            if kind in (0xC0, 0xD0):
                cur.take(1)
            elif kind in (0x80, 0x90, 0xA0, 0xB0, 0xE0):
                note, velocity = cur.take(2)
                if kind == 0x90 and velocity > 0:
                    yield tick, "on", note
                elif kind == 0x80 or (kind == 0x90 and velocity == 0):
                    yield tick, "off", note
            else:
                raise MidiError(f"unsupported status byte 0x{status:02x}")
        else:
            raise MidiError(f"running status not supported (byte 0x{status:02x})")
    raise MidiError("track ended without an end-of-track event")


def read_midi_notes(data: bytes) -> list[MidiNote]:
    """Recover the pitch/duration sequence, rests included, from SMF bytes."""
    cur = _Cursor(data)
    if cur.take(4) != b"MThd":
        raise MidiError("missing MThd header")
    if int.from_bytes(cur.take(4), "big") != 6:
        raise MidiError("bad MThd length")
    cur.take(2)  # format
    ntrks = int.from_bytes(cur.take(2), "big")
    division = int.from_bytes(cur.take(2), "big")
    if division & 0x8000:
        raise MidiError("SMPTE time division not supported")
    ticks_per_whole = 4 * division

    notes: list[tuple[int, int, int]] = []  # (onset, pitch, off)
    end_tick = 0
    for _ in range(ntrks):
        if cur.take(4) != b"MTrk":
            raise MidiError("missing MTrk chunk")
        length = int.from_bytes(cur.take(4), "big")
        payload = cur.take(length)
        open_notes: dict[int, int] = {}
        for tick, kind, note in _parse_track(payload):
            if kind == "on":
                if note in open_notes:
                    raise MidiError(f"overlapping note {note}")
                open_notes[note] = tick
            elif kind == "off":
                if note not in open_notes:
                    raise MidiError(f"note-off without note-on for {note}")
                notes.append((open_notes.pop(note), note, tick))
            else:
                end_tick = max(end_tick, tick)
        if open_notes:
            raise MidiError(f"notes never released: {sorted(open_notes)}")

    notes.sort()
    out: list[MidiNote] = []
    cursor = 0
    for onset, pitch, off in notes:
        if onset > cursor:
            out.append(MidiNote(None, Fraction(onset - cursor, ticks_per_whole), cursor))
        elif onset < cursor:
            raise MidiError("overlapping notes are not a single melodic line")
        out.append(MidiNote(pitch, Fraction(off - onset, ticks_per_whole), onset))
        cursor = off
    if end_tick > cursor:
        out.append(MidiNote(None, Fraction(end_tick - cursor, ticks_per_whole), cursor))
    return out


def export_midi_file(path, song: Song) -> None:
    with open(path, "wb") as f:
        f.write(export_midi(song))
