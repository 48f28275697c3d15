"""Minimal Standard MIDI File writer/reader for monophonic melodies.

Writes format-0 single-track files at 480 ticks per quarter note and reads
them (or any monophonic format-0/1 file) back into note triplets, so a
melody survives an export/ingest round trip exactly on the tick grid.
"""

from __future__ import annotations

import struct
from pathlib import Path

from .notes import MelodySequence, NoteEvent

TICKS_PER_QUARTER = 480
_DEFAULT_VELOCITY = 80


def _vlq(value: int) -> bytes:
    """Encode a non-negative int as a MIDI variable-length quantity."""
    if value < 0:
        raise ValueError(f"negative delta time {value}")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def midi_bytes(
    melody: MelodySequence,
    tempo_bpm: float = 120.0,
    ticks_per_quarter: int = TICKS_PER_QUARTER,
    velocity: int = _DEFAULT_VELOCITY,
) -> bytes:
    """Serialize a melody as a one-track SMF.

    Note onsets follow the cumulative (duration + rest) timeline; the final
    rest is preserved as the delta before end-of-track.
    """
    if len(melody) == 0:
        raise ValueError("empty sequence")
    if ticks_per_quarter < TICKS_PER_QUARTER:
        raise ValueError(f"tick resolution must be >= {TICKS_PER_QUARTER}")
    if not tempo_bpm > 0:
        raise ValueError(f"tempo must be positive, got {tempo_bpm}")

    # absolute tick positions from the cumulative quarter-note timeline,
    # rounded once per event so rounding error never accumulates
    events: list[tuple[int, int, int]] = []  # (abs_tick, kind 1=on/0=off, pitch)
    clock = 0.0
    for note in melody:
        on = round(clock * ticks_per_quarter)
        off = round((clock + note.duration) * ticks_per_quarter)
        events.append((on, 1, note.pitch))
        events.append((off, 0, note.pitch))
        clock += note.duration + note.rest
    end_tick = round(clock * ticks_per_quarter)

    track = bytearray()
    tempo_usec = round(60_000_000 / tempo_bpm)
    track += _vlq(0) + bytes([0xFF, 0x51, 0x03]) + tempo_usec.to_bytes(3, "big")
    cursor = 0
    for tick, kind, pitch in events:
        track += _vlq(tick - cursor)
        status = 0x90 if kind else 0x80
        track += bytes([status, pitch, velocity if kind else 0])
        cursor = tick
    track += _vlq(end_tick - cursor) + bytes([0xFF, 0x2F, 0x00])

    header = struct.pack(">4sIHHH", b"MThd", 6, 0, 1, ticks_per_quarter)
    chunk = struct.pack(">4sI", b"MTrk", len(track)) + bytes(track)
    return header + chunk


def write_midi(
    melody: MelodySequence,
    out: str | Path,
    tempo_bpm: float = 120.0,
    ticks_per_quarter: int = TICKS_PER_QUARTER,
    velocity: int = _DEFAULT_VELOCITY,
) -> Path:
    """Write a melody as a one-track SMF; returns the output path."""
    path = Path(out)
    path.write_bytes(midi_bytes(melody, tempo_bpm, ticks_per_quarter, velocity))
    return path


class MidiParseError(ValueError):
    pass


def _read_vlq(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    while True:
        if pos >= len(data):
            raise MidiParseError("truncated variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos


def _parse_track(data: bytes, ticks_per_quarter: int):
    """Yield (abs_tick, message) pairs plus the track end tick and tempo."""
    pos = 0
    tick = 0
    running_status = None
    notes_on: dict[int, int] = {}
    events: list[tuple[int, int, int]] = []  # (on_tick, off_tick, pitch)
    tempo_bpm = None
    end_tick = 0
    while pos < len(data):
        delta, pos = _read_vlq(data, pos)
        tick += delta
        status = data[pos]
        if status & 0x80:
            pos += 1
            if status < 0xF0:
                running_status = status
        else:
            if running_status is None:
                raise MidiParseError(f"data byte {status:#x} with no running status")
            status = running_status
        kind = status & 0xF0
        if status == 0xFF:
            meta = data[pos]
            length, pos = _read_vlq(data, pos + 1)
            payload = data[pos : pos + length]
            pos += length
            if meta == 0x51 and length == 3:
                tempo_bpm = 60_000_000 / int.from_bytes(payload, "big")
            if meta == 0x2F:
                end_tick = tick
                break
        elif status in (0xF0, 0xF7):
            length, pos = _read_vlq(data, pos)
            pos += length
        elif kind in (0x80, 0x90):
            pitch, vel = data[pos], data[pos + 1]
            pos += 2
            if kind == 0x90 and vel > 0:
                if pitch in notes_on:
                    raise MidiParseError(f"overlapping note {pitch}; melody is not monophonic")
                notes_on[pitch] = tick
            else:
                if pitch not in notes_on:
                    raise MidiParseError(f"note-off for pitch {pitch} without note-on")
                events.append((notes_on.pop(pitch), tick, pitch))
        elif kind in (0xA0, 0xB0, 0xE0):
            pos += 2
        elif kind in (0xC0, 0xD0):
            pos += 1
        else:
            raise MidiParseError(f"unsupported status byte {status:#x}")
    if notes_on:
        raise MidiParseError(f"unterminated notes {sorted(notes_on)}")
    return events, max(end_tick, tick), tempo_bpm


def read_midi(path: str | Path) -> tuple[MelodySequence, float]:
    """Read a monophonic SMF back into (melody, tempo_bpm).

    Rests are the gaps between a note-off and the next onset; the final
    rest runs to the latest end-of-track.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 14 or raw[:4] != b"MThd":
        raise MidiParseError("not a standard MIDI file")
    header_len, fmt, ntrks, division = struct.unpack(">IHHH", raw[4:14])
    if division & 0x8000:
        raise MidiParseError("SMPTE time division is not supported")
    pos = 8 + header_len
    all_events: list[tuple[int, int, int]] = []
    end_tick = 0
    tempo_bpm = None
    for _ in range(ntrks):
        if raw[pos : pos + 4] != b"MTrk":
            raise MidiParseError("missing MTrk chunk")
        (length,) = struct.unpack(">I", raw[pos + 4 : pos + 8])
        body = raw[pos + 8 : pos + 8 + length]
        pos += 8 + length
        events, track_end, tempo = _parse_track(body, division)
        all_events.extend(events)
        end_tick = max(end_tick, track_end)
        if tempo is not None:
            tempo_bpm = tempo
    if not all_events:
        raise MidiParseError("file contains no notes")
    all_events.sort()
    notes = []
    for i, (on, off, pitch) in enumerate(all_events):
        nxt = all_events[i + 1][0] if i + 1 < len(all_events) else end_tick
        if off > nxt:
            raise MidiParseError("overlapping notes; melody is not monophonic")
        notes.append(
            NoteEvent(int(pitch), (off - on) / division, (nxt - off) / division)
        )
    return MelodySequence(tuple(notes)), (tempo_bpm if tempo_bpm is not None else 120.0)
