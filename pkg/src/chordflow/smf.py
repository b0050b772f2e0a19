"""Standard MIDI File ingestion and chord slicing.

The parser reads format 0/1 SMF data byte by byte (header chunk, track
chunks, variable-length delta times, running status) and pairs note-on /
note-off messages into :class:`NoteEvent` records on one absolute tick
timeline. Control changes (including the sustain pedal, CC64), program
changes, aftertouch, pitch bend, sysex, and meta events are skipped; note
durations come from note-off messages only, and a note-on with velocity 0
counts as a note-off.

``chordify`` converts the events into a codeword sequence: onsets are
quantized to a grid of 1/``quantize_divisor`` of a quarter note, one
codeword is emitted per distinct quantized onset, and each codeword holds
every pitch sounding at that instant (newly struck notes plus held ones).
Intervals where nothing sounds emit no codeword, and consecutive identical
codewords are kept as separate positions.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from typing import Iterable

from .codeword import Codeword, CodewordSequence

log = logging.getLogger(__name__)

NOTE_OFF = 0x80
NOTE_ON = 0x90


class SmfParseError(ValueError):
    """Malformed or unsupported Standard MIDI File content."""


class ChordifyError(ValueError):
    """Raised when no codewords can be produced from the given events."""


@dataclass(frozen=True)
class NoteEvent:
    """One sounding note in absolute MIDI ticks."""

    onset_tick: int
    release_tick: int
    pitch: int
    track: int

    def __post_init__(self) -> None:
        if self.release_tick <= self.onset_tick:
            raise ValueError("release_tick must be greater than onset_tick")
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch out of MIDI range: {self.pitch}")


@dataclass(frozen=True)
class ParsedMidi:
    """Result of parsing one SMF: resolution plus the matched note events."""

    ticks_per_quarter: int
    events: tuple[NoteEvent, ...]


@dataclass(frozen=True)
class ChordifyOptions:
    """Chord slicing parameters.

    ticks_per_quarter comes from the SMF header. quantize_divisor sets the
    onset grid (16 means onsets snap to 1/16 of a quarter note).
    min_duration drops codewords shorter than that many grid steps
    (0 disables the filter); the transition then skips across the gap,
    the same way it skips across rests.
    """

    ticks_per_quarter: int
    quantize_divisor: int = 16
    min_duration: int = 0

    def __post_init__(self) -> None:
        if self.ticks_per_quarter < 1:
            raise ValueError("ticks_per_quarter must be positive")
        if self.quantize_divisor < 1:
            raise ValueError("quantize_divisor must be positive")
        if self.min_duration < 0:
            raise ValueError("min_duration must be >= 0")


def _read_varint(data: bytes, pos: int, end: int) -> tuple[int, int]:
    """Read an SMF variable-length quantity; returns (value, new position)."""
    value = 0
    for _ in range(4):
        if pos >= end:
            raise SmfParseError("truncated chunk: variable-length value runs past track end")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise SmfParseError("malformed variable-length value longer than 4 bytes")


def _parse_track(data: bytes, start: int, end: int, track: int) -> list[NoteEvent]:
    """Parse one MTrk chunk body into note events on the shared tick line."""
    events: list[NoteEvent] = []
    # FIFO queues of onset ticks per (channel, pitch): overlapping re-strikes
    # of the same pitch pair first-on with first-off.
    active: dict[tuple[int, int], list[int]] = {}
    pos = start
    tick = 0
    running_status: int | None = None

    def close_note(channel: int, pitch: int, release: int) -> None:
        onsets = active.get((channel, pitch))
        if not onsets:
            log.warning("track %d: note-off without matching note-on (pitch %d, tick %d)",
                        track, pitch, release)
            return
        onset = onsets.pop(0)
        events.append(NoteEvent(onset, max(release, onset + 1), pitch, track))

    while pos < end:
        delta, pos = _read_varint(data, pos, end)
        tick += delta
        if pos >= end:
            raise SmfParseError("truncated chunk: event status missing")
        status = data[pos]
        if status >= 0x80:
            pos += 1
        elif running_status is None:
            raise SmfParseError(f"data byte 0x{status:02x} with no running status at offset {pos}")
        else:
            status = running_status

        if status == 0xFF:  # meta event
            running_status = None
            if pos >= end:
                raise SmfParseError("truncated chunk: meta event type missing")
            meta_type = data[pos]
            pos += 1
            length, pos = _read_varint(data, pos, end)
            if pos + length > end:
                raise SmfParseError("truncated chunk: meta event data runs past track end")
            pos += length
            if meta_type == 0x2F:  # end of track
                break
        elif status in (0xF0, 0xF7):  # sysex
            running_status = None
            length, pos = _read_varint(data, pos, end)
            if pos + length > end:
                raise SmfParseError("truncated chunk: sysex data runs past track end")
            pos += length
        elif status >= 0xF0:
            raise SmfParseError(f"unexpected status byte 0x{status:02x} in track data")
        else:
            running_status = status
            kind = status & 0xF0
            channel = status & 0x0F
            nbytes = 1 if kind in (0xC0, 0xD0) else 2
            if pos + nbytes > end:
                raise SmfParseError("truncated chunk: channel message data runs past track end")
            d1 = data[pos]
            d2 = data[pos + 1] if nbytes == 2 else 0
            pos += nbytes
            if kind == NOTE_ON and d2 > 0:
                active.setdefault((channel, d1), []).append(tick)
            elif kind == NOTE_OFF or (kind == NOTE_ON and d2 == 0):
                close_note(channel, d1, tick)
            # all other channel messages (CC incl. pedal, program, bend,
            # pressure) carry no pitch content and are dropped

    final_tick = tick
    for (channel, pitch), onsets in sorted(active.items()):
        for onset in onsets:
            log.warning("track %d: note-on without note-off (pitch %d, tick %d); "
                        "closing at final tick %d", track, pitch, onset, final_tick)
            events.append(NoteEvent(onset, max(final_tick, onset + 1), pitch, track))
    return events


def parse_smf(data: bytes) -> ParsedMidi:
    """Parse SMF bytes into note events on a single absolute timeline.

    Supports format 0 and 1. Tracks of a format-1 file share one tick
    timeline, so events from all tracks merge directly. Chunks with
    unknown ids are skipped, per the SMF specification.
    """
    if len(data) < 14 or data[:4] != b"MThd":
        raise SmfParseError("malformed header: file does not start with an MThd chunk")
    header_len = int.from_bytes(data[4:8], "big")
    if header_len < 6 or 8 + header_len > len(data):
        raise SmfParseError("malformed header: bad MThd length")
    smf_format = int.from_bytes(data[8:10], "big")
    ntrks = int.from_bytes(data[10:12], "big")
    division = int.from_bytes(data[12:14], "big")
    if smf_format == 2:
        raise SmfParseError("unsupported format 2 (independent track sequences)")
    if smf_format not in (0, 1):
        raise SmfParseError(f"unknown SMF format {smf_format}")
    if division & 0x8000:
        raise SmfParseError("SMPTE time division is not supported; quarter-note ticks required")
    if division == 0:
        raise SmfParseError("malformed header: zero ticks per quarter note")

    events: list[NoteEvent] = []
    pos = 8 + header_len
    tracks_seen = 0
    while tracks_seen < ntrks:
        if pos + 8 > len(data):
            raise SmfParseError(f"truncated chunk: expected {ntrks} tracks, found {tracks_seen}")
        chunk_id = data[pos:pos + 4]
        chunk_len = int.from_bytes(data[pos + 4:pos + 8], "big")
        body_start = pos + 8
        body_end = body_start + chunk_len
        if body_end > len(data):
            raise SmfParseError("truncated chunk: declared length runs past end of file")
        if chunk_id == b"MTrk":
            events.extend(_parse_track(data, body_start, body_end, tracks_seen))
            tracks_seen += 1
        else:
            log.warning("skipping unknown chunk %r", bytes(chunk_id))
        pos = body_end

    events.sort(key=lambda e: (e.onset_tick, e.track, e.pitch, e.release_tick))
    return ParsedMidi(ticks_per_quarter=division, events=tuple(events))


def _quantize(tick: int, divisor: int, tpq: int) -> int:
    """Grid index of a tick, rounding half up. Exact integer arithmetic."""
    return (2 * tick * divisor + tpq) // (2 * tpq)


def chordify(events: Iterable[NoteEvent], opts: ChordifyOptions) -> CodewordSequence:
    """Slice note events into a codeword sequence.

    One codeword per distinct quantized onset time, containing every pitch
    whose quantized span [onset, release) covers that time. Notes shorter
    than one grid step still sound for one step, so a struck note always
    appears in its own slice.
    """
    notes = [(_quantize(e.onset_tick, opts.quantize_divisor, opts.ticks_per_quarter),
              _quantize(e.release_tick, opts.quantize_divisor, opts.ticks_per_quarter),
              e.pitch)
             for e in events]
    if not notes:
        raise ChordifyError("no note events to chordify")
    notes = [(on, max(off, on + 1), pitch) for on, off, pitch in notes]
    notes.sort()

    slices: list[tuple[int, Codeword]] = []
    sounding: dict[int, int] = {}  # pitch -> number of active notes
    release_heap: list[tuple[int, int]] = []  # (release, pitch)
    i = 0
    n = len(notes)
    while i < n:
        t = notes[i][0]
        while release_heap and release_heap[0][0] <= t:
            _, pitch = heapq.heappop(release_heap)
            remaining = sounding[pitch] - 1
            if remaining:
                sounding[pitch] = remaining
            else:
                del sounding[pitch]
        while i < n and notes[i][0] == t:
            on, off, pitch = notes[i]
            sounding[pitch] = sounding.get(pitch, 0) + 1
            heapq.heappush(release_heap, (off, pitch))
            i += 1
        slices.append((t, tuple(sorted(sounding))))

    if opts.min_duration > 0:
        last_release = max(off for _, off, _ in notes)
        onsets = [t for t, _ in slices] + [last_release]
        slices = [(t, cw) for (t, cw), nxt in zip(slices, onsets[1:])
                  if nxt - t >= opts.min_duration]
        if not slices:
            raise ChordifyError(
                f"min_duration={opts.min_duration} filtered out every codeword")

    return tuple(cw for _, cw in slices)


def chordify_midi(data: bytes, quantize_divisor: int = 16,
                  min_duration: int = 0) -> CodewordSequence:
    """Parse SMF bytes and chordify in one step."""
    parsed = parse_smf(data)
    opts = ChordifyOptions(ticks_per_quarter=parsed.ticks_per_quarter,
                           quantize_divisor=quantize_divisor,
                           min_duration=min_duration)
    return chordify(parsed.events, opts)
