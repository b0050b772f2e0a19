"""Codewords: sets of simultaneously sounding MIDI pitches.

A codeword is stored as a tuple of distinct pitches sorted ascending, so
equality and hashing are structural. The text form used by corpus files is
the base-10 pitches joined by commas, e.g. ``60,64,67``.
"""

from __future__ import annotations

from typing import Iterable

Codeword = tuple[int, ...]
CodewordSequence = tuple[Codeword, ...]

PITCH_MIN = 0
PITCH_MAX = 127


class CodewordError(ValueError):
    """Raised for pitches outside MIDI range or malformed codeword text."""


def make_codeword(pitches: Iterable[int]) -> Codeword:
    """Build a canonical codeword from any iterable of MIDI pitches.

    Duplicates collapse; the result is sorted ascending. Raises
    CodewordError for an empty set or out-of-range pitches.
    """
    cw = tuple(sorted(set(int(p) for p in pitches)))
    if not cw:
        raise CodewordError("codeword must contain at least one pitch")
    if cw[0] < PITCH_MIN or cw[-1] > PITCH_MAX:
        raise CodewordError(f"pitch out of MIDI range [0,127]: {cw}")
    return cw


def parse_codeword(text: str) -> Codeword:
    """Parse the text form ``60,64,67``.

    The interchange format is canonical: pitches must be strictly
    ascending, so round-tripping through text is the identity.
    """
    parts = text.strip().split(",")
    try:
        pitches = tuple(int(p) for p in parts)
    except ValueError:
        raise CodewordError(f"malformed codeword line: {text!r}") from None
    if not pitches:
        raise CodewordError(f"malformed codeword line: {text!r}")
    for p in pitches:
        if p < PITCH_MIN or p > PITCH_MAX:
            raise CodewordError(f"pitch out of MIDI range [0,127]: {text!r}")
    for a, b in zip(pitches, pitches[1:]):
        if b <= a:
            raise CodewordError(f"pitches must be strictly ascending: {text!r}")
    return pitches


def format_codeword(cw: Codeword) -> str:
    """Render a codeword in the text form used by sequence files."""
    return ",".join(str(p) for p in cw)


def transitions(seq: CodewordSequence) -> list[tuple[Codeword, Codeword]]:
    """Consecutive codeword pairs of a sequence, in order."""
    return list(zip(seq, seq[1:]))
