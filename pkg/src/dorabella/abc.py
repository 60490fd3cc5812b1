"""ABC notation for pitch sequences in uniform quarter notes."""

from __future__ import annotations

import re

from .errors import DataFormatError
from .symbols import canonical_symbol

_PITCH = re.compile(r"^([A-G])(#|b)?(\d)$")
_MARK = {"#": "^", "b": "_", None: "="}


def abc_note(letter: str, octave: int) -> str:
    """Note letter with octave marks; C4 is ``C``, C5 is ``c``."""
    if octave >= 5:
        return letter.lower() + "'" * (octave - 5)
    return letter + "," * (4 - octave)


def to_abc(pitches, title: str = "Untitled", index: int = 1,
           beats_per_bar: int = 4, bars_per_line: int = 4) -> str:
    """Render pitch names (``C4``, ``Bb4``, ``F#3``...) as an ABC tune in C major.

    Every note is a quarter note (``L:1/4``).  Accidentals hold until the
    bar line, so a natural sign is written when a note returns to natural
    within the same bar.
    """
    header = [f"X:{index}", f"T:{title}", f"M:{beats_per_bar}/4", "L:1/4", "K:C"]
    bars = []
    bar: list[str] = []
    state: dict[tuple[str, int], str | None] = {}
    for name in pitches:
        m = _PITCH.match(canonical_symbol(name))
        if m is None:
            raise DataFormatError(f"cannot write {name!r} as ABC")
        letter, accidental, octave = m.group(1), m.group(2), int(m.group(3))
        slot = (letter, octave)
        mark = ""
        if state.get(slot) != accidental:
            mark = _MARK[accidental]
            state[slot] = accidental
        bar.append(mark + abc_note(letter, octave))
        if len(bar) == beats_per_bar:
            bars.append(" ".join(bar))
            bar, state = [], {}
    if bar:
        bars.append(" ".join(bar))
    lines = []
    for i in range(0, len(bars), bars_per_line):
        chunk = bars[i:i + bars_per_line]
        last = i + bars_per_line >= len(bars)
        lines.append(" | ".join(chunk) + (" |]" if last else " |"))
    return "\n".join(header + lines) + "\n"
