"""Corpus ingestion and normalization.

Three source kinds are supported:

* note-event files (pitch number + rational duration, with a declared key),
  reduced to the 24-symbol pitch/duration alphabet;
* melody files (one melody of pitch names per line), reduced to the
  24-pitch melody alphabet;
* raw English text, reduced to 26 lowercase letters.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import DataFormatError
from .symbols import (
    MELODY_PITCHES,
    Alphabet,
    Sequence,
    canonical_symbol,
    english_alphabet,
    melody_alphabet,
    pitch_duration_alphabet,
    read_sequences,
)


class PitchRangeError(DataFormatError):
    pass


NOTE_OFFSETS = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
PITCH_CLASS_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")

# pitch class -> member of {A, B, C, D, E, F, F#, G}; nearest, ties go down
PITCH_CLASS_TO_8 = {
    0: "C", 1: "C", 2: "D", 3: "D", 4: "E", 5: "F",
    6: "F#", 7: "G", 8: "G", 9: "A", 10: "A", 11: "B",
}

QUARTER = Fraction(1, 4)

_PITCH_NAME = re.compile(r"^([A-Ga-g])([#b]*)(-?\d+)$")


@dataclass(frozen=True)
class NoteEvent:
    pitch: int
    duration: Fraction
    onset: Fraction | None = None

    def __post_init__(self):
        if not 0 <= self.pitch <= 127:
            raise DataFormatError(f"pitch {self.pitch} outside 0..127")
        dur = Fraction(self.duration)
        if dur <= 0:
            raise DataFormatError(f"duration {dur} must be positive")
        object.__setattr__(self, "duration", dur)


@dataclass(frozen=True)
class CorpusSplit:
    train: list
    test: list
    seed: int


def parse_pitch_class(name: str) -> int:
    name = canonical_symbol(name.strip())
    m = re.fullmatch(r"([A-Ga-g])([#b]*)", name)
    if m is None:
        raise DataFormatError(f"bad pitch class {name!r}")
    offset = NOTE_OFFSETS[m.group(1).upper()]
    offset += m.group(2).count("#") - m.group(2).count("b")
    return offset % 12


def pitch_number(name: str) -> int:
    """MIDI number for a pitch name such as ``C4``, ``Bb3`` or ``F#5`` (C4 = 60)."""
    m = _PITCH_NAME.match(canonical_symbol(name))
    if m is None:
        raise DataFormatError(f"bad pitch name {name!r}")
    letter, accidentals, octave = m.groups()
    pc = NOTE_OFFSETS[letter.upper()] + accidentals.count("#") - accidentals.count("b")
    return 12 * (int(octave) + 1) + pc


def classify_duration(duration: Fraction) -> str:
    if duration < QUARTER:
        return "short"
    if duration == QUARTER:
        return "quarter"
    return "long"


def normalize_pitch_duration(events, declared_key: int) -> Sequence:
    """Transpose to C, fold to one octave, snap to 8 pitch classes, bucket durations."""
    events = list(events)
    if not events:
        raise DataFormatError("no note events to normalize")
    if not 0 <= declared_key <= 11:
        raise DataFormatError(f"declared key {declared_key} is not a pitch class 0..11")
    if any(e.onset is not None for e in events):
        if any(e.onset is None for e in events):
            raise DataFormatError("onsets must be given for all events or none")
        events = sorted(events, key=lambda e: (e.onset, e.pitch))
    alphabet = pitch_duration_alphabet()
    symbols = []
    for e in events:
        pc = (e.pitch - declared_key) % 12
        symbols.append(f"{PITCH_CLASS_TO_8[pc]}:{classify_duration(e.duration)}")
    return alphabet.encode(symbols)


_MELODY_NUMBERS = [pitch_number(p) for p in MELODY_PITCHES]
MELODY_LOW, MELODY_HIGH = min(_MELODY_NUMBERS), max(_MELODY_NUMBERS)


def snap_to_melody(number: int) -> str:
    if not MELODY_LOW <= number <= MELODY_HIGH:
        raise PitchRangeError(f"pitch {number} outside F3..E6")
    # min() keeps the first of equal distances; candidates are ascending
    best = min(range(len(_MELODY_NUMBERS)), key=lambda i: abs(_MELODY_NUMBERS[i] - number))
    return MELODY_PITCHES[best]


def normalize_melody(pitches, transpose: int = 0) -> Sequence:
    """Map pitch names onto the melody alphabet.

    ``transpose`` is subtracted from every pitch first (use the source key's
    pitch class to bring a melody to C).  Pitches between alphabet members
    snap to the nearer one, the lower one on a tie.
    """
    symbols = []
    for p in pitches:
        number = pitch_number(p) - transpose
        try:
            symbols.append(snap_to_melody(number))
        except PitchRangeError:
            raise PitchRangeError(
                f"pitch {p!r} is outside the melody range F3..E6"
            ) from None
    return melody_alphabet().encode(symbols)


def prepare_english(text: str) -> Sequence:
    letters = [c.lower() for c in text if ("a" <= c <= "z") or ("A" <= c <= "Z")]
    return english_alphabet().encode(letters)


def sample_excerpts(sequences, count: int, length: int, seed: int) -> list[Sequence]:
    """Draw ``count`` contiguous spans of ``length`` tokens, no start position twice."""
    if count < 1 or length < 1:
        raise ValueError("count and length must be positive")
    starts = [
        (src, pos)
        for src, seq in enumerate(sequences)
        for pos in range(len(seq) - length + 1)
    ]
    if len(starts) < count:
        raise DataFormatError(
            f"not enough material: {len(starts)} excerpts of length {length} "
            f"available, {count} requested"
        )
    picked = random.Random(seed).sample(starts, count)
    out = []
    for src, pos in picked:
        seq = sequences[src]
        out.append(Sequence(seq.alphabet, seq.tokens[pos:pos + length]))
    return out


def split_corpus(sequences, train_count: int, seed: int) -> CorpusSplit:
    n = len(sequences)
    if not 1 <= train_count < n:
        raise DataFormatError(
            f"train_count must be between 1 and {n - 1} for a pool of {n} sequences"
        )
    alphabets = {s.alphabet for s in sequences}
    if len(alphabets) != 1:
        raise DataFormatError("all sequences in a corpus must share one alphabet")
    train_idx = random.Random(seed).sample(range(n), train_count)
    chosen = set(train_idx)
    train = [sequences[i] for i in train_idx]
    test = [s for i, s in enumerate(sequences) if i not in chosen]
    return CorpusSplit(train, test, seed)


# -- file readers ----------------------------------------------------------

def parse_note_events(text: str, source: str = "<notes>") -> tuple[int, list[NoteEvent]]:
    """Parse a note-event file: a ``key: <pitch class>`` header then ``pitch duration [onset]`` lines.

    Blank lines, ``#`` comment lines and rest lines (``r``/``rest`` as the first
    field) are skipped.
    """
    key = None
    events = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        if line.lower().startswith("key:"):
            if key is not None:
                raise DataFormatError(f"{where}: duplicate key header")
            try:
                key = parse_pitch_class(line.split(":", 1)[1])
            except DataFormatError as exc:
                raise DataFormatError(f"{where}: {exc}") from None
            continue
        fields = line.split()
        if fields[0].lower() in ("r", "rest"):
            continue
        if key is None:
            raise DataFormatError(f"{where}: note before the 'key:' header")
        if len(fields) not in (2, 3):
            raise DataFormatError(f"{where}: expected 'pitch duration [onset]', got {raw!r}")
        try:
            pitch = int(fields[0])
            duration = Fraction(fields[1])
            onset = Fraction(fields[2]) if len(fields) == 3 else None
            events.append(NoteEvent(pitch, duration, onset))
        except (ValueError, ZeroDivisionError) as exc:
            raise DataFormatError(f"{where}: {exc}") from None
    if key is None:
        raise DataFormatError(f"{source}: missing 'key:' header")
    return key, events


def read_note_file(path) -> Sequence:
    key, events = parse_note_events(Path(path).read_text(encoding="utf-8"), str(path))
    return normalize_pitch_duration(events, key)


def read_melody_file(path) -> list[Sequence]:
    seqs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                seqs.append(normalize_melody(line.split()))
            except DataFormatError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    return seqs


def read_english_file(path) -> list[Sequence]:
    """Each blank-line separated paragraph becomes one source sequence."""
    text = Path(path).read_text(encoding="utf-8")
    seqs = [prepare_english(p) for p in re.split(r"\n\s*\n", text)]
    return [s for s in seqs if len(s)]


def note_files(path) -> list[Path]:
    path = Path(path)
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))
    return [path]


def load_corpus(kind: str, path, alphabet: Alphabet | None = None) -> list[Sequence]:
    """Load a corpus of the given kind: ``melody``, ``notes``, ``english`` or ``seq``."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"corpus path {path} does not exist")
    if kind == "melody":
        seqs = read_melody_file(path)
    elif kind == "notes":
        seqs = [read_note_file(p) for p in note_files(path)]
    elif kind == "english":
        seqs = read_english_file(path)
    elif kind == "seq":
        if alphabet is None:
            raise DataFormatError("'seq' corpora need an explicit alphabet")
        seqs = read_sequences(path, alphabet)
    else:
        raise DataFormatError(f"unknown corpus kind {kind!r}")
    if not seqs:
        raise DataFormatError(f"corpus {path} is empty")
    return seqs
