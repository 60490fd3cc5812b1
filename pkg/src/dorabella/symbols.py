"""Alphabets, symbol sequences and the Dorabella transcription grammar."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence as _Seq

from .errors import DataFormatError

START_SYMBOL = "<s>"

ORIENTATIONS = "ABCDEFGH"
SEMICIRCLES = (1, 2, 3)

_DORABELLA_TOKEN = re.compile(r"^([A-H])([1-3])$")


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct symbols. Index of a symbol never changes."""

    symbols: tuple[str, ...]
    name: str

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise ValueError(f"alphabet {self.name!r} needs at least 2 symbols")
        seen = set()
        for sym in self.symbols:
            if not sym or any(c.isspace() for c in sym):
                raise ValueError(f"invalid symbol {sym!r} in alphabet {self.name!r}")
            if sym == START_SYMBOL:
                raise ValueError(f"{START_SYMBOL!r} is reserved")
            if sym in seen:
                raise ValueError(f"duplicate symbol {sym!r} in alphabet {self.name!r}")
            seen.add(sym)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol) -> bool:
        return symbol in self._index

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise DataFormatError(
                f"symbol {symbol!r} is not in alphabet {self.name!r}"
            ) from None

    def encode(self, symbols: Iterable[str]) -> "Sequence":
        return Sequence(self, tuple(self.index(s) for s in symbols))


@dataclass(frozen=True)
class Sequence:
    """A list of symbol indices into one alphabet."""

    alphabet: Alphabet
    tokens: tuple[int, ...]

    def __post_init__(self):
        tokens = tuple(int(t) for t in self.tokens)
        size = len(self.alphabet)
        for t in tokens:
            if not 0 <= t < size:
                raise ValueError(f"token index {t} out of range for alphabet of size {size}")
        object.__setattr__(self, "tokens", tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def symbols(self) -> list[str]:
        return [self.alphabet.symbols[t] for t in self.tokens]

    def render(self) -> str:
        return " ".join(self.symbols())

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class DorabellaToken:
    orientation: str
    semicircles: int

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS or len(self.orientation) != 1:
            raise ValueError(f"bad orientation {self.orientation!r}")
        if self.semicircles not in SEMICIRCLES:
            raise ValueError(f"bad semicircle count {self.semicircles!r}")

    def __str__(self) -> str:
        return f"{self.orientation}{self.semicircles}"


def make_alphabet(symbols: _Seq[str], name: str) -> Alphabet:
    return Alphabet(tuple(symbols), name)


def dorabella_alphabet() -> Alphabet:
    """All 24 glyph classes, A1 A2 A3 B1 ... H3."""
    return Alphabet(
        tuple(f"{o}{n}" for o in ORIENTATIONS for n in SEMICIRCLES), "dorabella"
    )


# ascending pitch; F3..E6 with the gaps (F#, G#, C#, D#, ...) left out
MELODY_PITCHES = (
    "F3", "G3", "A3", "Bb3", "B3",
    "C4", "D4", "E4", "F4", "G4", "A4", "Bb4", "B4",
    "C5", "D5", "E5", "F5", "G5", "A5", "Bb5", "B5",
    "C6", "D6", "E6",
)


def melody_alphabet() -> Alphabet:
    return Alphabet(MELODY_PITCHES, "melody")


PITCH_CLASSES_8 = ("A", "B", "C", "D", "E", "F", "F#", "G")
DURATION_CLASSES = ("short", "quarter", "long")


def pitch_duration_alphabet() -> Alphabet:
    return Alphabet(
        tuple(f"{p}:{d}" for p in PITCH_CLASSES_8 for d in DURATION_CLASSES),
        "pitch-duration",
    )


def english_alphabet() -> Alphabet:
    return Alphabet(tuple("abcdefghijklmnopqrstuvwxyz"), "english")


def generic_alphabet(size: int, prefix: str = "s", name: str | None = None) -> Alphabet:
    return Alphabet(tuple(f"{prefix}{i}" for i in range(size)), name or f"{prefix}{size}")


def cipher_alphabet_for(plain: Alphabet) -> Alphabet:
    """Cipher-side alphabet of the same size, never equal to ``plain``."""
    size = len(plain)
    if size == 24 and plain.name != "dorabella":
        return dorabella_alphabet()
    if size == 26 and plain.name != "cipher-upper":
        return Alphabet(tuple("ABCDEFGHIJKLMNOPQRSTUVWXYZ"), "cipher-upper")
    return generic_alphabet(size, prefix="c", name=f"cipher{size}")


NAMED_ALPHABETS = {
    "dorabella": dorabella_alphabet,
    "melody": melody_alphabet,
    "pitch-duration": pitch_duration_alphabet,
    "english": english_alphabet,
}


def named_alphabet(name: str) -> Alphabet:
    try:
        return NAMED_ALPHABETS[name]()
    except KeyError:
        raise DataFormatError(
            f"unknown alphabet {name!r}; choose from {', '.join(NAMED_ALPHABETS)}"
        ) from None


def canonical_symbol(token: str) -> str:
    """Fold the unicode flat/sharp signs to the ASCII spelling."""
    return token.replace("♭", "b").replace("♯", "#")


def parse_dorabella_lines(text: str) -> list[list[DorabellaToken]]:
    lines = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        row = []
        for match in re.finditer(r"\S+", line):
            tok = match.group()
            m = _DORABELLA_TOKEN.match(tok)
            if m is None:
                raise DataFormatError(
                    f"line {lineno}, column {match.start() + 1}: "
                    f"malformed Dorabella token {tok!r} (expected [A-H][1-3])"
                )
            row.append(DorabellaToken(m.group(1), int(m.group(2))))
        if row:
            lines.append(row)
    return lines


def parse_dorabella(text: str) -> Sequence:
    alphabet = dorabella_alphabet()
    tokens = [str(t) for row in parse_dorabella_lines(text) for t in row]
    return alphabet.encode(tokens)


def parse_sequence_line(line: str, alphabet: Alphabet) -> Sequence:
    return alphabet.encode(canonical_symbol(t) for t in line.split())


def read_sequences(path, alphabet: Alphabet) -> list[Sequence]:
    """One sequence per non-blank line, whitespace separated tokens; ``#`` lines are skipped."""
    seqs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                seqs.append(parse_sequence_line(line, alphabet))
            except DataFormatError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    return seqs


def format_sequences(seqs: Iterable[Sequence]) -> str:
    return "".join(s.render() + "\n" for s in seqs)


def write_sequences(path, seqs: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_sequences(seqs))
