"""Monoalphabetic substitution keys."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import DataFormatError
from .symbols import Alphabet, Sequence, cipher_alphabet_for


@dataclass(frozen=True)
class Key:
    """``mapping[i]`` is the cipher index that plaintext symbol ``i`` becomes."""

    plain_alphabet: Alphabet
    cipher_alphabet: Alphabet
    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(m) for m in self.mapping)
        size = len(self.plain_alphabet)
        if len(self.cipher_alphabet) != size:
            raise ValueError("plain and cipher alphabets differ in size")
        if sorted(mapping) != list(range(size)):
            raise ValueError("key mapping is not a bijection")
        object.__setattr__(self, "mapping", mapping)

    def __len__(self) -> int:
        return len(self.mapping)

    def as_dict(self) -> dict[str, str]:
        return {
            self.plain_alphabet.symbols[i]: self.cipher_alphabet.symbols[c]
            for i, c in enumerate(self.mapping)
        }

    def swapped(self, i: int, j: int) -> "Key":
        m = list(self.mapping)
        m[i], m[j] = m[j], m[i]
        return Key(self.plain_alphabet, self.cipher_alphabet, tuple(m))


def identity_key(plain: Alphabet, cipher: Alphabet | None = None) -> Key:
    cipher = plain if cipher is None else cipher
    return Key(plain, cipher, tuple(range(len(plain))))


def key_from_pairs(pairs: dict[str, str], plain: Alphabet, cipher: Alphabet) -> Key:
    """Build a key from plain->cipher symbol pairs.

    Symbols left out are paired off in alphabet order, so a partial
    correspondence (e.g. one read off a single text) still yields a full key.
    """
    mapping: list[int | None] = [None] * len(plain)
    used = set()
    for p, c in pairs.items():
        pi, ci = plain.index(p), cipher.index(c)
        if mapping[pi] is not None or ci in used:
            raise DataFormatError(f"pair {p}->{c} conflicts with an earlier pair")
        mapping[pi] = ci
        used.add(ci)
    spare = iter(c for c in range(len(cipher)) if c not in used)
    return Key(plain, cipher, tuple(m if m is not None else next(spare) for m in mapping))


def encipher(key: Key, plaintext: Sequence) -> Sequence:
    if plaintext.alphabet != key.plain_alphabet:
        raise DataFormatError(
            f"plaintext over {plaintext.alphabet.name!r}, key expects {key.plain_alphabet.name!r}"
        )
    m = key.mapping
    return Sequence(key.cipher_alphabet, tuple(m[t] for t in plaintext.tokens))


def invert(key: Key) -> Key:
    inverse = [0] * len(key)
    for p, c in enumerate(key.mapping):
        inverse[c] = p
    return Key(key.cipher_alphabet, key.plain_alphabet, tuple(inverse))


def decipher(ciphertext: Sequence, key: Key) -> Sequence:
    """Recover plaintext from ``ciphertext`` given the enciphering key."""
    return encipher(invert(key), ciphertext)


def compose(first: Key, second: Key) -> Key:
    """The key equivalent to enciphering with ``first`` and then ``second``."""
    if first.cipher_alphabet != second.plain_alphabet:
        raise DataFormatError("keys cannot be chained: alphabets do not line up")
    return Key(
        first.plain_alphabet,
        second.cipher_alphabet,
        tuple(second.mapping[c] for c in first.mapping),
    )


def random_key(alphabet: Alphabet, seed: int, cipher_alphabet: Alphabet | None = None) -> Key:
    """Uniform random key; ``random.shuffle`` is a Fisher-Yates shuffle."""
    if cipher_alphabet is None:
        cipher_alphabet = alphabet
    mapping = list(range(len(alphabet)))
    random.Random(seed).shuffle(mapping)
    return Key(alphabet, cipher_alphabet, tuple(mapping))


def format_key(key: Key) -> str:
    """Two aligned rows: plaintext symbols above their cipher symbols."""
    plain = key.plain_alphabet.symbols
    cipher = [key.cipher_alphabet.symbols[c] for c in key.mapping]
    widths = [max(len(p), len(c)) for p, c in zip(plain, cipher)]
    top = " ".join(p.ljust(w) for p, w in zip(plain, widths)).rstrip()
    bottom = " ".join(c.ljust(w) for c, w in zip(cipher, widths)).rstrip()
    return f"{top}\n{bottom}\n"


def parse_key(text: str, plain: Alphabet, cipher: Alphabet | None = None) -> Key:
    rows = [line.split() for line in text.splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    if len(rows) != 2 or len(rows[0]) != len(rows[1]):
        raise DataFormatError("a key file has two rows of equal length (plain, cipher)")
    if cipher is None:
        cipher = cipher_alphabet_for(plain)
    pairs = dict(zip(rows[0], rows[1]))
    if len(pairs) != len(rows[0]) or len(rows[0]) != len(plain):
        raise DataFormatError("key rows must list every plaintext symbol exactly once")
    return key_from_pairs(pairs, plain, cipher)
