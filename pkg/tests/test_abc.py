import re

import pytest

from dorabella.abc import abc_note, to_abc
from dorabella.errors import DataFormatError
from dorabella.symbols import melody_alphabet

NOTE = re.compile(r"^([_=^]?)([A-Ga-g])([,']*)$")


def parse_abc(text):
    """Minimal reader for what ``to_abc`` writes: returns (headers, bars of pitch names)."""
    lines = text.splitlines()
    headers = {}
    body = []
    for line in lines:
        if line.startswith("%"):
            continue  # comment
        m = re.match(r"^([A-Z]):(.*)$", line)
        if m and not body:
            headers[m.group(1)] = m.group(2)
        else:
            body.append(line)
    bars = []
    for chunk in re.split(r"\|\]?", " ".join(body)):
        tokens = chunk.split()
        if not tokens:
            continue
        bar, state = [], {}
        for tok in tokens:
            m = NOTE.match(tok)
            assert m, f"bad note {tok!r}"
            mark, letter, octs = m.groups()
            octave = 5 if letter.islower() else 4
            octave += octs.count("'") - octs.count(",")
            slot = (letter.upper(), octave)
            if mark:
                state[slot] = {"_": "b", "^": "#", "=": ""}[mark]
            bar.append(f"{letter.upper()}{state.get(slot, '')}{octave}")
        bars.append(bar)
    return headers, bars


@pytest.mark.parametrize("pitch, expected", [
    (("C", 4), "C"), (("C", 5), "c"), (("E", 6), "e'"), (("B", 3), "B,"), (("F", 3), "F,"),
])
def test_abc_note(pitch, expected):
    assert abc_note(*pitch) == expected


def test_header_and_meter():
    text = to_abc(["C4", "D4", "E4", "F4", "G4"], title="t")
    assert text.splitlines()[:5] == ["X:1", "T:t", "M:4/4", "L:1/4", "K:C"]
    assert text.splitlines()[5] == "C D E F | G |]"


def test_accidentals_reset_per_bar():
    text = to_abc(["Bb4", "B4", "Bb4", "C4", "Bb4", "Bb3", "B4"])
    body = text.splitlines()[5]
    assert body == "_B =B _B C | _B _B, =B |]"


def test_round_trip_every_pitch():
    pitches = list(melody_alphabet().symbols) * 2
    headers, bars = parse_abc(to_abc(pitches))
    assert headers["M"] == "4/4" and headers["L"] == "1/4" and headers["K"] == "C"
    assert [p for bar in bars for p in bar] == pitches
    assert all(len(bar) <= 4 for bar in bars)


def test_rejects_unknown_pitch():
    with pytest.raises(DataFormatError):
        to_abc(["H4"])
