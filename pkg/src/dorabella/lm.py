"""Trigram symbol language model with interpolated modified Kneser-Ney smoothing.

Every sequence is padded with two start symbols and has no end symbol.  The
full conditional table ``P(w | u, v)`` is small for alphabets of a few dozen
symbols, so it is computed once at training time and kept in log form;
scoring a sequence is then a table lookup per token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError
from .symbols import START_SYMBOL, Alphabet, Sequence

ORDER = 3
FALLBACK_DISCOUNT = 0.5
FORMAT_HEADER = "# dorabella-ngram v1"


@dataclass(frozen=True)
class Discounts:
    """Discounts applied to n-grams seen once, twice, and three or more times."""

    d1: float
    d2: float
    d3: float
    fallback: bool = False

    def for_counts(self, counts: np.ndarray) -> np.ndarray:
        d = np.zeros(counts.shape, dtype=float)
        d[counts == 1] = self.d1
        d[counts == 2] = self.d2
        d[counts >= 3] = self.d3
        return d


def estimate_discounts(counts: np.ndarray) -> Discounts:
    """Closed-form modified KN discounts from count-of-counts.

    Falls back to a single absolute discount of 0.5 when the closed form is
    undefined (some n_k is zero) or leaves a discount outside (0, k).
    """
    values = counts[counts > 0]
    n = [int(np.count_nonzero(values == k)) for k in (1, 2, 3, 4)]
    n1, n2, n3, n4 = n
    if n1 and n2 and n3:
        y = n1 / (n1 + 2 * n2)
        d1 = 1 - 2 * y * n2 / n1
        d2 = 2 - 3 * y * n3 / n2
        d3 = 3 - 4 * y * n4 / n3
        if 0 < d1 < 1 and 0 < d2 < 2 and 0 < d3 < 3:
            return Discounts(d1, d2, d3)
    f = FALLBACK_DISCOUNT
    return Discounts(f, f, f, fallback=True)


def _interpolate(counts: np.ndarray, discounts: Discounts, lower: np.ndarray) -> np.ndarray:
    """One level of interpolated KN; ``counts[..., w]`` against ``lower[..., w]``.

    Contexts with no counts take the lower-order distribution unchanged.
    """
    totals = counts.sum(axis=-1, keepdims=True).astype(float)
    d = discounts.for_counts(counts)
    seen = totals > 0
    safe = np.where(seen, totals, 1.0)
    gamma = d.sum(axis=-1, keepdims=True) / safe
    probs = (counts - d) / safe + gamma * lower
    return np.where(seen, probs, lower)


@dataclass
class NgramModel:
    alphabet: Alphabet
    counts: np.ndarray  # trigram counts [u, v, w]; index V is the start symbol
    discounts: dict = field(default_factory=dict)  # order -> Discounts
    uniform: bool = False
    order: int = ORDER

    def __post_init__(self):
        V = len(self.alphabet)
        if self.counts.shape != (V + 1, V + 1, V):
            raise ValueError("count table does not match alphabet size")
        self.counts.setflags(write=False)
        if self.uniform:
            table = np.full((V + 1, V + 1, V), 1.0 / V)
        else:
            table = self._build_table()
        self.prob_table = table
        self.log_table = np.log(table)
        self.prob_table.setflags(write=False)
        self.log_table.setflags(write=False)

    @property
    def start(self) -> int:
        return len(self.alphabet)

    def continuation_counts(self):
        bigram = (self.counts > 0).sum(axis=0)  # [v, w]: distinct u before (v, w)
        unigram = (bigram > 0).sum(axis=0)  # [w]: distinct v before w
        return bigram, unigram

    def _build_table(self) -> np.ndarray:
        V = len(self.alphabet)
        bigram, unigram = self.continuation_counts()
        p1 = _interpolate(unigram, self.discounts[1], np.full(V, 1.0 / V))
        p2 = _interpolate(bigram, self.discounts[2], p1[None, :])
        return _interpolate(self.counts, self.discounts[3], p2[None, :, :])

    def _context(self, context) -> tuple[int, int]:
        ctx = [self.start if c is None else int(c) for c in context]
        if len(ctx) != 2:
            raise ValueError("a trigram context has exactly two entries")
        return ctx[0], ctx[1]

    def prob(self, context, symbol: int) -> float:
        """P(symbol | context); a context entry of ``None`` is the start symbol."""
        u, v = self._context(context)
        return float(self.prob_table[u, v, symbol])

    def distribution(self, context) -> np.ndarray:
        u, v = self._context(context)
        return self.prob_table[u, v]

    def log_prob(self, sequence: Sequence) -> float:
        return log_prob(self, sequence)


def count_trigrams(sequences, alphabet: Alphabet) -> np.ndarray:
    V = len(alphabet)
    counts = np.zeros((V + 1, V + 1, V), dtype=np.int64)
    for seq in sequences:
        if seq.alphabet != alphabet:
            raise DataFormatError(
                f"training sequence over {seq.alphabet.name!r}, model alphabet is {alphabet.name!r}"
            )
        padded = np.concatenate(([V, V], np.asarray(seq.tokens, dtype=np.int64)))
        if len(padded) > 2:
            np.add.at(counts, (padded[:-2], padded[1:-1], padded[2:]), 1)
    return counts


def train(sequences, alphabet: Alphabet, discounts: dict | None = None) -> NgramModel:
    """Count trigrams over start-padded sequences and fit modified KN.

    ``discounts`` (order -> Discounts) overrides estimation, e.g. to compare
    models with the discounts held fixed.
    """
    sequences = list(sequences)
    counts = count_trigrams(sequences, alphabet)
    total = int(counts.sum())
    if total < ORDER:
        raise DataFormatError(f"training corpus has {total} tokens; need at least {ORDER}")
    if discounts is None:
        bigram = (counts > 0).sum(axis=0)
        unigram = (bigram > 0).sum(axis=0)
        discounts = {
            1: estimate_discounts(unigram),
            2: estimate_discounts(bigram),
            3: estimate_discounts(counts),
        }
    return NgramModel(alphabet, counts, dict(discounts))


def uniform_model(alphabet: Alphabet) -> NgramModel:
    V = len(alphabet)
    return NgramModel(alphabet, np.zeros((V + 1, V + 1, V), dtype=np.int64), {}, uniform=True)


def _check_alphabet(model: NgramModel, sequence: Sequence):
    if sequence.alphabet != model.alphabet:
        raise DataFormatError(
            f"sequence over {sequence.alphabet.name!r}, model over {model.alphabet.name!r}"
        )


def padded_contexts(model: NgramModel, tokens: np.ndarray) -> np.ndarray:
    """Flat indices into the log table for each row of ``tokens`` (shape [..., N])."""
    V = len(model.alphabet)
    lead = tokens.shape[:-1]
    pad = np.full(lead + (2,), V, dtype=tokens.dtype)
    padded = np.concatenate((pad, tokens), axis=-1)
    return (padded[..., :-2] * (V + 1) + padded[..., 1:-1]) * V + padded[..., 2:]


def score_tokens(model: NgramModel, tokens: np.ndarray) -> np.ndarray:
    """Log probabilities of many equal-length token rows at once.

    This is the only summation path; ``log_prob`` and the solver both use it
    so their scores agree bit for bit.
    """
    flat = model.log_table.reshape(-1)
    return flat[padded_contexts(model, tokens)].sum(axis=-1)


def log_prob(model: NgramModel, sequence: Sequence) -> float:
    """Natural-log probability of one sequence, with fresh start padding."""
    _check_alphabet(model, sequence)
    if len(sequence) == 0:
        raise ValueError("cannot score an empty sequence")
    tokens = np.asarray(sequence.tokens, dtype=np.int64)[None, :]
    return float(score_tokens(model, tokens)[0])


def perplexity(model: NgramModel, sequences) -> float:
    sequences = list(sequences)
    n = sum(len(s) for s in sequences)
    if not sequences or n == 0:
        raise ValueError("perplexity needs at least one token")
    total = math.fsum(log_prob(model, s) for s in sequences if len(s))
    return math.exp(-total / n)


# -- serialization ---------------------------------------------------------

def _symbol(model: NgramModel, i: int) -> str:
    return START_SYMBOL if i == model.start else model.alphabet.symbols[i]


def dumps(model: NgramModel) -> str:
    lines = [FORMAT_HEADER, f"order {model.order}"]
    lines.append("alphabet " + " ".join([model.alphabet.name, *model.alphabet.symbols]))
    if model.uniform:
        lines.append("uniform")
    else:
        for order in (1, 2, 3):
            d = model.discounts[order]
            tag = " fallback" if d.fallback else ""
            lines.append(f"discounts {order} {d.d1!r} {d.d2!r} {d.d3!r}{tag}")
    nz = np.argwhere(model.counts > 0)
    lines.append(f"counts {len(nz)}")
    for u, v, w in nz:  # argwhere is row-major, so lines come out sorted
        lines.append(f"{_symbol(model, u)} {_symbol(model, v)} {_symbol(model, w)} {model.counts[u, v, w]}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> NgramModel:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise DataFormatError("not a dorabella n-gram model file (bad header)")
    alphabet = None
    discounts = {}
    uniform = False
    rows = []
    it = iter(enumerate(lines[1:], start=2))
    for lineno, line in it:
        fields = line.split()
        if not fields or fields[0].startswith("#"):
            continue
        head = fields[0]
        try:
            if head == "order":
                if int(fields[1]) != ORDER:
                    raise DataFormatError(f"only order {ORDER} models are supported")
            elif head == "alphabet":
                alphabet = Alphabet(tuple(fields[2:]), fields[1])
            elif head == "uniform":
                uniform = True
            elif head == "discounts":
                order = int(fields[1])
                d1, d2, d3 = (float(x) for x in fields[2:5])
                discounts[order] = Discounts(d1, d2, d3, fallback="fallback" in fields[5:])
            elif head == "counts":
                expected = int(fields[1])
                for _ in range(expected):
                    lineno, line = next(it)
                    rows.append((lineno, line.split()))
            else:
                raise DataFormatError(f"unknown record {head!r}")
        except (IndexError, ValueError, StopIteration) as exc:
            raise DataFormatError(f"model line {lineno}: {exc}") from None
    if alphabet is None:
        raise DataFormatError("model file has no alphabet record")
    V = len(alphabet)
    counts = np.zeros((V + 1, V + 1, V), dtype=np.int64)

    def idx(sym):
        return V if sym == START_SYMBOL else alphabet.index(sym)

    for lineno, fields in rows:
        if len(fields) != 4:
            raise DataFormatError(f"model line {lineno}: expected 'u v w count'")
        counts[idx(fields[0]), idx(fields[1]), idx(fields[2])] = int(fields[3])
    if not uniform and sorted(discounts) != [1, 2, 3]:
        raise DataFormatError("model file needs discounts for orders 1, 2 and 3")
    return NgramModel(alphabet, counts, discounts, uniform=uniform)


def save(model: NgramModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps(model))


def load(path) -> NgramModel:
    with open(path, encoding="utf-8") as f:
        return loads(f.read())

