"""Synthetic corpora for tests and desk-scale experiments.

``markov_corpus`` draws from a second-order Markov chain whose mean
conditional entropy is calibrated to a target number of bits.
``melody_corpus`` draws step-wise melodies over the melody alphabet.
"""

from __future__ import annotations

import math

import numpy as np

from .symbols import Alphabet, Sequence, melody_alphabet


def entropy_bits(p: np.ndarray) -> np.ndarray:
    """Entropy in bits along the last axis."""
    logs = np.log2(np.where(p > 0, p, 1.0))
    return -(p * logs).sum(axis=-1)


def zipf_weights(size: int, skew: float) -> np.ndarray:
    w = 1.0 / np.arange(1, size + 1) ** skew
    return w / w.sum()


class MarkovSource:
    """Second-order chain with a known mean conditional entropy.

    ``P(w | u, v)`` is proportional to ``zipf(w) * exp(-beta * rank_uv(w))``
    where ``rank_uv`` is a random permutation per context.  ``skew`` shapes
    the symbol frequencies (0 = flat); ``beta`` is solved by bisection so the
    conditional entropy averaged over contexts equals ``bits``.
    """

    def __init__(self, alphabet: Alphabet, bits: float, seed: int, skew: float = 1.0):
        V = len(alphabet)
        base = zipf_weights(V, skew)
        ceiling = float(entropy_bits(base))
        if not 0 < bits < ceiling:
            raise ValueError(f"entropy must lie in (0, {ceiling:.4f}) bits for skew {skew}")
        rng = np.random.default_rng(seed)
        ranks = np.stack([rng.permutation(V) for _ in range((V + 1) ** 2)])
        ranks = ranks.reshape(V + 1, V + 1, V)

        def table(beta):
            w = base * np.exp(-beta * ranks)
            return w / w.sum(axis=-1, keepdims=True)

        lo, hi = 0.0, 1.0
        while entropy_bits(table(hi)).mean() > bits:
            hi *= 2
        for _ in range(200):
            mid = (lo + hi) / 2
            if entropy_bits(table(mid)).mean() > bits:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13:
                break
        self.alphabet = alphabet
        self.bits = bits
        self.skew = skew
        self.beta = (lo + hi) / 2
        self.table = table(self.beta)
        self._cdf = np.cumsum(self.table, axis=-1)

    def mean_entropy(self) -> float:
        return float(entropy_bits(self.table).mean())

    def sample(self, length: int, rng: np.random.Generator) -> Sequence:
        V = len(self.alphabet)
        u = v = V
        out = []
        for x in rng.random(length):
            w = min(int(np.searchsorted(self._cdf[u, v], x, side="right")), V - 1)
            out.append(w)
            u, v = v, w
        return Sequence(self.alphabet, tuple(out))

    def log2_prob(self, seq: Sequence) -> float:
        V = len(self.alphabet)
        u = v = V
        total = 0.0
        for w in seq.tokens:
            total += math.log2(self.table[u, v, w])
            u, v = v, w
        return total


def markov_corpus(alphabet: Alphabet, bits: float, count: int, length: int,
                  seed: int, source_seed: int | None = None,
                  skew: float = 1.0) -> list[Sequence]:
    """``count`` sequences of ``length`` tokens with ``bits`` of conditional entropy per token.

    ``source_seed`` fixes the chain itself; pass the same value to draw
    training and test material from one source.
    """
    source = MarkovSource(alphabet, bits, seed if source_seed is None else source_seed, skew)
    rng = np.random.default_rng([seed, 1])
    return [source.sample(length, rng) for _ in range(count)]


STEP_WEIGHTS = {0: 0.08, 1: 0.30, -1: 0.34, 2: 0.09, -2: 0.09, 3: 0.03, -3: 0.03,
                4: 0.02, -4: 0.02}


def melody_corpus(count: int, seed: int, min_length: int = 20, max_length: int = 60) -> list[Sequence]:
    """Step-wise melodies that start and end near the middle of the range, chant-like."""
    alphabet = melody_alphabet()
    # B-flats are rare in the source style; walk on the naturals and flatten B now and then
    naturals = [i for i, s in enumerate(alphabet.symbols) if "b" not in s]
    steps = np.array(list(STEP_WEIGHTS))
    probs = np.array(list(STEP_WEIGHTS.values()))
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    home = naturals.index(alphabet.index("D4"))
    out = []
    for _ in range(count):
        n = int(rng.integers(min_length, max_length + 1))
        pos = home + int(rng.integers(0, 5))
        tokens = []
        for _ in range(n):
            pos = int(np.clip(pos + rng.choice(steps, p=probs), 0, len(naturals) - 1))
            # drift back toward the home register
            if abs(pos - home) > 6 and rng.random() < 0.5:
                pos += -1 if pos > home else 1
            sym = naturals[pos]
            name = alphabet.symbols[sym]
            if name.startswith("B") and rng.random() < 0.25:
                sym = alphabet.index("Bb" + name[1:])
            tokens.append(sym)
        out.append(Sequence(alphabet, tuple(tokens)))
    return out
