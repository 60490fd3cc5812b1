"""Steepest-ascent hill climbing over substitution keys, with random restarts.

Each restart starts from a random key and repeatedly tries every swap of two
key entries, moving to the swap whose decipherment scores best under the
trigram model.  A restart ends when no swap improves the score or when the
iteration cap is hit.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cipher import Key, decipher, encipher, random_key
from .corpus import CorpusSplit, sample_excerpts
from .errors import DataFormatError, InvariantError
from .lm import ORDER, NgramModel, log_prob, score_tokens
from .symbols import Sequence, cipher_alphabet_for


@dataclass(frozen=True)
class SolverConfig:
    seed: int
    iterations: int = 4000
    restarts: int = 90

    def __post_init__(self):
        if self.iterations < 1 or self.restarts < 1:
            raise ValueError("iterations and restarts must be at least 1")


@dataclass(frozen=True)
class RestartTrace:
    restart: int
    iterations: int  # accepted moves
    scores: tuple[float, ...]  # initial score, then the score after each accepted move
    final_score: float
    key: Key


@dataclass(frozen=True)
class SolveResult:
    best_plaintext: Sequence
    best_key: Key
    best_log_prob: float
    best_restart: int
    restart_traces: tuple[RestartTrace, ...] = field(repr=False)


def swap_pairs(size: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(size), 2))


def _swap_tables(size: int) -> np.ndarray:
    """Row p relabels symbols so that the two symbols of swap p trade places."""
    pairs = swap_pairs(size)
    table = np.tile(np.arange(size), (len(pairs), 1))
    for p, (i, j) in enumerate(pairs):
        table[p, i], table[p, j] = j, i
    return table


def _climb(cipher: np.ndarray, model: NgramModel, ciphertext: Sequence,
           config: SolverConfig, restart: int, tables: np.ndarray,
           pairs) -> RestartTrace:
    key = random_key(model.alphabet, config.seed + restart, ciphertext.alphabet)
    mapping = list(key.mapping)
    inverse = np.empty(len(mapping), dtype=np.int64)
    inverse[mapping] = np.arange(len(mapping))
    plain = inverse[cipher]
    score = float(score_tokens(model, plain[None, :])[0])
    scores = [score]
    for _ in range(config.iterations):
        candidates = tables[:, plain]
        cand_scores = score_tokens(model, candidates)
        best = int(np.argmax(cand_scores))  # first maximum = lowest (i, j)
        if not cand_scores[best] > score:
            break
        i, j = pairs[best]
        mapping[i], mapping[j] = mapping[j], mapping[i]
        plain = candidates[best]
        score = float(cand_scores[best])
        scores.append(score)
    final_key = Key(model.alphabet, ciphertext.alphabet, tuple(mapping))
    return RestartTrace(restart, len(scores) - 1, tuple(scores), score, final_key)


def solve(ciphertext: Sequence, model: NgramModel, config: SolverConfig,
          jobs: int = 1) -> SolveResult:
    """Search for the key whose decipherment the model likes best.

    Restart ``r`` draws its initial key from seed ``config.seed + r``, so the
    result does not depend on ``jobs``.
    """
    V = len(model.alphabet)
    if len(ciphertext.alphabet) != V:
        raise DataFormatError(
            f"cipher alphabet has {len(ciphertext.alphabet)} symbols, model has {V}"
        )
    if len(ciphertext) < ORDER:
        raise DataFormatError(f"ciphertext needs at least {ORDER} tokens")
    cipher = np.asarray(ciphertext.tokens, dtype=np.int64)
    tables = _swap_tables(V)
    pairs = swap_pairs(V)

    def run(r):
        return _climb(cipher, model, ciphertext, config, r, tables, pairs)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            traces = tuple(pool.map(run, range(config.restarts)))
    else:
        traces = tuple(run(r) for r in range(config.restarts))

    # max score, earliest restart on ties
    best = max(traces, key=lambda t: (t.final_score, -t.restart))
    plaintext = decipher(ciphertext, best.key)
    score = log_prob(model, plaintext)
    if score != best.final_score:
        raise InvariantError(
            f"batched score {best.final_score!r} != sequence score {score!r}"
        )
    return SolveResult(plaintext, best.key, score, best.restart, traces)


# -- metrics ---------------------------------------------------------------

def key_accuracy(found: Key, truth: Key) -> float:
    """Fraction of the whole alphabet that ``found`` maps the same way as ``truth``."""
    if (found.plain_alphabet, found.cipher_alphabet) != (truth.plain_alphabet, truth.cipher_alphabet):
        raise DataFormatError("keys are over different alphabets")
    same = sum(a == b for a, b in zip(found.mapping, truth.mapping))
    return same / len(truth)


def decipherment_accuracy(found_plaintext: Sequence, true_plaintext: Sequence) -> float:
    if len(found_plaintext) != len(true_plaintext):
        raise DataFormatError(
            f"length mismatch: {len(found_plaintext)} vs {len(true_plaintext)}"
        )
    if found_plaintext.alphabet != true_plaintext.alphabet:
        raise DataFormatError("sequences are over different alphabets")
    if not len(true_plaintext):
        raise ValueError("empty sequences")
    same = sum(a == b for a, b in zip(found_plaintext.tokens, true_plaintext.tokens))
    return same / len(true_plaintext)


# -- experiments -----------------------------------------------------------

KEY_STREAM, SOLVE_STREAM, SAMPLE_STREAM = 1, 2, 3


def derive_seed(seed: int, stream: int, index: int = 0) -> int:
    """Independent 32-bit seed for one (stream, index) slot of an experiment."""
    state = np.random.SeedSequence([seed, stream, index]).generate_state(1)
    return int(state[0])


@dataclass(frozen=True)
class CipherResult:
    cipher_id: int
    key_accuracy: float
    decipherment_accuracy: float
    best_log_prob: float

    @property
    def solved(self) -> bool:
        return self.decipherment_accuracy == 1.0


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[CipherResult, ...]
    cipher_length: int

    @property
    def mean_key_accuracy(self) -> float:
        return math.fsum(r.key_accuracy for r in self.rows) / len(self.rows)

    @property
    def mean_decipherment_accuracy(self) -> float:
        return math.fsum(r.decipherment_accuracy for r in self.rows) / len(self.rows)

    @property
    def fraction_solved(self) -> float:
        return sum(r.solved for r in self.rows) / len(self.rows)

    def lines(self) -> list[str]:
        out = ["id\tkey_acc\tdec_acc\tsolved_exactly\tbest_log_prob"]
        for r in self.rows:
            out.append(
                f"{r.cipher_id}\t{r.key_accuracy:.6f}\t{r.decipherment_accuracy:.6f}"
                f"\t{int(r.solved)}\t{r.best_log_prob:.10f}"
            )
        out.append(
            f"# summary ciphers={len(self.rows)} length={self.cipher_length} "
            f"key_acc={100 * self.mean_key_accuracy:.1f}% "
            f"dec_acc={100 * self.mean_decipherment_accuracy:.1f}% "
            f"solved={100 * self.fraction_solved:.1f}%"
        )
        return out


def run_experiment(split: CorpusSplit, model: NgramModel, cipher_count: int,
                   cipher_length: int, config: SolverConfig,
                   test_from: str = "heldout", jobs: int = 1) -> ExperimentReport:
    """Encipher sampled plaintexts with random keys, solve them, and score the result.

    Every random choice is derived from ``config.seed``.
    """
    if test_from not in ("heldout", "train"):
        raise ValueError("test_from is 'heldout' or 'train'")
    pool = split.test if test_from == "heldout" else split.train
    plaintexts = sample_excerpts(
        pool, cipher_count, cipher_length, derive_seed(config.seed, SAMPLE_STREAM)
    )
    cipher_alphabet = cipher_alphabet_for(model.alphabet)
    rows = []
    for i, plain in enumerate(plaintexts):
        truth = random_key(plain.alphabet, derive_seed(config.seed, KEY_STREAM, i), cipher_alphabet)
        ciphertext = encipher(truth, plain)
        sub = SolverConfig(derive_seed(config.seed, SOLVE_STREAM, i), config.iterations, config.restarts)
        result = solve(ciphertext, model, sub, jobs=jobs)
        rows.append(CipherResult(
            i,
            key_accuracy(result.best_key, truth),
            decipherment_accuracy(result.best_plaintext, plain),
            result.best_log_prob,
        ))
    return ExperimentReport(tuple(rows), cipher_length)
