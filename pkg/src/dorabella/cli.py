"""Command-line front end.

Every command that draws random numbers requires ``--seed``.  Every output
file ends with a manifest line recording the command, its parameters and
the SHA-256 of each input, so a run can be repeated exactly.

Exit codes: 0 success, 2 usage error, 3 data-format error, 4 internal
invariant failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

from . import __version__
from . import lm
from .abc import to_abc
from .cipher import decipher, encipher, format_key, parse_key, random_key
from .corpus import CorpusSplit, load_corpus, sample_excerpts, split_corpus
from .errors import DataFormatError, InvariantError
from .solver import SolverConfig, derive_seed, run_experiment, solve
from .symbols import (
    NAMED_ALPHABETS,
    Sequence,
    cipher_alphabet_for,
    format_sequences,
    melody_alphabet,
    named_alphabet,
    parse_dorabella,
    parse_dorabella_lines,
    read_sequences,
)
from .synth import markov_corpus, melody_corpus

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 2, 3, 4
DORABELLA_LENGTH = 87
MANIFEST_PREFIX = "# manifest: "

FORMATS_HELP = """\
file formats:
  melody    one melody per line, space-separated pitch names (C4 D4 Bb4);
            pitches must lie in F3..E6 and are snapped to the 24-pitch alphabet
  notes     a note-event file, or a directory of them: a 'key: <C|C#|D|...>'
            header, then one 'midi_pitch duration [onset]' per line, durations
            as fractions of a whole note (1/4 = quarter); 'rest' lines ignored
  english   raw UTF-8 text; paragraphs are sources, non-letters are dropped
  seq       one sequence per line of symbols from --alphabet
  dorabella whitespace-separated glyph tokens [A-H][1-3]
  model     text n-gram model written by 'train'
  key       two rows, plaintext symbols above cipher symbols
"""


class UsageError(Exception):
    pass


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest(command: str, params: dict, inputs) -> dict:
    return {
        "command": command,
        "params": params,
        "inputs": {str(p): sha256(p) for p in inputs},
        "version": __version__,
    }


def manifest_line(m: dict) -> str:
    return MANIFEST_PREFIX + json.dumps(m, sort_keys=True) + "\n"


def write_text(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def corpus_inputs(path) -> list[Path]:
    path = Path(path)
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))
    return [path]


def load_for(args, path, fmt) -> list:
    alphabet = named_alphabet(args.alphabet) if getattr(args, "alphabet", None) else None
    if fmt == "dorabella":
        return [parse_dorabella(Path(path).read_text(encoding="utf-8"))]
    return load_corpus(fmt, path, alphabet)


def parse_corpus_spec(spec: str) -> tuple[str, str, str]:
    """``LABEL=KIND:PATH``."""
    try:
        label, rest = spec.split("=", 1)
        kind, path = rest.split(":", 1)
    except ValueError:
        raise UsageError(f"--corpus expects LABEL=KIND:PATH, got {spec!r}") from None
    if kind not in ("melody", "notes", "english", "seq"):
        raise UsageError(f"unknown corpus kind {kind!r} in {spec!r}")
    return label, kind, path


def split_for(seqs, args, seed):
    """Train/test split; with --concat-test the test pool becomes one joined stream."""
    n = len(seqs)
    count = args.train_count if args.train_count is not None else int(round(n * args.train_fraction))
    count = min(max(count, 1), n - 1)
    split = split_corpus(seqs, count, seed)
    if args.concat_test:
        split = CorpusSplit(split.train, [join(split.test)], split.seed)
    return split


def join(seqs):
    return Sequence(seqs[0].alphabet, tuple(t for s in seqs for t in s.tokens))


# -- commands --------------------------------------------------------------

def cmd_train(args) -> None:
    if args.order != lm.ORDER:
        raise UsageError(f"only --order {lm.ORDER} is supported")
    seqs = load_for(args, args.input, args.format)
    model = lm.train(seqs, seqs[0].alphabet)
    params = {"order": args.order, "format": args.format, "alphabet": args.alphabet}
    text = lm.dumps(model) + manifest_line(manifest("train", params, corpus_inputs(args.input)))
    write_text(args.out, text)


def cmd_perplexity(args) -> None:
    model = lm.load(args.model)
    args.alphabet = args.alphabet or model.alphabet.name
    seqs = [s for s in load_for(args, args.input, args.format) if len(s)]
    value = lm.perplexity(model, seqs)
    tokens = sum(len(s) for s in seqs)
    params = {"format": args.format}
    out = f"sequences\t{len(seqs)}\ntokens\t{tokens}\nperplexity\t{value:.6f}\n"
    write_text(args.out, out + manifest_line(manifest("perplexity", params, [args.model, *corpus_inputs(args.input)])))


def cmd_encipher(args) -> None:
    plain_alphabet = named_alphabet(args.alphabet)
    cipher_alphabet = cipher_alphabet_for(plain_alphabet)
    inputs = [args.input]
    if args.key:
        key = parse_key(Path(args.key).read_text(encoding="utf-8"), plain_alphabet, cipher_alphabet)
        inputs.append(args.key)
    else:
        key = random_key(plain_alphabet, args.seed, cipher_alphabet)
    seqs = read_sequences(args.input, plain_alphabet)
    out = format_sequences(encipher(key, s) for s in seqs)
    params = {"alphabet": args.alphabet, "seed": args.seed}
    m = manifest("encipher", params, inputs)
    write_text(args.out, out + manifest_line(m))
    if args.key_out:
        write_text(args.key_out, format_key(key) + manifest_line(m))


def _read_cipher(args, model):
    if args.cipher_format == "dorabella":
        return parse_dorabella(Path(args.cipher).read_text(encoding="utf-8"))
    alphabet = named_alphabet(args.cipher_alphabet) if args.cipher_alphabet else cipher_alphabet_for(model.alphabet)
    seqs = read_sequences(args.cipher, alphabet)
    if len(seqs) != 1:
        raise DataFormatError(f"{args.cipher}: expected one ciphertext line, found {len(seqs)}")
    return seqs[0]


def cmd_solve(args) -> None:
    model = lm.load(args.model)
    ciphertext = _read_cipher(args, model)
    config = SolverConfig(args.seed, args.iterations, args.restarts)
    result = solve(ciphertext, model, config, jobs=args.jobs)
    key = result.best_key
    params = {
        "seed": args.seed, "iterations": args.iterations, "restarts": args.restarts,
        "cipher_format": args.cipher_format, "cipher_alphabet": args.cipher_alphabet,
    }
    report = {
        "plaintext": result.best_plaintext.render(),
        "key": {
            "plain": list(key.plain_alphabet.symbols),
            "cipher": [key.cipher_alphabet.symbols[c] for c in key.mapping],
        },
        "log_prob": result.best_log_prob,
        "perplexity": math.exp(-result.best_log_prob / len(ciphertext)),
        "best_restart": result.best_restart,
        "restarts": [
            {"restart": t.restart, "iterations": t.iterations, "final_score": t.final_score}
            for t in result.restart_traces
        ],
        "manifest": manifest("solve", params, [args.model, args.cipher]),
    }
    write_text(args.out, json.dumps(report, indent=2) + "\n")


def _solver_params(args) -> dict:
    return {
        "seed": args.seed, "iterations": args.iterations, "restarts": args.restarts,
        "ciphers": args.ciphers, "length": args.length, "test_from": args.test_from,
        "train_count": args.train_count, "train_fraction": args.train_fraction,
        "concat_test": args.concat_test,
    }


def cmd_table2(args) -> None:
    """Key and decipherment accuracy per corpus."""
    lines = []
    rows = []
    inputs = []
    params = _solver_params(args)
    params["corpora"] = args.corpus
    for n, spec in enumerate(args.corpus):
        label, kind, path = parse_corpus_spec(spec)
        seqs = load_corpus(kind, path, named_alphabet(args.alphabet) if args.alphabet else None)
        inputs.extend(corpus_inputs(path))
        split = split_for(seqs, args, derive_seed(args.seed, 10, n))
        model = lm.train(split.train, seqs[0].alphabet)
        config = SolverConfig(derive_seed(args.seed, 11, n), args.iterations, args.restarts)
        report = run_experiment(split, model, args.ciphers, args.length, config,
                                test_from=args.test_from, jobs=args.jobs)
        lines.append(f"## {label}")
        lines.extend(report.lines())
        rows.append((label, report))
    lines.append("")
    lines.append("Source\tKey Acc\tDec Acc\tSolved")
    for label, r in rows:
        lines.append(
            f"{label}\t{100 * r.mean_key_accuracy:.1f}%\t"
            f"{100 * r.mean_decipherment_accuracy:.1f}%\t{100 * r.fraction_solved:.1f}%"
        )
    text = "\n".join(lines) + "\n"
    write_text(args.out, text + manifest_line(manifest("experiment table2", params, inputs)))


def table3_rows(corpora, seed: int, excerpts: int, length: int, args) -> list[tuple[str, float, int]]:
    """(label, average perplexity, excerpt count) per corpus."""
    rows = []
    for n, (label, seqs) in enumerate(corpora):
        split = split_for(seqs, args, derive_seed(seed, 20, n))
        model = lm.train(split.train, seqs[0].alphabet)
        pool = split.test if args.test_from == "heldout" else split.train
        available = sum(max(len(s) - length + 1, 0) for s in pool)
        count = min(excerpts, available)
        if count == 0:
            raise DataFormatError(f"corpus {label!r}: no held-out span of {length} tokens")
        sample = sample_excerpts(pool, count, length, derive_seed(seed, 21, n))
        average = math.fsum(lm.perplexity(model, [s]) for s in sample) / len(sample)
        rows.append((label, average, count))
    return rows


def cmd_table3(args) -> None:
    """Average perplexity of held-out excerpts per corpus."""
    corpora = []
    inputs = []
    for spec in args.corpus:
        label, kind, path = parse_corpus_spec(spec)
        corpora.append((label, load_corpus(kind, path, named_alphabet(args.alphabet) if args.alphabet else None)))
        inputs.extend(corpus_inputs(path))
    rows = table3_rows(corpora, args.seed, args.ciphers, args.length, args)
    lines = ["Dataset\tAverage Perplexity\tExcerpts"]
    lines += [f"{label}\t{value:.2f}\t{count}" for label, value, count in rows]
    params = _solver_params(args)
    params["corpora"] = args.corpus
    for k in ("iterations", "restarts"):
        params.pop(k)
    text = "\n".join(lines) + "\n"
    write_text(args.out, text + manifest_line(manifest("experiment table3", params, inputs)))


def dorabella_report(transcription: str, model, config: SolverConfig | None,
                     key=None, jobs: int = 1, warn=None) -> tuple[str, str]:
    """Decipher a Dorabella transcription as melody; returns (report, abc)."""
    rows = parse_dorabella_lines(transcription)
    ciphertext = parse_dorabella(transcription)
    if len(ciphertext) != DORABELLA_LENGTH and warn is not None:
        warn(f"warning: transcription has {len(ciphertext)} tokens, expected {DORABELLA_LENGTH}")
    if len(model.alphabet) != len(ciphertext.alphabet):
        raise DataFormatError(
            f"model alphabet has {len(model.alphabet)} symbols; Dorabella needs {len(ciphertext.alphabet)}"
        )
    if key is None:
        result = solve(ciphertext, model, config, jobs=jobs)
        key, plaintext, score = result.best_key, result.best_plaintext, result.best_log_prob
    else:
        plaintext = decipher(ciphertext, key)
        score = lm.log_prob(model, plaintext)
    symbols = plaintext.symbols()
    melody_lines = []
    pos = 0
    for row in rows:
        melody_lines.append(" ".join(symbols[pos:pos + len(row)]))
        pos += len(row)
    abc = to_abc(symbols, title="Dorabella as melody")
    out = ["# melody"] + melody_lines
    out += ["", "# key (melody pitch above Dorabella glyph)", format_key(key).rstrip("\n")]
    out += ["", f"log_prob\t{score!r}", f"perplexity\t{math.exp(-score / len(plaintext)):.6f}"]
    out += ["", "# abc", abc.rstrip("\n")]
    return "\n".join(out) + "\n", abc


def cmd_dorabella(args) -> None:
    model = lm.load(args.model)
    transcription = Path(args.transcription).read_text(encoding="utf-8")
    inputs = [args.transcription, args.model]
    key = None
    if args.key:
        key = parse_key(Path(args.key).read_text(encoding="utf-8"), model.alphabet, named_alphabet("dorabella"))
        inputs.append(args.key)
        config = None
    else:
        if args.seed is None:
            raise UsageError("--seed is required unless --key is given")
        config = SolverConfig(args.seed, args.iterations, args.restarts)
    report, abc = dorabella_report(
        transcription, model, config, key=key, jobs=args.jobs,
        warn=lambda msg: print(msg, file=sys.stderr),
    )
    params = {"seed": args.seed, "iterations": args.iterations, "restarts": args.restarts}
    mline = manifest_line(manifest("dorabella", params, inputs))
    write_text(args.out, report + mline)
    if args.abc_out:
        write_text(args.abc_out, abc + "%" + mline[1:])


def cmd_synth(args) -> None:
    if args.kind == "melody":
        seqs = melody_corpus(args.count, args.seed)
        out = format_sequences(seqs)
    else:
        alphabet = named_alphabet(args.alphabet) if args.alphabet else melody_alphabet()
        seqs = markov_corpus(alphabet, args.bits, args.count, args.length, args.seed,
                             source_seed=args.source_seed, skew=args.skew)
        out = format_sequences(seqs)
    params = {k: getattr(args, k) for k in ("kind", "count", "length", "bits", "skew", "seed", "source_seed", "alphabet")}
    write_text(args.out, out + manifest_line(manifest("synth", params, [])))


# -- parser ----------------------------------------------------------------

def _add_solver_args(p, seed_required=True):
    p.add_argument("--seed", type=int, required=seed_required,
                   help="random seed" + (" (required)" if seed_required else " (required unless --key is given)"))
    p.add_argument("--iterations", type=int, default=4000, help="hill-climbing iteration cap per restart")
    p.add_argument("--restarts", type=int, default=90, help="random restarts per ciphertext")
    p.add_argument("--jobs", type=int, default=1, help="threads for restarts; results do not depend on it")


def _add_experiment_args(p):
    _add_solver_args(p)
    p.add_argument("--corpus", action="append", required=True, metavar="LABEL=KIND:PATH",
                   help="corpus to evaluate; KIND is melody, notes, english or seq (repeatable)")
    p.add_argument("--alphabet", choices=sorted(NAMED_ALPHABETS), help="alphabet for 'seq' corpora")
    p.add_argument("--ciphers", type=int, default=300, help="number of test excerpts")
    p.add_argument("--length", type=int, default=87, help="excerpt length in tokens")
    p.add_argument("--train-count", type=int, help="sources used for training (default: fraction)")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--test-from", choices=("heldout", "train"), default="heldout",
                   help="draw test excerpts from the held-out pool or the training sources")
    p.add_argument("--concat-test", action="store_true",
                   help="join the test sources end to end before cutting excerpts "
                        "(for corpora of melodies shorter than --length)")
    p.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dorabella",
        description="Trigram language models and a hill-climbing substitution cipher solver "
                    "for symbolic music and text.",
        epilog=FORMATS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    fmt_choices = ("melody", "notes", "english", "seq", "dorabella")

    p = sub.add_parser("train", help="train a trigram model", epilog=FORMATS_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--in", dest="input", required=True, help="corpus file (directory for notes)")
    p.add_argument("--format", choices=fmt_choices, default="melody")
    p.add_argument("--alphabet", choices=sorted(NAMED_ALPHABETS), help="alphabet for 'seq' input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("perplexity", help="perplexity of a corpus under a model", epilog=FORMATS_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=fmt_choices, default="melody")
    p.add_argument("--alphabet", choices=sorted(NAMED_ALPHABETS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_perplexity)

    p = sub.add_parser("encipher", help="encipher sequences with a key", epilog=FORMATS_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--key", help="key file (two-row format)")
    group.add_argument("--seed", type=int, help="draw a random key from this seed")
    p.add_argument("--alphabet", choices=sorted(NAMED_ALPHABETS), default="melody",
                   help="plaintext alphabet")
    p.add_argument("--in", dest="input", required=True, help="sequence file")
    p.add_argument("--out")
    p.add_argument("--key-out", help="also write the key used")
    p.set_defaults(func=cmd_encipher)

    p = sub.add_parser("solve", help="decipher one ciphertext", epilog=FORMATS_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--model", required=True)
    p.add_argument("--cipher", required=True, help="ciphertext file")
    p.add_argument("--cipher-format", choices=("seq", "dorabella"), default="seq")
    p.add_argument("--cipher-alphabet", choices=sorted(NAMED_ALPHABETS),
                   help="alphabet of a 'seq' ciphertext (default: matched to the model)")
    _add_solver_args(p)
    p.add_argument("--out", help="JSON report (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="reproduce the accuracy or perplexity tables")
    esub = p.add_subparsers(dest="table", required=True)
    t2 = esub.add_parser("table2", help="key/decipherment accuracy on synthetic ciphers",
                         epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_experiment_args(t2)
    t2.set_defaults(func=cmd_table2)
    t3 = esub.add_parser("table3", help="average held-out perplexity",
                         epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_experiment_args(t3)
    t3.set_defaults(func=cmd_table3)

    p = sub.add_parser("dorabella", help="decipher the Dorabella transcription as melody",
                       epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--transcription", required=True)
    p.add_argument("--model", required=True, help="model over the 24-pitch melody alphabet")
    p.add_argument("--key", help="apply this key instead of searching")
    _add_solver_args(p, seed_required=False)
    p.add_argument("--out", help="report file (default stdout)")
    p.add_argument("--abc-out", help="also write the ABC tune here")
    p.set_defaults(func=cmd_dorabella)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("kind", choices=("melody", "markov"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--length", type=int, default=200, help="sequence length (markov)")
    p.add_argument("--bits", type=float, default=2.5, help="conditional entropy (markov)")
    p.add_argument("--skew", type=float, default=1.0, help="symbol-frequency skew (markov)")
    p.add_argument("--source-seed", type=int, help="seed of the chain itself (markov)")
    p.add_argument("--alphabet", choices=sorted(NAMED_ALPHABETS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dorabella: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"dorabella: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvariantError, AssertionError) as exc:
        print(f"dorabella: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
