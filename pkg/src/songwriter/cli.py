"""Command-line entry point for the full pipeline.

Subcommands: synth-corpus, prepare, train, evaluate, generate, export-midi,
gradcheck. Every subcommand is deterministic given its flags and --seed.

Exit codes: 0 success; 1 a check or criterion failed; 2 usage error;
3 missing input file; 4 invalid corpus/vocabulary data; 5 bad checkpoint.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time

from . import checkpoint as ckpt
from . import corpus as cp
from . import metrics as mx
from . import midi as mid
from . import score as sc
from .baseline import Seq2seqModel
from .model import ModelConfig, SongwriterModel
from .training import TrainOptions, train
from .verify import gradcheck_tiny_model

EXIT_CHECK_FAILED = 1
EXIT_MISSING_FILE = 3
EXIT_BAD_DATA = 4
EXIT_BAD_CHECKPOINT = 5

ARCHES = {"songwriter": SongwriterModel, "seq2seq": Seq2seqModel}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="songwriter",
        description="Compose lyric-aligned melodies: data pipeline, training, "
                    "evaluation, generation, and MIDI export.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-corpus", help="generate a synthetic corpus file")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON file with generator settings")
    p.add_argument("--num-songs", type=int, default=100)
    p.add_argument("--lines", type=int, nargs=2, default=(3, 6), metavar=("MIN", "MAX"))
    p.add_argument("--syllables", type=int, nargs=2, default=(4, 8), metavar=("MIN", "MAX"))
    p.add_argument("--one-to-many", type=float, default=0.25)
    p.add_argument("--max-notes", type=int, default=3)
    p.add_argument("--rest-prob", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("prepare", help="normalize, split, and build the vocabulary")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--ratios", type=float, nargs=3, default=(0.90, 0.05, 0.05))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--detect-key", action="store_true",
                   help="infer the key from pitch statistics when metadata is blank")

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("--corpus", required=True, help="training songs")
    p.add_argument("--valid", help="validation songs")
    p.add_argument("--vocab", required=True)
    p.add_argument("--checkpoint", required=True, help="output checkpoint path")
    p.add_argument("--arch", choices=sorted(ARCHES), default="songwriter")
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--window", type=int, default=40)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--decay", type=float, default=0.9999)
    p.add_argument("--clip", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", help="write per-epoch stats as JSON lines")

    p = sub.add_parser("evaluate", help="score a checkpoint on a song file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=("tf", "sampling"), default="tf")
    p.add_argument("--policy", choices=("greedy", "sample"), default="greedy")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report as JSON")
    p.add_argument("--csv", help="append the report as a CSV row")

    p = sub.add_parser("generate", help="compose a song from a lyrics text file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--lyrics", required=True, help="UTF-8 text, one sentence per line")
    p.add_argument("--out", required=True, help="output song file (JSON lines)")
    p.add_argument("--lexicon", help="JSON file mapping syllable surface to phonetic key")
    p.add_argument("--policy", choices=("greedy", "sample"), default="greedy")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--song-id", default="generated")
    p.add_argument("--trace", help="write per-line decode traces (alignment index, "
                                   "attention weights) as JSON")

    p = sub.add_parser("export-midi", help="write songs as .mid files")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True,
                   help=".mid path for a single song, or a directory")

    p = sub.add_parser("gradcheck", help="verify gradients on a tiny model")
    p.add_argument("--arch", choices=sorted(ARCHES), default="songwriter")
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--sample", type=int,
                   help="check at most this many elements per parameter")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _read_songs(path) -> list[sc.Song]:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return sc.read_corpus_file(path)


def _load_checkpoint(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return ckpt.load_model_file(path)


def _triples_for(songs, window):
    triples = []
    for song in songs:
        triples.extend(cp.build_triples(song, window))
    return triples


def _cmd_synth_corpus(args) -> int:
    if args.config:
        if not os.path.exists(args.config):
            raise FileNotFoundError(args.config)
        with open(args.config, encoding="utf-8") as f:
            config = cp.SynthConfig.from_dict(json.load(f))
    else:
        config = cp.SynthConfig(
            num_songs=args.num_songs,
            lines_per_song=tuple(args.lines),
            syllables_per_line=tuple(args.syllables),
            one_to_many_prob=args.one_to_many,
            max_notes_per_syllable=args.max_notes,
            rest_prob=args.rest_prob,
            seed=args.seed,
        )
    songs = cp.generate_synthetic_corpus(config)
    sc.write_corpus_file(args.out, songs)
    print(f"wrote {len(songs)} songs to {args.out}")
    return 0


def _cmd_prepare(args) -> int:
    songs = _read_songs(args.corpus)
    normalized = [
        cp.normalize_durations(cp.transpose_song(s, detect_missing_key=args.detect_key))
        for s in songs
    ]
    train_songs, valid_songs, test_songs = cp.split_corpus(
        normalized, tuple(args.ratios), seed=args.seed)
    vocab = cp.build_vocabulary(train_songs)
    os.makedirs(args.out, exist_ok=True)
    for name, part in (("train", train_songs), ("valid", valid_songs), ("test", test_songs)):
        sc.write_corpus_file(os.path.join(args.out, f"{name}.jsonl"), part)
    with open(os.path.join(args.out, "vocab.json"), "w", encoding="utf-8") as f:
        f.write(vocab.to_json())
    print(f"split {len(songs)} songs into {len(train_songs)}/{len(valid_songs)}/"
          f"{len(test_songs)}; vocabulary sizes: pitch {vocab.pitch_size}, "
          f"duration {vocab.duration_size}, syllable {vocab.syllable_size}")
    return 0


def _cmd_train(args) -> int:
    train_songs = _read_songs(args.corpus)
    valid_songs = _read_songs(args.valid) if args.valid else []
    if not os.path.exists(args.vocab):
        raise FileNotFoundError(args.vocab)
    with open(args.vocab, encoding="utf-8") as f:
        vocab = cp.Vocabulary.from_json(f.read())
    config = ModelConfig.for_vocabulary(vocab, hidden_size=args.hidden,
                                        context_window=args.window)
    model = ARCHES[args.arch](config, seed=args.seed)

    log_file = open(args.log, "w", encoding="utf-8") if args.log else None

    def log(message):
        print(message)

    options = TrainOptions(epochs=args.epochs, batch_size=args.batch, lr=args.lr,
                           decay=args.decay, clip_norm=args.clip, seed=args.seed,
                           log=log)
    started = time.perf_counter()
    report = train(model, vocab,
                   _triples_for(train_songs, args.window),
                   _triples_for(valid_songs, args.window),
                   options)
    elapsed = time.perf_counter() - started
    if log_file:
        for stats in report.epochs:
            log_file.write(json.dumps(stats.to_dict()) + "\n")
        log_file.close()
    ckpt.save_model_file(args.checkpoint, model, vocab)
    print(f"trained {args.arch} ({len(report.epochs)} epochs, {elapsed:.1f}s); "
          f"best epoch {report.best_epoch}; checkpoint: {args.checkpoint}")
    return 0


def _cmd_evaluate(args) -> int:
    model, vocab = _load_checkpoint(args.checkpoint)
    songs = _read_songs(args.corpus)
    triples = _triples_for(songs, model.config.context_window)
    report = mx.evaluate_model(model, vocab, triples, mode=args.mode,
                               policy=args.policy, seed=args.seed,
                               temperature=args.temperature)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(report.to_json() + "\n")
    if args.csv:
        new = not os.path.exists(args.csv)
        with open(args.csv, "a", encoding="utf-8") as f:
            if new:
                f.write(mx.EvalReport.CSV_HEADER + "\n")
            f.write(report.to_csv_row() + "\n")
    print(report.to_json())
    if report.alignment_violations:
        print(f"alignment violations: {report.alignment_violations}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return 0


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return 0x3400 <= code <= 0x9FFF or 0xF900 <= code <= 0xFAFF


def _lyrics_to_syllables(text: str, lexicon: dict) -> list[list[sc.Syllable]]:
    """One sentence per input line; CJK text splits per character, anything
    else on whitespace. Phonetic keys come from the lexicon (identity by
    default; unknown keys fall back to the UNK id at encode time)."""
    lines = []
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw:
            continue
        if any(_is_cjk(ch) for ch in raw):
            tokens = [ch for ch in raw if not ch.isspace()]
        else:
            tokens = raw.split()
        lines.append([sc.Syllable(t, lexicon.get(t, t)) for t in tokens])
    if not lines:
        raise sc.ValidationError("lyrics file contains no sentences")
    return lines


def _cmd_generate(args) -> int:
    model, vocab = _load_checkpoint(args.checkpoint)
    if not os.path.exists(args.lyrics):
        raise FileNotFoundError(args.lyrics)
    with open(args.lyrics, encoding="utf-8") as f:
        text = f.read()
    lexicon = {}
    if args.lexicon:
        if not os.path.exists(args.lexicon):
            raise FileNotFoundError(args.lexicon)
        with open(args.lexicon, encoding="utf-8") as f:
            lexicon = json.load(f)
    lyric_lines = _lyrics_to_syllables(text, lexicon)

    rng = random.Random(args.seed)
    traces = []
    if args.trace:
        # generate line by line so traces can be captured
        window = model.config.context_window
        history, lines = [], []
        for syllables in lyric_lines:
            line, trace = model.generate_line(
                vocab, syllables, history[-window:], policy=args.policy,
                rng=rng, temperature=args.temperature, collect_trace=True)
            lines.append(line)
            history.extend(line.notes)
            traces.append(trace.to_dict())
        song = sc.Song(args.song_id, "C", 60, lines)
        with open(args.trace, "w", encoding="utf-8") as f:
            json.dump(traces, f)
    else:
        song = model.compose_song(vocab, lyric_lines, song_id=args.song_id,
                                  policy=args.policy, rng=rng,
                                  temperature=args.temperature)
    sc.write_corpus_file(args.out, [song])
    total_notes = len(song.all_notes())
    print(f"composed {len(song.lines)} lines, {total_notes} notes -> {args.out}")
    return 0


def _cmd_export_midi(args) -> int:
    songs = _read_songs(args.corpus)
    if args.out.endswith(".mid"):
        if len(songs) != 1:
            raise sc.ValidationError(
                f"--out is a single .mid file but the corpus has {len(songs)} songs")
        mid.export_midi_file(args.out, songs[0])
        print(f"wrote {args.out}")
    else:
        os.makedirs(args.out, exist_ok=True)
        for song in songs:
            mid.export_midi_file(os.path.join(args.out, f"{song.id}.mid"), song)
        print(f"wrote {len(songs)} files to {args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    report = gradcheck_tiny_model(arch=args.arch, hidden=args.hidden, seed=args.seed,
                                  max_elements_per_param=args.sample)
    for line in report.summary_lines():
        print(line)
    if report.passed(args.tolerance):
        print(f"PASS (tolerance {args.tolerance})")
        return 0
    print(f"FAIL (tolerance {args.tolerance})")
    return EXIT_CHECK_FAILED


_HANDLERS = {
    "synth-corpus": _cmd_synth_corpus,
    "prepare": _cmd_prepare,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "generate": _cmd_generate,
    "export-midi": _cmd_export_midi,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except FileNotFoundError as e:
        print(f"error: missing file: {e}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ckpt.CheckpointError as e:
        print(f"error: bad checkpoint: {e}", file=sys.stderr)
        return EXIT_BAD_CHECKPOINT
    except (sc.CorpusError, cp.VocabError, mid.MidiError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_DATA


if __name__ == "__main__":
    sys.exit(main())
