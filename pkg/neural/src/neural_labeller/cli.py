"""Command line for fine-tuning and prediction over pipeline files."""

from __future__ import annotations

import argparse
import sys

from .data import ChunkFormatError, read_chunk_dump
from .finetune import FineTuneConfig, FineTuneError, fine_tune, load_classifier
from .predict import PredictionError, fill_iob


def build_parser():
    parser = argparse.ArgumentParser(prog="patcite-neural", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fine-tune", help="fine-tune a checkpoint on a chunk dump")
    p.add_argument("chunks")
    p.add_argument("--checkpoint", required=True, help="model id or local path")
    p.add_argument("--out", required=True, help="output directory for the model")
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=3e-5)
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(fn=cmd_fine_tune)

    p = sub.add_parser("predict", help="fill the IOB pred column from chunks")
    p.add_argument("chunks")
    p.add_argument("--model", required=True, help="fine-tuned model directory or id")
    p.add_argument("--iob", required=True, help="IOB file carrying the word tokens")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(fn=cmd_predict)
    return parser


def cmd_fine_tune(args):
    with open(args.chunks, encoding="utf-8") as fh:
        chunks = read_chunk_dump(fh)
    config = FineTuneConfig(
        checkpoint=args.checkpoint,
        epochs=args.epochs,
        batch_size=args.batch_size,
        max_len=args.max_len,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )
    _, log = fine_tune(chunks, config, out_dir=args.out)
    for epoch, mean in enumerate(log.epoch_means(), start=1):
        print(f"epoch {epoch}: mean loss {mean:.6f}")
    return 0


def cmd_predict(args):
    with open(args.chunks, encoding="utf-8") as fh:
        chunks = read_chunk_dump(fh)
    model = load_classifier(args.model)
    with open(args.iob, encoding="utf-8") as iob_in:
        if args.output == "-":
            fill_iob(model, chunks, iob_in, sys.stdout, args.batch_size)
        else:
            with open(args.output, "w", encoding="utf-8") as out:
                fill_iob(model, chunks, iob_in, out, args.batch_size)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 1
    try:
        return args.fn(args)
    except (ChunkFormatError, FineTuneError, PredictionError, FileNotFoundError) as exc:
        print(f"patcite-neural: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
