"""Command line for the dump extractor."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .job import ExtractionJob
from .runner import extract


def parse_levels(text: str) -> tuple:
    """Accept '0..5' ranges or comma lists like '0,2,5'."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(s) for s in text.split(",") if s)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tgextract", description=__doc__)
    parser.add_argument("model", help="model id or local path (AutoModelForCausalLM)")
    parser.add_argument("dataset", help="JSONL corpus with 'text' or 'input_ids' rows")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--min-tokens", type=int, default=1024)
    parser.add_argument("--truncate", type=int, default=1024)
    parser.add_argument("--shuffle-levels", default="0", help="e.g. '0..5' or '0,5'")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-prompts", type=int, default=None)
    parser.add_argument("--tglo-all-levels", action="store_true", help="logit dumps for shuffled runs too")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        job = ExtractionJob(
            model=args.model,
            dataset=args.dataset,
            out_dir=Path(args.out),
            min_tokens=args.min_tokens,
            truncate=args.truncate,
            shuffle_levels=parse_levels(args.shuffle_levels),
            seed=args.seed,
            device=args.device,
            max_prompts=args.max_prompts,
            tglo_all_levels=args.tglo_all_levels,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = extract(job)
    print(f"extracted {result.n_prompts} prompts ({result.n_dumps} dumps), skipped {len(result.skipped)}")
    print(f"manifest: {result.manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
