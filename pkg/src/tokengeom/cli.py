"""Command-line front end.

Subcommands: analyze, compare-shuffles, correlate, shuffle, toy, synth.
Exit codes: 0 success, 1 partial success (some prompts quarantined),
2 fatal configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import jsonout
from .entropy import dirichlet_mc_entropy, unit_box_expected_entropy
from .io import ManifestEntry, write_layerstack, write_manifest
from .pipeline import ConfigError, RunConfig, analyze, compare_shuffles, correlate
from .shuffle import ShuffleSpec, full_shuffle_index, prompt_seed, shuffle_tokens
from .synthetic import synthetic_layerstack

LN2 = float(np.log(2.0))


def _add_run_flags(sub):
    sub.add_argument("--manifest", required=True, help="JSON manifest of prompt dumps")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--metrics", default="id,no,cosine,angles", help="comma list: id,no,cosine,angles")
    sub.add_argument("--scaling", default="2", help="comma list of range scalings (powers of two)")
    sub.add_argument("--knn", type=int, default=2, help="neighbor count for overlap")
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--format", dest="fmt", choices=["json", "csv"], default="json")
    sub.add_argument("--raw-id", action="store_true", help="correlate raw ID instead of log ID")


def _run_config(args, shuffle_levels=None, permutation_shuffles=None) -> RunConfig:
    return RunConfig(
        manifest=Path(args.manifest),
        out_dir=Path(args.out),
        metrics=tuple(m for m in args.metrics.split(",") if m),
        scalings=tuple(int(s) for s in args.scaling.split(",") if s),
        knn_k=args.knn,
        shuffle_levels=shuffle_levels,
        seed=args.seed,
        threads=args.threads,
        fmt=args.fmt,
        use_log_id=not args.raw_id,
        permutation_shuffles=permutation_shuffles,
    )


def _cmd_analyze(args) -> int:
    result = analyze(_run_config(args))
    print(f"analyzed {len(result.profiles)} prompts, quarantined {len(result.quarantined)}")
    print(f"summary: {result.summary_path}")
    return result.exit_code


def _cmd_compare_shuffles(args) -> int:
    levels = tuple(int(s) for s in args.levels.split(",")) if args.levels else None
    result = compare_shuffles(_run_config(args, shuffle_levels=levels))
    print(f"summary: {result.summary_path}")
    return result.exit_code


def _cmd_correlate(args) -> int:
    path = correlate(_run_config(args, permutation_shuffles=args.permutation_p))
    print(f"correlation report: {path}")
    return 0


def _cmd_shuffle(args) -> int:
    if args.infile:
        tokens = json.loads(Path(args.infile).read_text())
    else:
        tokens = json.loads(sys.stdin.read())
    if not isinstance(tokens, list):
        raise ConfigError("input must be a JSON array of tokens")
    s = full_shuffle_index(len(tokens)) if args.s == "full" else int(args.s)
    seed = args.seed if not args.prompt_id else prompt_seed(args.seed, args.prompt_id)
    out = shuffle_tokens(tokens, ShuffleSpec(s=s, seed=seed))
    text = json.dumps(out)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _cmd_toy(args) -> int:
    if args.model == "unit-box":
        res = unit_box_expected_entropy(args.d, args.samples, args.seed)
    else:
        res = dirichlet_mc_entropy(args.d, args.samples, args.seed)
    scale = LN2 if args.units == "bits" else 1.0
    doc = {
        "model": args.model,
        "d_m": res.d_m,
        "expected_entropy": res.expected_entropy / scale,
        "reference": res.reference / scale,
        "std_error": res.std_error / scale,
        "n_samples": res.n_samples,
        "units": args.units,
    }
    print(jsonout.dumps(doc), end="")
    return 0


def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dims = [int(d) for d in args.dims.split(",")]
    entries = []
    for i in range(args.prompts):
        pid = f"synth{i:03d}"
        stack = synthetic_layerstack(
            prompt_id=pid,
            latent_dims=dims,
            ambient_dim=args.ambient,
            n_points=args.n,
            seed=args.seed + 1000 * i,
            manifold_kind=args.kind,
        )
        name = f"{pid}.tgeo"
        write_layerstack(stack, out / name)
        entries.append(
            ManifestEntry(prompt_id=pid, tgeo=name, n_tokens=args.n, s=0, source={"kind": args.kind})
        )
    write_manifest(entries, out / "manifest.json")
    print(f"wrote {len(entries)} stacks + manifest to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tokengeom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="compute per-layer geometry profiles for a manifest")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("compare-shuffles", help="metric curves per shuffle level with deltas vs S=0")
    _add_run_flags(p)
    p.add_argument("--levels", default=None, help="comma list of shuffle indices to compare")
    p.set_defaults(func=_cmd_compare_shuffles)

    p = sub.add_parser("correlate", help="layerwise ID-loss correlations over analyzed prompts")
    _add_run_flags(p)
    p.add_argument(
        "--permutation-p",
        type=int,
        default=None,
        metavar="N",
        help="also report permutation p-values from N shuffles (slower, distribution-free)",
    )
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("shuffle", help="block-shuffle a JSON array of tokens")
    p.add_argument("--s", required=True, help="shuffle index, or 'full'")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--prompt-id", default=None, help="derive a per-prompt seed from this id")
    p.add_argument("--in", dest="infile", default=None, help="input JSON file (default: stdin)")
    p.add_argument("--out", default=None, help="output JSON file (default: stdout)")
    p.set_defaults(func=_cmd_shuffle)

    p = sub.add_parser("toy", help="expected softmax entropy of a toy logit manifold")
    p.add_argument("--model", choices=["unit-box", "dirichlet"], required=True)
    p.add_argument("--d", type=int, required=True, help="number of active entries")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--units", choices=["nats", "bits"], default="nats")
    p.set_defaults(func=_cmd_toy)

    p = sub.add_parser("synth", help="emit synthetic TGEO fixtures plus a manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--dims", default="2,5,2", help="latent dimension per layer")
    p.add_argument("--ambient", type=int, default=16)
    p.add_argument("--n", type=int, default=1024, help="tokens per cloud")
    p.add_argument("--prompts", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=["hypercube", "hypersphere", "gaussian"], default="hypercube")
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
