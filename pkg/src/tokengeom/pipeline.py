"""End-to-end analysis over manifests of layerwise dumps.

Reads TGEO/TGLO files listed in a JSON manifest, computes per-layer
geometric observables per prompt, and writes deterministic JSON (and
optionally CSV) outputs: one profile per prompt, one population summary,
and an error report for quarantined prompts.  Reruns with identical config
and inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io as _stdio
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jsonout
from .correlation import (
    bootstrap_pearson_std,
    layerwise_correlation,
    pearson,
    permutation_pvalue,
    spearman,
)
from .entropy import contextual_entropy_report
from .id_estimators import EstimatorError, ScaleSweep, gride
from .io import ManifestEntry, read_layerstack, read_logitrecord, read_manifest
from .neighbors import knn, mean_cosine_similarity, mu_ratios, nn_angles
from .overlap import neighborhood_overlap
from .profiles import GeometryProfile, LayerGeometry, profile_from_dict, profile_to_dict

ALL_METRICS = ("id", "no", "cosine", "angles")
SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Fatal configuration problem (exit code 2 at the CLI)."""


@dataclass
class RunConfig:
    manifest: Path
    out_dir: Path
    metrics: tuple = ALL_METRICS
    scalings: tuple = (2,)
    knn_k: int = 2
    shuffle_levels: tuple | None = None
    seed: int = 0
    threads: int = 1
    fmt: str = "json"
    use_log_id: bool = True
    permutation_shuffles: int | None = None  # adds permutation p-values to correlate

    def __post_init__(self):
        self.manifest = Path(self.manifest)
        self.out_dir = Path(self.out_dir)
        self.metrics = tuple(self.metrics)
        self.scalings = tuple(int(s) for s in self.scalings)
        for m in self.metrics:
            if m not in ALL_METRICS:
                raise ConfigError(f"unknown metric {m!r}; choose from {ALL_METRICS}")
        if not self.metrics:
            raise ConfigError("metrics selection is empty")
        for s in self.scalings:
            if s < 2 or s & (s - 1):
                raise ConfigError(f"scaling {s} is not a power of two >= 2")
        if not 1 <= self.knn_k <= 64:
            raise ConfigError("knn k must be in 1..64")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.fmt not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if self.permutation_shuffles is not None and self.permutation_shuffles < 100:
            raise ConfigError("permutation test needs at least 100 shuffles")

    def describe(self) -> dict:
        return {
            "manifest": self.manifest.name,
            "metrics": list(self.metrics),
            "scalings": list(self.scalings),
            "knn_k": self.knn_k,
            "seed": self.seed,
            "use_log_id": self.use_log_id,
            "schema_version": SCHEMA_VERSION,
        }


@dataclass
class RunResult:
    profiles: list = field(default_factory=list)  # (entry, GeometryProfile, entropy dict or None)
    quarantined: list = field(default_factory=list)  # dicts with prompt_id/s/error
    summary_path: Path | None = None

    @property
    def exit_code(self) -> int:
        return 1 if self.quarantined else 0


def _needed_k(config: RunConfig) -> int:
    k = 2
    if "id" in config.metrics:
        k = max(k, max(config.scalings))
    if "no" in config.metrics:
        k = max(k, config.knn_k)
    return k


def _sweep_at_scalings(graph, scalings) -> ScaleSweep:
    estimates = []
    errors = {}
    for s in scalings:
        try:
            estimates.append(gride(mu_ratios(graph, s // 2, s)))
        except (EstimatorError, ValueError) as exc:
            estimates.append(None)
            errors[s] = str(exc)
    return ScaleSweep(scalings=tuple(scalings), estimates=tuple(estimates), errors=errors)


def analyze_stack(stack, config: RunConfig) -> GeometryProfile:
    """Per-layer observables for one prompt's LayerStack."""
    k = _needed_k(config)
    if k >= stack.n_tokens:
        raise ValueError(f"need more tokens than neighbors: k={k}, n={stack.n_tokens}")
    graphs = [knn(stack.layer(i), k) for i in range(stack.n_layers)]
    entries = []
    for i in range(stack.n_layers):
        graph = graphs[i]
        sweep = _sweep_at_scalings(graph, config.scalings) if "id" in config.metrics else None
        cosine = mean_cosine_similarity(stack.layer(i)) if "cosine" in config.metrics else None
        if "no" in config.metrics and i + 1 < stack.n_layers:
            overlap = neighborhood_overlap(graph, graphs[i + 1], config.knn_k)
        else:
            overlap = None
        if "angles" in config.metrics:
            stats = nn_angles(stack.layer(i), graph)
            angle = stats.mean_angle_deg if np.isfinite(stats.mean_angle_deg) else None
        else:
            angle = None
        entries.append(
            LayerGeometry(
                layer=i,
                id_sweep=sweep,
                mean_cosine=cosine,
                overlap_next=overlap,
                angle_mean_deg=angle,
                degenerate_count=int((graph.distances[:, 0] == 0).sum()),
            )
        )
    return GeometryProfile(
        prompt_id=stack.prompt_id,
        s=0,
        n_tokens=stack.n_tokens,
        dim=stack.dim,
        per_layer=tuple(entries),
    )


def _analyze_entry(entry: ManifestEntry, base: Path, config: RunConfig):
    stack = read_layerstack(base / entry.tgeo, prompt_id=entry.prompt_id)
    profile = analyze_stack(stack, config)
    profile = GeometryProfile(
        prompt_id=profile.prompt_id,
        s=entry.s,
        n_tokens=profile.n_tokens,
        dim=profile.dim,
        per_layer=profile.per_layer,
        logits_id=None,
    )
    entropy = None
    if entry.tglo:
        rec = read_logitrecord(base / entry.tglo)
        if rec.n_tokens != stack.n_tokens:
            raise ValueError(
                f"logit record covers {rec.n_tokens} tokens, stack has {stack.n_tokens}"
            )
        report = contextual_entropy_report(rec)
        entropy = {
            "avg_cross_entropy": report.avg_cross_entropy,
            "avg_contextual_entropy": report.avg_contextual_entropy,
        }
        logits_sweep = None
        if "id" in config.metrics:
            max_s = max(config.scalings)
            if max_s < rec.n_tokens:
                logits_graph = knn(rec.logits.astype(np.float64), max_s)
                logits_sweep = _sweep_at_scalings(logits_graph, config.scalings)
        profile = GeometryProfile(
            prompt_id=profile.prompt_id,
            s=profile.s,
            n_tokens=profile.n_tokens,
            dim=profile.dim,
            per_layer=profile.per_layer,
            logits_id=logits_sweep,
        )
    return profile, entropy


def _profile_filename(entry: ManifestEntry) -> str:
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in entry.prompt_id)
    if safe != entry.prompt_id:
        # distinct raw ids must never collide after sanitization
        digest = hashlib.blake2b(entry.prompt_id.encode("utf-8"), digest_size=4).hexdigest()
        safe = f"{safe}-{digest}"
    return f"{safe}_s{entry.s}.json"


def _run_entries(entries, config: RunConfig) -> RunResult:
    base = config.manifest.parent
    result = RunResult()
    slots: list = [None] * len(entries)

    def work(i: int):
        try:
            slots[i] = ("ok", _analyze_entry(entries[i], base, config))
        except Exception as exc:  # quarantine, keep the run going
            slots[i] = ("err", exc)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(work, range(len(entries))))
    else:
        for i in range(len(entries)):
            work(i)

    for entry, slot in zip(entries, slots):
        status, payload = slot
        if status == "ok":
            profile, entropy = payload
            result.profiles.append((entry, profile, entropy))
        else:
            result.quarantined.append(
                {
                    "prompt_id": entry.prompt_id,
                    "s": entry.s,
                    "error_type": type(payload).__name__,
                    "message": str(payload),
                }
            )
    return result


def _nanstat(values: list) -> dict | None:
    vals = np.array([v for v in values if v is not None], dtype=np.float64)
    if vals.size == 0:
        return None
    return {"mean": float(vals.mean()), "std": float(vals.std()), "n": int(vals.size)}


def _summarize_group(items) -> dict:
    """Per-layer mean/std over the profiles of one shuffle level."""
    n_layers = max(p.n_layers for _, p, _ in items)
    per_layer = []
    for layer in range(n_layers):
        row: dict = {"layer": layer}
        covered = [p for _, p, _ in items if layer < p.n_layers]
        for_scaling = {}
        scalings = sorted({s for p in covered if p.per_layer[layer].id_sweep for s in p.per_layer[layer].id_sweep.scalings})
        for s in scalings:
            stat = _nanstat([p.per_layer[layer].id_at(s) for p in covered])
            if stat is not None:
                for_scaling[str(s)] = stat
        row["id"] = for_scaling or None
        row["mean_cosine"] = _nanstat([p.per_layer[layer].mean_cosine for p in covered])
        row["overlap_next"] = _nanstat([p.per_layer[layer].overlap_next for p in covered])
        row["angle_mean_deg"] = _nanstat([p.per_layer[layer].angle_mean_deg for p in covered])
        row["degenerate_count"] = _nanstat([float(p.per_layer[layer].degenerate_count) for p in covered])
        per_layer.append(row)
    entropy_stats = None
    with_entropy = [e for _, _, e in items if e is not None]
    if with_entropy:
        entropy_stats = {
            "avg_cross_entropy": _nanstat([e["avg_cross_entropy"] for e in with_entropy]),
            "avg_contextual_entropy": _nanstat([e["avg_contextual_entropy"] for e in with_entropy]),
        }
    return {"n_prompts": len(items), "per_layer": per_layer, "entropy": entropy_stats}


def analyze(config: RunConfig) -> RunResult:
    """Run the per-prompt analysis over every manifest entry.

    Writes profiles/<prompt>_s<S>.json per prompt, summary.json for the
    population, and errors.json when prompts were quarantined.
    """
    entries = _load_entries(config)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    profile_dir = config.out_dir / "profiles"
    profile_dir.mkdir(exist_ok=True)

    result = _run_entries(entries, config)
    for entry, profile, entropy in result.profiles:
        doc = profile_to_dict(profile)
        if entropy is not None:
            doc["entropy"] = entropy
        jsonout.dump(doc, profile_dir / _profile_filename(entry))

    groups: dict[int, list] = {}
    for item in result.profiles:
        groups.setdefault(item[0].s, []).append(item)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": config.describe(),
        "n_prompts_ok": len(result.profiles),
        "n_quarantined": len(result.quarantined),
        "by_s": {str(s): _summarize_group(items) for s, items in sorted(groups.items())},
    }
    result.summary_path = config.out_dir / "summary.json"
    jsonout.dump(summary, result.summary_path)
    if result.quarantined:
        jsonout.dump({"errors": result.quarantined}, config.out_dir / "errors.json")
    if config.fmt == "csv":
        _write_profile_csvs(summary, config.out_dir)
    return result


def _load_entries(config: RunConfig) -> list:
    if not config.manifest.exists():
        raise ConfigError(f"manifest not found: {config.manifest}")
    try:
        entries = read_manifest(config.manifest)
    except Exception as exc:
        raise ConfigError(f"unreadable manifest: {exc}") from exc
    if not entries:
        raise ConfigError("manifest lists no prompts")
    return entries


def compare_shuffles(config: RunConfig) -> RunResult:
    """Per-shuffle-level metric curves plus deltas against the structured case."""
    entries = _load_entries(config)
    present_levels = sorted({e.s for e in entries})
    requested = list(config.shuffle_levels) if config.shuffle_levels else present_levels
    if 0 not in present_levels:
        raise ConfigError("compare-shuffles needs S=0 dumps as the baseline")
    run_levels = set(requested) | {0}  # the baseline is always analyzed

    config.out_dir.mkdir(parents=True, exist_ok=True)
    result = _run_entries([e for e in entries if e.s in run_levels], config)

    groups: dict[int, list] = {}
    for item in result.profiles:
        groups.setdefault(item[0].s, []).append(item)
    by_s = {str(s): _summarize_group(items) for s, items in sorted(groups.items())}
    missing = [s for s in requested if s not in groups]

    deltas = {}
    base_group = by_s.get("0")
    for s_label, group in by_s.items():
        if s_label == "0" or base_group is None:
            continue
        deltas[s_label] = _delta_curves(group, base_group)

    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": config.describe(),
        "requested_levels": requested,
        "missing_levels": missing,
        "n_quarantined": len(result.quarantined),
        "by_s": by_s,
        "delta_vs_s0": deltas,
    }
    result.summary_path = config.out_dir / "shuffle_comparison.json"
    jsonout.dump(doc, result.summary_path)
    if result.quarantined:
        jsonout.dump({"errors": result.quarantined}, config.out_dir / "errors.json")
    if config.fmt == "csv":
        _write_profile_csvs({"by_s": by_s, "config": config.describe()}, config.out_dir)
    return result


def _delta_curves(group: dict, base: dict) -> list:
    rows = []
    for row, base_row in zip(group["per_layer"], base["per_layer"]):
        out: dict = {"layer": row["layer"]}
        for metric in ("mean_cosine", "overlap_next", "angle_mean_deg"):
            a, b = row.get(metric), base_row.get(metric)
            out[metric] = (a["mean"] - b["mean"]) if a and b else None
        id_delta = {}
        if row.get("id") and base_row.get("id"):
            for s_key in row["id"]:
                if s_key in base_row["id"]:
                    id_delta[s_key] = row["id"][s_key]["mean"] - base_row["id"][s_key]["mean"]
        out["id"] = id_delta or None
        rows.append(out)
    return rows


def correlate(config: RunConfig) -> Path:
    """Layerwise correlation of (log) ID against loss over analyzed prompts.

    Consumes the profile files written by analyze (structured prompts only,
    s=0).  When logit dumps were present, also correlates the logits-cloud ID
    against the average contextual entropy.
    """
    profile_dir = config.out_dir / "profiles"
    if not profile_dir.is_dir():
        raise ConfigError(f"no profiles under {config.out_dir}; run analyze first")
    docs = []
    for path in sorted(profile_dir.glob("*.json")):
        doc = json.loads(path.read_text())
        if doc.get("s", 0) == 0 and doc.get("entropy"):
            docs.append(doc)
    if len(docs) < 3:
        raise ConfigError(f"need at least 3 structured prompts with entropy data, found {len(docs)}")

    profiles = [profile_from_dict(d) for d in docs]
    loss = np.array([d["entropy"]["avg_cross_entropy"] for d in docs])
    contextual = np.array([d["entropy"]["avg_contextual_entropy"] for d in docs])

    id_vs_loss = {}
    for s in config.scalings:
        ids = np.stack([p.id_profile(s) for p in profiles])
        report = layerwise_correlation(ids, loss, use_log_id=config.use_log_id)
        rows = []
        for lc in report.per_layer:
            x = ids[:, lc.layer]
            valid = np.isfinite(x)
            xv = np.log(x[valid]) if config.use_log_id else x[valid]
            bs = bootstrap_pearson_std(xv, loss[valid], seed=config.seed)
            row = {
                "layer": lc.layer,
                "pearson": lc.pearson,
                "spearman": lc.spearman,
                "p_pearson": lc.p_pearson,
                "p_spearman": lc.p_spearman,
                "n": lc.n,
                "bootstrap_std": bs if math.isfinite(bs) else None,
            }
            if config.permutation_shuffles:
                row["p_pearson_permutation"] = permutation_pvalue(
                    xv, loss[valid], n_shuffles=config.permutation_shuffles, seed=config.seed
                )
            rows.append(row)
        id_vs_loss[str(s)] = {
            "per_layer": rows,
            "flagged": {str(k): v for k, v in report.flagged.items()},
        }

    logits_block = None
    logits_ids = {
        s: np.array(
            [p.logits_id.by_scaling(s).d_hat if p.logits_id and p.logits_id.by_scaling(s) else np.nan for p in profiles]
        )
        for s in config.scalings
    }
    if any(np.isfinite(v).sum() >= 3 for v in logits_ids.values()):
        logits_block = {}
        for s, vals in logits_ids.items():
            valid = np.isfinite(vals)
            if valid.sum() < 3:
                logits_block[str(s)] = None
                continue
            x = np.log(vals[valid]) if config.use_log_id else vals[valid]
            rho_p, p_p = pearson(x, contextual[valid])
            rho_s, p_s = spearman(x, contextual[valid])
            logits_block[str(s)] = {
                "pearson": rho_p,
                "p_pearson": p_p,
                "spearman": rho_s,
                "p_spearman": p_s,
                "n": int(valid.sum()),
            }

    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": config.describe(),
        "n_prompts": len(docs),
        "id_vs_loss": id_vs_loss,
        "logits_id_vs_contextual_entropy": logits_block,
    }
    out_path = config.out_dir / "correlation.json"
    jsonout.dump(doc, out_path)
    if config.fmt == "csv":
        _write_correlation_csv(doc, config.out_dir)
    return out_path


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return jsonout.format_float(value)
    return str(value)


def _write_rows(path: Path, header: list, rows: list) -> None:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    path.write_text(buf.getvalue())


def _write_profile_csvs(summary: dict, out_dir: Path) -> None:
    id_rows, cosine_rows, overlap_rows, angle_rows = [], [], [], []
    for s_label, group in sorted(summary["by_s"].items(), key=lambda kv: int(kv[0])):
        for row in group["per_layer"]:
            layer = row["layer"]
            if row.get("id"):
                for scaling, stat in sorted(row["id"].items(), key=lambda kv: int(kv[0])):
                    id_rows.append([layer, s_label, scaling, stat["mean"], stat["std"], stat["n"]])
            for rows, metric in (
                (cosine_rows, "mean_cosine"),
                (overlap_rows, "overlap_next"),
                (angle_rows, "angle_mean_deg"),
            ):
                stat = row.get(metric)
                if stat:
                    rows.append([layer, s_label, stat["mean"], stat["std"], stat["n"]])
    _write_rows(out_dir / "id_profile.csv", ["layer", "s", "scaling", "mean", "std", "n"], id_rows)
    _write_rows(out_dir / "cosine_profile.csv", ["layer", "s", "mean", "std", "n"], cosine_rows)
    _write_rows(out_dir / "overlap_profile.csv", ["layer", "s", "mean", "std", "n"], overlap_rows)
    _write_rows(out_dir / "angle_profile.csv", ["layer", "s", "mean", "std", "n"], angle_rows)


def _write_correlation_csv(doc: dict, out_dir: Path) -> None:
    rows = []
    for scaling, block in sorted(doc["id_vs_loss"].items(), key=lambda kv: int(kv[0])):
        for row in block["per_layer"]:
            rows.append(
                [
                    row["layer"],
                    scaling,
                    row["pearson"],
                    row["p_pearson"],
                    row["spearman"],
                    row["p_spearman"],
                    row["bootstrap_std"],
                    row["n"],
                ]
            )
    _write_rows(
        out_dir / "correlation.csv",
        ["layer", "scaling", "pearson", "p_pearson", "spearman", "p_spearman", "bootstrap_std", "n"],
        rows,
    )
