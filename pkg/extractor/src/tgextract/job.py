"""Extraction job configuration."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass
class ExtractionJob:
    model: str
    dataset: str
    out_dir: Path
    min_tokens: int = 1024
    truncate: int = 1024
    shuffle_levels: tuple = (0,)
    seed: int = 0
    device: str = "cpu"
    max_prompts: int | None = None
    tglo_all_levels: bool = False

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.shuffle_levels = tuple(int(s) for s in self.shuffle_levels)
        if self.truncate > self.min_tokens:
            raise ValueError("truncation length must not exceed the minimum token filter")
        if self.truncate < 2:
            raise ValueError("need at least 2 tokens per prompt")
        if any(s < 0 for s in self.shuffle_levels):
            raise ValueError("shuffle levels must be non-negative")
        if 4 ** max(self.shuffle_levels) > self.truncate:
            raise ValueError("largest shuffle level exceeds the full-shuffle index of truncated prompts")
