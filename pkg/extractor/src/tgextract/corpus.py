"""Corpus loading: JSONL prompts with raw text or pre-tokenized ids.

Each line is an object with an optional "id" and either "text" (requires a
tokenizer) or "input_ids" (used as-is).  Prompts below the minimum token
count are filtered out; survivors are truncated to the target length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class Prompt:
    prompt_id: str
    input_ids: list
    source: dict


def iter_prompts(dataset_path, min_tokens: int, truncate: int, tokenizer=None, max_prompts=None):
    """Yield filtered, truncated prompts from a JSONL corpus."""
    path = Path(dataset_path)
    if not path.is_file():
        raise FileNotFoundError(
            f"dataset {path} not found; expected a JSONL file with 'text' or 'input_ids' per line"
        )
    produced = 0
    with open(path) as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            prompt_id = str(row.get("id", f"prompt{line_no:05d}"))
            if "input_ids" in row:
                ids = [int(t) for t in row["input_ids"]]
                source = {"origin": path.name, "line": line_no, "pretokenized": True}
            elif "text" in row:
                if tokenizer is None:
                    raise ValueError(f"{path}:{line_no}: text rows need a tokenizer")
                ids = tokenizer(row["text"])["input_ids"]
                source = {"origin": path.name, "line": line_no, "pretokenized": False}
            else:
                raise ValueError(f"{path}:{line_no}: row has neither 'text' nor 'input_ids'")
            if len(ids) < min_tokens:
                continue
            yield Prompt(prompt_id=prompt_id, input_ids=ids[:truncate], source=source)
            produced += 1
            if max_prompts is not None and produced >= max_prompts:
                return
