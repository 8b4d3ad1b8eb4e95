"""Layerwise hidden-state and logit extraction from causal language models."""

from .corpus import Prompt, iter_prompts
from .dumpio import manifest_entry, write_manifest, write_tgeo, write_tglo
from .job import ExtractionJob
from .runner import ExtractionResult, TokenizerMismatchError, extract, forward_dump
from .shuffler import apply_permutation, invert_permutation, permutation_from_cli

__version__ = "0.1.0"
