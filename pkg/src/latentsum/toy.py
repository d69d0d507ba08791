"""Bundled synthetic corpus.

Each document mixes templated "key" sentences (subject, verb, object,
plus modifiers) with filler sentences drawn from a disjoint vocabulary.
The gold summary is the key sentences with their modifiers deleted, so
oracle extraction is learnable from content and compression reduces to
a consistent deletion pattern.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .numerics.checkpoint import atomic_write_text

NAMES = ("anna", "omar", "kira", "lee", "mara", "paul", "rosa", "sam")
VERBS = ("built", "found", "painted", "sold", "fixed", "moved")
ADJECTIVES = ("old", "red", "small", "broken", "quiet", "bright")
OBJECTS = ("mill", "boat", "fence", "tower", "bridge", "cart", "barn", "well")
PLACES = ("valley", "harbor", "meadow", "village", "forest", "canyon")
FILLER_SUBJECTS = ("clouds", "wind", "rain", "birds", "traffic", "music", "dust", "fog")
FILLER_VERBS = ("drifted", "murmured", "lingered", "swirled", "faded", "hummed")
FILLER_ADVERBS = ("slowly", "gently", "everywhere", "overhead", "nearby", "onward")

SPLIT_SIZES = {"train": 50, "valid": 10, "test": 10}


def _pick(rng, options):
    return options[int(rng.integers(len(options)))]


def _key_sentence(rng) -> tuple[str, str]:
    """(document sentence, its compressed summary form)."""
    name = _pick(rng, NAMES)
    verb = _pick(rng, VERBS)
    adj = _pick(rng, ADJECTIVES)
    obj = _pick(rng, OBJECTS)
    place = _pick(rng, PLACES)
    full = f"{name} {verb} the {adj} {obj} in the {place} ."
    short = f"{name} {verb} the {obj} ."
    return full, short


def _filler_sentence(rng) -> str:
    subj = _pick(rng, FILLER_SUBJECTS)
    verb = _pick(rng, FILLER_VERBS)
    adv = _pick(rng, FILLER_ADVERBS)
    return f"{subj} {verb} {adv} ."


def make_record(doc_id: str, rng) -> dict:
    n_sentences = int(rng.integers(4, 7))
    key_positions = sorted(rng.choice(n_sentences, size=2, replace=False).tolist())
    sentences: list[str] = []
    summary: list[str] = []
    for position in range(n_sentences):
        if position in key_positions:
            full, short = _key_sentence(rng)
            sentences.append(full)
            summary.append(short)
        else:
            sentences.append(_filler_sentence(rng))
    return {"id": doc_id, "document": sentences, "summary": summary}


def generate_toy_corpus(seed: int) -> dict[str, list[dict]]:
    rng = np.random.default_rng(seed)
    splits: dict[str, list[dict]] = {}
    for split, size in SPLIT_SIZES.items():
        splits[split] = [
            make_record(f"{split}-{index:04d}", rng) for index in range(size)
        ]
    return splits


def write_toy_corpus(out_dir, seed: int) -> dict[str, Path]:
    out_dir = Path(out_dir)
    written: dict[str, Path] = {}
    for split, records in generate_toy_corpus(seed).items():
        lines = [json.dumps(r, sort_keys=True) for r in records]
        path = out_dir / f"{split}.jsonl"
        atomic_write_text(path, "\n".join(lines) + "\n")
        written[split] = path
    return written
