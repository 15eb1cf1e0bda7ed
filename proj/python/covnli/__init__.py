"""Python access to the covnli core.

Examples are plain dicts with ``premise``/``hypothesis`` token lists, a
``label`` string and a ``provenance`` tag, the same records as the JSONL files.
"""

from __future__ import annotations

import json
from os import PathLike
from typing import Any, Iterable, Mapping, Sequence

from . import _covnli
from ._covnli import ConfigError, TrainingError

__all__ = [
    "ConfigError",
    "TrainingError",
    "generate",
    "write_dataset",
    "train",
    "evaluate",
    "grid_search",
    "coverage",
    "gradcheck",
]

Example = Mapping[str, Any]


def _to_jsonl(examples: Iterable[Example]) -> str:
    return "".join(json.dumps(dict(ex)) + "\n" for ex in examples)


def _from_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line]


def generate(spec: Mapping[str, Any] | None = None) -> dict[str, list[dict]]:
    """All four splits for a generation spec ({"seed", "cue_rate", "sizes"})."""
    splits = json.loads(_covnli.generate(json.dumps(dict(spec or {}))))
    return {name: _from_jsonl(text) for name, text in splits.items()}


def write_dataset(directory: str | PathLike, spec: Mapping[str, Any] | None = None) -> dict:
    """Writes the JSONL splits and manifest.json; returns the manifest."""
    return json.loads(_covnli.write_dataset(str(directory), json.dumps(dict(spec or {}))))


def train(config: Mapping[str, Any], train_set: Sequence[Example], dev_set: Sequence[Example]) -> tuple[dict, dict]:
    """Returns (report, checkpoint)."""
    report, checkpoint = _covnli.train(json.dumps(dict(config)), _to_jsonl(train_set), _to_jsonl(dev_set))
    return json.loads(report), json.loads(checkpoint)


def evaluate(checkpoint: Mapping[str, Any], examples: Sequence[Example]) -> float:
    return _covnli.evaluate(json.dumps(dict(checkpoint)), _to_jsonl(examples))


def grid_search(config: Mapping[str, Any], train_set: Sequence[Example], dev_set: Sequence[Example]) -> dict:
    return json.loads(_covnli.grid_search(json.dumps(dict(config)), _to_jsonl(train_set), _to_jsonl(dev_set)))


def coverage(
    premise: Sequence[str] | str,
    hypothesis: Sequence[str] | str,
    checkpoint: Mapping[str, Any] | None = None,
    seed: int = 0,
    layer: str = "embedding",
) -> dict[str, list]:
    """C, Q, C', Q' (and raw argmax positions) for one pair.

    Without a checkpoint the untrained model for ``seed`` is used.
    """
    if isinstance(premise, str):
        premise = premise.split()
    if isinstance(hypothesis, str):
        hypothesis = hypothesis.split()
    ckpt = json.dumps(dict(checkpoint)) if checkpoint is not None else ""
    return json.loads(_covnli.coverage(list(premise), list(hypothesis), ckpt, seed, layer))


def gradcheck(scope: str = "ops", points: int = 10, seed: int = 0) -> dict:
    return json.loads(_covnli.gradcheck(scope, points, seed))
