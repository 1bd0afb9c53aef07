"""Access to the bundled problem corpus (one JSON file per system)."""

from __future__ import annotations

import json
from importlib import resources

from ..pipeline import ProblemSpec, problem_from_dict

CORPUS_NAMES = (
    "dissipative",
    "exp-class",
    "lienard",
    "log-class",
    "moebius",
    "homogeneous",
    "free-particle",
)


def corpus_text(name: str) -> str:
    if name not in CORPUS_NAMES:
        raise KeyError(f"no corpus problem named '{name}'")
    return (resources.files(__name__) / f"{name}.json").read_text(encoding="utf-8")


def load_corpus_problem(name: str) -> ProblemSpec:
    return problem_from_dict(json.loads(corpus_text(name)))
