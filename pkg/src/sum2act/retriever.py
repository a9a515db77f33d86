"""Candidate-tool selection: lexical TF-IDF ranking plus an oracle mode that
returns the ground-truth tools for an instruction.

Tokenization contract (stable): lowercase, ASCII punctuation stripped,
split on Unicode whitespace. Term frequency is the raw token count; inverse
document frequency is ln(N / df) over the catalog documents (name plus
description), so scores are invariant under duplicating every document.
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass

from .core import ParamSpec, ToolSpec
from .errors import CatalogMismatchError, ConfigurationError, OracleLookupError

_PUNCT_TABLE = str.maketrans({ch: " " for ch in string.punctuation})


def tokenize(text: str) -> list[str]:
    return text.lower().translate(_PUNCT_TABLE).split()


@dataclass(frozen=True)
class RankedTool:
    tool: ToolSpec
    score: float


def _counts(tokens: list[str]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for token in tokens:
        counts[token] = counts.get(token, 0) + 1
    return counts


def rank(instruction_text: str, catalog: list[ToolSpec], k: int) -> list[RankedTool]:
    """Top-k tools by cosine similarity of TF-IDF vectors, ties broken by
    ascending tool name so the ordering is total and deterministic."""
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if not catalog:
        return []

    documents = [_counts(tokenize(f"{tool.name} {tool.description}")) for tool in catalog]
    df: dict[str, int] = {}
    for counts in documents:
        for term in counts:
            df[term] = df.get(term, 0) + 1
    total = len(documents)
    idf = {term: math.log(total / count) for term, count in df.items()}

    query_counts = _counts(tokenize(instruction_text))
    query_vector = {
        term: tf * idf[term] for term, tf in query_counts.items() if term in idf
    }
    query_norm = math.sqrt(sum(w * w for w in query_vector.values()))

    ranked = []
    for tool, counts in zip(catalog, documents):
        vector = {term: tf * idf[term] for term, tf in counts.items()}
        norm = math.sqrt(sum(w * w for w in vector.values()))
        if query_norm == 0 or norm == 0:
            score = 0.0
        else:
            dot = sum(
                weight * vector[term]
                for term, weight in query_vector.items()
                if term in vector
            )
            score = dot / (query_norm * norm)
        ranked.append(RankedTool(tool=tool, score=score))

    ranked.sort(key=lambda r: (-r.score, r.tool.name))
    return ranked[: min(k, len(ranked))]


def oracle(instruction, ground_truth: dict, catalog: list[ToolSpec]) -> list[ToolSpec]:
    """Return exactly the ground-truth tools for the instruction, in
    ground-truth order."""
    if instruction.id not in ground_truth:
        raise OracleLookupError(
            f"instruction id {instruction.id!r} missing from ground truth"
        )
    by_name = {tool.name: tool for tool in catalog}
    selected = []
    for name in ground_truth[instruction.id]:
        if name not in by_name:
            raise CatalogMismatchError(name)
        selected.append(by_name[name])
    return selected


def load_catalog(path) -> list[ToolSpec]:
    """Tool catalog file: JSON list of ToolSpec records."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, list):
        raise ConfigurationError(f"{path}: tool catalog must be a JSON list")
    tools = []
    for item in data:
        tools.append(
            ToolSpec(
                name=item["name"],
                description=item.get("description", ""),
                params=tuple(
                    ParamSpec(
                        name=p["name"],
                        type_tag=p.get("type", "string"),
                        required=bool(p.get("required", False)),
                        description=p.get("description", ""),
                    )
                    for p in item.get("params", [])
                ),
                category=item.get("category"),
            )
        )
    return tools


def load_ground_truth(path) -> dict:
    """Ground-truth file: JSON map of instruction id to tool-name list."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: ground truth must be a JSON object")
    return {str(key): [str(name) for name in names] for key, names in data.items()}
