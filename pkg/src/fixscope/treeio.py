"""Serialized-tree and corpus I/O.

Tree documents are UTF-8 JSON: node objects with fields "type" (required),
"label", "children", "span" and optionally "id"; unknown fields are ignored.
Corpus files are JSON Lines, one submission pair per line, carrying either
MiniLang sources or serialized trees for each side.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

from .errors import FormatError
from .minilang import parse_minilang
from .tree import AstTree, AstNode, DraftNode, freeze


@dataclass(frozen=True)
class SubmissionPair:
    pair_id: str
    problem_id: str
    incorrect_tree: AstTree
    correct_tree: AstTree
    ground_truth_label: Optional[str] = None


def read_tree(document: Union[dict, str, bytes]) -> AstTree:
    """Build an AstTree from a serialized tree document (dict or JSON text).

    Node ids are re-assigned in pre-order regardless of any explicit "id"
    fields; explicit ids are only checked for duplicates. Raises FormatError
    naming the offending path for a missing type, a cycle, or duplicate ids.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise FormatError("top-level document must be a node object")

    seen_ids: set = set()

    def build(obj: dict, path: str, on_path: set) -> DraftNode:
        if id(obj) in on_path:
            raise FormatError("node appears as its own descendant (cycle)", path)
        if not isinstance(obj, dict):
            raise FormatError("node must be an object", path)
        node_type = obj.get("type")
        if not isinstance(node_type, str) or not node_type:
            raise FormatError("missing or empty node_type", path)
        label = obj.get("label")
        if label is not None and not isinstance(label, str):
            raise FormatError("label must be a string", path)
        explicit = obj.get("id")
        if explicit is not None:
            if explicit in seen_ids:
                raise FormatError(f"duplicate explicit id {explicit}", path)
            seen_ids.add(explicit)
        span = (0, 0)
        raw_span = obj.get("span")
        if raw_span is not None:
            if (not isinstance(raw_span, (list, tuple)) or len(raw_span) != 2
                    or not all(isinstance(v, int) for v in raw_span)):
                raise FormatError("span must be a two-integer array", path)
            span = (raw_span[0], raw_span[1])
        children_raw = obj.get("children", [])
        if not isinstance(children_raw, list):
            raise FormatError("children must be an array", path)
        on_path = on_path | {id(obj)}
        children = [build(c, f"{path}.children[{i}]", on_path)
                    for i, c in enumerate(children_raw)]
        return DraftNode(node_type, label, children, span)

    return freeze(build(document, "$", set()))


def write_tree(tree: AstTree) -> dict:
    """Serialize a tree to the document format (round-trips via read_tree)."""

    def emit(node: AstNode) -> dict:
        obj: dict = {"type": node.node_type}
        if node.label is not None:
            obj["label"] = node.label
        if node.children:
            obj["children"] = [emit(c) for c in node.children]
        if node.span != (0, 0):
            obj["span"] = list(node.span)
        return obj

    return emit(tree.root)


# ---------------------------------------------------------------------------
# Corpus files

def pair_from_record(record: dict, line_no: int = 0) -> SubmissionPair:
    where = f"$[line {line_no}]"
    pair_id = record.get("pair_id")
    if not isinstance(pair_id, str):
        raise FormatError("missing pair_id", where)
    problem_id = record.get("problem_id", "")

    def side(name: str) -> AstTree:
        src = record.get(f"{name}_src")
        if src is not None:
            return parse_minilang(src)
        doc = record.get(f"{name}_tree")
        if doc is None:
            raise FormatError(f"need {name}_src or {name}_tree", where)
        return read_tree(doc)

    return SubmissionPair(
        pair_id=pair_id,
        problem_id=problem_id,
        incorrect_tree=side("incorrect"),
        correct_tree=side("correct"),
        ground_truth_label=record.get("label"),
    )


def pair_to_record(pair: SubmissionPair) -> dict:
    record: dict = {"pair_id": pair.pair_id, "problem_id": pair.problem_id}
    if pair.incorrect_tree.source_text is not None:
        record["incorrect_src"] = pair.incorrect_tree.source_text
    else:
        record["incorrect_tree"] = write_tree(pair.incorrect_tree)
    if pair.correct_tree.source_text is not None:
        record["correct_src"] = pair.correct_tree.source_text
    else:
        record["correct_tree"] = write_tree(pair.correct_tree)
    if pair.ground_truth_label is not None:
        record["label"] = pair.ground_truth_label
    return record


def read_corpus(path: str) -> list[SubmissionPair]:
    pairs: list[SubmissionPair] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc}", f"$[line {line_no}]") from exc
            pair = pair_from_record(record, line_no)
            if pair.pair_id in seen:
                raise FormatError(f"duplicate pair_id {pair.pair_id!r}",
                                  f"$[line {line_no}]")
            seen.add(pair.pair_id)
            pairs.append(pair)
    return pairs


def write_corpus(pairs: list[SubmissionPair], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair_to_record(pair), ensure_ascii=False) + "\n")
