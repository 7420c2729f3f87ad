"""Synthetic corpus generation: plant known error types into correct programs.

A seeded template pool of small MiniLang programs stands in for real
submission history. Each pair is produced by applying one mutation operator
to a sampled correct program; the operator id becomes the pair's ground
truth label. Operator assignment is balanced across the corpus so label
counts stay near uniform at any seed.
"""
from __future__ import annotations

import random
import re
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import OperatorInapplicable
from .minilang import COMPARISON_OPS, parse_minilang, unparse
from .tree import AstNode, AstTree, DraftNode, freeze, preorder, trees_identical
from .treeio import SubmissionPair

TEMPLATES: tuple[str, ...] = (
    # running sum with an early exit
    "n = 10;\n"
    "total = 0;\n"
    "i = 1;\n"
    "while (i <= n) {\n"
    "    total = total + i;\n"
    "    i = i + 1;\n"
    "}\n"
    "return total;\n",
    # clamp a value into a range
    "lo = 0;\n"
    "hi = 100;\n"
    "x = read();\n"
    "if (x < lo) {\n"
    "    x = lo;\n"
    "}\n"
    "if (x > hi) {\n"
    "    x = hi;\n"
    "}\n"
    "print(x);\n",
    # max of two inputs, floored at zero
    "a = read();\n"
    "b = read();\n"
    "best = 0;\n"
    "if (a > best) {\n"
    "    best = a;\n"
    "}\n"
    "if (b > best) {\n"
    "    best = b;\n"
    "}\n"
    "return best;\n",
    # absolute difference
    "a = read();\n"
    "b = read();\n"
    "d = a - b;\n"
    "if (d < 0) {\n"
    "    d = 0 - d;\n"
    "}\n"
    "return d;\n",
    # countdown with a step
    "count = 5;\n"
    "step = 1;\n"
    "while (count > 0) {\n"
    "    print(count);\n"
    "    count = count - step;\n"
    "}\n",
    # parity check via repeated subtraction
    "n = read();\n"
    "m = n;\n"
    "while (m >= 2) {\n"
    "    m = m - 2;\n"
    "}\n"
    "if (m == 1) {\n"
    "    print(1);\n"
    "} else {\n"
    "    print(0);\n"
    "}\n",
    # simple power loop
    "base = 2;\n"
    "exp = 8;\n"
    "result = 1;\n"
    "k = 0;\n"
    "while (k < exp) {\n"
    "    result = result * base;\n"
    "    k = k + 1;\n"
    "}\n"
    "return result;\n",
    # function with a guard
    "def safe_div(a, b) {\n"
    "    if (b == 0) {\n"
    "        return 0;\n"
    "    }\n"
    "    return a / b;\n"
    "}\n"
    "x = read();\n"
    "y = read();\n"
    "print(safe_div(x, y));\n",
    # grading threshold
    "score = read();\n"
    "passed = 0;\n"
    "if (score >= 60) {\n"
    "    passed = 1;\n"
    "}\n"
    "print(passed);\n",
    # accumulate until a cap
    "cap = 50;\n"
    "acc = 0;\n"
    "v = 3;\n"
    "while (acc + v <= cap) {\n"
    "    acc = acc + v;\n"
    "}\n"
    "return acc;\n",
    # min of three via function, clamped to at least one
    "def min2(p, q) {\n"
    "    if (p <= q) {\n"
    "        return p;\n"
    "    }\n"
    "    return q;\n"
    "}\n"
    "a = read();\n"
    "b = read();\n"
    "c = read();\n"
    "m = min2(min2(a, b), c);\n"
    "if (m < 1) {\n"
    "    m = 1;\n"
    "}\n"
    "return m;\n",
    # scaled difference with offset
    "offset = 7;\n"
    "scale = 2;\n"
    "x = read();\n"
    "y = (x - offset) * scale;\n"
    "if (y != 0) {\n"
    "    print(y);\n"
    "}\n"
    "return y;\n",
)

_INT_RE = re.compile(r"^\d+$")


@dataclass(frozen=True)
class MutationOperator:
    """A plantable error type: where it applies and how it corrupts a tree."""

    operator_id: str
    description: str
    candidates: Callable[[AstTree], list[int]]
    transform: Callable[[AstTree, int, random.Random], AstTree]

    def applicable(self, tree: AstTree) -> bool:
        return bool(self.candidates(tree))

    def apply(self, tree: AstTree, rng: random.Random) -> AstTree:
        node_ids = self.candidates(tree)
        if not node_ids:
            raise OperatorInapplicable(
                f"{self.operator_id} has no candidate node in this tree")
        return self.transform(tree, rng.choice(node_ids), rng)


# -- tree surgery (rebuild, then round-trip through source) ------------------

def _rebuild(tree: AstTree,
             rewrite: Callable[[AstNode, list[DraftNode]], Optional[list[DraftNode]]]
             ) -> AstTree:
    """Rebuild a tree; rewrite(node, drafted_children) may return replacement
    draft(s) for that node, [] to drop it, or None to keep it as-is."""

    def build(node: AstNode) -> list[DraftNode]:
        kids: list[DraftNode] = []
        for c in node.children:
            kids.extend(build(c))
        replaced = rewrite(node, kids)
        if replaced is not None:
            return replaced
        return [DraftNode(node.node_type, node.label, kids, node.span)]

    roots = build(tree.root)
    assert len(roots) == 1, "root cannot be dropped or duplicated"
    mutated = freeze(roots[0])
    source = unparse(mutated)
    return parse_minilang(source)


def _set_label(tree: AstTree, node_id: int, new_label: str) -> AstTree:
    def rewrite(node: AstNode, kids: list[DraftNode]):
        if node.id == node_id:
            return [DraftNode(node.node_type, new_label, kids, node.span)]
        return None

    return _rebuild(tree, rewrite)


def _drop_node(tree: AstTree, node_id: int) -> AstTree:
    def rewrite(node: AstNode, kids: list[DraftNode]):
        if node.id == node_id:
            return []
        return None

    return _rebuild(tree, rewrite)


def _duplicate_node(tree: AstTree, node_id: int) -> AstTree:
    def rewrite(node: AstNode, kids: list[DraftNode]):
        if node.id == node_id:
            d = DraftNode(node.node_type, node.label, kids, node.span)
            return [d, DraftNode(node.node_type, node.label,
                                 [_copy_draft(k) for k in kids], node.span)]
        return None

    return _rebuild(tree, rewrite)


def _copy_draft(d: DraftNode) -> DraftNode:
    return DraftNode(d.node_type, d.label, [_copy_draft(c) for c in d.children],
                     d.span)


# -- the shipped operators ----------------------------------------------------

def _statement_nodes(tree: AstTree) -> list[int]:
    out = []
    for n in preorder(tree.root):
        if n.node_type in ("Program", "Block"):
            out.extend(c.id for c in n.children)
    return sorted(out)


def _comparison_nodes(tree: AstTree) -> list[int]:
    return sorted(n.id for n in preorder(tree.root)
                  if n.node_type == "BinOp" and n.label in COMPARISON_OPS)


def _int_literal_nodes(tree: AstTree) -> list[int]:
    return sorted(n.id for n in preorder(tree.root)
                  if n.node_type == "Literal" and _INT_RE.match(n.label or ""))


def _name_use_nodes(tree: AstTree) -> list[int]:
    """Name nodes outside parameter lists, usable only when another name is
    in scope to swap in."""
    if len(_names_in_scope(tree)) < 2:
        return []
    param_ids = set()
    for n in preorder(tree.root):
        if n.node_type == "Params":
            param_ids.update(c.id for c in n.children)
    return sorted(n.id for n in preorder(tree.root)
                  if n.node_type == "Name" and n.id not in param_ids)


def _names_in_scope(tree: AstTree) -> list[str]:
    return sorted({n.label for n in preorder(tree.root)
                   if n.node_type == "Name" and n.label})


def _wrong_comparison(tree: AstTree, node_id: int, rng: random.Random) -> AstTree:
    node = next(n for n in preorder(tree.root) if n.id == node_id)
    others = [op for op in COMPARISON_OPS if op != node.label]
    return _set_label(tree, node_id, rng.choice(others))


def _off_by_one(tree: AstTree, node_id: int, rng: random.Random) -> AstTree:
    node = next(n for n in preorder(tree.root) if n.id == node_id)
    value = int(node.label)
    if value == 0:
        new_value = 1
    else:
        new_value = value + rng.choice((-1, 1))
    return _set_label(tree, node_id, str(new_value))


def _wrong_variable(tree: AstTree, node_id: int, rng: random.Random) -> AstTree:
    node = next(n for n in preorder(tree.root) if n.id == node_id)
    others = [name for name in _names_in_scope(tree) if name != node.label]
    return _set_label(tree, node_id, rng.choice(others))


WRONG_COMPARISON = MutationOperator(
    "WRONG_COMPARISON", "swap one comparison operator",
    _comparison_nodes, _wrong_comparison)
OFF_BY_ONE = MutationOperator(
    "OFF_BY_ONE", "perturb one integer literal by +/-1",
    _int_literal_nodes, _off_by_one)
MISSING_STATEMENT = MutationOperator(
    "MISSING_STATEMENT", "delete one statement",
    _statement_nodes, lambda tree, nid, rng: _drop_node(tree, nid))
WRONG_VARIABLE = MutationOperator(
    "WRONG_VARIABLE", "replace one identifier use with another in scope",
    _name_use_nodes, _wrong_variable)
EXTRA_STATEMENT = MutationOperator(
    "EXTRA_STATEMENT", "duplicate one statement",
    _statement_nodes, lambda tree, nid, rng: _duplicate_node(tree, nid))

DEFAULT_OPERATORS = (WRONG_COMPARISON, OFF_BY_ONE, MISSING_STATEMENT,
                     WRONG_VARIABLE)
OPERATORS = {op.operator_id: op for op in DEFAULT_OPERATORS + (EXTRA_STATEMENT,)}


def generate_synthetic_corpus(n_pairs: int,
                              operators: tuple = DEFAULT_OPERATORS,
                              seed: int = 0,
                              problem_id: str = "synth",
                              id_prefix: str = "synth") -> list[SubmissionPair]:
    """n_pairs {incorrect, correct} pairs with planted, labeled error types.

    Operators that apply to no template are dropped with a warning; the
    remaining operators are assigned in balanced, seeded-shuffled rotation
    so label counts stay within one of each other.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if not operators:
        raise ValueError("operators must be nonempty")
    rng = random.Random(seed)
    templates = [parse_minilang(t) for t in TEMPLATES]

    usable = []
    for op in operators:
        if any(op.applicable(t) for t in templates):
            usable.append(op)
        else:
            warnings.warn(f"operator {op.operator_id} applies to no template; "
                          "skipped", stacklevel=2)
    if not usable:
        raise OperatorInapplicable("no operator applies to any template")

    assignment = [usable[i % len(usable)] for i in range(n_pairs)]
    rng.shuffle(assignment)

    pairs: list[SubmissionPair] = []
    for i, op in enumerate(assignment):
        order = list(range(len(templates)))
        rng.shuffle(order)
        for t_idx in order:
            correct = templates[t_idx]
            if not op.applicable(correct):
                continue
            incorrect = op.apply(correct, rng)
            if trees_identical(incorrect, correct):
                continue  # operator contract violated; try another template
            pairs.append(SubmissionPair(
                pair_id=f"{id_prefix}-{i:04d}",
                problem_id=problem_id,
                incorrect_tree=incorrect,
                correct_tree=correct,
                ground_truth_label=op.operator_id,
            ))
            break
        else:
            raise OperatorInapplicable(
                f"{op.operator_id} produced no structural change on any template")
    return pairs
