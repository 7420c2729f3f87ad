"""Ordered labeled AST data model: immutable nodes, trees, traversals, hashing.

Nodes are frozen after construction and safe to share between threads. Node
ids are pre-order indices re-assigned whenever a tree is built, so a node id
doubles as a stable address within its tree.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional


@dataclass(frozen=True)
class AstNode:
    """One node of an ordered labeled tree.

    ``span`` is (start_offset, length) in characters of the original source,
    (0, 0) for synthetic nodes.
    """

    id: int
    node_type: str
    label: Optional[str]
    children: tuple["AstNode", ...] = ()
    span: tuple[int, int] = (0, 0)

    def is_leaf(self) -> bool:
        return not self.children

    def __repr__(self) -> str:  # compact, for test failure messages
        return f"AstNode({self.id}, {to_compact_string(self)!r})"


@dataclass(frozen=True)
class AstTree:
    root: AstNode
    size: int
    height: int
    source_text: Optional[str] = None


# ---------------------------------------------------------------------------
# Construction

class DraftNode:
    """Mutable node used while building a tree; frozen by :func:`freeze`."""

    __slots__ = ("node_type", "label", "children", "span")

    def __init__(self, node_type: str, label: Optional[str] = None,
                 children: Optional[list] = None, span: tuple[int, int] = (0, 0)):
        self.node_type = node_type
        self.label = label
        self.children = children if children is not None else []
        self.span = span


def freeze(draft: DraftNode, source_text: Optional[str] = None) -> AstTree:
    """Assign pre-order ids starting at 0 and produce an immutable AstTree."""
    counter = [0]

    def build(d: DraftNode) -> tuple[AstNode, int, int]:
        nid = counter[0]
        counter[0] += 1
        kids = []
        size = 1
        height = 1
        for c in d.children:
            node, csize, cheight = build(c)
            kids.append(node)
            size += csize
            height = max(height, cheight + 1)
        return AstNode(nid, d.node_type, d.label, tuple(kids), d.span), size, height

    root, size, height = build(draft)
    return AstTree(root=root, size=size, height=height, source_text=source_text)


def tree_from_node(node: AstNode, source_text: Optional[str] = None) -> AstTree:
    """Re-root an existing node as a tree, re-assigning pre-order ids."""
    return freeze(to_draft(node), source_text=source_text)


def to_draft(node: AstNode) -> DraftNode:
    return DraftNode(node.node_type, node.label,
                     [to_draft(c) for c in node.children], node.span)


# ---------------------------------------------------------------------------
# Traversal

def preorder(node: AstNode) -> Iterator[AstNode]:
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))


def postorder(node: AstNode) -> Iterator[AstNode]:
    # iterative to stay safe on deep external trees
    stack: list[tuple[AstNode, bool]] = [(node, False)]
    while stack:
        n, expanded = stack.pop()
        if expanded:
            yield n
        else:
            stack.append((n, True))
            stack.extend((c, False) for c in reversed(n.children))


def bfs(node: AstNode) -> Iterator[AstNode]:
    queue = [node]
    i = 0
    while i < len(queue):
        n = queue[i]
        i += 1
        yield n
        queue.extend(n.children)


def parent_map(root: AstNode) -> dict[int, Optional[AstNode]]:
    """node id -> parent node (None for the root)."""
    parents: dict[int, Optional[AstNode]] = {root.id: None}
    for n in preorder(root):
        for c in n.children:
            parents[c.id] = n
    return parents


def node_index(root: AstNode) -> dict[int, AstNode]:
    return {n.id: n for n in preorder(root)}


def subtree_heights(root: AstNode) -> dict[int, int]:
    """node id -> height of the subtree rooted there (leaf = 1)."""
    heights: dict[int, int] = {}
    for n in postorder(root):
        heights[n.id] = 1 + max((heights[c.id] for c in n.children), default=0)
    return heights


def subtree_sizes(root: AstNode) -> dict[int, int]:
    sizes: dict[int, int] = {}
    for n in postorder(root):
        sizes[n.id] = 1 + sum(sizes[c.id] for c in n.children)
    return sizes


# ---------------------------------------------------------------------------
# Structural comparison and hashing

def isomorphic(a: AstNode, b: AstNode) -> bool:
    """Structural equality: node_type, label and child structure; ids and
    spans are ignored."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x.node_type != y.node_type or x.label != y.label \
                or len(x.children) != len(y.children):
            return False
        stack.extend(zip(x.children, y.children))
    return True


def trees_identical(a: AstTree, b: AstTree) -> bool:
    return a.size == b.size and isomorphic(a.root, b.root)


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def _fnv_bytes(h: int, data: bytes) -> int:
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def fnv1a_64(data: bytes) -> int:
    """Plain 64-bit FNV-1a, also used for model-file digests."""
    return _fnv_bytes(_FNV_OFFSET, data)


def subtree_hashes(root: AstNode) -> dict[int, int]:
    """64-bit structural hash per node; equal for isomorphic subtrees.

    Collisions are possible in principle (~2^-64 per pair); callers confirm
    equality with :func:`isomorphic` before trusting a hash match.
    """
    hashes: dict[int, int] = {}
    for n in postorder(root):
        h = _FNV_OFFSET
        h = _fnv_bytes(h, n.node_type.encode("utf-8"))
        h = _fnv_bytes(h, b"\x00")
        if n.label is not None:
            h = _fnv_bytes(h, n.label.encode("utf-8"))
        h = _fnv_bytes(h, b"\x01")
        for c in n.children:
            ch = hashes[c.id]
            h = _fnv_bytes(h, ch.to_bytes(8, "little"))
        hashes[n.id] = h
    return hashes


def tree_hash(node: AstNode) -> int:
    """Structural hash of a single subtree (see :func:`subtree_hashes`)."""
    return subtree_hashes(node)[node.id]


def to_compact_string(node: AstNode) -> str:
    """Program(Assign(Name["x"], Literal["1"])) style rendering."""
    head = node.node_type
    if node.label is not None:
        head += f'["{node.label}"]'
    if not node.children:
        return head
    return head + "(" + ", ".join(to_compact_string(c) for c in node.children) + ")"
