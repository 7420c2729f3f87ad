"""Tree differencing: greedy top-down / bottom-up matching and edit scripts.

The matcher pairs isomorphic subtrees from the tallest down, then extends the
mapping bottom-up by dice similarity over mapped descendants. Instead of an
optimal-move recovery (RTED) it runs a simplified pass that pairs remaining
unmatched children with equal type and label left-to-right, recursing into
each recovered pair. Script generation follows the classic change-detection
recipe: a breadth-first pass over the destination emits inserts, updates and
moves against a simulated working copy, then a post-order pass over the
source emits deletes. apply_script replays the same simulation and is the
correctness oracle for generation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import ApplyError, EmptyPool, InvalidMapping
from .tree import (AstNode, AstTree, DraftNode, bfs, freeze, isomorphic,
                   node_index, parent_map, postorder, preorder,
                   subtree_hashes, subtree_heights, subtree_sizes)

INSERT = "Insert"
DELETE = "Delete"
UPDATE = "Update"
MOVE = "Move"


@dataclass(frozen=True)
class MatcherParams:
    """Defaults mirror common GumTree settings; all three are swept rather
    than trusted."""
    min_height: int = 2
    min_dice: float = 0.5
    max_recovery_size: int = 100


class MappingSet:
    """Injective node correspondence between a source and destination tree."""

    def __init__(self) -> None:
        self.src_to_dst: dict[int, int] = {}
        self.dst_to_src: dict[int, int] = {}

    def add(self, src_id: int, dst_id: int) -> None:
        if src_id in self.src_to_dst or dst_id in self.dst_to_src:
            raise InvalidMapping(
                f"pair ({src_id}, {dst_id}) collides with an existing mapping")
        self.src_to_dst[src_id] = dst_id
        self.dst_to_src[dst_id] = src_id

    def has_src(self, src_id: int) -> bool:
        return src_id in self.src_to_dst

    def has_dst(self, dst_id: int) -> bool:
        return dst_id in self.dst_to_src

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.src_to_dst.items())

    def copy(self) -> "MappingSet":
        m = MappingSet()
        m.src_to_dst = dict(self.src_to_dst)
        m.dst_to_src = dict(self.dst_to_src)
        return m

    def __len__(self) -> int:
        return len(self.src_to_dst)


@dataclass(frozen=True)
class EditAction:
    """One atomic tree modification.

    node_id / parent_id address nodes of the evolving working tree during
    application; the *_type / label fields are descriptors used for change
    keys and serialization. parent_id None means the tree's top level.
    """

    kind: str
    node_type: str
    label: Optional[str]
    node_id: Optional[int] = None
    parent_id: Optional[int] = None
    parent_type: Optional[str] = None
    position: Optional[int] = None
    new_label: Optional[str] = None

    def to_record(self) -> dict:
        record: dict = {"kind": self.kind, "node_type": self.node_type}
        if self.label is not None:
            record["label"] = self.label
        if self.parent_type is not None:
            record["parent_type"] = self.parent_type
        if self.kind in (INSERT, MOVE):
            record["position"] = self.position
        if self.kind == UPDATE:
            record["new_label"] = self.new_label
        return record

    @classmethod
    def from_record(cls, record: dict) -> "EditAction":
        return cls(
            kind=record["kind"],
            node_type=record["node_type"],
            label=record.get("label"),
            parent_type=record.get("parent_type"),
            position=record.get("position"),
            new_label=record.get("new_label"),
        )


@dataclass(frozen=True)
class EditScript:
    actions: tuple[EditAction, ...]
    src_ref: str = ""
    dst_ref: str = ""

    @property
    def length(self) -> int:
        return len(self.actions)

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(a.to_record(), ensure_ascii=False)
                         for a in self.actions)

    @classmethod
    def from_records(cls, records: Iterable[dict], src_ref: str = "",
                     dst_ref: str = "") -> "EditScript":
        return cls(tuple(EditAction.from_record(r) for r in records),
                   src_ref=src_ref, dst_ref=dst_ref)


# ---------------------------------------------------------------------------
# Matching

class _TreeView:
    """Pre-computed indexes over one tree used by the matcher."""

    def __init__(self, tree: AstTree):
        self.tree = tree
        self.nodes = node_index(tree.root)
        self.parents = parent_map(tree.root)
        self.heights = subtree_heights(tree.root)
        self.sizes = subtree_sizes(tree.root)
        self.hashes = subtree_hashes(tree.root)
        self.positions: dict[int, int] = {tree.root.id: 0}
        for node in self.nodes.values():
            for index, child in enumerate(node.children):
                self.positions[child.id] = index

    def descendants(self, node_id: int) -> list[int]:
        node = self.nodes[node_id]
        out = []
        for child in node.children:
            out.extend(n.id for n in preorder(child))
        return out


def _dice(a_id: int, b_id: int, src: _TreeView, dst: _TreeView,
          mapping: MappingSet) -> float:
    """2 * mapped descendant pairs under (a, b) / (|desc a| + |desc b|).

    Two childless nodes agree on everything there is, so 0/0 counts as 1.
    """
    desc_a = src.descendants(a_id)
    total = (src.sizes[a_id] - 1) + (dst.sizes[b_id] - 1)
    if total == 0:
        return 1.0
    b_node = dst.nodes[b_id]
    b_desc: set[int] = set()
    for child in b_node.children:
        b_desc.update(n.id for n in preorder(child))
    common = sum(1 for d in desc_a
                 if d in mapping.src_to_dst and mapping.src_to_dst[d] in b_desc)
    return 2.0 * common / total


def _map_isomorphic(a: AstNode, b: AstNode, mapping: MappingSet) -> None:
    """Pair two isomorphic subtrees node-by-node (same shape by contract)."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        mapping.add(x.id, y.id)
        stack.extend(zip(x.children, y.children))


def match_top_down(src: AstTree, dst: AstTree, min_height: int = 2) -> MappingSet:
    """Greedy matching of isomorphic subtrees from the tallest downward.

    Ambiguous candidates (several isomorphic partners) are resolved afterward
    by descending parent-dice, ties by (src id, dst id).
    """
    if min_height < 1:
        raise ValueError("min_height must be >= 1")
    sv, dv = _TreeView(src), _TreeView(dst)
    mapping = MappingSet()
    candidates: list[tuple[int, int]] = []

    open_src: list[AstNode] = [src.root]
    open_dst: list[AstNode] = [dst.root]

    def max_h(nodes: list[AstNode], view: _TreeView) -> int:
        return max((view.heights[n.id] for n in nodes), default=0)

    while open_src and open_dst:
        h1, h2 = max_h(open_src, sv), max_h(open_dst, dv)
        if min(h1, h2) < min_height:
            break
        if h1 != h2:
            # open every subtree at the taller side's current max height
            if h1 > h2:
                taller, view = open_src, sv
                keep_h = h1
            else:
                taller, view = open_dst, dv
                keep_h = h2
            popped = [n for n in taller if view.heights[n.id] == keep_h]
            rest = [n for n in taller if view.heights[n.id] != keep_h]
            for n in popped:
                rest.extend(n.children)
            if h1 > h2:
                open_src = rest
            else:
                open_dst = rest
            continue
        level_src = [n for n in open_src if sv.heights[n.id] == h1]
        level_dst = [n for n in open_dst if dv.heights[n.id] == h1]
        open_src = [n for n in open_src if sv.heights[n.id] != h1]
        open_dst = [n for n in open_dst if dv.heights[n.id] != h1]

        src_by_hash: dict[int, list[AstNode]] = {}
        for n in level_src:
            src_by_hash.setdefault(sv.hashes[n.id], []).append(n)
        dst_by_hash: dict[int, list[AstNode]] = {}
        for n in level_dst:
            dst_by_hash.setdefault(dv.hashes[n.id], []).append(n)

        settled_src: set[int] = set()
        settled_dst: set[int] = set()
        for h in sorted(set(src_by_hash) & set(dst_by_hash)):
            # subdivide by true isomorphism; hash collisions must not pair
            # structurally different subtrees
            buckets: list[tuple[AstNode, list[AstNode], list[AstNode]]] = []
            for s in src_by_hash[h]:
                for rep, s_list, _ in buckets:
                    if isomorphic(s, rep):
                        s_list.append(s)
                        break
                else:
                    buckets.append((s, [s], []))
            for d in dst_by_hash[h]:
                for rep, _, d_list in buckets:
                    if isomorphic(d, rep):
                        d_list.append(d)
                        break
                else:
                    buckets.append((d, [], [d]))
            for _, s_list, d_list in buckets:
                if not s_list or not d_list:
                    continue
                if len(s_list) == 1 and len(d_list) == 1:
                    _map_isomorphic(s_list[0], d_list[0], mapping)
                else:
                    candidates.extend((s.id, d.id)
                                      for s in s_list for d in d_list)
                settled_src.update(s.id for s in s_list)
                settled_dst.update(d.id for d in d_list)
        for n in level_src:
            if n.id not in settled_src:
                open_src.extend(n.children)
        for n in level_dst:
            if n.id not in settled_dst:
                open_dst.extend(n.children)

    # resolve ambiguous candidates by parent dice, then closest sibling
    # position, then smallest ids
    def rank(pair: tuple[int, int]) -> tuple[float, int, int, int]:
        s_id, d_id = pair
        sp = sv.parents[s_id]
        dp = dv.parents[d_id]
        if sp is None or dp is None:
            score = 0.0
        else:
            score = _dice(sp.id, dp.id, sv, dv, mapping)
        drift = abs(sv.positions[s_id] - dv.positions[d_id])
        return (-score, drift, s_id, d_id)

    for s_id, d_id in sorted(candidates, key=rank):
        if mapping.has_src(s_id) or mapping.has_dst(d_id):
            continue
        _map_isomorphic(sv.nodes[s_id], dv.nodes[d_id], mapping)
    return mapping


def match_bottom_up(src: AstTree, dst: AstTree, seed: MappingSet,
                    min_dice: float = 0.5,
                    max_recovery_size: int = 100) -> MappingSet:
    """Extend a top-down seed with container mappings.

    An unmatched src node with matched descendants is paired with the
    unmatched dst node of equal type maximizing dice, when that dice reaches
    min_dice; ties go to the smallest dst id. Roots of equal type are always
    paired (so identical trees always diff to nothing). Each new container
    pair triggers the simplified recovery pass: remaining unmatched children
    are paired left-to-right, first on equal type and label, then on equal
    type alone (the relabel case), recursing into every recovered pair.
    """
    if not (0 < min_dice <= 1):
        raise ValueError("min_dice must be in (0, 1]")
    sv, dv = _TreeView(src), _TreeView(dst)
    mapping = seed.copy()

    def pair_children(a: AstNode, b: AstNode) -> list[tuple[AstNode, AstNode]]:
        """Order-preserving alignment of the unmatched children: exact
        (type+label) pairs weigh 3, same-type relabels 1, so exact matches
        win and a lone label change aligns positionally."""
        left = [c for c in a.children if not mapping.has_src(c.id)]
        right = [c for c in b.children if not mapping.has_dst(c.id)]
        m, n = len(left), len(right)
        if not m or not n:
            return []

        def weight(c1: AstNode, c2: AstNode) -> int:
            if c1.node_type != c2.node_type:
                return 0
            return 3 if c1.label == c2.label else 1

        score = [[0] * (n + 1) for _ in range(m + 1)]
        for i in range(1, m + 1):
            for j in range(1, n + 1):
                best = max(score[i - 1][j], score[i][j - 1])
                w = weight(left[i - 1], right[j - 1])
                if w:
                    best = max(best, score[i - 1][j - 1] + w)
                score[i][j] = best
        pairs: list[tuple[AstNode, AstNode]] = []
        i, j = m, n
        while i > 0 and j > 0:
            w = weight(left[i - 1], right[j - 1])
            if w and score[i][j] == score[i - 1][j - 1] + w:
                pairs.append((left[i - 1], right[j - 1]))
                i -= 1
                j -= 1
            elif score[i - 1][j] >= score[i][j - 1]:
                i -= 1
            else:
                j -= 1
        pairs.reverse()
        for c1, c2 in pairs:
            mapping.add(c1.id, c2.id)
        return pairs

    def recovery(a: AstNode, b: AstNode) -> None:
        if sv.sizes[a.id] > max_recovery_size or dv.sizes[b.id] > max_recovery_size:
            return
        for c1, c2 in pair_children(a, b):
            recovery(c1, c2)

    for node in postorder(src.root):
        if mapping.has_src(node.id):
            continue
        if node.id == src.root.id:
            if (not mapping.has_dst(dst.root.id)
                    and node.node_type == dst.root.node_type):
                mapping.add(node.id, dst.root.id)
                recovery(node, dst.root)
            continue
        if node.is_leaf():
            continue
        desc = sv.descendants(node.id)
        mapped_desc = [d for d in desc if mapping.has_src(d)]
        if not mapped_desc:
            continue
        # candidates: unmatched dst ancestors (of equal type) of partners
        cand_ids: set[int] = set()
        for d in mapped_desc:
            partner = dv.nodes[mapping.src_to_dst[d]]
            anc = dv.parents[partner.id]
            while anc is not None:
                if not mapping.has_dst(anc.id) and anc.node_type == node.node_type:
                    cand_ids.add(anc.id)
                anc = dv.parents[anc.id]
        best_id = None
        best_dice = -1.0
        for cid in sorted(cand_ids):
            score = _dice(node.id, cid, sv, dv, mapping)
            if score > best_dice:
                best_dice = score
                best_id = cid
        if best_id is not None and best_dice >= min_dice:
            mapping.add(node.id, best_id)
            recovery(node, dv.nodes[best_id])
    return mapping


def _validate_mapping(src: AstTree, dst: AstTree, mapping: MappingSet) -> None:
    if len(mapping.src_to_dst) != len(mapping.dst_to_src):
        raise InvalidMapping("mapping is not injective")
    src_nodes = node_index(src.root)
    dst_nodes = node_index(dst.root)
    seen_dst: set[int] = set()
    for s_id, d_id in mapping.src_to_dst.items():
        if s_id not in src_nodes or d_id not in dst_nodes:
            raise InvalidMapping(f"pair ({s_id}, {d_id}) references unknown nodes")
        if d_id in seen_dst:
            raise InvalidMapping(f"dst node {d_id} mapped twice")
        seen_dst.add(d_id)
        if src_nodes[s_id].node_type != dst_nodes[d_id].node_type:
            raise InvalidMapping(
                f"pair ({s_id}, {d_id}) joins different node types")


# ---------------------------------------------------------------------------
# Working tree used by script generation and application

_VIRTUAL_ID = -1


class _WorkNode:
    __slots__ = ("wid", "node_type", "label", "children", "parent")

    def __init__(self, wid: int, node_type: str, label: Optional[str]):
        self.wid = wid
        self.node_type = node_type
        self.label = label
        self.children: list["_WorkNode"] = []
        self.parent: Optional["_WorkNode"] = None

    def attach(self, child: "_WorkNode", position: int) -> None:
        self.children.insert(position, child)
        child.parent = self

    def detach(self) -> None:
        if self.parent is not None:
            self.parent.children.remove(self)
            self.parent = None


def _working_copy(tree: AstTree) -> tuple[_WorkNode, dict[int, _WorkNode]]:
    """Virtual root holding a mutable copy of the tree; wids = node ids."""
    vroot = _WorkNode(_VIRTUAL_ID, "", None)
    index: dict[int, _WorkNode] = {}

    def build(node: AstNode) -> _WorkNode:
        w = _WorkNode(node.id, node.node_type, node.label)
        index[node.id] = w
        for c in node.children:
            cw = build(c)
            cw.parent = w
            w.children.append(cw)
        return w

    vroot.attach(build(tree.root), 0)
    return vroot, index


def _freeze_working(vroot: _WorkNode, action_index: int) -> AstTree:
    if len(vroot.children) != 1:
        raise ApplyError(
            f"result has {len(vroot.children)} top-level nodes, expected 1",
            action_index)

    def build(w: _WorkNode) -> DraftNode:
        return DraftNode(w.node_type, w.label, [build(c) for c in w.children])

    return freeze(build(vroot.children[0]))


def generate_script(src: AstTree, dst: AstTree, mapping: MappingSet,
                    src_ref: str = "", dst_ref: str = "") -> EditScript:
    """Derive the action sequence turning src into dst under the mapping.

    Breadth-first over dst: Insert for unmapped dst nodes, Update on label
    change, Move on parent or sibling-position change; then post-order over
    src: Delete for unmapped src nodes.
    """
    _validate_mapping(src, dst, mapping)
    vroot, work = _working_copy(src)
    dst_parents = parent_map(dst.root)

    # dst node id -> working node
    partner: dict[int, _WorkNode] = {d: work[s]
                                     for s, d in mapping.src_to_dst.items()}
    actions: list[EditAction] = []
    next_wid = src.size

    def desired_parent_of(d: AstNode) -> _WorkNode:
        p = dst_parents[d.id]
        return vroot if p is None else partner[p.id]

    def find_pos(d: AstNode, parent_w: _WorkNode) -> int:
        """Position among already-placed partners of d's left siblings."""
        p = dst_parents[d.id]
        if p is None:
            return 0
        anchor = None
        for sibling in p.children:
            if sibling.id == d.id:
                break
            w = partner.get(sibling.id)
            if w is not None and w.parent is parent_w:
                anchor = w
        if anchor is None:
            return 0
        return parent_w.children.index(anchor) + 1

    def parent_type_of(w: _WorkNode) -> Optional[str]:
        return w.node_type if w.wid != _VIRTUAL_ID else None

    for d in bfs(dst.root):
        if d.id not in partner:
            parent_w = desired_parent_of(d)
            pos = find_pos(d, parent_w)
            w = _WorkNode(next_wid, d.node_type, d.label)
            next_wid += 1
            work[w.wid] = w
            parent_w.attach(w, pos)
            partner[d.id] = w
            actions.append(EditAction(
                kind=INSERT, node_type=d.node_type, label=d.label,
                node_id=w.wid,
                parent_id=None if parent_w is vroot else parent_w.wid,
                parent_type=parent_type_of(parent_w), position=pos))
        else:
            w = partner[d.id]
            if w.label != d.label:
                actions.append(EditAction(
                    kind=UPDATE, node_type=w.node_type, label=w.label,
                    node_id=w.wid,
                    parent_type=parent_type_of(w.parent) if w.parent else None,
                    new_label=d.label))
                w.label = d.label
            parent_w = desired_parent_of(d)
            cur_parent = w.parent
            cur_idx = cur_parent.children.index(w) if cur_parent else None
            w.detach()
            pos = find_pos(d, parent_w)
            if cur_parent is parent_w and pos == cur_idx:
                parent_w.attach(w, pos)
            else:
                parent_w.attach(w, pos)
                actions.append(EditAction(
                    kind=MOVE, node_type=w.node_type, label=w.label,
                    node_id=w.wid,
                    parent_id=None if parent_w is vroot else parent_w.wid,
                    parent_type=parent_type_of(parent_w), position=pos))

    for s in postorder(src.root):
        if not mapping.has_src(s.id):
            w = work[s.id]
            actions.append(EditAction(
                kind=DELETE, node_type=w.node_type, label=w.label,
                node_id=w.wid,
                parent_type=parent_type_of(w.parent) if w.parent else None))
            w.detach()

    assert len(vroot.children) == 1, "script simulation lost the root"
    return EditScript(tuple(actions), src_ref=src_ref, dst_ref=dst_ref)


def apply_script(src: AstTree, script: EditScript) -> AstTree:
    """Replay a script against src and return the transformed tree (pure)."""
    vroot, work = _working_copy(src)
    for idx, action in enumerate(script.actions):
        if action.node_id is None:
            raise ApplyError("action carries no node reference", idx)
        if action.kind == INSERT:
            if action.node_id in work:
                raise ApplyError(f"insert reuses id {action.node_id}", idx)
            parent = vroot if action.parent_id is None else work.get(action.parent_id)
            if parent is None:
                raise ApplyError(f"unknown parent {action.parent_id}", idx)
            if parent is not vroot and _detached(parent, vroot):
                raise ApplyError(f"parent {action.parent_id} is not in the tree", idx)
            pos = action.position if action.position is not None else 0
            if pos < 0 or pos > len(parent.children):
                raise ApplyError(f"position {pos} out of range", idx)
            w = _WorkNode(action.node_id, action.node_type, action.label)
            work[w.wid] = w
            parent.attach(w, pos)
        elif action.kind == UPDATE:
            w = work.get(action.node_id)
            if w is None or _detached(w, vroot):
                raise ApplyError(f"unknown node {action.node_id}", idx)
            w.label = action.new_label
        elif action.kind == MOVE:
            w = work.get(action.node_id)
            if w is None or _detached(w, vroot):
                raise ApplyError(f"unknown node {action.node_id}", idx)
            parent = vroot if action.parent_id is None else work.get(action.parent_id)
            if parent is None or (parent is not vroot and _detached(parent, vroot)):
                raise ApplyError(f"unknown parent {action.parent_id}", idx)
            if _is_ancestor(w, parent):
                raise ApplyError("cannot move a node under its own subtree", idx)
            w.detach()
            pos = action.position if action.position is not None else 0
            if pos < 0 or pos > len(parent.children):
                raise ApplyError(f"position {pos} out of range", idx)
            parent.attach(w, pos)
        elif action.kind == DELETE:
            w = work.get(action.node_id)
            if w is None or _detached(w, vroot):
                raise ApplyError(f"unknown node {action.node_id}", idx)
            w.detach()
            for gone in _iter_work(w):
                work.pop(gone.wid, None)
        else:
            raise ApplyError(f"unknown action kind {action.kind!r}", idx)
    return _freeze_working(vroot, len(script.actions))


def _detached(w: _WorkNode, vroot: _WorkNode) -> bool:
    while w.parent is not None:
        w = w.parent
    return w is not vroot


def _is_ancestor(a: _WorkNode, b: _WorkNode) -> bool:
    while b is not None:
        if b is a:
            return True
        b = b.parent
    return False


def _iter_work(w: _WorkNode):
    stack = [w]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(n.children)


# ---------------------------------------------------------------------------
# Front door

def diff(src: AstTree, dst: AstTree, params: MatcherParams = MatcherParams(),
         src_ref: str = "", dst_ref: str = "") -> EditScript:
    """match_top_down -> match_bottom_up -> generate_script."""
    seed = match_top_down(src, dst, params.min_height)
    mapping = match_bottom_up(src, dst, seed, params.min_dice,
                              params.max_recovery_size)
    return generate_script(src, dst, mapping, src_ref=src_ref, dst_ref=dst_ref)


def shortest_script(incorrect: AstTree, correct_pool: list[AstTree],
                    params: MatcherParams = MatcherParams(),
                    src_ref: str = "") -> EditScript:
    """Shortest diff against any pool member.

    Ties break by the lexicographic order of the scripts' serialized change
    keys under the strictest equality scheme, then by pool index.
    """
    from .represent import EqualityScheme, project_action

    if not correct_pool:
        raise EmptyPool("correct_pool must be nonempty")
    best = None
    best_key = None
    for index, candidate in enumerate(correct_pool):
        script = diff(incorrect, candidate, params,
                      src_ref=src_ref, dst_ref=str(index))
        key_seq = tuple(
            project_action(a, EqualityScheme.KIND_TYPE_LABEL_PARENT).to_string()
            for a in script.actions)
        key = (script.length, key_seq, index)
        if best_key is None or key < best_key:
            best_key = key
            best = script
    return best
