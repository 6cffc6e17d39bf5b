"""
System breakdown diagram (SBD): the System Configuration as a component tree
"""

from collections.abc import Iterable, Sequence
from typing import TYPE_CHECKING, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import CycleDetected, DanglingParent, DuplicateId, MultipleRoots, SbdError, UnknownId

if TYPE_CHECKING:
    from src.models import UncertainParameter

NodeKind = Literal["system", "subsystem", "component"]

_DOT_SHAPES = {"system": "box3d", "subsystem": "folder", "component": "box"}


class SbdNode(BaseModel):
    """One SBD element: ID number, name and a short description"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str = Field(min_length=1)
    name: str
    description: str = ""
    parent: str | None = None
    kind: NodeKind = "component"


def _children_map(nodes: Sequence[SbdNode]) -> dict[str | None, list[SbdNode]]:
    children: dict[str | None, list[SbdNode]] = {}
    for node in nodes:
        children.setdefault(node.parent, []).append(node)
    return children


def _preorder(root: SbdNode, children: dict[str | None, list[SbdNode]]) -> list[SbdNode]:
    order = []
    stack = [root]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(reversed(children.get(node.id, [])))
    return order


def check_tree(nodes: Sequence[SbdNode]) -> SbdNode:
    """
    Verify the nodes form a single tree

    Returns:
        SbdNode: The root

    Raises:
        DuplicateId, DanglingParent, MultipleRoots, CycleDetected, SbdError
    """
    if not nodes:
        raise SbdError("system breakdown needs at least one node")
    seen: set[str] = set()
    for node in nodes:
        if node.id in seen:
            raise DuplicateId(f"duplicate SBD node id: {node.id}")
        seen.add(node.id)
    for node in nodes:
        if node.parent is not None and node.parent not in seen:
            raise DanglingParent(f"node {node.id} has unknown parent {node.parent}")
    roots = [node for node in nodes if node.parent is None]
    if not roots:
        raise CycleDetected("no root node: parent links form a cycle")
    if len(roots) > 1:
        raise MultipleRoots(f"multiple root nodes: {', '.join(n.id for n in roots)}")
    root = roots[0]
    reached = _preorder(root, _children_map(nodes))
    if len(reached) != len(nodes):
        stray = sorted(seen - {node.id for node in reached})
        raise CycleDetected(f"nodes not reachable from root (cycle): {', '.join(stray)}")
    if root.kind != "system":
        raise SbdError(f"root node {root.id} must have kind 'system'")
    return root


class SystemBreakdown(BaseModel):
    """Validated SBD tree; child order follows the input order"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    root: str
    nodes: tuple[SbdNode, ...]

    @model_validator(mode="after")
    def _tree(self):
        root = check_tree(self.nodes)
        if root.id != self.root:
            raise SbdError(f"declared root {self.root} but the tree root is {root.id}")
        return self

    def node(self, node_id: str) -> SbdNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise UnknownId("SBD node", node_id)

    def ids(self) -> set[str]:
        return {node.id for node in self.nodes}

    def children(self, node_id: str) -> list[SbdNode]:
        return [node for node in self.nodes if node.parent == node_id]

    def depth(self, node_id: str) -> int:
        depth = 0
        node = self.node(node_id)
        while node.parent is not None:
            node = self.node(node.parent)
            depth += 1
        return depth

    def leaves(self) -> list[SbdNode]:
        parents = {node.parent for node in self.nodes}
        return [node for node in flatten(self) if node.id not in parents]


def build_sbd(nodes: Iterable[SbdNode]) -> SystemBreakdown:
    """Build a validated tree from nodes; raises SbdError subclasses"""
    nodes = tuple(nodes)
    root = check_tree(nodes)
    return SystemBreakdown(root=root.id, nodes=nodes)


def flatten(sbd: SystemBreakdown) -> list[SbdNode]:
    """Nodes in tree order (pre-order, children in input order)"""
    children = _children_map(sbd.nodes)
    return _preorder(sbd.node(sbd.root), children)


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(sbd: SystemBreakdown) -> str:
    """Render the tree as DOT text; node statements first, then parent -> child edges"""
    lines = ["digraph SBD {", "  rankdir=TB;", "  node [fontname=\"Helvetica\"];"]
    for node in sbd.nodes:
        label = _dot_quote(f"{node.id}\n{node.name}")
        lines.append(
            f"  {_dot_quote(node.id)} [label={label}, shape={_DOT_SHAPES[node.kind]}, "
            f"tooltip={_dot_quote(node.description)}];"
        )
    for node in sbd.nodes:
        if node.parent is not None:
            lines.append(f"  {_dot_quote(node.parent)} -> {_dot_quote(node.id)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def coverage_check(sbd: SystemBreakdown, params: Iterable["UncertainParameter"]) -> list[str]:
    """
    Leaves no parameter has been attached to yet, in tree order

    Raises:
        UnknownId: If a parameter's component_ref is not an SBD node
    """
    ids = sbd.ids()
    covered = set()
    for param in params:
        if param.component_ref not in ids:
            raise UnknownId("SBD node", param.component_ref)
        covered.add(param.component_ref)
    return [leaf.id for leaf in sbd.leaves() if leaf.id not in covered]
