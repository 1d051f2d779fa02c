"""Exploration trie: a prefix tree over the operator sequences a run considers.

The root stands for the empty sequence; every other node is one operator name.
Sequences sharing a prefix share a path, so the trie's shape summarizes how
broadly and how deep the search has wandered. Metrics follow the tree
structure directly: with unit edge weights the shortest root-to-node distance
is just the node's depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence


@dataclass
class TrieNode:
    name: str
    first_generation: int
    children: dict[str, "TrieNode"] = field(default_factory=dict)


class ExplorationTrie:
    """Single-writer prefix tree with branch and path-length metrics."""

    def __init__(self):
        self.root = TrieNode("", first_generation=-1)

    def insert(self, sequence: Sequence[str], generation: int = 0) -> None:
        """Add one operator sequence; existing prefixes are reused, the empty
        sequence is a no-op, and repeated insertion changes nothing."""
        node = self.root
        for name in sequence:
            child = node.children.get(name)
            if child is None:
                child = TrieNode(name, first_generation=generation)
                node.children[name] = child
            node = child

    def _walk(self) -> Iterator[tuple[TrieNode, int]]:
        """Yield (node, depth) over non-root nodes, pre-order, insertion order."""
        stack = [(child, 1) for child in reversed(self.root.children.values())]
        while stack:
            node, depth = stack.pop()
            yield node, depth
            stack.extend((child, depth + 1) for child in reversed(node.children.values()))

    def node_count(self) -> int:
        """Total nodes excluding the root."""
        return sum(1 for _ in self._walk())

    def leaf_count(self) -> int:
        return sum(1 for node, _ in self._walk() if not node.children)

    def leaf_to_node_ratio(self) -> float:
        """Childless non-root nodes over all non-root nodes; 1 for a star,
        1/k for a single chain of length k."""
        nodes = self.node_count()
        if nodes == 0:
            raise ValueError("leaf-to-node ratio is undefined for an empty trie")
        return self.leaf_count() / nodes

    def root_global_efficiency(self) -> float:
        """Average inverse shortest distance from the root to every other node.

        On a tree with unit edges the distance to a node is its depth, so this
        is sum(1/depth) / node_count.
        """
        total = 0.0
        nodes = 0
        for _, depth in self._walk():
            total += 1.0 / depth
            nodes += 1
        if nodes == 0:
            raise ValueError("root global efficiency is undefined for an empty trie")
        return total / nodes

    def metrics(self, generation: int) -> "TrieMetrics":
        return TrieMetrics(
            generation=generation,
            nodes=self.node_count(),
            leaves=self.leaf_count(),
            leaf_to_node_ratio=self.leaf_to_node_ratio(),
            root_efficiency=self.root_global_efficiency(),
        )

    def to_dot(self) -> str:
        """DOT digraph; the root is drawn filled red, nodes carry operator names."""
        lines = [
            "digraph ExplorationTrie {",
            '  n0 [label="root", style=filled, fillcolor=red];',
        ]
        ids = {id(self.root): 0}
        counter = 1
        for node, _ in self._walk():
            ids[id(node)] = counter
            lines.append(f'  n{counter} [label="{node.name}"];')
            counter += 1
        for (parent, child), _ in self._iter_with_parents():
            lines.append(f"  n{ids[id(parent)]} -> n{ids[id(child)]};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def _iter_with_parents(self) -> Iterator[tuple[tuple[TrieNode, TrieNode], int]]:
        stack = [((self.root, child), 1) for child in reversed(self.root.children.values())]
        while stack:
            (parent, node), depth = stack.pop()
            yield (parent, node), depth
            stack.extend(((node, child), depth + 1) for child in reversed(node.children.values()))

    def write_dot(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_dot())


@dataclass(frozen=True)
class TrieMetrics:
    """One per-generation snapshot row."""

    generation: int
    nodes: int
    leaves: int
    leaf_to_node_ratio: float
    root_efficiency: float

    CSV_HEADER = "generation,nodes,leaves,ratio,root_efficiency"

    def csv_row(self) -> str:
        return (
            f"{self.generation},{self.nodes},{self.leaves},"
            f"{self.leaf_to_node_ratio:.10f},{self.root_efficiency:.10f}"
        )
