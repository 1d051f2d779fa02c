"""Pipeline genotype: operator trees with hyperparameter terminals.

A pipeline is a tree of ML operators rooted at a classifier. Interior and
leaf operator nodes are transformers; every dangling input is the raw data
leaf ``X``. Trees are immutable after construction, so they can be shared
freely between individuals and across generations.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

from .errors import ConfigurationError

CLASSIFIER = "classifier"
TRANSFORMER = "transformer"

DEFAULT_MAX_DEPTH = 7


class DataLeaf:
    """Singleton leaf standing for the raw feature matrix X."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "X"


DATA = DataLeaf()


@dataclass(frozen=True)
class HyperparamSpec:
    """A named hyperparameter with a finite, non-empty value domain."""

    name: str
    domain: tuple[Any, ...]

    def __post_init__(self):
        if not self.domain:
            raise ConfigurationError(f"hyperparameter {self.name!r} has an empty domain")


@dataclass(frozen=True)
class OperatorSpec:
    """Declares one ML operator: its kind, input arity, and hyperparameter grid."""

    name: str
    kind: str
    arity: int = 1
    hyperparams: tuple[HyperparamSpec, ...] = ()

    def __post_init__(self):
        if self.kind not in (CLASSIFIER, TRANSFORMER):
            raise ConfigurationError(f"operator {self.name!r}: unknown kind {self.kind!r}")
        if self.arity < 1:
            raise ConfigurationError(f"operator {self.name!r}: arity must be >= 1")


class Registry:
    """Operator registry with unique names and kind-filtered access."""

    def __init__(self, operators: Sequence[OperatorSpec]):
        self.operators = tuple(operators)
        self._by_name: dict[str, OperatorSpec] = {}
        for op in self.operators:
            if op.name in self._by_name:
                raise ConfigurationError(f"duplicate operator name {op.name!r} in registry")
            self._by_name[op.name] = op
        self.classifiers = tuple(op for op in self.operators if op.kind == CLASSIFIER)
        self.transformers = tuple(op for op in self.operators if op.kind == TRANSFORMER)

    def __len__(self) -> int:
        return len(self.operators)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> OperatorSpec:
        try:
            return self._by_name[name]
        except KeyError:
            raise ConfigurationError(f"unknown operator {name!r}") from None

    def same_kind_arity(self, op: OperatorSpec) -> tuple[OperatorSpec, ...]:
        return tuple(o for o in self.operators if o.kind == op.kind and o.arity == op.arity)


@dataclass(frozen=True, eq=False)
class PipelineNode:
    """One operator application; children are sub-pipelines or the data leaf."""

    op: OperatorSpec
    params: dict[str, Any]
    children: tuple["PipelineNode | DataLeaf", ...]

    def __repr__(self) -> str:
        return serialize_tree(self)


# A pipeline tree is just its root node.
PipelineTree = PipelineNode

PROVENANCES = ("initial", "crossover", "mutation")


@dataclass
class Individual:
    """A pipeline plus its (write-once) fitness and creation provenance."""

    tree: PipelineTree
    provenance: str
    id: int | None = None
    parents: tuple[int, ...] = ()
    _fitness: Any = field(default=None, repr=False)

    @property
    def fitness(self):
        return self._fitness

    def set_fitness(self, value) -> None:
        if self._fitness is not None:
            raise ValueError("fitness is immutable once set")
        self._fitness = value

    @property
    def evaluated(self) -> bool:
        return self._fitness is not None


def tree_depth(tree: PipelineTree) -> int:
    """Number of operator nodes on the longest root-to-leaf path."""
    deepest = 0
    for child in tree.children:
        if isinstance(child, PipelineNode):
            deepest = max(deepest, tree_depth(child))
    return deepest + 1


def count_operators(tree: PipelineTree) -> int:
    total = 1
    for child in tree.children:
        if isinstance(child, PipelineNode):
            total += count_operators(child)
    return total


def operator_sequence(tree: PipelineTree) -> list[str]:
    """Pre-order walk over operator names; the data leaf is omitted.

    For linear chains this is outermost-operator-first, so the sequence of
    ``Clf(T2(T1(X)))`` is ``[Clf, T2, T1]``.
    """
    names = [tree.op.name]
    for child in tree.children:
        if isinstance(child, PipelineNode):
            names.extend(operator_sequence(child))
    return names


def trees_equal(a: PipelineTree | DataLeaf, b: PipelineTree | DataLeaf) -> bool:
    """Structural equality: same shape, operator names, and hyperparameter values."""
    a_is_leaf = isinstance(a, DataLeaf)
    b_is_leaf = isinstance(b, DataLeaf)
    if a_is_leaf or b_is_leaf:
        return a_is_leaf and b_is_leaf
    if a.op.name != b.op.name or a.params != b.params:
        return False
    if len(a.children) != len(b.children):
        return False
    return all(trees_equal(ca, cb) for ca, cb in zip(a.children, b.children))


def iter_nodes(tree: PipelineTree) -> Iterator[tuple[tuple[int, ...], PipelineNode]]:
    """Yield (path, node) in pre-order; a path is the child-index route from the root."""

    def walk(node: PipelineNode, path: tuple[int, ...]):
        yield path, node
        for i, child in enumerate(node.children):
            if isinstance(child, PipelineNode):
                yield from walk(child, path + (i,))

    yield from walk(tree, ())


def node_at(tree: PipelineTree, path: tuple[int, ...]) -> PipelineNode:
    node = tree
    for i in path:
        node = node.children[i]
    return node


def replace_at(tree: PipelineTree, path: tuple[int, ...],
               subtree: PipelineNode | DataLeaf) -> PipelineTree:
    """Return a copy of `tree` with the node (or leaf slot) at `path` replaced."""
    if not path:
        if isinstance(subtree, DataLeaf):
            raise ValueError("cannot replace the root with the data leaf")
        return subtree
    head, rest = path[0], path[1:]
    children = list(tree.children)
    child = children[head]
    if rest:
        if not isinstance(child, PipelineNode):
            raise ValueError(f"path {path} descends through a data leaf")
        children[head] = replace_at(child, rest, subtree)
    else:
        children[head] = subtree
    return PipelineNode(tree.op, tree.params, tuple(children))


def validate_tree(tree: PipelineTree, max_depth: int = DEFAULT_MAX_DEPTH) -> None:
    """Raise ValueError if the tree violates any genotype invariant."""
    if tree.op.kind != CLASSIFIER:
        raise ValueError(f"root operator {tree.op.name!r} is not a classifier")
    if tree_depth(tree) > max_depth:
        raise ValueError(f"tree depth {tree_depth(tree)} exceeds max depth {max_depth}")
    for path, node in iter_nodes(tree):
        if path and node.op.kind != TRANSFORMER:
            raise ValueError(f"non-root operator {node.op.name!r} is not a transformer")
        if len(node.children) != node.op.arity:
            raise ValueError(
                f"{node.op.name!r} has {len(node.children)} children, arity is {node.op.arity}"
            )
        specs = {hp.name: hp for hp in node.op.hyperparams}
        if set(node.params) != set(specs):
            raise ValueError(f"{node.op.name!r} hyperparameter names do not match its spec")
        for name, value in node.params.items():
            if value not in specs[name].domain:
                raise ValueError(f"{node.op.name!r}.{name}={value!r} outside its domain")


def sample_params(op: OperatorSpec, rng: random.Random) -> dict[str, Any]:
    return {hp.name: rng.choice(hp.domain) for hp in op.hyperparams}


def random_pipeline(registry: Registry, rng: random.Random,
                    max_depth: int = DEFAULT_MAX_DEPTH) -> PipelineTree:
    """Sample a random valid pipeline: uniform classifier root, geometric-ish depth.

    Each input slot below the root terminates in the data leaf with probability
    1/2 (always at the depth cap), so single-classifier trees are producible.
    """
    if max_depth < 1:
        raise ConfigurationError(f"max_depth must be >= 1, got {max_depth}")
    if not registry.classifiers:
        raise ConfigurationError("registry contains no classifier operator")

    def grow(remaining: int) -> PipelineNode | DataLeaf:
        if remaining < 1 or not registry.transformers or rng.random() < 0.5:
            return DATA
        op = rng.choice(registry.transformers)
        children = tuple(grow(remaining - 1) for _ in range(op.arity))
        return PipelineNode(op, sample_params(op, rng), children)

    root_op = rng.choice(registry.classifiers)
    children = tuple(grow(max_depth - 1) for _ in range(root_op.arity))
    return PipelineNode(root_op, sample_params(root_op, rng), children)


# ---------------------------------------------------------------------------
# Canonical string form: Op(child,...;hp=v,...)  with X for the data leaf.
# Used in run logs and duplicate reporting; parses back given a registry.
# ---------------------------------------------------------------------------

def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def serialize_tree(tree: PipelineTree | DataLeaf) -> str:
    if isinstance(tree, DataLeaf):
        return "X"
    inner = ",".join(serialize_tree(c) for c in tree.children)
    if tree.params:
        hp = ",".join(f"{k}={_format_value(v)}" for k, v in sorted(tree.params.items()))
        inner = f"{inner};{hp}"
    return f"{tree.op.name}({inner})"


def _parse_value(text: str) -> Any:
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


class _TreeParser:
    def __init__(self, text: str, registry: Registry):
        self.text = text
        self.pos = 0
        self.registry = registry

    def fail(self, why: str):
        raise ValueError(f"bad pipeline string at offset {self.pos}: {why}")

    def parse(self) -> PipelineTree:
        node = self.node()
        if self.pos != len(self.text):
            self.fail("trailing characters")
        if isinstance(node, DataLeaf):
            self.fail("a pipeline cannot be the bare data leaf")
        return node

    def ident(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in "(),;=":
            self.pos += 1
        if self.pos == start:
            self.fail("expected a name")
        return self.text[start:self.pos]

    def expect(self, ch: str):
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            self.fail(f"expected {ch!r}")
        self.pos += 1

    def node(self) -> PipelineNode | DataLeaf:
        name = self.ident()
        if name == "X" and (self.pos == len(self.text) or self.text[self.pos] != "("):
            return DATA
        op = self.registry.get(name)
        self.expect("(")
        children: list[PipelineNode | DataLeaf] = [self.node()]
        while self.pos < len(self.text) and self.text[self.pos] == ",":
            self.pos += 1
            children.append(self.node())
        params: dict[str, Any] = {}
        if self.pos < len(self.text) and self.text[self.pos] == ";":
            self.pos += 1
            while True:
                key = self.ident()
                self.expect("=")
                params[key] = _parse_value(self.ident())
                if self.pos < len(self.text) and self.text[self.pos] == ",":
                    self.pos += 1
                else:
                    break
        self.expect(")")
        return PipelineNode(op, params, tuple(children))


def parse_tree(text: str, registry: Registry) -> PipelineTree:
    """Parse the canonical string form back into a tree (inverse of serialize_tree)."""
    return _TreeParser(text, registry).parse()


def sequence_from_string(text: str) -> list[str]:
    """Operator names in pre-order, scanned straight off the canonical string.

    Needs no registry, so run logs can be replayed without their configuration.
    """
    names: list[str] = []
    token = ""
    in_params = False  # between ';' and its closing ')': name=value tokens only
    for ch in text:
        if ch in "(),;=":
            if token and token != "X" and not in_params:
                names.append(token)
            token = ""
            if ch == ";":
                in_params = True
            elif ch == ")":
                in_params = False
        else:
            token += ch
    return names


# ---------------------------------------------------------------------------
# Registry file I/O: a small declarative JSON document.
# ---------------------------------------------------------------------------

def registry_to_dict(registry: Registry) -> dict:
    return {
        "operators": [
            {
                "name": op.name,
                "kind": op.kind,
                "arity": op.arity,
                "hyperparams": {hp.name: list(hp.domain) for hp in op.hyperparams},
            }
            for op in registry.operators
        ]
    }


def save_registry(registry: Registry, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(registry_to_dict(registry), fh, indent=2)
        fh.write("\n")


def load_registry(path) -> Registry:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read registry {path}: {exc}") from exc
    try:
        ops = [
            OperatorSpec(
                name=entry["name"],
                kind=entry["kind"],
                arity=int(entry.get("arity", 1)),
                hyperparams=tuple(
                    HyperparamSpec(name, tuple(domain))
                    for name, domain in entry.get("hyperparams", {}).items()
                ),
            )
            for entry in doc["operators"]
        ]
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed registry {path}: {exc}") from exc
    return Registry(ops)
