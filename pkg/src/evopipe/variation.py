"""Offspring generation: eligibility-constrained one-point crossover, duplicate
rejection with mutation fallback, and the mutInsert / mutShrink /
mutNodeReplacement mutation strategies.

All operators are pure: parents are never modified, and a single sequential
RNG stream drives the whole offspring loop so runs replay exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .pipeline import (
    DATA,
    DEFAULT_MAX_DEPTH,
    DataLeaf,
    Individual,
    PipelineNode,
    PipelineTree,
    Registry,
    count_operators,
    iter_nodes,
    node_at,
    replace_at,
    sample_params,
    tree_depth,
    trees_equal,
)

CROSSOVER_RETRIES = 10


@dataclass(frozen=True)
class VariationConfig:
    """Crossover/mutation rates and the per-generation offspring count."""

    pop_size: int
    cross_prob: float = 0.1
    mut_prob: float = 0.9

    def __post_init__(self):
        if abs(self.cross_prob + self.mut_prob - 1.0) > 1e-9:
            raise ValueError("cross_prob + mut_prob must equal 1")
        if not 0.0 <= self.cross_prob <= 1.0:
            raise ValueError("cross_prob must lie in [0, 1]")
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")


def _operator_names(tree: PipelineTree) -> frozenset[str]:
    return frozenset(node.op.name for _, node in iter_nodes(tree))


def choose_eligible_individuals(
    pop: list[Individual], rng: random.Random
) -> tuple[Individual, Individual] | None:
    """Uniformly random pair among pairs sharing at least one operator name."""
    names = [_operator_names(ind.tree) for ind in pop]
    eligible = [
        (i, j)
        for i in range(len(pop))
        for j in range(i + 1, len(pop))
        if names[i] & names[j]
    ]
    if not eligible:
        return None
    i, j = rng.choice(eligible)
    return pop[i], pop[j]


def one_point_crossover(
    a: PipelineTree,
    b: PipelineTree,
    rng: random.Random,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> tuple[PipelineTree, PipelineTree]:
    """Swap the subtrees rooted at one randomly chosen shared operator name.

    Picks the shared name uniformly, then one node bearing it in each tree
    uniformly. Children that would break the depth cap are rejected and
    resampled a few times; if no attempt fits, the parents come back unchanged.
    """
    shared = sorted(_operator_names(a) & _operator_names(b))
    if not shared:
        raise ValueError("parents share no operator name")
    for _ in range(CROSSOVER_RETRIES):
        name = rng.choice(shared)
        path_a = rng.choice([p for p, n in iter_nodes(a) if n.op.name == name])
        path_b = rng.choice([p for p, n in iter_nodes(b) if n.op.name == name])
        child_a = replace_at(a, path_a, node_at(b, path_b))
        child_b = replace_at(b, path_b, node_at(a, path_a))
        if tree_depth(child_a) <= max_depth and tree_depth(child_b) <= max_depth:
            return child_a, child_b
    return a, b


def _subtree_height(node: PipelineNode | DataLeaf) -> int:
    if isinstance(node, DataLeaf):
        return 0
    return 1 + max(_subtree_height(c) for c in node.children)


def mut_insert(
    tree: PipelineTree,
    registry: Registry,
    rng: random.Random,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> PipelineTree:
    """Splice a random transformer onto a uniformly chosen data-flow edge.

    Only edges where the insertion respects the depth cap are candidates; with
    no legal edge (or no transformers) the input comes back unchanged.
    """
    if not registry.transformers:
        return tree
    # An edge is (parent path, child slot); inserting adds one level above the child.
    edges = []
    for path, node in iter_nodes(tree):
        for slot, child in enumerate(node.children):
            new_depth = len(path) + 2 + _subtree_height(child)
            if new_depth <= max_depth:
                edges.append((path, slot))
    if not edges:
        return tree
    path, slot = edges[rng.randrange(len(edges))]
    op = rng.choice(registry.transformers)
    parent = node_at(tree, path)
    filler = tuple(
        parent.children[slot] if i == 0 else DATA for i in range(op.arity)
    )
    inserted = PipelineNode(op, sample_params(op, rng), filler)
    return replace_at(tree, path + (slot,), inserted)


def mut_shrink(
    tree: PipelineTree,
    registry: Registry,
    rng: random.Random,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> PipelineTree:
    """Delete a random non-root operator, reattaching its primary data input.

    A single-operator pipeline cannot shrink; insertion or node replacement is
    applied instead with equal probability.
    """
    if count_operators(tree) == 1:
        if rng.random() < 0.5:
            return mut_insert(tree, registry, rng, max_depth)
        return mut_node_replacement(tree, registry, rng)
    removable = [path for path, _ in iter_nodes(tree) if path]
    path = removable[rng.randrange(len(removable))]
    target = node_at(tree, path)
    return replace_at(tree, path, target.children[0])


def mut_node_replacement(
    tree: PipelineTree, registry: Registry, rng: random.Random
) -> PipelineTree:
    """Replace one uniformly chosen node or terminal.

    Operator targets become a fresh operator of the same kind and arity with
    sampled hyperparameters; terminal targets re-sample one hyperparameter
    value from its domain.
    """
    targets: list[tuple[tuple[int, ...], str | None]] = []
    for path, node in iter_nodes(tree):
        targets.append((path, None))
        targets.extend((path, hp.name) for hp in node.op.hyperparams)
    path, terminal = targets[rng.randrange(len(targets))]
    node = node_at(tree, path)
    if terminal is None:
        op = rng.choice(registry.same_kind_arity(node.op))
        replacement = PipelineNode(op, sample_params(op, rng), node.children)
    else:
        spec = next(hp for hp in node.op.hyperparams if hp.name == terminal)
        params = dict(node.params)
        params[terminal] = rng.choice(spec.domain)
        replacement = PipelineNode(node.op, params, node.children)
    return replace_at(tree, path, replacement)


_MUTATIONS = ("insert", "shrink", "node_replacement")


def mutate(
    tree: PipelineTree,
    registry: Registry,
    rng: random.Random,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> PipelineTree:
    """Apply one of the three mutation strategies, chosen with equal probability."""
    which = rng.choice(_MUTATIONS)
    if which == "insert":
        return mut_insert(tree, registry, rng, max_depth)
    if which == "shrink":
        return mut_shrink(tree, registry, rng, max_depth)
    return mut_node_replacement(tree, registry, rng)


def generate_offspring(
    curr_pop: list[Individual],
    config: VariationConfig,
    registry: Registry,
    rng: random.Random,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> list[Individual]:
    """Produce exactly config.pop_size offspring from an evaluated population.

    Each iteration draws r in [0,1): below cross_prob it attempts crossover on
    a random eligible pair and keeps the first child, falling back to mutating
    a random individual when no pair is eligible or when the child duplicates
    an offspring already produced in this call; otherwise it mutates a random
    individual. Offspring ids are left unset for the caller to assign.
    """

    def mutated_offspring() -> Individual:
        parent = curr_pop[rng.randrange(len(curr_pop))]
        child = mutate(parent.tree, registry, rng, max_depth)
        return Individual(child, "mutation", parents=(parent.id,))

    offspring: list[Individual] = []
    while len(offspring) < config.pop_size:
        if rng.random() < config.cross_prob:
            pair = choose_eligible_individuals(curr_pop, rng)
            if pair is None:
                offspring.append(mutated_offspring())
                continue
            first, second = pair
            child_tree, _ = one_point_crossover(first.tree, second.tree, rng, max_depth)
            if any(trees_equal(child_tree, prior.tree) for prior in offspring):
                offspring.append(mutated_offspring())
            else:
                offspring.append(
                    Individual(child_tree, "crossover", parents=(first.id, second.id))
                )
        else:
            offspring.append(mutated_offspring())
    return offspring
