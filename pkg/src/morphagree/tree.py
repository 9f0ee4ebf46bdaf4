"""Greedy binary CART induction over categorical triple slots.

Splits are one-vs-rest predicates ("slot == value" vs "slot != value"),
mirroring one-hot treatment of categorical inputs. Induction is fully
deterministic: candidate splits are scored in slot order (relation,
head_pos, dep_pos) then lexicographic value order, and the first maximal
impurity decrease wins. The seed passed to grid_search only shuffles
cross-validation folds.
"""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass

from .errors import EmptyDatasetError
from .triples import FeatureDataset, Triple


class Slot(str, enum.Enum):
    """Triple slot a predicate tests; values match Triple attribute names."""

    RELATION = "relation"
    HEAD_POS = "head_pos"
    DEP_POS = "dep_pos"


SLOT_ORDER = (Slot.RELATION, Slot.HEAD_POS, Slot.DEP_POS)


@dataclass(frozen=True)
class SplitPredicate:
    slot: Slot
    value: str

    def matches(self, triple: Triple) -> bool:
        return getattr(triple, self.slot.value) == self.value


@dataclass(frozen=True)
class Leaf:
    leaf_id: int
    n_agree: int
    n_disagree: int
    instance_refs: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return self.n_agree + self.n_disagree

    @property
    def agree_ratio(self) -> float:
        return self.n_agree / self.size


@dataclass(frozen=True)
class Internal:
    predicate: SplitPredicate
    match_child: "TreeNode"
    nomatch_child: "TreeNode"


TreeNode = Leaf | Internal


@dataclass(frozen=True)
class HyperParams:
    criterion: str = "gini"  # "gini" or "entropy"
    max_depth: int = 6
    min_impurity_decrease: float = 1e-3


@dataclass(frozen=True)
class HyperGrid:
    criteria: tuple[str, ...] = ("gini", "entropy")
    max_depths: tuple[int, ...] = (6, 15)
    min_impurity_decrease: float = 1e-3

    def points(self) -> list[HyperParams]:
        return [
            HyperParams(criterion=c, max_depth=d,
                        min_impurity_decrease=self.min_impurity_decrease)
            for c in self.criteria
            for d in self.max_depths
        ]


DEFAULT_GRID = HyperGrid()


@dataclass(frozen=True)
class DecisionTree:
    feature: str
    root: TreeNode
    hyperparams: HyperParams
    training_size: int


def _gini(n_agree: int, n_disagree: int) -> float:
    n = n_agree + n_disagree
    if n == 0:
        return 0.0
    p = n_agree / n
    return 2.0 * p * (1.0 - p)


def _entropy(n_agree: int, n_disagree: int) -> float:
    n = n_agree + n_disagree
    h = 0.0
    for c in (n_disagree, n_agree):
        if c:
            p = c / n
            h -= p * math.log2(p)
    return h


_IMPURITY = {"gini": _gini, "entropy": _entropy}


class _Group:
    """All instances sharing one triple, aggregated for fast split scoring."""

    __slots__ = ("triple", "n_agree", "n_disagree", "refs")

    def __init__(self, triple: Triple):
        self.triple = triple
        self.n_agree = 0
        self.n_disagree = 0
        self.refs: list[int] = []

    @property
    def size(self) -> int:
        return self.n_agree + self.n_disagree


class _MutableLeaf:
    __slots__ = ("n_agree", "n_disagree", "refs", "depth")

    def __init__(self, groups: list[_Group], depth: int):
        self.n_agree = sum(g.n_agree for g in groups)
        self.n_disagree = sum(g.n_disagree for g in groups)
        self.refs = tuple(r for g in groups for r in g.refs)
        self.depth = depth


def _best_split(
    groups: list[_Group], impurity, n_total: int
) -> tuple[SplitPredicate, float] | None:
    node_agree = sum(g.n_agree for g in groups)
    node_disagree = sum(g.n_disagree for g in groups)
    n_node = node_agree + node_disagree
    node_impurity = impurity(node_agree, node_disagree)
    best: tuple[SplitPredicate, float] | None = None
    for slot in SLOT_ORDER:
        per_value: dict[str, list[int]] = {}
        for g in groups:
            counts = per_value.setdefault(getattr(g.triple, slot.value), [0, 0])
            counts[0] += g.n_agree
            counts[1] += g.n_disagree
        for value in sorted(per_value):
            m_agree, m_disagree = per_value[value]
            n_match = m_agree + m_disagree
            n_nomatch = n_node - n_match
            if n_match == 0 or n_nomatch == 0:
                continue
            child_impurity = (
                n_match * impurity(m_agree, m_disagree)
                + n_nomatch * impurity(node_agree - m_agree, node_disagree - m_disagree)
            ) / n_node
            delta = (n_node / n_total) * (node_impurity - child_impurity)
            if best is None or delta > best[1]:
                best = (SplitPredicate(slot, value), delta)
    return best


def _grow(groups: list[_Group], depth: int, hp: HyperParams, impurity, n_total: int):
    node_agree = sum(g.n_agree for g in groups)
    node_disagree = sum(g.n_disagree for g in groups)
    if (
        node_agree == 0
        or node_disagree == 0
        or depth >= hp.max_depth
        or len(groups) == 1
    ):
        return _MutableLeaf(groups, depth)
    best = _best_split(groups, impurity, n_total)
    if best is None or best[1] < hp.min_impurity_decrease:
        return _MutableLeaf(groups, depth)
    predicate, _ = best
    match = [g for g in groups if predicate.matches(g.triple)]
    nomatch = [g for g in groups if not predicate.matches(g.triple)]
    return (
        predicate,
        _grow(match, depth + 1, hp, impurity, n_total),
        _grow(nomatch, depth + 1, hp, impurity, n_total),
    )


def _freeze(node, counter: list[int]) -> TreeNode:
    if isinstance(node, _MutableLeaf):
        counter[0] += 1
        return Leaf(
            leaf_id=counter[0],
            n_agree=node.n_agree,
            n_disagree=node.n_disagree,
            instance_refs=node.refs,
        )
    predicate, match, nomatch = node
    match_child = _freeze(match, counter)
    nomatch_child = _freeze(nomatch, counter)
    return Internal(predicate, match_child, nomatch_child)


def _aggregate_groups(dataset: FeatureDataset) -> dict[Triple, _Group]:
    groups: dict[Triple, _Group] = {}
    for idx, inst in enumerate(dataset.instances):
        group = groups.get(inst.triple)
        if group is None:
            group = groups[inst.triple] = _Group(inst.triple)
        if inst.agree:
            group.n_agree += 1
        else:
            group.n_disagree += 1
        group.refs.append(idx)
    return groups


def _fit_groups(
    feature: str, groups: list[_Group], hyperparams: HyperParams
) -> DecisionTree:
    if hyperparams.criterion not in _IMPURITY:
        raise ValueError(f"unknown criterion {hyperparams.criterion!r}")
    n_total = sum(g.size for g in groups)
    grown = _grow(
        groups, 0, hyperparams, _IMPURITY[hyperparams.criterion], n_total
    )
    root = _freeze(grown, [0])
    return DecisionTree(
        feature=feature, root=root, hyperparams=hyperparams, training_size=n_total
    )


def fit(dataset: FeatureDataset, hyperparams: HyperParams, seed: int = 0) -> DecisionTree:
    """Fit a tree on the dataset. The seed is accepted for interface parity
    with grid_search but induction itself is deterministic."""
    del seed
    if not dataset.instances:
        raise EmptyDatasetError(f"no instances for feature {dataset.feature!r}")
    return _fit_groups(
        dataset.feature, list(_aggregate_groups(dataset).values()), hyperparams
    )


def predict_leaf(tree: DecisionTree, triple: Triple) -> int:
    """Route a triple (seen or unseen) to the id of its unique leaf."""
    node = tree.root
    while isinstance(node, Internal):
        node = node.match_child if node.predicate.matches(triple) else node.nomatch_child
    return node.leaf_id


def leaves(tree: DecisionTree) -> list[Leaf]:
    """All leaves in leaf-id (left-to-right) order."""
    out: list[Leaf] = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            out.append(node)
        else:
            stack.append(node.nomatch_child)
            stack.append(node.match_child)
    return out


def leaf_count(tree: DecisionTree) -> int:
    return len(leaves(tree))


def _route_to_leaf(tree: DecisionTree, triple: Triple) -> Leaf:
    node = tree.root
    while isinstance(node, Internal):
        node = node.match_child if node.predicate.matches(triple) else node.nomatch_child
    return node


def _count_by_triple(dataset: FeatureDataset) -> dict[Triple, list[int]]:
    counts: dict[Triple, list[int]] = {}
    for inst in dataset.instances:
        entry = counts.get(inst.triple)
        if entry is None:
            entry = counts[inst.triple] = [0, 0]
        entry[inst.agree] += 1
    return counts


def _accuracy_from_counts(tree: DecisionTree, counts: dict[Triple, list[int]]) -> float:
    # instances sharing a triple route identically, so score per triple
    hits = total = 0
    for triple, (n_disagree, n_agree) in counts.items():
        leaf = _route_to_leaf(tree, triple)
        hits += n_agree if leaf.n_agree > leaf.n_disagree else n_disagree
        total += n_agree + n_disagree
    return hits / total if total else 0.0


def _macro_f1_from_counts(tree: DecisionTree, counts: dict[Triple, list[int]]) -> float:
    # per-class confusion counts: tp, fp, fn
    stats = {True: [0, 0, 0], False: [0, 0, 0]}
    for triple, (n_disagree, n_agree) in counts.items():
        predicted = _route_to_leaf(tree, triple)
        predicted_agree = predicted.n_agree > predicted.n_disagree
        correct, wrong = (
            (n_agree, n_disagree) if predicted_agree else (n_disagree, n_agree)
        )
        stats[predicted_agree][0] += correct
        stats[predicted_agree][1] += wrong
        stats[not predicted_agree][2] += wrong
    f1s = []
    for tp, fp, fn in stats.values():
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return sum(f1s) / len(f1s)


_METRICS = {"accuracy": _accuracy_from_counts, "macro_f1": _macro_f1_from_counts}


def classification_accuracy(tree: DecisionTree, dataset: FeatureDataset) -> float:
    """Accuracy of majority-class leaf predictions (tie predicts disagree)."""
    return _accuracy_from_counts(tree, _count_by_triple(dataset))


def macro_f1(tree: DecisionTree, dataset: FeatureDataset) -> float:
    """Macro-averaged F1 over the agree/disagree classes."""
    if not dataset.instances:
        return 0.0
    return _macro_f1_from_counts(tree, _count_by_triple(dataset))


def _cv_score(
    train: FeatureDataset, hp: HyperParams, seed: int, metric, n_folds: int = 5
) -> float:
    """Seed-shuffled k-fold score, evaluated at triple-count granularity."""
    n = len(train.instances)
    k = min(n_folds, n)
    if k < 2:
        return 0.0
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    fold_of = [0] * n
    for fold in range(k):
        for idx in indices[fold::k]:
            fold_of[idx] = fold
    # per-fold (disagree, agree) counts per triple, one pass
    fold_counts: list[dict[Triple, list[int]]] = [{} for _ in range(k)]
    for idx, inst in enumerate(train.instances):
        counts = fold_counts[fold_of[idx]]
        entry = counts.get(inst.triple)
        if entry is None:
            entry = counts[inst.triple] = [0, 0]
        entry[inst.agree] += 1
    totals = _count_by_triple(train)
    scores = []
    for held in fold_counts:
        groups = []
        for triple, (n_disagree, n_agree) in totals.items():
            held_disagree, held_agree = held.get(triple, (0, 0))
            group = _Group(triple)
            group.n_disagree = n_disagree - held_disagree
            group.n_agree = n_agree - held_agree
            if group.size:
                groups.append(group)
        tree = _fit_groups(train.feature, groups, hp)
        scores.append(metric(tree, held))
    return sum(scores) / len(scores)


def grid_search(
    train: FeatureDataset,
    validation: FeatureDataset | None,
    grid: HyperGrid = DEFAULT_GRID,
    seed: int = 0,
    metric: str = "accuracy",
) -> DecisionTree:
    """Fit one tree per grid point and return the best, refit on full train.

    Selection uses the metric on the validation set when one is given
    (and non-empty), else seed-shuffled 5-fold cross-validation on train.
    Ties prefer fewer leaves, then earlier grid order.
    """
    if not train.instances:
        raise EmptyDatasetError(f"no instances for feature {train.feature!r}")
    metric_fn = _METRICS[metric]
    use_validation = validation is not None and len(validation.instances) > 0
    validation_counts = _count_by_triple(validation) if use_validation else None
    shared_groups = list(_aggregate_groups(train).values())
    best_tree: DecisionTree | None = None
    best_key: tuple[float, int] | None = None
    for hp in grid.points():
        tree = _fit_groups(train.feature, shared_groups, hp)
        if validation_counts is not None:
            score = metric_fn(tree, validation_counts)
        else:
            score = _cv_score(train, hp, seed, metric_fn)
        key = (score, -leaf_count(tree))
        if best_key is None or key > best_key:
            best_key = key
            best_tree = tree
    assert best_tree is not None
    return best_tree
