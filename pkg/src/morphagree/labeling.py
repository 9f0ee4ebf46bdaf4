"""Leaf labeling (hard and statistical thresholds) and rule merging.

A leaf is required-agreement evidence only when its agreement ratio beats
what the feature's value distribution would produce by chance, judged by a
chi-squared goodness-of-fit test plus an effect-size gate. Labeled leaves
are then merged into a concise rule set that partitions triple space and
induces exactly the same triple -> label function as the labeled tree.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import EmptyMarginalsError, NoMatchingRuleError, VerdictMismatchError
from .tree import SLOT_ORDER, DecisionTree, Leaf, Slot, leaves
from .triples import FeatureDataset, Triple


class Label(str, enum.Enum):
    REQUIRED = "required"
    CHANCE = "chance"


class ThresholdMode(str, enum.Enum):
    HARD = "hard"
    STATISTICAL = "statistical"


@dataclass(frozen=True)
class ChanceModel:
    """Null model: i.i.d. feature values drawn from observed proportions.

    p_chance_exact carries the rational value of p_chance when the model
    was built from integer counts, so expected frequencies can be computed
    without rounding error.
    """

    feature: str
    value_probs: dict[str, float]
    p_chance: float
    p_chance_exact: Fraction | None = None


def chance_agreement_prob(marginals: dict[str, int], feature: str = "") -> ChanceModel:
    """Chance-agreement probability sum(q_v^2) from observed value counts.

    Computed with integer arithmetic (sum of squared counts over n^2) so
    that e.g. counts 9:1 give exactly 0.82.
    """
    if not marginals:
        raise EmptyMarginalsError("cannot build a chance model from empty counts")
    if any(c < 1 for c in marginals.values()):
        raise ValueError("marginal counts must be >= 1")
    n = sum(marginals.values())
    sum_sq = sum(c * c for c in marginals.values())
    probs = {value: count / n for value, count in sorted(marginals.items())}
    return ChanceModel(
        feature=feature,
        value_probs=probs,
        p_chance=sum_sq / (n * n),
        p_chance_exact=Fraction(sum_sq, n * n),
    )


def chi_square_survival(chi2: float) -> float:
    """P[X >= chi2] for X ~ chi-square with 1 degree of freedom."""
    if chi2 <= 0.0:
        return 1.0
    if math.isinf(chi2):
        return 0.0
    return math.erfc(math.sqrt(chi2 / 2.0))


def chi_squared_gof(
    observed: tuple[int, int], chance: ChanceModel
) -> tuple[float, float]:
    """Goodness-of-fit statistic and p-value for (disagree, agree) counts
    against the chance model's expected [1 - p_chance, p_chance] split.

    Expected frequencies are computed in exact rational arithmetic (a
    hand-given float p_chance is read as its shortest decimal), so an
    observation that matches the expectation yields exactly chi2 = 0.
    When an expected count is zero (p_chance of 0 or 1), the statistic is 0
    if the observation matches the degenerate expectation exactly and +inf
    (p-value 0) otherwise.
    """
    o_disagree, o_agree = observed
    n = o_disagree + o_agree
    if n < 1:
        raise ValueError("observed counts must sum to >= 1")
    p_agree = chance.p_chance_exact
    if p_agree is None:
        p_agree = Fraction(str(chance.p_chance))
    expected = (n * (1 - p_agree), n * p_agree)
    chi2 = Fraction(0)
    for obs, exp in zip(observed, expected):
        if exp == 0:
            if obs != 0:
                return math.inf, 0.0
            continue
        diff = obs - exp
        chi2 += diff * diff / exp
    return float(chi2), chi_square_survival(float(chi2))


def cramers_phi(chi2: float, n: int, k: int = 2, sqrt_variant: bool = False) -> float:
    """Effect size chi2 / (N (k-1)); sqrt_variant applies the textbook
    square root instead."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if k < 2:
        raise ValueError("k must be >= 2")
    phi = chi2 / (n * (k - 1))
    return math.sqrt(phi) if sqrt_variant else phi


@dataclass(frozen=True)
class LeafVerdict:
    leaf_id: int
    label: Label
    agree_ratio: float
    chi2: float | None = None
    p_value: float | None = None
    phi_c: float | None = None


def label_leaf_hard(leaf: Leaf, threshold: float = 0.9) -> LeafVerdict:
    """Required iff the leaf's agreement ratio strictly exceeds the threshold.

    Thresholds below 0.5 are rejected: a required-agreement verdict must
    come from an agreement-majority leaf.
    """
    if not 0.5 <= threshold <= 1.0:
        raise ValueError("hard threshold must be in [0.5, 1.0]")
    ratio = leaf.agree_ratio
    label = Label.REQUIRED if ratio > threshold else Label.CHANCE
    return LeafVerdict(leaf_id=leaf.leaf_id, label=label, agree_ratio=ratio)


def label_leaf_statistical(
    leaf: Leaf,
    chance: ChanceModel,
    alpha: float = 0.01,
    phi_min: float = 0.5,
    sqrt_variant: bool = False,
) -> LeafVerdict:
    """Test an agreement-majority leaf against the chance null hypothesis.

    Required needs all of: agreement ratio above 0.5, above the chance
    probability (two-sided deviations in the disagree direction are not
    evidence of required agreement), p-value below alpha, and effect size
    above phi_min. Leaves without agreement majority are chance without
    testing.
    """
    ratio = leaf.agree_ratio
    if ratio <= 0.5:
        return LeafVerdict(leaf_id=leaf.leaf_id, label=Label.CHANCE, agree_ratio=ratio)
    chi2, p_value = chi_squared_gof((leaf.n_disagree, leaf.n_agree), chance)
    phi = cramers_phi(chi2, leaf.size, 2, sqrt_variant)
    required = ratio > chance.p_chance and p_value < alpha and phi > phi_min
    return LeafVerdict(
        leaf_id=leaf.leaf_id,
        label=Label.REQUIRED if required else Label.CHANCE,
        agree_ratio=ratio,
        chi2=chi2,
        p_value=p_value,
        phi_c=phi,
    )


def leaf_marginals(leaf: Leaf, dataset: FeatureDataset) -> dict[str, int]:
    """Value counts over the head and dependent occurrences of one leaf."""
    counts: dict[str, int] = {}
    for ref in leaf.instance_refs:
        inst = dataset.instances[ref]
        counts[inst.head_value] = counts.get(inst.head_value, 0) + 1
        counts[inst.dep_value] = counts.get(inst.dep_value, 0) + 1
    return counts


# --- merged rules ---

_UNCONSTRAINED = ("not_in", frozenset())


@dataclass(frozen=True)
class Constraint:
    mode: str  # "in" or "not_in"
    values: frozenset[str]

    def matches(self, value: str) -> bool:
        if self.mode == "in":
            return value in self.values
        return value not in self.values

    @property
    def trivial(self) -> bool:
        return self.mode == "not_in" and not self.values


@dataclass(frozen=True)
class LabeledRule:
    rule_id: int
    label: Label
    constraints: dict[Slot, Constraint]
    n_agree: int
    n_disagree: int
    source_leaf_ids: tuple[int, ...]
    example_refs: tuple[tuple[str, int, int], ...] = ()
    counterexample_refs: tuple[tuple[str, int, int], ...] = ()

    def matches(self, triple: Triple) -> bool:
        # a constraint holds iff membership agrees with the mode
        constraints = self.constraints
        for slot, value in (
            (Slot.RELATION, triple.relation),
            (Slot.HEAD_POS, triple.head_pos),
            (Slot.DEP_POS, triple.dep_pos),
        ):
            constraint = constraints[slot]
            if (value in constraint.values) != (constraint.mode == "in"):
                return False
        return True


@dataclass(frozen=True)
class RuleSet:
    feature: str
    rules: tuple[LabeledRule, ...]
    threshold_mode: ThresholdMode
    training_size: int
    tree: DecisionTree | None = None


def _descend(state: dict[Slot, tuple[str, frozenset[str]]], slot: Slot, value: str,
             matched: bool) -> dict[Slot, tuple[str, frozenset[str]]]:
    mode, values = state.get(slot, _UNCONSTRAINED)
    new = dict(state)
    if matched:
        if mode == "in":
            new[slot] = ("in", values if value in values else frozenset())
        elif value in values:  # excluded earlier: dead branch
            new[slot] = ("in", frozenset())
        else:
            new[slot] = ("in", frozenset({value}))
    else:
        if mode == "in":
            new[slot] = ("in", values - {value})
        else:
            new[slot] = ("not_in", values | {value})
    return new


def _leaf_rules(
    tree: DecisionTree,
    verdict_by_leaf: dict[int, LeafVerdict],
    dataset: FeatureDataset | None,
) -> list[LabeledRule]:
    rules: list[LabeledRule] = []

    def walk(node, state):
        if isinstance(node, Leaf):
            examples: list[tuple[str, int, int]] = []
            counters: list[tuple[str, int, int]] = []
            if dataset is not None:
                for ref in node.instance_refs:
                    inst = dataset.instances[ref]
                    (examples if inst.agree else counters).append(inst.provenance)
            rules.append(
                LabeledRule(
                    rule_id=0,
                    label=verdict_by_leaf[node.leaf_id].label,
                    constraints={
                        slot: Constraint(*state.get(slot, _UNCONSTRAINED))
                        for slot in SLOT_ORDER
                    },
                    n_agree=node.n_agree,
                    n_disagree=node.n_disagree,
                    source_leaf_ids=(node.leaf_id,),
                    example_refs=tuple(examples),
                    counterexample_refs=tuple(counters),
                )
            )
            return
        slot, value = node.predicate.slot, node.predicate.value
        walk(node.match_child, _descend(state, slot, value, True))
        walk(node.nomatch_child, _descend(state, slot, value, False))

    walk(tree.root, {})
    return rules


def _try_merge(a: LabeledRule, b: LabeledRule) -> LabeledRule | None:
    if a.label != b.label:
        return None
    diff = [s for s in SLOT_ORDER if a.constraints[s] != b.constraints[s]]
    if len(diff) != 1:
        return None
    slot = diff[0]
    ca, cb = a.constraints[slot], b.constraints[slot]
    if ca.mode == "in" and cb.mode == "in":
        merged = Constraint("in", ca.values | cb.values)
    elif ca.mode == "in" and cb.mode == "not_in" and ca.values <= cb.values:
        merged = Constraint("not_in", cb.values - ca.values)
    elif cb.mode == "in" and ca.mode == "not_in" and cb.values <= ca.values:
        merged = Constraint("not_in", ca.values - cb.values)
    else:
        return None
    constraints = dict(a.constraints)
    constraints[slot] = merged
    return LabeledRule(
        rule_id=0,
        label=a.label,
        constraints=constraints,
        n_agree=a.n_agree + b.n_agree,
        n_disagree=a.n_disagree + b.n_disagree,
        source_leaf_ids=tuple(sorted(a.source_leaf_ids + b.source_leaf_ids)),
        example_refs=a.example_refs + b.example_refs,
        counterexample_refs=a.counterexample_refs + b.counterexample_refs,
    )


def _merge_to_fixpoint(rules: list[LabeledRule]) -> list[LabeledRule]:
    rules = sorted(rules, key=lambda r: r.source_leaf_ids[0])
    changed = True
    while changed:
        changed = False
        for i in range(len(rules)):
            for j in range(i + 1, len(rules)):
                merged = _try_merge(rules[i], rules[j])
                if merged is not None:
                    rules[i] = merged
                    del rules[j]
                    rules.sort(key=lambda r: r.source_leaf_ids[0])
                    changed = True
                    break
            if changed:
                break
    return rules


def merge_rules(
    tree: DecisionTree,
    verdicts: list[LeafVerdict],
    dataset: FeatureDataset | None = None,
    threshold_mode: ThresholdMode = ThresholdMode.STATISTICAL,
) -> RuleSet:
    """Collapse the labeled tree into a minimal-by-pairwise-merging rule set.

    Sibling leaves with one label fold into their parent's path constraint,
    uniform subtrees collapse entirely, and single-value rules that differ
    in one slot union their value sets. The resulting rules partition
    triple space and preserve the labeled tree's triple -> label function.
    Passing the training dataset fills per-rule example provenance.
    """
    tree_leaf_ids = [leaf.leaf_id for leaf in leaves(tree)]
    verdict_by_leaf = {v.leaf_id: v for v in verdicts}
    if len(verdict_by_leaf) != len(verdicts) or set(verdict_by_leaf) != set(tree_leaf_ids):
        raise VerdictMismatchError(
            f"verdicts cover leaves {sorted(verdict_by_leaf)}, "
            f"tree has leaves {tree_leaf_ids}"
        )
    merged = _merge_to_fixpoint(_leaf_rules(tree, verdict_by_leaf, dataset))
    rules = tuple(
        LabeledRule(
            rule_id=idx,
            label=r.label,
            constraints=r.constraints,
            n_agree=r.n_agree,
            n_disagree=r.n_disagree,
            source_leaf_ids=r.source_leaf_ids,
            example_refs=r.example_refs,
            counterexample_refs=r.counterexample_refs,
        )
        for idx, r in enumerate(merged, start=1)
    )
    return RuleSet(
        feature=tree.feature,
        rules=rules,
        threshold_mode=threshold_mode,
        training_size=tree.training_size,
        tree=tree,
    )


def label_triple(ruleset: RuleSet, triple: Triple) -> Label:
    """Label of the unique rule matching the triple."""
    matched: LabeledRule | None = None
    for rule in ruleset.rules:
        if rule.matches(triple):
            if matched is not None:
                raise NoMatchingRuleError(
                    f"triple {triple} matches rules {matched.rule_id} and {rule.rule_id}"
                )
            matched = rule
    if matched is None:
        raise NoMatchingRuleError(f"no rule matches triple {triple}")
    return matched.label
