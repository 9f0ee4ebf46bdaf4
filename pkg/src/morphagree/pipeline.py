"""End-to-end composition: treebank -> dataset -> tree -> labeled rule set."""
from __future__ import annotations

from dataclasses import dataclass

from .conllu import Treebank
from .labeling import (
    ChanceModel,
    LeafVerdict,
    RuleSet,
    ThresholdMode,
    chance_agreement_prob,
    label_leaf_hard,
    label_leaf_statistical,
    leaf_marginals,
    merge_rules,
)
from .tree import DecisionTree, HyperGrid, grid_search, leaves
from .triples import DEFAULT_FEATURES, FeatureDataset, extract_instances


@dataclass(frozen=True)
class ExtractionConfig:
    features: tuple[str, ...] = DEFAULT_FEATURES
    threshold_mode: ThresholdMode = ThresholdMode.STATISTICAL
    hard_threshold: float = 0.9
    alpha: float = 0.01
    phi_min: float = 0.5
    phi_sqrt: bool = False
    marginals_scope: str = "global"  # "global" or "per-leaf"
    depth_range: bool = False
    selection_metric: str = "accuracy"  # "accuracy" or "macro_f1"
    seed: int = 0

    def grid(self) -> HyperGrid:
        depths = tuple(range(6, 16)) if self.depth_range else (6, 15)
        return HyperGrid(max_depths=depths)


@dataclass
class FeatureRules:
    """Everything extracted for one morphological feature."""

    feature: str
    absent: bool
    dataset: FeatureDataset | None = None
    chance: ChanceModel | None = None
    tree: DecisionTree | None = None
    verdicts: tuple[LeafVerdict, ...] = ()
    ruleset: RuleSet | None = None


def label_leaves(
    tree: DecisionTree,
    dataset: FeatureDataset,
    chance: ChanceModel,
    config: ExtractionConfig,
) -> tuple[LeafVerdict, ...]:
    """One verdict per leaf under the configured threshold strategy."""
    verdicts = []
    for leaf in leaves(tree):
        if config.threshold_mode is ThresholdMode.HARD:
            verdicts.append(label_leaf_hard(leaf, config.hard_threshold))
            continue
        model = chance
        if config.marginals_scope == "per-leaf":
            model = chance_agreement_prob(leaf_marginals(leaf, dataset), dataset.feature)
        verdicts.append(
            label_leaf_statistical(
                leaf, model, config.alpha, config.phi_min, config.phi_sqrt
            )
        )
    return tuple(verdicts)


def extract_feature_rules(
    train: Treebank,
    feature: str,
    config: ExtractionConfig,
    dev: Treebank | None = None,
) -> FeatureRules:
    """Run the full extraction pipeline for one feature.

    Features with no qualifying edge yield an absent marker instead of a
    rule set.
    """
    dataset = extract_instances(train, feature)
    if not dataset.instances:
        return FeatureRules(feature=feature, absent=True, dataset=dataset)
    chance = chance_agreement_prob(dataset.value_marginals, feature)
    validation = extract_instances(dev, feature) if dev is not None else None
    tree = grid_search(
        dataset,
        validation,
        grid=config.grid(),
        seed=config.seed,
        metric=config.selection_metric,
    )
    verdicts = label_leaves(tree, dataset, chance, config)
    ruleset = merge_rules(tree, verdicts, dataset, config.threshold_mode)
    return FeatureRules(
        feature=feature,
        absent=False,
        dataset=dataset,
        chance=chance,
        tree=tree,
        verdicts=verdicts,
        ruleset=ruleset,
    )


def extract_all(
    train: Treebank, config: ExtractionConfig, dev: Treebank | None = None
) -> dict[str, FeatureRules]:
    return {
        feature: extract_feature_rules(train, feature, config, dev)
        for feature in config.features
    }
