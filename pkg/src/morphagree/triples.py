"""Dependency edges as feature-conditioned agreement instances.

Every edge whose head and dependent both carry a morphological feature
becomes one binary-labeled instance; tokens are characterized by UPOS only.
Root edges (head = 0) are excluded.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .conllu import Treebank
from .errors import EmptyMarginalsError

DEFAULT_FEATURES = ("Gender", "Person", "Number", "Mood", "Case", "Tense")


@dataclass(frozen=True, order=True)
class Triple:
    """The ⟨head POS, relation, dependent POS⟩ shape of one dependency edge."""

    head_pos: str
    relation: str
    dep_pos: str


@dataclass(frozen=True)
class AgreementInstance:
    triple: Triple
    feature: str
    head_value: str
    dep_value: str
    agree: bool
    provenance: tuple[str, int, int]  # (sent_id, head token id, dep token id)


@dataclass(frozen=True)
class FeatureDataset:
    """All agreement instances of one feature, plus corpus-level tallies."""

    feature: str
    instances: tuple[AgreementInstance, ...]
    relation_vocab: tuple[str, ...]
    head_pos_vocab: tuple[str, ...]
    dep_pos_vocab: tuple[str, ...]
    value_marginals: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.instances)

    @classmethod
    def from_instances(
        cls,
        feature: str,
        instances: list[AgreementInstance] | tuple[AgreementInstance, ...],
        value_marginals: dict[str, int] | None = None,
    ) -> "FeatureDataset":
        return cls(
            feature=feature,
            instances=tuple(instances),
            relation_vocab=tuple(sorted({i.triple.relation for i in instances})),
            head_pos_vocab=tuple(sorted({i.triple.head_pos for i in instances})),
            dep_pos_vocab=tuple(sorted({i.triple.dep_pos for i in instances})),
            value_marginals=dict(value_marginals or {}),
        )


def _count_feature_values(treebank: Treebank, feature: str) -> Counter[str]:
    counts: Counter[str] = Counter()
    for sentence in treebank.sentences:
        for token in sentence.tokens:
            value = token.feats.get(feature)
            if value is not None:
                counts[value] += 1
    return counts


def value_marginals(treebank: Treebank, feature: str) -> dict[str, int]:
    """Count every token occurrence carrying the feature, corpus-wide.

    Raises EmptyMarginalsError when no token carries the feature, which
    signals that the feature is absent from the language.
    """
    counts = _count_feature_values(treebank, feature)
    if not counts:
        raise EmptyMarginalsError(f"no token carries feature {feature!r}")
    return dict(counts)


def extract_instances(treebank: Treebank, feature: str) -> FeatureDataset:
    """Build the agreement dataset for one feature, in document order.

    An edge contributes an instance only when both endpoints carry the
    feature; agreement is verbatim string equality of the two values.
    """
    instances: list[AgreementInstance] = []
    for sentence in treebank.sentences:
        for token in sentence.tokens:
            if token.head == 0:
                continue
            head = sentence.token_by_id(token.head)
            head_value = head.feats.get(feature)
            dep_value = token.feats.get(feature)
            if head_value is None or dep_value is None:
                continue
            instances.append(
                AgreementInstance(
                    triple=Triple(
                        head_pos=head.upos, relation=token.deprel, dep_pos=token.upos
                    ),
                    feature=feature,
                    head_value=head_value,
                    dep_value=dep_value,
                    agree=head_value == dep_value,
                    provenance=(sentence.sent_id, head.id, token.id),
                )
            )
    return FeatureDataset.from_instances(
        feature, instances, dict(_count_feature_values(treebank, feature))
    )


def triple_counts(dataset: FeatureDataset) -> dict[Triple, int]:
    counts: dict[Triple, int] = {}
    for inst in dataset.instances:
        counts[inst.triple] = counts.get(inst.triple, 0) + 1
    return counts


def top_k_triples(dataset: FeatureDataset, k: int) -> list[Triple]:
    """Most frequent triples, count-descending; ties broken lexicographically
    by (relation, head_pos, dep_pos)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = triple_counts(dataset)
    ordered = sorted(
        counts, key=lambda t: (-counts[t], t.relation, t.head_pos, t.dep_pos)
    )
    return ordered[:k]
