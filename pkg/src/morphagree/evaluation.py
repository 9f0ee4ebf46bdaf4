"""Rule-set evaluation: automated (ARM), human (HRM), and baselines."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import (
    EmptyAnnotationsError,
    FeatureMismatchError,
    LengthMismatchError,
    NoEvaluableTriplesError,
    ZeroVarianceError,
)
from .labeling import Label, RuleSet, label_triple
from .triples import FeatureDataset, Triple, top_k_triples, triple_counts


class HumanLabel(str, enum.Enum):
    ALMOST_ALWAYS = "almost_always"
    SOMETIMES = "sometimes"
    NEED_NOT = "need_not"


@dataclass(frozen=True)
class AnnotationRecord:
    feature: str
    triple: Triple
    human_label: HumanLabel


@dataclass(frozen=True)
class TripleVerdict:
    triple: Triple
    n_test: int
    q: float
    test_label: Label
    tree_label: Label
    score: int


@dataclass(frozen=True)
class AnnotationVerdict:
    triple: Triple
    human_label: HumanLabel
    mapped_label: Label
    tree_label: Label
    hs: int


@dataclass
class EvalReport:
    feature: str
    arm: float
    verdicts: tuple[TripleVerdict, ...]
    baseline_arm: float | None = None
    hrm: float | None = None
    hrm_details: tuple[AnnotationVerdict, ...] | None = None


def _agreement_counts(test: FeatureDataset) -> dict[Triple, tuple[int, int]]:
    counts: dict[Triple, list[int]] = {}
    for inst in test.instances:
        entry = counts.setdefault(inst.triple, [0, 0])
        entry[0] += inst.agree
        entry[1] += 1
    return {t: (a, n) for t, (a, n) in counts.items()}


def empirical_agreement(test: FeatureDataset, triple: Triple) -> tuple[float | None, int]:
    """Fraction of test instances of this triple that agree.

    Returns (None, 0) when the triple does not occur in the test data.
    """
    agreeing = total = 0
    for inst in test.instances:
        if inst.triple == triple:
            total += 1
            agreeing += inst.agree
    if total == 0:
        return None, 0
    return agreeing / total, total


def all_test_triples(test: FeatureDataset) -> list[Triple]:
    """Every distinct test triple, most frequent first."""
    n = len(triple_counts(test))
    return top_k_triples(test, n) if n else []


def _dedupe(triples: Iterable[Triple]) -> list[Triple]:
    seen: set[Triple] = set()
    out: list[Triple] = []
    for t in triples:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def _score_triples(
    test: FeatureDataset,
    triples: Iterable[Triple],
    tau: float,
    tree_label_of,
    feature: str,
) -> EvalReport:
    counts = _agreement_counts(test)
    verdicts: list[TripleVerdict] = []
    for triple in _dedupe(triples):
        if triple not in counts:
            continue
        agreeing, total = counts[triple]
        q = agreeing / total
        test_label = Label.REQUIRED if q > tau else Label.CHANCE
        tree_label = tree_label_of(triple)
        verdicts.append(
            TripleVerdict(
                triple=triple,
                n_test=total,
                q=q,
                test_label=test_label,
                tree_label=tree_label,
                score=int(test_label == tree_label),
            )
        )
    if not verdicts:
        raise NoEvaluableTriplesError("no requested triple occurs in the test data")
    arm_score = sum(v.score for v in verdicts) / len(verdicts)
    return EvalReport(feature=feature, arm=arm_score, verdicts=tuple(verdicts))


def arm(
    ruleset: RuleSet,
    test: FeatureDataset,
    triples: Iterable[Triple],
    tau: float = 0.95,
) -> EvalReport:
    """Automated rule metric: a triple scores 1 when the rule label matches
    the held-out label (required iff empirical agreement q > tau)."""
    return _score_triples(
        test, triples, tau, lambda t: label_triple(ruleset, t), ruleset.feature
    )


def baseline_arm(
    test: FeatureDataset, triples: Iterable[Triple], tau: float = 0.95
) -> EvalReport:
    """ARM of the degenerate rule set that labels every triple chance."""
    return _score_triples(test, triples, tau, lambda t: Label.CHANCE, test.feature)


def map_human_label(human: HumanLabel, strict: bool = True) -> Label:
    if human is HumanLabel.ALMOST_ALWAYS:
        return Label.REQUIRED
    if human is HumanLabel.SOMETIMES:
        return Label.CHANCE if strict else Label.REQUIRED
    return Label.CHANCE


def hrm(
    ruleset: RuleSet,
    annotations: Iterable[AnnotationRecord],
    strict: bool = True,
) -> tuple[float, tuple[AnnotationVerdict, ...]]:
    """Human rule metric against expert annotations of the same feature.

    Strict mode counts only "almost always agree" as required; lenient mode
    also maps "sometimes agree" to required.
    """
    annotations = list(annotations)
    if not annotations:
        raise EmptyAnnotationsError("no annotation records given")
    relevant = [a for a in annotations if a.feature == ruleset.feature]
    if not relevant:
        raise FeatureMismatchError(
            f"no annotations for feature {ruleset.feature!r}"
        )
    details = []
    for record in relevant:
        mapped = map_human_label(record.human_label, strict)
        tree_label = label_triple(ruleset, record.triple)
        details.append(
            AnnotationVerdict(
                triple=record.triple,
                human_label=record.human_label,
                mapped_label=mapped,
                tree_label=tree_label,
                hs=int(mapped == tree_label),
            )
        )
    return sum(d.hs for d in details) / len(details), tuple(details)


def pearson(xs: list[float], ys: list[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise LengthMismatchError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise LengthMismatchError("need at least two paired observations")
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVarianceError("correlation undefined for a constant vector")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


ANNOTATION_COLUMNS = ("feature", "relation", "head_pos", "dep_pos", "label")


def read_annotations(path: str | Path) -> list[AnnotationRecord]:
    """Read a completed annotation TSV.

    The file must carry a header naming at least the columns
    feature/relation/head_pos/dep_pos/label; extra columns (e.g. the
    exported example sentences) are ignored, as are rows whose label cell
    is still blank. Unknown label strings raise ValueError.
    """
    records: list[AnnotationRecord] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        if reader.fieldnames is None:
            raise EmptyAnnotationsError(f"{path}: empty annotation file")
        missing = [c for c in ANNOTATION_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: missing annotation columns {missing}")
        for row in reader:
            raw = (row["label"] or "").strip()
            if not raw:
                continue
            try:
                human = HumanLabel(raw)
            except ValueError:
                raise ValueError(f"{path}: unknown annotation label {raw!r}") from None
            records.append(
                AnnotationRecord(
                    feature=row["feature"].strip(),
                    triple=Triple(
                        head_pos=row["head_pos"].strip(),
                        relation=row["relation"].strip(),
                        dep_pos=row["dep_pos"].strip(),
                    ),
                    human_label=human,
                )
            )
    if not records:
        raise EmptyAnnotationsError(f"{path}: no labeled rows")
    return records
