"""Annotation-sheet export and self-contained static HTML rule reports."""
from __future__ import annotations

import html
import random
from pathlib import Path

from .conllu import Sentence, Treebank
from .labeling import Label, LabeledRule, RuleSet
from .serialization import RulesDocument
from .tree import SLOT_ORDER, Slot
from .triples import AgreementInstance, Triple, extract_instances, top_k_triples

SHEET_COLUMNS = ("feature", "relation", "head_pos", "dep_pos", "label", "examples")


def sentence_index(treebank: Treebank) -> dict[str, Sentence]:
    index: dict[str, Sentence] = {}
    for sentence in treebank.sentences:
        index.setdefault(sentence.sent_id, sentence)
    return index


def render_example(sentence: Sentence, head_id: int, dep_id: int) -> str:
    """Plain-text sentence with the head in [[..]] and the dependent in ((..))."""
    parts = []
    for token in sentence.tokens:
        if token.id == head_id:
            parts.append(f"[[{token.form}]]")
        elif token.id == dep_id:
            parts.append(f"(({token.form}))")
        else:
            parts.append(token.form)
    return " ".join(parts)


def _sample_instances(
    instances: list[AgreementInstance], k: int, seed_key: str
) -> list[AgreementInstance]:
    if len(instances) <= k:
        return list(instances)
    rng = random.Random(seed_key)
    picked = sorted(rng.sample(range(len(instances)), k))
    return [instances[i] for i in picked]


def build_annotation_rows(
    features: list[str],
    train: Treebank,
    top_k: int,
    examples: int,
    seed: int,
) -> list[tuple[str, ...]]:
    """Sheet rows: one per (feature, top triple), label column left blank."""
    index = sentence_index(train)
    rows: list[tuple[str, ...]] = []
    for feature in features:
        dataset = extract_instances(train, feature)
        if not dataset.instances:
            continue
        by_triple: dict[Triple, list[AgreementInstance]] = {}
        for inst in dataset.instances:
            by_triple.setdefault(inst.triple, []).append(inst)
        for triple in top_k_triples(dataset, top_k):
            pool = by_triple[triple]
            key = f"{seed}:{feature}:{triple.relation}:{triple.head_pos}:{triple.dep_pos}"
            rendered = []
            for inst in _sample_instances(pool, examples, key):
                sent_id, head_id, dep_id = inst.provenance
                rendered.append(
                    f"{sent_id}:h{head_id}:d{dep_id} "
                    + render_example(index[sent_id], head_id, dep_id)
                )
            rows.append(
                (
                    feature,
                    triple.relation,
                    triple.head_pos,
                    triple.dep_pos,
                    "",
                    " ||| ".join(rendered),
                )
            )
    return rows


def write_annotation_sheet(rows: list[tuple[str, ...]], path: str | Path) -> None:
    lines = ["\t".join(SHEET_COLUMNS)]
    lines.extend("\t".join(row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- HTML report ---

_PAGE_CSS = """
body { font-family: Georgia, serif; margin: 2em auto; max-width: 60em;
       color: #222; line-height: 1.45; }
h1, h2 { font-family: Helvetica, Arial, sans-serif; }
a { color: #2a6496; }
table { border-collapse: collapse; margin: 0.8em 0; }
td, th { border: 1px solid #bbb; padding: 0.25em 0.6em; text-align: left; }
.badge { display: inline-block; padding: 0.1em 0.6em; border-radius: 0.8em;
         font-family: Helvetica, Arial, sans-serif; font-size: 0.9em; }
.required { background: #1f4e99; color: #fff; }
.chance { background: #e8b61a; color: #222; }
.rule { border: 1px solid #ccc; border-radius: 6px; padding: 0.8em 1em;
        margin: 1em 0; }
.example { margin: 0.15em 0; }
.example .head { background: #cfe0f7; padding: 0 0.15em; }
.example .dep { background: #f7e3ae; padding: 0 0.15em; }
.muted { color: #777; font-size: 0.9em; }
"""


def _page(title: str, body: str) -> str:
    return (
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>{html.escape(title)}</title>\n<style>{_PAGE_CSS}</style>\n"
        f"</head>\n<body>\n{body}\n</body>\n</html>\n"
    )


def _badge(label: Label) -> str:
    name = label.value
    return f'<span class="badge {name}">{name}-agreement</span>'


_SLOT_TITLES = {Slot.RELATION: "relation", Slot.HEAD_POS: "head POS", Slot.DEP_POS: "dependent POS"}


def _constraint_text(rule: LabeledRule) -> str:
    parts = []
    for slot in SLOT_ORDER:
        constraint = rule.constraints.get(slot)
        if constraint is None or constraint.trivial:
            parts.append(f"{_SLOT_TITLES[slot]} = <em>any</em>")
        elif constraint.mode == "in":
            values = ", ".join(html.escape(v) for v in sorted(constraint.values))
            parts.append(f"{_SLOT_TITLES[slot]} &isin; {{{values}}}")
        else:
            values = ", ".join(html.escape(v) for v in sorted(constraint.values))
            parts.append(f"{_SLOT_TITLES[slot]} &notin; {{{values}}}")
    return "<br>".join(parts)


def _render_instance_html(
    index: dict[str, Sentence], inst: AgreementInstance, feature: str
) -> str:
    sent_id, head_id, dep_id = inst.provenance
    sentence = index[sent_id]
    parts = []
    for token in sentence.tokens:
        form = html.escape(token.form)
        if token.id == head_id:
            parts.append(f'<span class="head">{form}</span>')
        elif token.id == dep_id:
            parts.append(f'<span class="dep">{form}</span>')
        else:
            parts.append(form)
    values = f"{feature}: {html.escape(inst.head_value)} / {html.escape(inst.dep_value)}"
    return (
        f'<div class="example">{" ".join(parts)} '
        f'<span class="muted">[{html.escape(sent_id)}; {values}]</span></div>'
    )


def _stats_cell(value: float | None, fmt: str = "{:.4g}") -> str:
    if value is None:
        return "&mdash;"
    return fmt.format(value)


def render_feature_page(
    feature: str,
    ruleset: RuleSet,
    doc: RulesDocument,
    train: Treebank,
    index: dict[str, Sentence],
    examples: int,
    seed: int,
    eval_entry: dict | None,
) -> str:
    dataset = extract_instances(train, feature)
    by_rule: dict[int, tuple[list[AgreementInstance], list[AgreementInstance]]] = {
        rule.rule_id: ([], []) for rule in ruleset.rules
    }
    for inst in dataset.instances:
        for rule in ruleset.rules:
            if rule.matches(inst.triple):
                agree_pool, disagree_pool = by_rule[rule.rule_id]
                (agree_pool if inst.agree else disagree_pool).append(inst)
                break
    verdict_by_leaf = {
        v["leaf_id"]: v
        for v in doc.raw["features"][feature].get("leaf_verdicts", [])
    }
    chance = doc.chance_models[feature]
    body = [f"<h1>{html.escape(feature)} agreement rules</h1>"]
    body.append(
        f'<p class="muted">treebank: {html.escape(doc.treebank)} &middot; '
        f"threshold: {ruleset.threshold_mode.value} &middot; "
        f"training instances: {ruleset.training_size} &middot; "
        f"chance agreement probability: {chance.p_chance:.4f}</p>"
    )
    if eval_entry is not None and not eval_entry.get("absent"):
        baseline = eval_entry.get("baseline_arm")
        extra = f" (baseline {baseline:.3f})" if baseline is not None else ""
        body.append(
            f"<p>ARM on held-out data: <strong>{eval_entry['arm']:.3f}</strong>"
            f"{extra} over {eval_entry['n_triples']} triples.</p>"
        )
    for rule in ruleset.rules:
        agree_pool, disagree_pool = by_rule[rule.rule_id]
        total = rule.n_agree + rule.n_disagree
        ratio = rule.n_agree / total if total else 0.0
        body.append('<div class="rule">')
        body.append(
            f"<h2>Rule {rule.rule_id} {_badge(rule.label)}</h2>"
            f"<p>{_constraint_text(rule)}</p>"
            f"<p>agree: {rule.n_agree}, disagree: {rule.n_disagree} "
            f"(ratio {ratio:.4f})</p>"
        )
        rows = []
        for leaf_id in rule.source_leaf_ids:
            verdict = verdict_by_leaf.get(leaf_id)
            if verdict is None:
                continue
            rows.append(
                f"<tr><td>{leaf_id}</td><td>{verdict['label']}</td>"
                f"<td>{_stats_cell(verdict['agree_ratio'])}</td>"
                f"<td>{_stats_cell(verdict['chi2'])}</td>"
                f"<td>{_stats_cell(verdict['p_value'], '{:.3g}')}</td>"
                f"<td>{_stats_cell(verdict['phi_c'])}</td></tr>"
            )
        if rows:
            body.append(
                "<table><tr><th>leaf</th><th>label</th><th>agree ratio</th>"
                "<th>&chi;&sup2;</th><th>p-value</th><th>&phi;<sub>c</sub></th></tr>"
                + "".join(rows)
                + "</table>"
            )
        for title, pool, kind in (
            ("Examples (agreeing)", agree_pool, "examples"),
            ("Counter-examples (disagreeing)", disagree_pool, "counterexamples"),
        ):
            body.append(f"<h3>{title}</h3>")
            if not pool:
                body.append('<p class="muted">none in the training data</p>')
                continue
            key = f"{seed}:{feature}:{rule.rule_id}:{kind}"
            for inst in _sample_instances(pool, examples, key):
                body.append(_render_instance_html(index, inst, feature))
        body.append("</div>")
    body.append('<p><a href="index.html">&larr; all features</a></p>')
    return _page(f"{feature} agreement rules", "\n".join(body))


def render_index_page(doc: RulesDocument, eval_doc: dict | None) -> str:
    body = ["<h1>Agreement rule report</h1>"]
    body.append(
        f'<p class="muted">treebank: {html.escape(doc.treebank)} &middot; '
        f"threshold: {html.escape(doc.params.get('threshold_mode', '?'))}</p>"
    )
    rows = []
    for feature in doc.features:
        if feature in doc.absent:
            rows.append(
                f"<tr><td>{html.escape(feature)}</td>"
                '<td colspan="3" class="muted">absent from the treebank</td></tr>'
            )
            continue
        ruleset = doc.rulesets[feature]
        required = sum(r.label is Label.REQUIRED for r in ruleset.rules)
        arm_cell = "&mdash;"
        if eval_doc is not None:
            entry = eval_doc.get("features", {}).get(feature)
            if entry and not entry.get("absent") and entry.get("arm") is not None:
                arm_cell = f"{entry['arm']:.3f}"
        rows.append(
            f'<tr><td><a href="feature-{html.escape(feature)}.html">'
            f"{html.escape(feature)}</a></td>"
            f"<td>{len(ruleset.rules)}</td><td>{required}</td><td>{arm_cell}</td></tr>"
        )
    body.append(
        "<table><tr><th>feature</th><th>rules</th><th>required</th><th>ARM</th></tr>"
        + "".join(rows)
        + "</table>"
    )
    return _page("Agreement rule report", "\n".join(body))


def write_report(
    doc: RulesDocument,
    train: Treebank,
    out_dir: str | Path,
    examples: int = 10,
    seed: int = 0,
    eval_doc: dict | None = None,
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = sentence_index(train)
    written = []
    index_path = out / "index.html"
    index_path.write_text(render_index_page(doc, eval_doc), encoding="utf-8")
    written.append(index_path)
    for feature in doc.features:
        if feature in doc.absent:
            continue
        eval_entry = None
        if eval_doc is not None:
            eval_entry = eval_doc.get("features", {}).get(feature)
        page = render_feature_page(
            feature,
            doc.rulesets[feature],
            doc,
            train,
            index,
            examples,
            seed,
            eval_entry,
        )
        path = out / f"feature-{feature}.html"
        path.write_text(page, encoding="utf-8")
        written.append(path)
    return written
