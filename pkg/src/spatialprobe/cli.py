"""Command-line entry point.

Every subcommand reads JSONL inputs, computes all results in memory and only
then writes its files, so a failed run leaves no partial output behind.

Exit status: 0 on success, 1 when validation finds problems, 2 on operational
errors (missing or malformed inputs). Operational errors are reported as one
JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .annotation import (
    DEFAULT_LEXICON,
    CanonicalRelation,
    DialogueDocument,
    FormatError,
    Lexicon,
    dumps_document,
    loads_document,
    validate_document,
)
from .harness import attribute_values, relation_cases
from .metrics import (
    CASE_HEADER,
    absolute_difference_table,
    bin_centers,
    cohen_kappa,
    difference_csv,
    distribution_distance,
    entity_accuracy,
    exact_match,
    referent_distribution,
    rotation_split,
    satisfy_valid_table,
    split_bins,
    token_labels,
)
from .referent import MarkablePrediction, decode, dumps_predictions, heuristic_count, loads_predictions, perturb_gold
from .scene import ScenePair, dumps_scene, loads_scene
from .synth import generate_corpus

EXIT_OK, EXIT_INVALID, EXIT_ERROR = 0, 1, 2
GROUPINGS = ("relation", "category", "strength", "factor")


class CommandError(Exception):
    """An operational failure with a stable error code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# io


def _read_jsonl(path, parse, what: str) -> list:
    p = Path(path)
    if not p.is_file():
        raise CommandError("missing-input", f"{what} file not found: {path}")
    out = []
    with p.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(parse(line))
            except (FormatError, ValueError, KeyError, TypeError) as exc:
                raise CommandError("invalid-input", f"{path}:{lineno}: {exc}") from exc
    return out


def _index(items, key, what: str) -> dict:
    out = {}
    for item in items:
        k = key(item)
        if k in out:
            raise CommandError("invalid-input", f"duplicate {what} id {k!r}")
        out[k] = item
    return out


def load_scenes(path) -> dict[str, ScenePair]:
    return _index(_read_jsonl(path, loads_scene, "scenes"), lambda s: s.scene_id, "scene")


def load_documents(path) -> dict[str, DialogueDocument]:
    docs = _index(_read_jsonl(path, loads_document, "annotations"), lambda d: d.dialogue_id, "dialogue")
    return dict(sorted(docs.items()))


def load_predictions(path) -> dict[str, dict[str, MarkablePrediction]]:
    rows = _read_jsonl(path, loads_predictions, "predictions")
    out = _index(rows, lambda r: r[0], "prediction dialogue")
    return {did: _index(preds, lambda p: p.markable_id, "predicted markable") for did, (_, preds) in out.items()}


def _scene_of(doc: DialogueDocument, scenes: dict[str, ScenePair]) -> ScenePair:
    try:
        return scenes[doc.scene_id]
    except KeyError:
        raise CommandError("invalid-input", f"dialogue {doc.dialogue_id} names unknown scene {doc.scene_id}") from None


def _entity_ids(scene: ScenePair, markable) -> list[int]:
    return list(scene.view(markable.speaker).ids)


class Outputs:
    """Files staged in memory and written together on success."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def commit(self) -> list[str]:
        if self.out_dir is None or not self.files:
            return []
        self.out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        try:
            for name in sorted(self.files):
                target = self.out_dir / name
                tmp = target.with_name(f".{name}.tmp")
                tmp.write_text(self.files[name], encoding="utf-8")
                os.replace(tmp, target)
                written.append(target)
        except OSError:
            for path in written:
                path.unlink(missing_ok=True)
            for name in self.files:
                (self.out_dir / f".{name}.tmp").unlink(missing_ok=True)
            raise
        return [str(p) for p in written]


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _finite(x: float):
    return None if x is None or math.isnan(x) else x


def _lines(items) -> str:
    return "".join(f"{line}\n" for line in items)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise CommandError("missing-argument", f"--{name.replace('_', '-')} is required for {args.command}")


# ---------------------------------------------------------------------------
# shared steps


def _predicted_referents(docs, predictions) -> dict[str, dict[str, frozenset[int]]]:
    """Decoded referent sets per dialogue and markable; every gold markable must be covered."""
    out = {}
    for did, doc in docs.items():
        preds = predictions.get(did)
        if preds is None:
            raise CommandError("invalid-input", f"no predictions for dialogue {did}")
        refs = {}
        for m in doc.markables:
            p = preds.get(m.id)
            if p is None:
                raise CommandError("invalid-input", f"no prediction for markable {did}/{m.id}")
            if p.decoded is None:
                raise CommandError("invalid-input", f"markable {did}/{m.id} has no decoded referents; run decode first")
            refs[m.id] = p.decoded
        out[did] = refs
    return out


def _all_cases(docs, scenes, referents_by_dialogue=None):
    cases = []
    for did, doc in docs.items():
        refs = None if referents_by_dialogue is None else referents_by_dialogue[did]
        try:
            cases.extend(relation_cases(doc, _scene_of(doc, scenes), refs))
        except KeyError as exc:
            raise CommandError("invalid-input", f"dialogue {did}: {exc.args[0]}") from exc
    return cases


def _cases_csv(cases) -> str:
    return _csv(CASE_HEADER, (c.to_row() for c in cases))


def _lexicon(args) -> Lexicon:
    if args.lexicon is None:
        return DEFAULT_LEXICON
    try:
        return Lexicon.from_file(args.lexicon)
    except (OSError, ValueError, TypeError, AttributeError) as exc:
        raise CommandError("invalid-input", f"lexicon {args.lexicon}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args, out: Outputs) -> dict:
    _require(args, "seed")
    relations = None if not args.relations else [CanonicalRelation(r) for r in args.relations]
    scenes, docs, preds = [], [], []
    for scene, doc in generate_corpus(args.seed, args.per_relation, satisfy=not args.violate, relations=relations):
        scenes.append(scene)
        docs.append(doc)
        dialogue_preds = []
        for j, m in enumerate(doc.markables):
            state = np.random.SeedSequence([args.seed, len(docs), j]).generate_state(1)[0]
            p = perturb_gold(m.referents, args.flip, int(state), scene.view(m.speaker).ids, m.id)
            dialogue_preds.append(p)
        preds.append((doc.dialogue_id, dialogue_preds))
    scenes.sort(key=lambda s: s.scene_id)
    docs.sort(key=lambda d: d.dialogue_id)
    preds.sort(key=lambda p: p[0])
    out.add("scenes.jsonl", _lines(dumps_scene(s) for s in scenes))
    out.add("annotations.jsonl", _lines(dumps_document(d) for d in docs))
    out.add("predictions.jsonl", _lines(dumps_predictions(did, p) for did, p in preds))
    return {"dialogues": len(docs), "scenes": len(scenes)}


def cmd_validate(args, out: Outputs) -> dict:
    _require(args, "annotations")
    docs = load_documents(args.annotations)
    scenes = load_scenes(args.scenes) if args.scenes else None
    records = []
    for did, doc in docs.items():
        scene = None
        if scenes is not None:
            scene = scenes.get(doc.scene_id)
            if scene is None:
                records.append({"dialogue_id": did, "location": doc.scene_id, "rule": "unknown-scene",
                                "message": "scene not present in the scenes file"})
        for v in validate_document(doc, scene):
            records.append({"dialogue_id": did, "location": v.location, "rule": v.rule, "message": v.message})
    out.add("violations.jsonl", _lines(json.dumps(r, sort_keys=True) for r in records))
    by_rule = defaultdict(int)
    for r in records:
        by_rule[r["rule"]] += 1
    return {"dialogues": len(docs), "violations": len(records), "by_rule": dict(sorted(by_rule.items()))}


def cmd_decode(args, out: Outputs) -> dict:
    _require(args, "scenes", "annotations", "predictions")
    docs = load_documents(args.annotations)
    scenes = load_scenes(args.scenes)
    predictions = load_predictions(args.predictions)
    lines = []
    n = 0
    for did, doc in docs.items():
        scene = _scene_of(doc, scenes)
        preds = predictions.get(did)
        if preds is None:
            raise CommandError("invalid-input", f"no predictions for dialogue {did}")
        decoded = []
        for m in sorted(doc.markables, key=lambda m: m.id):
            p = preds.get(m.id)
            if p is None:
                raise CommandError("invalid-input", f"no prediction for markable {did}/{m.id}")
            count = None
            if args.decoder == "topk":
                if args.count_source == "gold":
                    count = len(m.referents)
                elif args.count_source == "heuristic":
                    count = heuristic_count(p.scores, m.id).count
                elif p.predicted_count is None:
                    raise CommandError("invalid-input", f"markable {did}/{m.id} has no count in the predictions file")
            try:
                decoded.append(decode(p, args.decoder, _entity_ids(scene, m), count))
            except ValueError as exc:
                raise CommandError("invalid-input", f"markable {did}/{m.id}: {exc}") from exc
            n += 1
        lines.append(dumps_predictions(did, decoded))
    out.add("decoded.jsonl", _lines(lines))
    return {"dialogues": len(docs), "markables": n, "decoder": args.decoder}


def cmd_evaluate(args, out: Outputs) -> dict:
    _require(args, "annotations", "predictions")
    docs = load_documents(args.annotations)
    predicted = _predicted_referents(docs, load_predictions(args.predictions))
    golds, preds = {}, {}
    for did, doc in docs.items():
        for m in doc.markables:
            key = f"{did}\t{m.id}"
            golds[key] = m.referents
            preds[key] = predicted[did][m.id]
    if not golds:
        raise CommandError("invalid-input", "no markables to evaluate")
    report = {"markables": len(golds), "entity_accuracy": entity_accuracy(preds, golds),
              "exact_match": exact_match(preds, golds)}
    out.add("metrics.json", _json(report))
    return report


def _referents_arg(args, docs):
    if args.predictions is None:
        return None
    return _predicted_referents(docs, load_predictions(args.predictions))


def cmd_test_relations(args, out: Outputs) -> dict:
    _require(args, "scenes", "annotations")
    docs = load_documents(args.annotations)
    scenes = load_scenes(args.scenes)
    cases = _all_cases(docs, scenes, _referents_arg(args, docs))
    table = satisfy_valid_table(cases, args.group)
    out.add(f"table_{args.group}.csv", table.to_csv())
    if args.emit_cases:
        out.add("cases.csv", _cases_csv(cases))
    return {"cases": len(cases), "table": table.to_csv()}


def _distribution_rows(attr, gold_values, pred_values):
    centers = bin_centers(attr)
    rows, dist_rows = [], []
    for term in sorted(set(gold_values) | set(pred_values or {})):
        g = referent_distribution(gold_values.get(term, []), attr)
        p = None if pred_values is None else referent_distribution(pred_values.get(term, []), attr)
        for k, center in enumerate(centers):
            row = [attr, term, f"{center:g}", int(g[k])]
            if p is not None:
                row.append(int(p[k]))
            rows.append(row)
        if p is not None:
            d = _finite(distribution_distance(g, p, attr))
            dist_rows.append([attr, term, "" if d is None else f"{d:.4f}"])
    return rows, dist_rows


def cmd_analyze(args, out: Outputs) -> dict:
    _require(args, "scenes", "annotations")
    docs = load_documents(args.annotations)
    scenes = load_scenes(args.scenes)
    lexicon = _lexicon(args)
    referents = _referents_arg(args, docs)
    cases = _all_cases(docs, scenes, referents)
    for grouping in ("category", "strength", "factor"):
        out.add(f"table_{grouping}.csv", satisfy_valid_table(cases, grouping).to_csv())
    out.add("difference.csv", difference_csv(absolute_difference_table(cases)))
    if args.emit_cases:
        out.add("cases.csv", _cases_csv(cases))
    header = ["attribute", "term", "bin_center", "gold"] + ([] if referents is None else ["predicted"])
    dist, dists = [], []
    doc_list = list(docs.values())
    for attr in ("color", "size"):
        try:
            gold_values = attribute_values(doc_list, scenes, None, attr, lexicon)
            pred_values = None if referents is None else attribute_values(doc_list, scenes, referents, attr, lexicon)
        except KeyError as exc:
            raise CommandError("invalid-input", str(exc.args[0])) from exc
        rows, drows = _distribution_rows(attr, gold_values, pred_values)
        dist.extend(rows)
        dists.extend(drows)
    out.add("distribution.csv", _csv(header, dist))
    if referents is not None:
        out.add("distribution_distance.csv", _csv(["attribute", "term", "distance"], dists))
    return {"cases": len(cases)}


def _span_labels(docs, select, starts_only=False):
    labels = []
    for doc in docs:
        lengths = [len(u.tokens) for u in doc.utterances]
        spans = [(item.utterance_index, item.token_span) for item in select(doc) if item.token_span]
        labels.extend(token_labels(spans, lengths, starts_only))
    return labels


def _report(labels_a, labels_b) -> dict:
    if not labels_a:
        return {"n": 0, "percent_agreement": None, "kappa": None}
    r = cohen_kappa(labels_a, labels_b)
    return {"n": r.n, "percent_agreement": r.percent_agreement, "kappa": _finite(r.kappa)}


def cmd_agreement(args, out: Outputs) -> dict:
    _require(args, "annotations")
    if len(args.annotations) != 2:
        raise CommandError("missing-argument", "agreement needs two --annotations files")
    first, second = (load_documents(p) for p in args.annotations)
    if set(first) != set(second):
        raise CommandError("invalid-input", "the annotation files cover different dialogues")
    docs_a, docs_b = list(first.values()), [second[d] for d in first]
    for a, b in zip(docs_a, docs_b):
        if [u.tokens for u in a.utterances] != [u.tokens for u in b.utterances]:
            raise CommandError("invalid-input", f"dialogue {a.dialogue_id} has different utterances in the two files")
    report = {}
    for name, select in (("markables", lambda d: d.markables), ("expressions", lambda d: d.expressions),
                         ("modifiers", lambda d: d.modifiers)):
        report[f"{name}_tokens"] = _report(_span_labels(docs_a, select), _span_labels(docs_b, select))
        report[f"{name}_starts"] = _report(_span_labels(docs_a, select, True), _span_labels(docs_b, select, True))

    # canonical relations on expressions both annotators marked with the same span
    rels = list(CanonicalRelation)
    ca, cb = [], []
    for a, b in zip(docs_a, docs_b):
        spans_b = {(e.utterance_index, e.token_span): e for e in b.expressions}
        for e in a.expressions:
            other = spans_b.get((e.utterance_index, e.token_span))
            if other is not None and e.kind == other.kind == "relation":
                ca.extend(r in e.canonical for r in rels)
                cb.extend(r in other.canonical for r in rels)
    report["canonical_relations"] = _report(ca, cb)

    if args.scenes:
        scenes = load_scenes(args.scenes)
        ra, rb = [], []
        for a, b in zip(docs_a, docs_b):
            scene = _scene_of(a, scenes)
            spans_b = {(m.utterance_index, m.token_span): m for m in b.markables}
            for m in a.markables:
                other = spans_b.get((m.utterance_index, m.token_span))
                if other is None:
                    continue
                ids = scene.view(m.speaker).ids
                ra.extend(i in m.referents for i in ids)
                rb.extend(i in other.referents for i in ids)
        report["referents"] = _report(ra, rb)
    out.add("agreement.json", _json(report))
    return report


def cmd_split(args, out: Outputs) -> dict:
    if args.ids is not None:
        p = Path(args.ids)
        if not p.is_file():
            raise CommandError("missing-input", f"ids file not found: {args.ids}")
        ids = [line.strip() for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]
    elif args.annotations:
        ids = list(load_documents(args.annotations[0]))
    else:
        raise CommandError("missing-argument", "split needs --annotations or --ids")
    if len(ids) < args.bins:
        raise CommandError("invalid-input", f"need at least {args.bins} dialogues to split, got {len(ids)}")
    manifest = {"bins": split_bins(ids, args.bins), "rounds": []}
    for r in range(args.bins):
        train, valid, test = rotation_split(ids, r, args.bins)
        manifest["rounds"].append({"round": r, "train": train, "valid": valid, "test": test})
    out.add("splits.json", _json(manifest))
    return {"dialogues": len(set(ids)), "bins": args.bins}


COMMANDS = {
    "generate": cmd_generate,
    "validate": cmd_validate,
    "decode": cmd_decode,
    "evaluate": cmd_evaluate,
    "test-relations": cmd_test_relations,
    "analyze": cmd_analyze,
    "agreement": cmd_agreement,
    "split": cmd_split,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatialprobe", description="Spatial relation probing for grounded dialogue.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, *flags):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", help="output directory")
        for flag in flags:
            flag(p)
        return p

    scenes = lambda p: p.add_argument("--scenes")
    annotations = lambda p: p.add_argument("--annotations")
    predictions = lambda p: p.add_argument("--predictions")
    emit = lambda p: p.add_argument("--emit-cases", action="store_true", help="also write per-case records")
    lexicon = lambda p: p.add_argument("--lexicon", help="JSON lexicon overriding modifier/color/size terms")

    g = add("generate", "write synthetic scenes, annotations and gold-derived predictions")
    g.add_argument("--seed", type=int)
    g.add_argument("--per-relation", type=int, default=500)
    g.add_argument("--violate", action="store_true", help="construct valid cases that fail their relation")
    g.add_argument("--relations", nargs="+", choices=[r.value for r in CanonicalRelation])
    g.add_argument("--flip", type=float, default=0.0, help="score flip probability for predictions")

    add("validate", "lint annotation files", scenes, annotations)
    d = add("decode", "turn scores into referent sets", scenes, annotations, predictions)
    d.add_argument("--decoder", choices=("threshold", "topk"), default="threshold")
    d.add_argument("--count-source", choices=("file", "heuristic", "gold"), default="file")
    add("evaluate", "reference resolution accuracy of decoded predictions", annotations, predictions)
    t = add("test-relations", "satisfy/valid tables", scenes, annotations, predictions, emit)
    t.add_argument("--group", choices=GROUPINGS, default="relation")
    add("analyze", "strength, factor, difference and distribution tables",
        scenes, annotations, predictions, lexicon, emit)
    ag = add("agreement", "agreement between two annotation files", scenes)
    ag.add_argument("--annotations", nargs="+")
    s = add("split", "rotation cross-validation manifests")
    s.add_argument("--annotations", nargs=1)
    s.add_argument("--ids", help="file with one dialogue id per line")
    s.add_argument("--bins", type=int, default=10)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Outputs(args.out)
    try:
        summary = COMMANDS[args.command](args, out)
        written = out.commit()
    except CommandError as exc:
        _fail(args.command, exc.code, str(exc))
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        _fail(args.command, type(exc).__name__, str(exc))
        return EXIT_ERROR
    if args.command == "test-relations":
        sys.stdout.write(summary["table"])
    else:
        sys.stdout.write(json.dumps({"command": args.command, "outputs": written, **summary}, sort_keys=True) + "\n")
    if args.command == "validate" and summary["violations"]:
        return EXIT_INVALID
    return EXIT_OK


def _fail(command: str, code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"command": command, "error": code, "message": message}, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
